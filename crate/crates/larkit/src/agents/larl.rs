//! The context-window linear-UCB agent and its explore-then-commit wrapper.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::rng::TrialRng;
use crate::selection::{bic_select_s, ExplorationLog};

use super::context::{build_context, ContextVector};
use super::rls::{practical_radius, RadiusParams, RlsState};
use super::{argmax_tie_low, Agent};

/// Linear-UCB agent over contexts built from the most recent `s` steps.
///
/// Each action keeps its own ridge estimator; the selected action maximizes
/// `phi' theta_hat_a + radius_a * |phi|_{V_a^{-1}}`, the closed form of the
/// optimistic inner maximization over the confidence ellipsoid. With `s = 0`
/// the context collapses to the constant feature and the agent behaves as a
/// standard UCB policy over per-arm sample means.
#[derive(Debug, Clone)]
pub struct LarlAgent {
    s: usize,
    num_actions: usize,
    radius: RadiusParams,
    rls: Vec<RlsState>,
    history: VecDeque<(usize, f64)>,
}

impl LarlAgent {
    pub fn new(s: usize, num_actions: usize, lambda: f64, radius: RadiusParams) -> Result<Self> {
        if num_actions == 0 {
            return Err(Error::Config("agent needs at least one action".into()));
        }
        radius.validate()?;
        let dim = 2 * s * num_actions + 1;
        let rls = (0..num_actions)
            .map(|_| RlsState::new(dim, lambda))
            .collect::<Result<Vec<_>>>()?;
        Ok(LarlAgent { s, num_actions, radius, rls, history: VecDeque::new() })
    }

    pub fn s(&self) -> usize {
        self.s
    }

    pub fn rls(&self, action: usize) -> &RlsState {
        &self.rls[action]
    }

    /// Context for the upcoming step.
    pub fn context(&self) -> Result<ContextVector> {
        let hist: Vec<(usize, f64)> = self.history.iter().copied().collect();
        build_context(&hist, self.s, self.num_actions)
    }

    /// Optimistic score per action for a given context.
    pub fn ucb_scores(&self, phi: &ContextVector) -> Vec<f64> {
        self.rls
            .iter()
            .map(|st| {
                let mean = phi.phi.dot(&st.theta_hat);
                let bonus = practical_radius(st, &self.radius) * st.mahalanobis_sq(&phi.phi).sqrt();
                mean + bonus
            })
            .collect()
    }

    /// Replays a logged prefix of (action, reward) pairs as if the agent had
    /// been running from the start, so a commit after exploration does not
    /// discard the exploration data.
    pub fn warm_start(&mut self, log: &[(usize, f64)]) -> Result<()> {
        for (j, (action, reward)) in log.iter().enumerate() {
            let from = j.saturating_sub(self.s);
            let phi = build_context(&log[from..j], self.s, self.num_actions)?;
            self.rls[*action].update(&phi.phi, *reward)?;
        }
        self.history.clear();
        let tail = log.len().saturating_sub(self.s);
        self.history.extend(log[tail..].iter().copied());
        Ok(())
    }
}

/// Action choice for a prepared context: argmax of the optimistic score,
/// ties to the lowest index.
pub fn larl_select(agent: &LarlAgent, phi: &ContextVector) -> usize {
    argmax_tie_low(&agent.ucb_scores(phi))
}

impl Agent for LarlAgent {
    fn select(&mut self, _rng: &mut TrialRng) -> Result<usize> {
        let phi = self.context()?;
        Ok(larl_select(self, &phi))
    }

    fn update(&mut self, action: usize, reward: f64) -> Result<()> {
        if action >= self.num_actions {
            return Err(Error::Usage(format!("action {action} out of range")));
        }
        let phi = self.context()?;
        self.rls[action].update(&phi.phi, reward)?;
        if self.s > 0 {
            self.history.push_back((action, reward));
            if self.history.len() > self.s {
                self.history.pop_front();
            }
        }
        Ok(())
    }

    fn chosen_s(&self) -> Option<usize> {
        Some(self.s)
    }
}

/// Explore-then-commit wrapper: plays uniformly random actions for `t_prime`
/// steps, picks the context window by information criterion on the logged
/// data, then hands over to a warm-started [`LarlAgent`].
#[derive(Debug, Clone)]
pub struct BicLarl {
    t_prime: usize,
    candidates: Vec<usize>,
    lambda: f64,
    radius: RadiusParams,
    num_actions: usize,
    log: Vec<(usize, f64)>,
    inner: Option<LarlAgent>,
}

impl BicLarl {
    pub fn new(
        t_prime: usize,
        candidates: Vec<usize>,
        num_actions: usize,
        lambda: f64,
        radius: RadiusParams,
    ) -> Result<Self> {
        if candidates.is_empty() {
            return Err(Error::Config("candidate window list must not be empty".into()));
        }
        radius.validate()?;
        Ok(BicLarl { t_prime, candidates, lambda, radius, num_actions, log: Vec::new(), inner: None })
    }

    fn commit(&mut self) -> Result<()> {
        // No exploration data (t_prime = 0) leaves nothing to score; fall
        // back to the smallest candidate window.
        let s = if self.log.is_empty() {
            *self.candidates.iter().min().unwrap()
        } else {
            let log = ExplorationLog::new(self.log.clone(), self.num_actions)?;
            bic_select_s(&log, &self.candidates, self.lambda)?
        };
        let mut agent = LarlAgent::new(s, self.num_actions, self.lambda, self.radius)?;
        agent.warm_start(&self.log)?;
        self.inner = Some(agent);
        Ok(())
    }
}

impl Agent for BicLarl {
    fn select(&mut self, rng: &mut TrialRng) -> Result<usize> {
        use rand::Rng as _;
        if let Some(inner) = self.inner.as_mut() {
            return inner.select(rng);
        }
        if self.log.len() < self.t_prime {
            return Ok(rng.random_range(0..self.num_actions));
        }
        self.commit()?;
        self.inner.as_mut().unwrap().select(rng)
    }

    fn update(&mut self, action: usize, reward: f64) -> Result<()> {
        match self.inner.as_mut() {
            Some(inner) => inner.update(action, reward),
            None => {
                self.log.push((action, reward));
                Ok(())
            }
        }
    }

    fn chosen_s(&self) -> Option<usize> {
        self.inner.as_ref().map(|a| a.s())
    }
}
