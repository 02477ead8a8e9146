//! Baseline policies: stationary UCB, sliding-window UCB, restarted Exp3,
//! and a UCB agent regressing on its own recent rewards.

use std::collections::VecDeque;

use nalgebra::DVector;
use rand::Rng as _;

use crate::error::{Error, Result};
use crate::rng::TrialRng;

use super::rls::{practical_radius, RadiusParams, RlsState};
use super::{argmax_tie_low, Agent};

/// UCB over per-arm ridge-shrunk sample means.
///
/// This is a deliberately independent scalar implementation of what the
/// window-zero linear agent computes with matrices; the two must pick the
/// same actions on matched inputs.
#[derive(Debug, Clone)]
pub struct StationaryUcb {
    lambda: f64,
    radius: RadiusParams,
    counts: Vec<usize>,
    sums: Vec<f64>,
}

impl StationaryUcb {
    pub fn new(num_actions: usize, lambda: f64, radius: RadiusParams) -> Result<Self> {
        if num_actions == 0 {
            return Err(Error::Config("agent needs at least one action".into()));
        }
        if !(lambda > 0.0) {
            return Err(Error::Config("lambda must be positive".into()));
        }
        radius.validate()?;
        Ok(StationaryUcb { lambda, radius, counts: vec![0; num_actions], sums: vec![0.0; num_actions] })
    }

    fn score(&self, a: usize) -> f64 {
        let n = self.counts[a] as f64;
        let v = self.lambda + n;
        let log_arg = (1.0 + n * self.radius.l / self.lambda) / (self.radius.delta / 2.0);
        let radius = self.radius.r * (1.0 * log_arg.ln()).sqrt()
            + self.lambda.sqrt() * self.radius.s_bound;
        self.sums[a] / v + radius / v.sqrt()
    }
}

impl Agent for StationaryUcb {
    fn select(&mut self, _rng: &mut TrialRng) -> Result<usize> {
        let scores: Vec<f64> = (0..self.counts.len()).map(|a| self.score(a)).collect();
        Ok(argmax_tie_low(&scores))
    }

    fn update(&mut self, action: usize, reward: f64) -> Result<()> {
        if action >= self.counts.len() {
            return Err(Error::Usage(format!("action {action} out of range")));
        }
        self.counts[action] += 1;
        self.sums[action] += reward;
        Ok(())
    }
}

/// UCB over the trailing window of observations only.
#[derive(Debug, Clone)]
pub struct SwUcb {
    window: usize,
    xi: f64,
    num_actions: usize,
    buf: VecDeque<(usize, f64)>,
    t: usize,
}

impl SwUcb {
    pub fn new(num_actions: usize, window: usize, xi: f64) -> Result<Self> {
        if window == 0 || !(xi > 0.0) {
            return Err(Error::Config("window and xi must be positive".into()));
        }
        Ok(SwUcb { window, xi, num_actions, buf: VecDeque::new(), t: 0 })
    }

    /// `ceil(4 sqrt(T log T))`, the usual horizon-tuned window.
    pub fn default_window(horizon: usize) -> usize {
        let t = horizon.max(2) as f64;
        (4.0 * (t * t.ln()).sqrt()).ceil() as usize
    }
}

impl Agent for SwUcb {
    fn select(&mut self, _rng: &mut TrialRng) -> Result<usize> {
        let mut counts = vec![0usize; self.num_actions];
        let mut sums = vec![0.0f64; self.num_actions];
        for (a, r) in &self.buf {
            counts[*a] += 1;
            sums[*a] += r;
        }
        // Any arm unseen in the window gets played first.
        if let Some(a) = counts.iter().position(|c| *c == 0) {
            return Ok(a);
        }
        let now = (self.t + 1).min(self.window) as f64;
        let scores: Vec<f64> = (0..self.num_actions)
            .map(|a| {
                let n = counts[a] as f64;
                sums[a] / n + (self.xi * now.ln() / n).sqrt()
            })
            .collect();
        Ok(argmax_tie_low(&scores))
    }

    fn update(&mut self, action: usize, reward: f64) -> Result<()> {
        if action >= self.num_actions {
            return Err(Error::Usage(format!("action {action} out of range")));
        }
        self.buf.push_back((action, reward));
        if self.buf.len() > self.window {
            self.buf.pop_front();
        }
        self.t += 1;
        Ok(())
    }
}

/// Exp3 restarted every `batch` steps. Rewards are clipped into a fixed
/// range before the exponential-weight update, since Exp3 expects [0, 1].
#[derive(Debug, Clone)]
pub struct Rexp3 {
    num_actions: usize,
    batch: usize,
    eta: f64,
    reward_min: f64,
    reward_max: f64,
    weights: Vec<f64>,
    in_batch: usize,
    last_probs: Vec<f64>,
}

impl Rexp3 {
    pub fn new(
        num_actions: usize,
        batch: usize,
        eta: f64,
        reward_range: (f64, f64),
    ) -> Result<Self> {
        if batch == 0 {
            return Err(Error::Config("batch length must be positive".into()));
        }
        if !(eta > 0.0 && eta <= 1.0) {
            return Err(Error::Config(format!("exploration rate must lie in (0, 1], got {eta}")));
        }
        if !(reward_range.1 > reward_range.0) {
            return Err(Error::Config("reward range must be nonempty".into()));
        }
        Ok(Rexp3 {
            num_actions,
            batch,
            eta,
            reward_min: reward_range.0,
            reward_max: reward_range.1,
            weights: vec![1.0; num_actions],
            in_batch: 0,
            last_probs: vec![1.0 / num_actions as f64; num_actions],
        })
    }

    /// `ceil(T^{2/3})`, the batch length tuned for an O(T) variation budget.
    pub fn default_batch(horizon: usize) -> usize {
        (horizon.max(1) as f64).powf(2.0 / 3.0).ceil() as usize
    }

    /// `min(1, sqrt(K ln K / ((e - 1) batch)))`.
    pub fn default_eta(num_actions: usize, batch: usize) -> f64 {
        let k = num_actions as f64;
        (k * k.ln() / ((std::f64::consts::E - 1.0) * batch as f64)).sqrt().min(1.0)
    }

    pub(crate) fn probs(&self) -> Vec<f64> {
        let total: f64 = self.weights.iter().sum();
        let k = self.num_actions as f64;
        self.weights
            .iter()
            .map(|w| (1.0 - self.eta) * w / total + self.eta / k)
            .collect()
    }
}

impl Agent for Rexp3 {
    fn select(&mut self, rng: &mut TrialRng) -> Result<usize> {
        let probs = self.probs();
        let u: f64 = rng.random::<f64>();
        let mut acc = 0.0;
        let mut pick = self.num_actions - 1;
        for (a, p) in probs.iter().enumerate() {
            acc += p;
            if u < acc {
                pick = a;
                break;
            }
        }
        self.last_probs = probs;
        Ok(pick)
    }

    fn update(&mut self, action: usize, reward: f64) -> Result<()> {
        if action >= self.num_actions {
            return Err(Error::Usage(format!("action {action} out of range")));
        }
        let x = ((reward - self.reward_min) / (self.reward_max - self.reward_min)).clamp(0.0, 1.0);
        let xhat = x / self.last_probs[action];
        self.weights[action] *= (self.eta * xhat / self.num_actions as f64).exp();
        let peak = self.weights.iter().cloned().fold(0.0, f64::max);
        if peak > 1e100 {
            for w in &mut self.weights {
                *w /= peak;
            }
        }
        self.in_batch += 1;
        if self.in_batch >= self.batch {
            self.weights = vec![1.0; self.num_actions];
            self.in_batch = 0;
        }
        Ok(())
    }
}

/// UCB with a per-arm ridge regression of the reward on an intercept plus
/// the most recent observed rewards.
#[derive(Debug, Clone)]
pub struct ArUcb {
    order: usize,
    num_actions: usize,
    radius: RadiusParams,
    rls: Vec<RlsState>,
    recent: VecDeque<f64>,
}

impl ArUcb {
    pub fn new(num_actions: usize, order: usize, lambda: f64, radius: RadiusParams) -> Result<Self> {
        if order == 0 {
            return Err(Error::Config("autoregressive order must be positive".into()));
        }
        radius.validate()?;
        let rls = (0..num_actions)
            .map(|_| RlsState::new(order + 1, lambda))
            .collect::<Result<Vec<_>>>()?;
        Ok(ArUcb { order, num_actions, radius, rls, recent: VecDeque::new() })
    }

    fn feature(&self) -> DVector<f64> {
        let mut x = DVector::zeros(self.order + 1);
        x[0] = 1.0;
        for (i, r) in self.recent.iter().enumerate() {
            x[1 + i] = *r;
        }
        x
    }
}

impl Agent for ArUcb {
    fn select(&mut self, _rng: &mut TrialRng) -> Result<usize> {
        let x = self.feature();
        let scores: Vec<f64> = self
            .rls
            .iter()
            .map(|st| {
                x.dot(&st.theta_hat)
                    + practical_radius(st, &self.radius) * st.mahalanobis_sq(&x).sqrt()
            })
            .collect();
        Ok(argmax_tie_low(&scores))
    }

    fn update(&mut self, action: usize, reward: f64) -> Result<()> {
        if action >= self.num_actions {
            return Err(Error::Usage(format!("action {action} out of range")));
        }
        let x = self.feature();
        self.rls[action].update(&x, reward)?;
        self.recent.push_front(reward);
        if self.recent.len() > self.order {
            self.recent.pop_back();
        }
        Ok(())
    }
}
