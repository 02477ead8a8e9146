//! Bandit environment whose per-action mean rewards are driven by an
//! unobserved autoregressive latent state.
//!
//! The latent recursion is `z_t = gamma0 + sum_j gamma[j] * z_{t-j} + xi_t`
//! with `xi_t ~ N(0, sigma_z^2)`, and the reward for action `a` is
//! `r_t(a) = mu[a] + beta[a] * z_t + eps_t(a)` with
//! `eps_t(a) ~ N(0, beta[a]^2 * sigma_r^2)`, independent across actions and
//! steps. Stability requires the L1 norm of `gamma` to be below one.

use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{substream, TrialRng};

/// Ground-truth environment parameters.
///
/// `init_mean` / `init_cov_diag` describe the Gaussian the initial latent
/// window is drawn from; leaving them empty selects the defaults (zero mean,
/// identity covariance).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvParams {
    /// Autoregressive order.
    pub k: usize,
    /// Intercept of the latent recursion.
    pub gamma0: f64,
    /// Lag coefficients, most recent lag first; `gamma.len() == k`.
    pub gamma: Vec<f64>,
    /// Latent noise standard deviation.
    pub sigma_z: f64,
    /// Reward noise scale (per-action std is `|beta[a]| * sigma_r`).
    pub sigma_r: f64,
    /// Per-action offsets.
    pub mu: Vec<f64>,
    /// Per-action slopes; all entries must be nonzero.
    pub beta: Vec<f64>,
    /// Number of actions.
    pub num_actions: usize,
    /// Mean of the initial latent window (empty = zeros).
    #[serde(default)]
    pub init_mean: Vec<f64>,
    /// Diagonal covariance of the initial latent window (empty = ones).
    #[serde(default)]
    pub init_cov_diag: Vec<f64>,
}

impl EnvParams {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::Config("k must be at least 1".into()));
        }
        if self.gamma.len() != self.k {
            return Err(Error::Config(format!(
                "gamma has {} entries, expected k = {}",
                self.gamma.len(),
                self.k
            )));
        }
        let l1: f64 = self.gamma.iter().map(|g| g.abs()).sum();
        if !l1.is_finite() || l1 >= 1.0 {
            return Err(Error::Config(format!(
                "sum of |gamma| must be below 1 for stability, got {l1}"
            )));
        }
        if !self.gamma0.is_finite() {
            return Err(Error::Config("gamma0 must be finite".into()));
        }
        if !(self.sigma_z >= 0.0) || !(self.sigma_r >= 0.0) {
            return Err(Error::Config("sigma_z and sigma_r must be nonnegative".into()));
        }
        if self.num_actions == 0 {
            return Err(Error::Config("num_actions must be at least 1".into()));
        }
        if self.mu.len() != self.num_actions || self.beta.len() != self.num_actions {
            return Err(Error::Config(format!(
                "mu and beta must both have num_actions = {} entries",
                self.num_actions
            )));
        }
        if self.beta.iter().any(|b| *b == 0.0 || !b.is_finite()) {
            return Err(Error::Config(
                "every beta entry must be nonzero and finite (rewards are normalized by beta)".into(),
            ));
        }
        if !self.init_mean.is_empty() && self.init_mean.len() != self.k {
            return Err(Error::Config("init_mean must be empty or have k entries".into()));
        }
        if !self.init_cov_diag.is_empty() {
            if self.init_cov_diag.len() != self.k {
                return Err(Error::Config("init_cov_diag must be empty or have k entries".into()));
            }
            if self.init_cov_diag.iter().any(|v| *v < 0.0) {
                return Err(Error::Config("init_cov_diag entries must be nonnegative".into()));
            }
        }
        Ok(())
    }

    pub fn init_mean_at(&self, i: usize) -> f64 {
        if self.init_mean.is_empty() { 0.0 } else { self.init_mean[i] }
    }

    pub fn init_cov_at(&self, i: usize) -> f64 {
        if self.init_cov_diag.is_empty() { 1.0 } else { self.init_cov_diag[i] }
    }

    fn check_action(&self, action: usize) -> Result<()> {
        if action >= self.num_actions {
            return Err(Error::Usage(format!(
                "action {action} out of range (num_actions = {})",
                self.num_actions
            )));
        }
        Ok(())
    }
}

/// Evolving environment state: the rolling latent window plus its generator.
///
/// Single-owner mutable state; move it between threads but do not share it.
#[derive(Debug, Clone)]
pub struct EnvState {
    /// Most recent `k` latent values, newest first.
    z_window: Vec<f64>,
    /// Current time step (starts at `k` after initialization).
    t: usize,
    rng: TrialRng,
}

impl EnvState {
    /// Newest latent value.
    pub fn z(&self) -> f64 {
        self.z_window[0]
    }

    /// The full latent window, newest first.
    pub fn window(&self) -> &[f64] {
        &self.z_window
    }

    pub fn t(&self) -> usize {
        self.t
    }
}

/// Draws lag coefficients uniformly on [-1, 1] and rescales to the requested
/// L1 norm, which keeps the recursion stable when `target_l1 < 1`.
pub fn sample_gamma(k: usize, target_l1: f64, rng: &mut TrialRng) -> Result<Vec<f64>> {
    if !(target_l1 > 0.0 && target_l1 < 1.0) {
        return Err(Error::Config(format!("target_l1 must lie in (0, 1), got {target_l1}")));
    }
    for _ in 0..100 {
        let raw: Vec<f64> = (0..k).map(|_| rng.random_range(-1.0..=1.0)).collect();
        let l1: f64 = raw.iter().map(|g| g.abs()).sum();
        if l1 > 0.0 {
            let scale = target_l1 / l1;
            return Ok(raw.iter().map(|g| g * scale).collect());
        }
    }
    Err(Error::Numeric("degenerate draw: 100 consecutive zero gamma vectors".into()))
}

/// Creates an environment with the initial latent window drawn from
/// `N(init_mean, diag(init_cov_diag))`, deterministic in `seed`.
pub fn init_env(params: &EnvParams, seed: u64) -> Result<EnvState> {
    init_env_with_rng(params, substream(seed, &[crate::rng::purpose::ENV]))
}

/// Same as [`init_env`] but with a caller-supplied stream (used by the
/// harness to run many reproducible trials off one master seed).
pub fn init_env_with_rng(params: &EnvParams, mut rng: TrialRng) -> Result<EnvState> {
    params.validate()?;
    // Window is stored newest first: index 0 holds z_{k-1}, index k-1 holds z_0.
    let mut z_window = vec![0.0; params.k];
    for i in 0..params.k {
        let n: f64 = rng.sample(StandardNormal);
        z_window[params.k - 1 - i] = params.init_mean_at(i) + params.init_cov_at(i).sqrt() * n;
    }
    Ok(EnvState { z_window, t: params.k, rng })
}

/// Advances the latent recursion one step and returns the new value.
pub fn advance_latent(state: &mut EnvState, params: &EnvParams) -> f64 {
    let mut z = params.gamma0;
    for (j, g) in params.gamma.iter().enumerate() {
        z += g * state.z_window[j];
    }
    let xi: f64 = state.rng.sample(StandardNormal);
    z += params.sigma_z * xi;
    state.z_window.rotate_right(1);
    state.z_window[0] = z;
    state.t += 1;
    z
}

/// Draws a reward for `action` at the current latent value. The noise draw
/// comes from the caller's stream so counterfactual rewards can be paired
/// across agents.
pub fn emit_reward(
    state: &EnvState,
    params: &EnvParams,
    action: usize,
    rng: &mut TrialRng,
) -> Result<f64> {
    params.check_action(action)?;
    let eps: f64 = rng.sample(StandardNormal);
    Ok(params.mu[action]
        + params.beta[action] * state.z()
        + params.beta[action].abs() * params.sigma_r * eps)
}

/// Conditional mean reward `mu[a] + beta[a] * z_t`.
pub fn mean_reward(params: &EnvParams, action: usize, z_t: f64) -> Result<f64> {
    params.check_action(action)?;
    Ok(params.mu[action] + params.beta[action] * z_t)
}
