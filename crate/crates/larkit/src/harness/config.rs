//! Experiment configuration: JSON-facing structs and the bundled presets.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::agents::RadiusParams;
use crate::env::EnvParams;
use crate::error::{Error, Result};
use crate::rng::hash_bytes;

/// Default candidate window lengths for the information-criterion policy.
pub const DEFAULT_S_CANDIDATES: &[usize] = &[0, 1, 2, 3, 5, 8, 10, 15];

/// Default clip range for Exp3-style reward normalization.
pub const DEFAULT_REWARD_RANGE: (f64, f64) = (-5.0, 5.0);

/// How a context-window agent picks its window length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SPolicy {
    /// Commit to this window from the start.
    Fixed(usize),
    /// Random exploration followed by an information-criterion commit.
    Bic(BicOptions),
}

impl Default for SPolicy {
    fn default() -> Self {
        SPolicy::Bic(BicOptions::default())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BicOptions {
    /// Candidate window lengths (default `DEFAULT_S_CANDIDATES`).
    #[serde(default)]
    pub candidates: Option<Vec<usize>>,
    /// Exploration length (default `floor(T / 5)`).
    #[serde(default)]
    pub t_prime: Option<usize>,
}

/// One entry of the `agents` array. The `id` is the stable name used in
/// output files; everything else is the policy and its hyperparameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum AgentSpec {
    Larl {
        id: String,
        #[serde(default)]
        s: Option<SPolicy>,
        #[serde(default = "default_lambda")]
        lambda: f64,
        #[serde(default)]
        radius: RadiusParams,
    },
    Stationary {
        id: String,
        #[serde(default = "default_lambda")]
        lambda: f64,
        #[serde(default)]
        radius: RadiusParams,
    },
    SwUcb {
        id: String,
        #[serde(default)]
        window: Option<usize>,
        #[serde(default = "default_xi")]
        xi: f64,
    },
    Rexp3 {
        id: String,
        #[serde(default)]
        batch: Option<usize>,
        #[serde(default)]
        eta: Option<f64>,
        #[serde(default)]
        reward_range: Option<(f64, f64)>,
    },
    ArUcb {
        id: String,
        #[serde(default)]
        k_hat: Option<usize>,
        #[serde(default = "default_lambda")]
        lambda: f64,
        #[serde(default)]
        radius: RadiusParams,
    },
    /// Diagnostic policy that replays the dynamic oracle.
    Oracle { id: String },
    /// Diagnostic policy with ground-truth parameters and the steady-state
    /// filter prediction.
    Intermediate { id: String },
}

fn default_lambda() -> f64 {
    1.0
}
fn default_xi() -> f64 {
    0.6
}

impl AgentSpec {
    pub fn id(&self) -> &str {
        match self {
            AgentSpec::Larl { id, .. }
            | AgentSpec::Stationary { id, .. }
            | AgentSpec::SwUcb { id, .. }
            | AgentSpec::Rexp3 { id, .. }
            | AgentSpec::ArUcb { id, .. }
            | AgentSpec::Oracle { id }
            | AgentSpec::Intermediate { id } => id,
        }
    }

    fn id_mut(&mut self) -> &mut String {
        match self {
            AgentSpec::Larl { id, .. }
            | AgentSpec::Stationary { id, .. }
            | AgentSpec::SwUcb { id, .. }
            | AgentSpec::Rexp3 { id, .. }
            | AgentSpec::ArUcb { id, .. }
            | AgentSpec::Oracle { id }
            | AgentSpec::Intermediate { id } => id,
        }
    }

    /// Hash of the spec content with the id blanked, so agents configured
    /// identically share their randomness inside a trial regardless of name
    /// or position.
    pub fn content_key(&self) -> u64 {
        let mut copy = self.clone();
        copy.id_mut().clear();
        let json = serde_json::to_string(&copy).expect("agent spec serializes");
        hash_bytes(json.as_bytes())
    }
}

/// Environment template. `k` may be a single order or a list for sweeps;
/// when `gamma` is omitted the lag coefficients are redrawn per trial with
/// the given L1 norm.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnvConfig {
    pub k: KSpec,
    #[serde(default)]
    pub gamma0: f64,
    #[serde(default)]
    pub gamma: Option<Vec<f64>>,
    #[serde(default = "default_unit")]
    pub sigma_z: f64,
    #[serde(default = "default_unit")]
    pub sigma_r: f64,
    pub mu: Vec<f64>,
    pub beta: Vec<f64>,
    #[serde(default = "default_target_l1")]
    pub target_l1: f64,
    #[serde(default)]
    pub init_mean: Option<Vec<f64>>,
    #[serde(default)]
    pub init_cov_diag: Option<Vec<f64>>,
}

fn default_unit() -> f64 {
    1.0
}
fn default_target_l1() -> f64 {
    0.9
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum KSpec {
    One(usize),
    Many(Vec<usize>),
}

impl KSpec {
    pub fn values(&self) -> Vec<usize> {
        match self {
            KSpec::One(k) => vec![*k],
            KSpec::Many(ks) => ks.clone(),
        }
    }
}

impl EnvConfig {
    pub fn num_actions(&self) -> usize {
        self.mu.len()
    }

    /// Fills in a concrete parameter set for one trial.
    pub fn realize(&self, k: usize, gamma: Vec<f64>) -> EnvParams {
        EnvParams {
            k,
            gamma0: self.gamma0,
            gamma,
            sigma_z: self.sigma_z,
            sigma_r: self.sigma_r,
            mu: self.mu.clone(),
            beta: self.beta.clone(),
            num_actions: self.num_actions(),
            init_mean: self.init_mean.clone().unwrap_or_default(),
            init_cov_diag: self.init_cov_diag.clone().unwrap_or_default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ks = self.k.values();
        if ks.is_empty() {
            return Err(Error::Config("env.k must list at least one order".into()));
        }
        if ks.contains(&0) {
            return Err(Error::Config("env.k entries must be positive".into()));
        }
        if self.mu.is_empty() || self.mu.len() != self.beta.len() {
            return Err(Error::Config("env.mu and env.beta must be nonempty and equal length".into()));
        }
        if !(self.target_l1 > 0.0 && self.target_l1 < 1.0) {
            return Err(Error::Config("env.target_l1 must lie in (0, 1)".into()));
        }
        if let Some(g) = &self.gamma {
            if ks.len() != 1 || g.len() != ks[0] {
                return Err(Error::Config(
                    "a fixed env.gamma requires a single k matching its length".into(),
                ));
            }
            let l1: f64 = g.iter().map(|x| x.abs()).sum();
            if l1 >= 1.0 {
                return Err(Error::Config("fixed env.gamma must have L1 norm below 1".into()));
            }
        }
        Ok(())
    }
}

/// A full experiment: horizon, trial count, environment template, agent
/// roster, master seed.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(alias = "T")]
    pub t: usize,
    pub n_trials: usize,
    pub env: EnvConfig,
    pub agents: Vec<AgentSpec>,
    #[serde(default)]
    pub seed: u64,
    /// Default window policy for `larl` agents that do not set their own.
    #[serde(default)]
    pub s_policy: SPolicy,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.t == 0 {
            return Err(Error::Config("horizon t must be at least 1".into()));
        }
        if self.n_trials == 0 {
            return Err(Error::Config("n_trials must be at least 1".into()));
        }
        if self.agents.is_empty() {
            return Err(Error::Config("agents list must not be empty".into()));
        }
        let mut seen = std::collections::BTreeSet::new();
        for spec in &self.agents {
            if spec.id().is_empty() {
                return Err(Error::Config("agent ids must be nonempty".into()));
            }
            if !seen.insert(spec.id().to_string()) {
                return Err(Error::Config(format!("duplicate agent id '{}'", spec.id())));
            }
        }
        self.env.validate()
    }

    pub fn from_json(json: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            serde_json::from_str(json).map_err(|e| Error::Config(format!("bad config JSON: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn default_t_prime(&self) -> usize {
        self.t / 5
    }
}

fn paper_env(ks: Vec<usize>) -> EnvConfig {
    EnvConfig {
        k: KSpec::Many(ks),
        gamma0: 0.0,
        gamma: None,
        sigma_z: 1.0,
        sigma_r: 1.0,
        mu: vec![0.0, 0.0],
        beta: vec![-1.0, 1.0],
        target_l1: 0.9,
        init_mean: None,
        init_cov_diag: None,
    }
}

/// Bonus scale used by the presets' UCB-style agents. Tighter than the
/// library default so the exploitation term carries weight within a
/// 200-step horizon; shared across agents to keep the comparison fair.
fn preset_radius() -> RadiusParams {
    RadiusParams { delta: 0.2, r: 0.5, s_bound: 1.0, ..Default::default() }
}

/// Candidate windows for the presets' exploration-then-commit agent. The
/// context reduction is defined for positive windows, so the degenerate
/// length 0 is left out here.
fn preset_candidates() -> Vec<usize> {
    vec![1, 2, 3, 5, 8, 10, 15]
}

/// Two-action benchmark: horizon 200, 100 trials, window chosen by
/// exploration + information criterion, against the four baselines.
pub fn paper_preset(seed: u64) -> ExperimentConfig {
    ExperimentConfig {
        t: 200,
        n_trials: 100,
        env: paper_env(vec![1, 5, 10]),
        agents: vec![
            AgentSpec::Larl {
                id: "larl".into(),
                s: Some(SPolicy::Bic(BicOptions {
                    candidates: Some(preset_candidates()),
                    t_prime: None,
                })),
                lambda: 1.0,
                radius: preset_radius(),
            },
            AgentSpec::Stationary {
                id: "stationary".into(),
                lambda: 1.0,
                radius: preset_radius(),
            },
            AgentSpec::SwUcb { id: "sw-ucb".into(), window: None, xi: 0.6 },
            AgentSpec::Rexp3 { id: "rexp3".into(), batch: None, eta: None, reward_range: None },
            AgentSpec::ArUcb {
                id: "ar-ucb".into(),
                k_hat: None,
                lambda: 1.0,
                radius: preset_radius(),
            },
        ],
        seed,
        s_policy: SPolicy::default(),
        output_dir: None,
    }
}

/// Fixed-window sweep exercising the under/over-parameterization trade-off.
pub fn bias_variance_preset(seed: u64) -> ExperimentConfig {
    let mut agents: Vec<AgentSpec> = [1usize, 5, 10, 15]
        .iter()
        .map(|s| AgentSpec::Larl {
            id: format!("larl-s{s}"),
            s: Some(SPolicy::Fixed(*s)),
            lambda: 1.0,
            radius: preset_radius(),
        })
        .collect();
    agents.push(AgentSpec::Stationary {
        id: "stationary".into(),
        lambda: 1.0,
        radius: preset_radius(),
    });
    ExperimentConfig {
        t: 200,
        n_trials: 100,
        env: paper_env(vec![1, 5, 10]),
        agents,
        seed,
        s_policy: SPolicy::default(),
        output_dir: None,
    }
}
