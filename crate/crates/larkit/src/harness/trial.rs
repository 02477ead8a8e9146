//! Single-trial execution with paired randomness across agents.

use serde::Serialize;

use crate::agents::{Agent, ArUcb, BicLarl, LarlAgent, Rexp3, StationaryUcb, SwUcb};
use crate::env::{advance_latent, init_env_with_rng, mean_reward, sample_gamma, EnvParams};
use crate::error::{Error, Result};
use crate::lds::{normalize_measurement, to_companion, CompanionLds, SteadyKalman};
use crate::oracle::{instantaneous_regret, intermediate_action, oracle_action, RegretTrace};
use crate::rng::{purpose, substream};
use rand_distr::StandardNormal;

use super::config::{AgentSpec, ExperimentConfig, SPolicy, DEFAULT_REWARD_RANGE, DEFAULT_S_CANDIDATES};

/// Per-agent outcome of one trial.
#[derive(Debug, Clone, Serialize)]
pub struct AgentTrialResult {
    pub id: String,
    pub trace: RegretTrace,
    pub chosen_s: Option<usize>,
}

/// One Monte-Carlo trial: the shared environment realization plus every
/// agent's trace against the dynamic oracle.
#[derive(Debug, Clone, Serialize)]
pub struct TrialResult {
    pub trial_id: u64,
    pub k: usize,
    pub gamma: Vec<f64>,
    pub init_window: Vec<f64>,
    pub latent: Vec<f64>,
    pub agents: Vec<AgentTrialResult>,
}

enum Runner {
    Policy(Box<dyn Agent>),
    Oracle,
    Intermediate(Box<(CompanionLds, SteadyKalman)>),
}

fn build_runner(spec: &AgentSpec, cfg: &ExperimentConfig, params: &EnvParams) -> Result<Runner> {
    let actions = params.num_actions;
    Ok(match spec {
        AgentSpec::Larl { s, lambda, radius, .. } => {
            let policy = s.clone().unwrap_or_else(|| cfg.s_policy.clone());
            match policy {
                SPolicy::Fixed(s) => {
                    Runner::Policy(Box::new(LarlAgent::new(s, actions, *lambda, *radius)?))
                }
                SPolicy::Bic(opts) => {
                    let t_prime = opts.t_prime.unwrap_or_else(|| cfg.default_t_prime());
                    let candidates =
                        opts.candidates.unwrap_or_else(|| DEFAULT_S_CANDIDATES.to_vec());
                    Runner::Policy(Box::new(BicLarl::new(
                        t_prime, candidates, actions, *lambda, *radius,
                    )?))
                }
            }
        }
        AgentSpec::Stationary { lambda, radius, .. } => {
            Runner::Policy(Box::new(StationaryUcb::new(actions, *lambda, *radius)?))
        }
        AgentSpec::SwUcb { window, xi, .. } => {
            let w = window.unwrap_or_else(|| SwUcb::default_window(cfg.t));
            Runner::Policy(Box::new(SwUcb::new(actions, w, *xi)?))
        }
        AgentSpec::Rexp3 { batch, eta, reward_range, .. } => {
            let b = batch.unwrap_or_else(|| Rexp3::default_batch(cfg.t));
            let e = eta.unwrap_or_else(|| Rexp3::default_eta(actions, b));
            let range = reward_range.unwrap_or(DEFAULT_REWARD_RANGE);
            Runner::Policy(Box::new(Rexp3::new(actions, b, e, range)?))
        }
        AgentSpec::ArUcb { k_hat, lambda, radius, .. } => {
            let order = k_hat.unwrap_or(params.k);
            Runner::Policy(Box::new(ArUcb::new(actions, order, *lambda, *radius)?))
        }
        AgentSpec::Oracle { .. } => Runner::Oracle,
        AgentSpec::Intermediate { .. } => {
            let lds = to_companion(params);
            let kf = SteadyKalman::init(&lds, params, 1e-10, 200_000)?;
            Runner::Intermediate(Box::new((lds, kf)))
        }
    })
}

fn agent_err(id: &str, e: Error) -> Error {
    match e {
        Error::Config(m) => Error::Config(format!("agent '{id}': {m}")),
        Error::Usage(m) => Error::Usage(format!("agent '{id}': {m}")),
        Error::Numeric(m) => Error::Numeric(format!("agent '{id}': {m}")),
        other => other,
    }
}

/// Runs one trial. The latent trajectory and the per-(step, action)
/// counterfactual reward noise are generated once and replayed for every
/// agent, so agents differ only through the actions they pick.
pub fn run_trial(cfg: &ExperimentConfig, k: usize, trial_id: u64) -> Result<TrialResult> {
    let seed = cfg.seed;
    let kk = k as u64;

    let gamma = match &cfg.env.gamma {
        Some(g) => g.clone(),
        None => {
            let mut rng = substream(seed, &[purpose::GAMMA, kk, trial_id]);
            sample_gamma(k, cfg.env.target_l1, &mut rng)?
        }
    };
    let params = cfg.env.realize(k, gamma.clone());
    params.validate()?;

    let mut env = init_env_with_rng(&params, substream(seed, &[purpose::ENV, kk, trial_id]))?;
    let init_window = env.window().to_vec();
    let latent: Vec<f64> = (0..cfg.t).map(|_| advance_latent(&mut env, &params)).collect();

    // Counterfactual reward noise per (step, action), shared by all agents.
    let mut reward_rng = substream(seed, &[purpose::REWARD, kk, trial_id]);
    let noise: Vec<Vec<f64>> = (0..cfg.t)
        .map(|_| {
            (0..params.num_actions)
                .map(|a| {
                    use rand::Rng as _;
                    let n: f64 = reward_rng.sample(StandardNormal);
                    params.beta[a].abs() * params.sigma_r * n
                })
                .collect()
        })
        .collect();

    let oracle_actions: Vec<usize> = latent.iter().map(|z| oracle_action(&params, *z)).collect();

    let mut agents = Vec::with_capacity(cfg.agents.len());
    for spec in &cfg.agents {
        let id = spec.id().to_string();
        let mut runner = build_runner(spec, cfg, &params).map_err(|e| agent_err(&id, e))?;
        let mut arng = substream(seed, &[purpose::AGENT, kk, trial_id, spec.content_key()]);
        let mut trace = RegretTrace::with_capacity(cfg.t);
        for t in 0..cfg.t {
            let z = latent[t];
            let action = match &mut runner {
                Runner::Policy(p) => p.select(&mut arng).map_err(|e| agent_err(&id, e))?,
                Runner::Oracle => oracle_actions[t],
                Runner::Intermediate(state) => intermediate_action(&state.1, &params),
            };
            if action >= params.num_actions {
                return Err(Error::Usage(format!("agent '{id}': selected action {action} out of range")));
            }
            let reward = mean_reward(&params, action, z)? + noise[t][action];
            let gap = instantaneous_regret(&params, z, oracle_actions[t], action);
            trace.push(gap, oracle_actions[t], action);
            match &mut runner {
                Runner::Policy(p) => p.update(action, reward).map_err(|e| agent_err(&id, e))?,
                Runner::Oracle => {}
                Runner::Intermediate(state) => {
                    let (lds, kf) = state.as_mut();
                    kf.step(lds, normalize_measurement(reward, action, &params)?)
                }
            }
        }
        let chosen_s = match &runner {
            Runner::Policy(p) => p.chosen_s(),
            _ => None,
        };
        agents.push(AgentTrialResult { id, trace, chosen_s });
    }

    Ok(TrialResult { trial_id, k, gamma, init_window, latent, agents })
}
