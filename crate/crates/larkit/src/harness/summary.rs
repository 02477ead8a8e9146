//! Monte-Carlo aggregation: mean/std regret curves and pairwise win rates.

use crate::error::{Error, Result};

use super::config::ExperimentConfig;
use super::trial::{run_trial, TrialResult};

/// Per-agent mean and standard deviation of cumulative regret at each step.
#[derive(Debug, Clone)]
pub struct MonteCarloSummary {
    pub agent_ids: Vec<String>,
    pub t: usize,
    /// `[agent][step]`.
    pub mean: Vec<Vec<f64>>,
    /// Population standard deviation, `[agent][step]`.
    pub std: Vec<Vec<f64>>,
    pub n_trials: usize,
}

impl MonteCarloSummary {
    pub fn final_mean(&self, agent: usize) -> f64 {
        self.mean[agent][self.t - 1]
    }

    pub fn agent_index(&self, id: &str) -> Option<usize> {
        self.agent_ids.iter().position(|a| a == id)
    }
}

/// Outcome of a Monte-Carlo run; failed trials are reported, not fatal.
#[derive(Debug)]
pub struct MonteCarloRun {
    pub summary: MonteCarloSummary,
    pub trials: Vec<TrialResult>,
    pub failures: Vec<(u64, String)>,
}

/// Collapses per-trial traces into mean/std curves. Trials are consumed in
/// ascending trial order so the floating-point reduction is reproducible.
pub fn summarize(trials: &[TrialResult], agent_ids: &[String], t: usize) -> Result<MonteCarloSummary> {
    if trials.is_empty() {
        return Err(Error::Numeric("no successful trials to summarize".into()));
    }
    let n = trials.len() as f64;
    let mut mean = vec![vec![0.0; t]; agent_ids.len()];
    let mut sq = vec![vec![0.0; t]; agent_ids.len()];
    for trial in trials {
        if trial.agents.len() != agent_ids.len() {
            return Err(Error::Usage("trial agent set does not match summary roster".into()));
        }
        for (ai, agent) in trial.agents.iter().enumerate() {
            if agent.id != agent_ids[ai] {
                return Err(Error::Usage(format!(
                    "trial {} lists agent '{}' where '{}' was expected",
                    trial.trial_id, agent.id, agent_ids[ai]
                )));
            }
            for (ti, c) in agent.trace.cumulative.iter().enumerate() {
                mean[ai][ti] += c;
                sq[ai][ti] += c * c;
            }
        }
    }
    let mut std = vec![vec![0.0; t]; agent_ids.len()];
    for ai in 0..agent_ids.len() {
        for ti in 0..t {
            mean[ai][ti] /= n;
            let var = (sq[ai][ti] / n - mean[ai][ti] * mean[ai][ti]).max(0.0);
            std[ai][ti] = var.sqrt();
        }
    }
    Ok(MonteCarloSummary { agent_ids: agent_ids.to_vec(), t, mean, std, n_trials: trials.len() })
}

fn assemble(
    cfg: &ExperimentConfig,
    results: Vec<(u64, Result<TrialResult>)>,
) -> Result<MonteCarloRun> {
    let mut trials = Vec::new();
    let mut failures = Vec::new();
    for (trial_id, outcome) in results {
        match outcome {
            Ok(t) => trials.push(t),
            Err(e) => failures.push((trial_id, e.to_string())),
        }
    }
    if trials.is_empty() {
        return Err(Error::Numeric(format!(
            "all {} trials failed; first failure: {}",
            cfg.n_trials,
            failures.first().map(|(_, m)| m.as_str()).unwrap_or("unknown")
        )));
    }
    let agent_ids: Vec<String> = cfg.agents.iter().map(|a| a.id().to_string()).collect();
    let summary = summarize(&trials, &agent_ids, cfg.t)?;
    Ok(MonteCarloRun { summary, trials, failures })
}

/// Optional thread cap from the `LARKIT_THREADS` environment variable.
pub fn thread_cap() -> Option<usize> {
    std::env::var("LARKIT_THREADS").ok()?.trim().parse().ok().filter(|n| *n >= 1)
}

/// Sequential Monte-Carlo driver; always available and used as the
/// comparison point by the benchmarks.
pub fn run_monte_carlo_seq(cfg: &ExperimentConfig, k: usize) -> Result<MonteCarloRun> {
    cfg.validate()?;
    let results: Vec<(u64, Result<TrialResult>)> =
        (0..cfg.n_trials as u64).map(|t| (t, run_trial(cfg, k, t))).collect();
    assemble(cfg, results)
}

/// Monte-Carlo driver over independent per-trial substreams. With the
/// `parallel` feature the trials run on a work pool (capped by
/// `LARKIT_THREADS`); results are identical to the sequential driver.
#[cfg(feature = "parallel")]
pub fn run_monte_carlo(cfg: &ExperimentConfig, k: usize) -> Result<MonteCarloRun> {
    use rayon::prelude::*;
    cfg.validate()?;
    let ids: Vec<u64> = (0..cfg.n_trials as u64).collect();
    let work = || -> Vec<(u64, Result<TrialResult>)> {
        ids.par_iter().map(|t| (*t, run_trial(cfg, k, *t))).collect()
    };
    let results = match thread_cap() {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Config(format!("failed to build thread pool: {e}")))?
            .install(work),
        None => work(),
    };
    assemble(cfg, results)
}

#[cfg(not(feature = "parallel"))]
pub fn run_monte_carlo(cfg: &ExperimentConfig, k: usize) -> Result<MonteCarloRun> {
    run_monte_carlo_seq(cfg, k)
}

/// Win-rate matrix: entry (i, j) is the fraction of trials where agent i
/// finished with strictly lower cumulative regret than agent j. Ties count
/// for neither side and the diagonal stays zero.
pub fn pairwise_matrix(trials: &[TrialResult], agent_ids: &[String]) -> Result<Vec<Vec<f64>>> {
    if trials.is_empty() {
        return Err(Error::Usage("no trials to compare".into()));
    }
    let m = agent_ids.len();
    let mut finals = vec![Vec::with_capacity(trials.len()); m];
    for trial in trials {
        for (idx, id) in agent_ids.iter().enumerate() {
            let agent = trial
                .agents
                .iter()
                .find(|a| &a.id == id)
                .ok_or_else(|| Error::Usage(format!("agent '{id}' missing from trial {}", trial.trial_id)))?;
            finals[idx].push(agent.trace.final_cumulative());
        }
    }
    let n = trials.len() as f64;
    let mut matrix = vec![vec![0.0; m]; m];
    for i in 0..m {
        for j in 0..m {
            if i == j {
                continue;
            }
            let wins = finals[i].iter().zip(&finals[j]).filter(|(a, b)| a < b).count();
            matrix[i][j] = wins as f64 / n;
        }
    }
    Ok(matrix)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::paper_preset;

    fn small_cfg() -> ExperimentConfig {
        let mut cfg = paper_preset(9);
        cfg.t = 40;
        cfg.n_trials = 4;
        // Drop to two cheap agents to keep the unit test quick.
        cfg.agents.truncate(2);
        cfg
    }

    #[test]
    fn single_trial_std_is_zero() {
        let mut cfg = small_cfg();
        cfg.n_trials = 1;
        let run = run_monte_carlo_seq(&cfg, 1).unwrap();
        assert!(run.summary.std.iter().flatten().all(|s| *s == 0.0));
        assert_eq!(run.summary.n_trials, 1);
    }

    #[test]
    fn doubling_trials_preserves_prefix() {
        let cfg4 = small_cfg();
        let mut cfg8 = small_cfg();
        cfg8.n_trials = 8;
        let a = run_monte_carlo_seq(&cfg4, 1).unwrap();
        let b = run_monte_carlo_seq(&cfg8, 1).unwrap();
        for (x, y) in a.trials.iter().zip(b.trials.iter()) {
            assert_eq!(x.latent, y.latent);
            for (ax, ay) in x.agents.iter().zip(&y.agents) {
                assert_eq!(ax.trace.cumulative, ay.trace.cumulative);
            }
        }
    }

    #[cfg(feature = "parallel")]
    #[test]
    fn parallel_matches_sequential() {
        let cfg = small_cfg();
        let seq = run_monte_carlo_seq(&cfg, 1).unwrap();
        let par = run_monte_carlo(&cfg, 1).unwrap();
        assert_eq!(seq.summary.mean, par.summary.mean);
        assert_eq!(seq.summary.std, par.summary.std);
    }

    #[test]
    fn pairwise_matrix_properties() {
        let cfg = small_cfg();
        let run = run_monte_carlo_seq(&cfg, 1).unwrap();
        let ids: Vec<String> = run.summary.agent_ids.clone();
        let m = pairwise_matrix(&run.trials, &ids).unwrap();
        for (i, row) in m.iter().enumerate() {
            assert_eq!(row[i], 0.0);
            for (j, v) in row.iter().enumerate() {
                assert!(v + m[j][i] <= 1.0 + 1e-12);
            }
        }
    }

    #[test]
    fn stationary_agent_accumulates_regret_linearly() {
        // A mean-tracking policy cannot follow the moving target, so its
        // regret keeps growing through the horizon; the cumulative curve
        // should roughly double from the midpoint to the end.
        let mut cfg = paper_preset(2);
        cfg.t = 200;
        cfg.n_trials = 100;
        cfg.agents = vec![cfg.agents[1].clone()]; // stationary only
        let run = run_monte_carlo_seq(&cfg, 1).unwrap();
        let mean = &run.summary.mean[0];
        let half = mean[cfg.t / 2 - 1];
        let full = mean[cfg.t - 1];
        assert!(full > 0.0 && half > 0.0);
        let ratio = full / half;
        assert!((1.6..=2.4).contains(&ratio), "not roughly linear: ratio {ratio:.3}");
    }
}
