//! Dynamic-oracle benchmark and regret accounting.
//!
//! The oracle observes the realized latent value each step and plays the
//! action with the best conditional mean; regret is measured in conditional
//! means so the reward noise cancels exactly.

use serde::Serialize;

use crate::agents::argmax_tie_low;
use crate::env::EnvParams;
use crate::lds::SteadyKalman;

/// Per-trial regret bookkeeping for one agent.
#[derive(Debug, Clone, Serialize)]
pub struct RegretTrace {
    /// Nonnegative per-step gaps.
    pub instantaneous: Vec<f64>,
    /// Prefix sums of the gaps.
    pub cumulative: Vec<f64>,
    pub oracle_actions: Vec<usize>,
    pub agent_actions: Vec<usize>,
}

impl RegretTrace {
    pub fn with_capacity(n: usize) -> Self {
        RegretTrace {
            instantaneous: Vec::with_capacity(n),
            cumulative: Vec::with_capacity(n),
            oracle_actions: Vec::with_capacity(n),
            agent_actions: Vec::with_capacity(n),
        }
    }

    pub fn push(&mut self, gap: f64, oracle_action: usize, agent_action: usize) {
        let prev = self.cumulative.last().copied().unwrap_or(0.0);
        self.instantaneous.push(gap);
        self.cumulative.push(prev + gap);
        self.oracle_actions.push(oracle_action);
        self.agent_actions.push(agent_action);
    }

    pub fn final_cumulative(&self) -> f64 {
        self.cumulative.last().copied().unwrap_or(0.0)
    }
}

/// Best action given the realized latent value; ties go to the lowest index.
pub fn oracle_action(params: &EnvParams, z_t: f64) -> usize {
    let scores: Vec<f64> = (0..params.num_actions)
        .map(|a| params.mu[a] + params.beta[a] * z_t)
        .collect();
    argmax_tie_low(&scores)
}

/// Conditional-mean gap between the oracle's action and the agent's.
pub fn instantaneous_regret(
    params: &EnvParams,
    z_t: f64,
    oracle_a: usize,
    agent_a: usize,
) -> f64 {
    (params.mu[oracle_a] + params.beta[oracle_a] * z_t)
        - (params.mu[agent_a] + params.beta[agent_a] * z_t)
}

/// Action of the proof-device agent that knows the true parameters and plays
/// the argmax of the filter-predicted mean.
pub fn intermediate_action(kf: &SteadyKalman, params: &EnvParams) -> usize {
    let z_hat = kf.z_tilde[0];
    let scores: Vec<f64> = (0..params.num_actions)
        .map(|a| params.mu[a] + params.beta[a] * z_hat)
        .collect();
    argmax_tie_low(&scores)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{advance_latent, emit_reward, init_env};
    use crate::lds::{normalize_measurement, to_companion, SteadyKalman};
    use crate::rng::substream;
    use rand::Rng as _;

    fn two_arm() -> EnvParams {
        EnvParams {
            k: 1,
            gamma0: 0.0,
            gamma: vec![0.5],
            sigma_z: 1.0,
            sigma_r: 1.0,
            mu: vec![0.0, 0.0],
            beta: vec![-1.0, 1.0],
            num_actions: 2,
            init_mean: vec![],
            init_cov_diag: vec![],
        }
    }

    #[test]
    fn oracle_action_examples() {
        let p = two_arm();
        assert_eq!(oracle_action(&p, 0.7), 1);
        assert_eq!(oracle_action(&p, 0.0), 0); // tie
        let mut p2 = p.clone();
        p2.mu = vec![1.0, 0.0];
        assert_eq!(oracle_action(&p2, 0.4), 0); // 1 - 0.4 > 0.4
    }

    #[test]
    fn regret_examples() {
        let p = two_arm();
        assert_eq!(instantaneous_regret(&p, 0.7, 1, 1), 0.0);
        assert_eq!(instantaneous_regret(&p, 0.7, 1, 0), 1.4);
    }

    #[test]
    fn regret_nonnegative_against_oracle_choice() {
        let mut rng = substream(0, &[1]);
        for _ in 0..100_000 {
            let z: f64 = rng.random_range(-3.0..3.0);
            let mut p = two_arm();
            p.mu = vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
            p.beta = vec![rng.random_range(0.1..2.0) * if rng.random::<bool>() { 1.0 } else { -1.0 },
                          rng.random_range(0.1..2.0)];
            let best = oracle_action(&p, z);
            let other: usize = rng.random_range(0..2);
            assert!(instantaneous_regret(&p, z, best, other) >= 0.0);
        }
    }

    #[test]
    fn trace_is_monotone() {
        let mut trace = RegretTrace::with_capacity(3);
        trace.push(0.5, 0, 1);
        trace.push(0.0, 1, 1);
        trace.push(1.25, 0, 1);
        assert_eq!(trace.cumulative, vec![0.5, 0.5, 1.75]);
        assert_eq!(trace.final_cumulative(), 1.75);
        assert!(trace.cumulative.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn intermediate_action_reads_filter_head() {
        let p = two_arm();
        let lds = to_companion(&p);
        let mut kf = SteadyKalman::init(&lds, &p, 1e-12, 100_000).unwrap();
        kf.z_tilde[0] = 0.7;
        assert_eq!(intermediate_action(&kf, &p), 1);
        kf.z_tilde[0] = -0.7;
        assert_eq!(intermediate_action(&kf, &p), 0);
    }

    #[test]
    fn intermediate_agrees_with_oracle_in_stationary_limit() {
        // Tiny latent noise: the recursion settles at its fixed point, the
        // filter locks on after burn-in, and both policies agree.
        let mut p = two_arm();
        p.gamma0 = 1.0;
        p.sigma_z = 1e-6;
        p.sigma_r = 0.05;
        let lds = to_companion(&p);
        let mut kf = SteadyKalman::init(&lds, &p, 1e-13, 200_000).unwrap();
        let mut env = init_env(&p, 12).unwrap();
        let mut rng = substream(12, &[4]);
        let mut disagreements = 0;
        for t in 0..400 {
            let z = advance_latent(&mut env, &p);
            if t >= 100 && intermediate_action(&kf, &p) != oracle_action(&p, z) {
                disagreements += 1;
            }
            let a = t % 2;
            let r = emit_reward(&env, &p, a, &mut rng).unwrap();
            kf.step(&lds, normalize_measurement(r, a, &p).unwrap());
        }
        assert_eq!(disagreements, 0);
    }

    #[test]
    fn intermediate_gap_respects_filter_error_bound() {
        // Pointwise the oracle-vs-intermediate gap is at most
        // 2 max_a |c_a| * |true window - filter estimate|, so the same holds
        // for the 99th percentiles over a long run.
        let p = EnvParams { k: 2, gamma: vec![0.5, 0.3], ..two_arm() };
        let lds = to_companion(&p);
        let mut kf = SteadyKalman::init(&lds, &p, 1e-12, 200_000).unwrap();
        let mut env = init_env(&p, 3).unwrap();
        let mut rng = substream(3, &[5]);
        let mut gaps = Vec::new();
        let mut errs = Vec::new();
        for _ in 0..20_000 {
            let z = advance_latent(&mut env, &p);
            let inter = intermediate_action(&kf, &p);
            let best = oracle_action(&p, z);
            gaps.push(instantaneous_regret(&p, z, best, inter));
            let err: f64 = env
                .window()
                .iter()
                .zip(kf.z_tilde.iter())
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            errs.push(err);
            let a = inter;
            let r = emit_reward(&env, &p, a, &mut rng).unwrap();
            kf.step(&lds, normalize_measurement(r, a, &p).unwrap());
        }
        let pct = |xs: &mut Vec<f64>| {
            xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
            xs[(xs.len() as f64 * 0.99) as usize]
        };
        let max_c = p.beta.iter().map(|b| b.abs()).fold(0.0, f64::max);
        let g99 = pct(&mut gaps);
        let e99 = pct(&mut errs);
        assert!(g99 <= 2.0 * max_c * e99, "gap p99 {g99} vs bound {}", 2.0 * max_c * e99);
    }
}
