//! Bandit agents: the context-window linear-UCB agent plus the baseline
//! policies it is benchmarked against.
//!
//! Every agent follows the same sequential contract inside a trial:
//! `select` proposes an action, the caller realizes a reward, and `update`
//! feeds it back. Agents never share mutable state; randomized policies draw
//! from the stream the caller passes in.

mod baselines;
mod context;
mod larl;
mod rls;

pub use baselines::{ArUcb, Rexp3, StationaryUcb, SwUcb};
pub use context::{build_context, ContextVector};
pub use larl::{larl_select, BicLarl, LarlAgent};
pub use rls::{practical_radius, theoretical_radius, RadiusMode, RadiusParams, RlsState};

use crate::error::Result;
use crate::rng::TrialRng;

pub trait Agent {
    fn select(&mut self, rng: &mut TrialRng) -> Result<usize>;
    fn update(&mut self, action: usize, reward: f64) -> Result<()>;
    /// Context-window length the agent committed to, when that concept applies.
    fn chosen_s(&self) -> Option<usize> {
        None
    }
}

/// Argmax with deterministic lowest-index tie-breaking.
pub(crate) fn argmax_tie_low(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, s) in scores.iter().enumerate().skip(1) {
        if *s > scores[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn argmax_prefers_lowest_on_ties() {
        assert_eq!(argmax_tie_low(&[1.0, 1.0, 1.0]), 0);
        assert_eq!(argmax_tie_low(&[0.0, 2.0, 2.0]), 1);
        assert_eq!(argmax_tie_low(&[0.0, 1.0, 2.0]), 2);
    }

    #[test]
    fn argmax_invariant_under_constant_shift() {
        let scores = [0.3, -1.2, 0.9, 0.9];
        let shifted: Vec<f64> = scores.iter().map(|s| s + 5.5).collect();
        assert_eq!(argmax_tie_low(&scores), argmax_tie_low(&shifted));
    }
}
