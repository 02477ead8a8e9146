//! Feature construction from recent history.

use nalgebra::DVector;

use crate::error::{Error, Result};

/// Feature vector of dimension `2 * s * num_actions + 1`: a reward block and
/// an action-indicator block (one slot per recent step, oldest first, one-hot
/// over actions within a slot), followed by a constant 1.
#[derive(Debug, Clone)]
pub struct ContextVector {
    pub phi: DVector<f64>,
    pub s: usize,
    pub num_actions: usize,
}

impl ContextVector {
    pub fn dim(&self) -> usize {
        self.phi.len()
    }
}

/// Encodes the most recent `<= s` steps of history, in chronological order.
/// During warm-up (fewer than `s` observed steps) the leading slots stay
/// zero in both blocks.
pub fn build_context(
    history: &[(usize, f64)],
    s: usize,
    num_actions: usize,
) -> Result<ContextVector> {
    if history.len() > s {
        return Err(Error::Usage(format!(
            "history has {} entries but the context window is {s}",
            history.len()
        )));
    }
    let dim = 2 * s * num_actions + 1;
    let mut phi = DVector::zeros(dim);
    let offset = s - history.len();
    for (i, (action, reward)) in history.iter().enumerate() {
        if *action >= num_actions {
            return Err(Error::Usage(format!("action {action} out of range in history")));
        }
        let slot = offset + i;
        phi[slot * num_actions + action] = *reward;
        phi[s * num_actions + slot * num_actions + action] = 1.0;
    }
    phi[dim - 1] = 1.0;
    Ok(ContextVector { phi, s, num_actions })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn single_slot_window() {
        let c = build_context(&[(1, 2.0)], 1, 2).unwrap();
        assert_eq!(c.phi.as_slice(), &[0.0, 2.0, 0.0, 1.0, 1.0]);
    }

    #[test]
    fn zero_window_is_constant_only() {
        let c = build_context(&[], 0, 2).unwrap();
        assert_eq!(c.phi.as_slice(), &[1.0]);
        assert_eq!(c.dim(), 1);
    }

    #[test]
    fn two_slot_window() {
        let c = build_context(&[(0, -1.5), (1, 0.5)], 2, 2).unwrap();
        assert_eq!(
            c.phi.as_slice(),
            &[-1.5, 0.0, 0.0, 0.5, 1.0, 0.0, 0.0, 1.0, 1.0]
        );
    }

    #[test]
    fn warmup_slots_are_zero_padded() {
        let c = build_context(&[(1, 3.0)], 3, 2).unwrap();
        // Only the newest slot (index 2) is filled.
        assert_eq!(
            c.phi.as_slice(),
            &[0.0, 0.0, 0.0, 0.0, 0.0, 3.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 1.0]
        );
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(build_context(&[(0, 1.0), (1, 1.0)], 1, 2).is_err());
        assert!(build_context(&[(5, 1.0)], 1, 2).is_err());
    }

    proptest! {
        #[test]
        fn dimension_and_structure(
            s in 0usize..8,
            num_actions in 1usize..5,
            raw in proptest::collection::vec((0usize..5, -10.0f64..10.0), 0..8)
        ) {
            let history: Vec<(usize, f64)> = raw
                .into_iter()
                .map(|(a, r)| (a % num_actions, r))
                .take(s)
                .collect();
            let c = build_context(&history, s, num_actions).unwrap();
            prop_assert_eq!(c.dim(), 2 * s * num_actions + 1);
            prop_assert_eq!(c.phi[c.dim() - 1], 1.0);
            // Indicator block has exactly one 1 per filled slot.
            let ones: f64 = c.phi.as_slice()[s * num_actions..2 * s * num_actions].iter().sum();
            prop_assert_eq!(ones, history.len() as f64);
        }
    }
}
