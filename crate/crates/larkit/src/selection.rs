//! Hyperparameter selection: information-criterion choice of the context
//! window from an exploration log, and a monotone-constrained lasso for
//! committing to an autoregressive order.

use nalgebra::{DMatrix, DVector};

use crate::agents::{build_context, ContextVector, RlsState};
use crate::error::{Error, Result};

/// Random-exploration log shared by every candidate window length.
#[derive(Debug, Clone)]
pub struct ExplorationLog {
    records: Vec<(usize, f64)>,
    num_actions: usize,
}

impl ExplorationLog {
    pub fn new(records: Vec<(usize, f64)>, num_actions: usize) -> Result<Self> {
        if num_actions == 0 {
            return Err(Error::Config("num_actions must be positive".into()));
        }
        if let Some((a, _)) = records.iter().find(|(a, _)| *a >= num_actions) {
            return Err(Error::Usage(format!("logged action {a} out of range")));
        }
        Ok(ExplorationLog { records, num_actions })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[(usize, f64)] {
        &self.records
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    /// Re-encodes the log as contexts for a candidate window length.
    pub fn contexts(&self, s: usize) -> Result<Vec<(ContextVector, usize, f64)>> {
        (0..self.records.len())
            .map(|j| {
                let from = j.saturating_sub(s);
                let phi = build_context(&self.records[from..j], s, self.num_actions)?;
                let (a, r) = self.records[j];
                Ok((phi, a, r))
            })
            .collect()
    }
}

/// Gaussian-likelihood information criterion
/// `n ln(RSS/n) + p(s) ln n` with `p(s) = |A| (2 s |A| + 1)` parameters;
/// smaller is better, ties go to the smaller window.
pub fn bic_select_s(log: &ExplorationLog, candidates: &[usize], lambda: f64) -> Result<usize> {
    if log.is_empty() {
        return Err(Error::Usage("exploration log is empty".into()));
    }
    if candidates.is_empty() {
        return Err(Error::Usage("candidate list is empty".into()));
    }
    let mut sorted: Vec<usize> = candidates.to_vec();
    sorted.sort_unstable();
    sorted.dedup();

    let n = log.len() as f64;
    let mut best: Option<(f64, usize)> = None;
    for &s in &sorted {
        let encoded = log.contexts(s)?;
        let dim = 2 * s * log.num_actions() + 1;
        let mut rls: Vec<RlsState> = (0..log.num_actions())
            .map(|_| RlsState::new(dim, lambda))
            .collect::<Result<Vec<_>>>()?;
        for (phi, a, r) in &encoded {
            rls[*a].update(&phi.phi, *r)?;
        }
        let rss: f64 = encoded
            .iter()
            .map(|(phi, a, r)| {
                let e = r - phi.phi.dot(&rls[*a].theta_hat);
                e * e
            })
            .sum();
        let p = (log.num_actions() * dim) as f64;
        let bic = n * (rss.max(1e-300) / n).ln() + p * n.ln();
        if best.is_none_or(|(b, _)| bic < b) {
            best = Some((bic, s));
        }
    }
    Ok(best.unwrap().1)
}

/// Euclidean projection onto the nonincreasing cone by pooling adjacent
/// violators.
pub fn pava_nonincreasing(x: &[f64]) -> Vec<f64> {
    let mut means: Vec<f64> = Vec::with_capacity(x.len());
    let mut counts: Vec<usize> = Vec::with_capacity(x.len());
    for &v in x {
        let mut m = v;
        let mut c = 1usize;
        while let Some(&prev) = means.last() {
            if prev < m {
                means.pop();
                let pc = counts.pop().unwrap();
                m = (m * c as f64 + prev * pc as f64) / (c + pc) as f64;
                c += pc;
            } else {
                break;
            }
        }
        means.push(m);
        counts.push(c);
    }
    let mut out = Vec::with_capacity(x.len());
    for (m, c) in means.iter().zip(&counts) {
        out.extend(std::iter::repeat_n(*m, *c));
    }
    out
}

/// Projection onto `{x : x1 >= x2 >= ... >= xd >= 0}`; clipping after the
/// monotone projection is exact for a lower bound.
pub fn project_monotone_nonneg(x: &[f64]) -> Vec<f64> {
    pava_nonincreasing(x).into_iter().map(|v| v.max(0.0)).collect()
}

/// Split-coefficient lasso fit with the order constraint that earlier
/// (more recent) features carry at least as much weight as later ones.
#[derive(Debug, Clone)]
pub struct OrderedLassoFit {
    pub theta_plus: Vec<f64>,
    pub theta_minus: Vec<f64>,
    pub lambda: f64,
    pub objective_trace: Vec<f64>,
}

impl OrderedLassoFit {
    pub fn coefficients(&self) -> Vec<f64> {
        self.theta_plus
            .iter()
            .zip(&self.theta_minus)
            .map(|(p, m)| p - m)
            .collect()
    }
}

fn lasso_objective(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    lambda: f64,
    plus: &DVector<f64>,
    minus: &DVector<f64>,
) -> f64 {
    let resid = y - x * (plus - minus);
    0.5 * resid.norm_squared() + lambda * (plus.sum() + minus.sum())
}

/// Projected proximal gradient on the split objective
/// `1/2 |y - X (t+ - t-)|^2 + lambda sum(t+ + t-)` subject to both chains
/// being nonincreasing and nonnegative. Columns of `X` must be arranged so
/// lower index means more recent.
pub fn ordered_lasso_fit(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    lambda: f64,
    step: Option<f64>,
    max_iter: usize,
    tol: f64,
) -> Result<OrderedLassoFit> {
    if x.nrows() != y.len() {
        return Err(Error::Usage(format!(
            "design has {} rows but the response has {} entries",
            x.nrows(),
            y.len()
        )));
    }
    if x.iter().any(|v| !v.is_finite()) || y.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("ordered lasso requires finite inputs".into()));
    }
    if lambda < 0.0 {
        return Err(Error::Config("penalty weight must be nonnegative".into()));
    }
    let step = match step {
        Some(s) if s > 0.0 => s,
        Some(s) => return Err(Error::Config(format!("step must be positive, got {s}"))),
        None => {
            // Lipschitz constant of the split smooth part is twice the top
            // eigenvalue of X'X.
            let gram = x.transpose() * x;
            let top = crate::lds::spectral_max(&gram, 1e-9)?;
            if top > 0.0 { 1.0 / (2.0 * top) } else { 1.0 }
        }
    };

    let d = x.ncols();
    let mut plus = DVector::zeros(d);
    let mut minus = DVector::zeros(d);
    let mut trace = vec![lasso_objective(x, y, lambda, &plus, &minus)];
    for _ in 0..max_iter {
        let resid = y - x * (&plus - &minus);
        let grad = x.transpose() * resid; // negative gradient wrt plus
        let u_plus: Vec<f64> = (0..d)
            .map(|i| plus[i] + step * grad[i] - step * lambda)
            .collect();
        let u_minus: Vec<f64> = (0..d)
            .map(|i| minus[i] - step * grad[i] - step * lambda)
            .collect();
        plus = DVector::from_vec(project_monotone_nonneg(&u_plus));
        minus = DVector::from_vec(project_monotone_nonneg(&u_minus));
        let obj = lasso_objective(x, y, lambda, &plus, &minus);
        let prev = *trace.last().unwrap();
        trace.push(obj);
        if prev - obj < tol {
            break;
        }
    }
    Ok(OrderedLassoFit {
        theta_plus: plus.iter().copied().collect(),
        theta_minus: minus.iter().copied().collect(),
        lambda,
        objective_trace: trace,
    })
}

/// Lag regression for order probing: for each target step the design row
/// holds, per lag (most recent first), the past reward routed into the slot
/// of the action taken then. The response is centered so no intercept is
/// needed.
pub fn lag_design(
    records: &[(usize, f64)],
    k0: usize,
    num_actions: usize,
) -> Result<(DMatrix<f64>, DVector<f64>)> {
    if k0 == 0 || num_actions == 0 {
        return Err(Error::Config("k0 and num_actions must be positive".into()));
    }
    if records.len() <= k0 {
        return Err(Error::Usage(format!(
            "need more than k0 = {k0} records to probe lags, got {}",
            records.len()
        )));
    }
    if let Some((a, _)) = records.iter().find(|(a, _)| *a >= num_actions) {
        return Err(Error::Usage(format!("logged action {a} out of range")));
    }
    let rows = records.len() - k0;
    let mut x = DMatrix::zeros(rows, k0 * num_actions);
    let mut y = DVector::zeros(rows);
    for (row, t) in (k0..records.len()).enumerate() {
        y[row] = records[t].1;
        for lag in 1..=k0 {
            let (a, r) = records[t - lag];
            x[(row, (lag - 1) * num_actions + a)] = r;
        }
    }
    let mean = y.mean();
    y.add_scalar_mut(-mean);
    Ok((x, y))
}

/// Deepest feature block (groups of `block_size` columns, most recent lag
/// first) whose combined coefficient magnitude exceeds `rel_threshold` times
/// the largest block magnitude. Returns 0 when everything is flat.
pub fn select_k_from_fit(fit: &OrderedLassoFit, rel_threshold: f64, block_size: usize) -> usize {
    assert!(rel_threshold > 0.0 && block_size > 0);
    let coefs = fit.coefficients();
    let mags: Vec<f64> = coefs
        .chunks(block_size)
        .map(|c| c.iter().map(|v| v.abs()).sum())
        .collect();
    let max_mag = mags.iter().cloned().fold(0.0, f64::max);
    if max_mag <= 0.0 {
        return 0;
    }
    let cut = rel_threshold * max_mag;
    mags.iter()
        .enumerate()
        .filter(|(_, m)| **m > cut)
        .map(|(i, _)| i + 1)
        .max()
        .unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;
    use rand::Rng as _;
    use rand_distr::StandardNormal;

    #[test]
    fn bic_singleton_candidate() {
        let log = ExplorationLog::new(vec![(0, 1.0), (1, -1.0)], 2).unwrap();
        assert_eq!(bic_select_s(&log, &[0], 1.0).unwrap(), 0);
    }

    #[test]
    fn bic_rejects_empty_inputs() {
        let empty = ExplorationLog::new(vec![], 2).unwrap();
        assert!(bic_select_s(&empty, &[0, 1], 1.0).is_err());
        let log = ExplorationLog::new(vec![(0, 1.0)], 2).unwrap();
        assert!(bic_select_s(&log, &[], 1.0).is_err());
    }

    #[test]
    fn bic_ties_resolve_to_smaller_window() {
        // All-zero rewards fit perfectly at every window length, so the
        // parameter-count penalty alone decides.
        let records: Vec<(usize, f64)> = (0..40).map(|j| (j % 2, 0.0)).collect();
        let log = ExplorationLog::new(records, 2).unwrap();
        assert_eq!(bic_select_s(&log, &[5, 2, 0], 1.0).unwrap(), 0);
    }

    #[test]
    fn bic_prefers_small_window_on_stationary_data() {
        // Rewards carry no temporal structure, so larger windows only add
        // parameters; the smallest candidate should win most of the time.
        let mut wins = 0;
        let runs = 100;
        for seed in 0..runs {
            let mut rng = substream(seed, &[31]);
            let records: Vec<(usize, f64)> = (0..60)
                .map(|_| {
                    let a = rng.random_range(0..2usize);
                    let mu = if a == 0 { 0.5 } else { -0.25 };
                    (a, mu + rng.sample::<f64, _>(StandardNormal))
                })
                .collect();
            let log = ExplorationLog::new(records, 2).unwrap();
            if bic_select_s(&log, &[0, 1, 2, 3], 1.0).unwrap() == 0 {
                wins += 1;
            }
        }
        assert!(wins >= 80, "smallest window chosen only {wins}/{runs} times");
    }

    #[test]
    fn bic_is_order_free_in_candidates() {
        let mut rng = substream(5, &[32]);
        let records: Vec<(usize, f64)> = (0..50)
            .map(|_| (rng.random_range(0..2usize), rng.sample::<f64, _>(StandardNormal)))
            .collect();
        let log = ExplorationLog::new(records, 2).unwrap();
        let a = bic_select_s(&log, &[0, 2, 5], 1.0).unwrap();
        let b = bic_select_s(&log, &[5, 0, 2], 1.0).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn pava_handles_flat_and_violating_runs() {
        assert_eq!(pava_nonincreasing(&[3.0, 2.0, 1.0]), vec![3.0, 2.0, 1.0]);
        assert_eq!(pava_nonincreasing(&[1.0, 2.0]), vec![1.5, 1.5]);
        assert_eq!(pava_nonincreasing(&[1.0, 3.0, 2.0]), vec![2.0, 2.0, 2.0]);
    }

    #[test]
    fn pava_is_idempotent() {
        let mut rng = substream(6, &[33]);
        for _ in 0..200 {
            let x: Vec<f64> = (0..10).map(|_| rng.random_range(-2.0..2.0)).collect();
            let once = pava_nonincreasing(&x);
            let twice = pava_nonincreasing(&once);
            for (a, b) in once.iter().zip(&twice) {
                assert!((a - b).abs() < 1e-12);
            }
            assert!(once.windows(2).all(|w| w[0] >= w[1] - 1e-12));
        }
    }

    /// Exact projection onto the nonincreasing cone by enumerating every
    /// partition of the coordinates into consecutive constant blocks. The
    /// optimum over the cone is block-constant with block means, so the best
    /// feasible candidate in this finite family is the true projection.
    fn block_partition_projection(x: &[f64]) -> Vec<f64> {
        let d = x.len();
        let mut best: Option<(f64, Vec<f64>)> = None;
        for mask in 0..(1u32 << (d - 1)) {
            let mut cuts = vec![0usize];
            for i in 0..d - 1 {
                if mask & (1 << i) != 0 {
                    cuts.push(i + 1);
                }
            }
            cuts.push(d);
            let mut cand = vec![0.0; d];
            for w in cuts.windows(2) {
                let (a, b) = (w[0], w[1]);
                let mean = x[a..b].iter().sum::<f64>() / (b - a) as f64;
                for slot in &mut cand[a..b] {
                    *slot = mean;
                }
            }
            if !cand.windows(2).all(|w| w[0] >= w[1] - 1e-12) {
                continue;
            }
            let dist: f64 = cand.iter().zip(x).map(|(c, v)| (c - v) * (c - v)).sum();
            if best.as_ref().is_none_or(|(bd, _)| dist < *bd) {
                best = Some((dist, cand));
            }
        }
        best.unwrap().1
    }

    #[test]
    fn pava_matches_exhaustive_projection() {
        let mut rng = substream(7, &[34]);
        for d in 2..=4usize {
            for _ in 0..200 {
                let x: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
                let fast = pava_nonincreasing(&x);
                let exact = block_partition_projection(&x);
                for (a, b) in fast.iter().zip(&exact) {
                    assert!((a - b).abs() < 1e-6, "{x:?}: {fast:?} vs {exact:?}");
                }
            }
        }
    }

    #[test]
    fn lasso_heavy_penalty_yields_zero() {
        let mut rng = substream(8, &[35]);
        let x = DMatrix::from_fn(20, 4, |_, _| rng.random_range(-1.0..1.0));
        let y = DVector::from_fn(20, |_, _| rng.random_range(-1.0..1.0));
        let lambda = (x.transpose() * &y).amax() * 20.0;
        let fit = ordered_lasso_fit(&x, &y, lambda, None, 500, 1e-12).unwrap();
        assert!(fit.theta_plus.iter().all(|v| *v == 0.0));
        assert!(fit.theta_minus.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn lasso_recovers_monotone_coefficients_without_penalty() {
        // Orthonormal columns, response exactly in the column space with
        // coefficients already feasible: the projection never binds and the
        // fit matches least squares.
        let mut x = DMatrix::zeros(5, 3);
        x[(0, 0)] = 1.0;
        x[(1, 1)] = 1.0;
        x[(2, 2)] = 1.0;
        let truth = [0.9, 0.5, 0.1];
        let y = DVector::from_vec(vec![0.9, 0.5, 0.1, 0.0, 0.0]);
        let fit = ordered_lasso_fit(&x, &y, 0.0, None, 5_000, 1e-15).unwrap();
        let coefs = fit.coefficients();
        for (c, t) in coefs.iter().zip(truth) {
            assert!((c - t).abs() < 1e-6, "{coefs:?}");
        }
    }

    #[test]
    fn lasso_objective_trace_never_increases() {
        let mut rng = substream(9, &[36]);
        for _ in 0..20 {
            let x = DMatrix::from_fn(30, 5, |_, _| rng.random_range(-1.0..1.0));
            let y = DVector::from_fn(30, |_, _| rng.random_range(-2.0..2.0));
            let fit = ordered_lasso_fit(&x, &y, 0.3, None, 300, 1e-12).unwrap();
            for w in fit.objective_trace.windows(2) {
                assert!(w[1] <= w[0] + 1e-10, "trace rose: {} -> {}", w[0], w[1]);
            }
        }
    }

    #[test]
    fn lasso_constraint_chains_hold_exactly() {
        let mut rng = substream(10, &[37]);
        let x = DMatrix::from_fn(40, 6, |_, _| rng.random_range(-1.0..1.0));
        let y = DVector::from_fn(40, |_, _| rng.random_range(-2.0..2.0));
        let fit = ordered_lasso_fit(&x, &y, 0.1, None, 400, 1e-12).unwrap();
        for chain in [&fit.theta_plus, &fit.theta_minus] {
            assert!(chain.windows(2).all(|w| w[0] >= w[1]));
            assert!(chain.iter().all(|v| *v >= 0.0));
        }
    }

    #[test]
    fn select_k_flat_fit_and_single_block() {
        let zero = OrderedLassoFit {
            theta_plus: vec![0.0; 6],
            theta_minus: vec![0.0; 6],
            lambda: 1.0,
            objective_trace: vec![],
        };
        assert_eq!(select_k_from_fit(&zero, 1e-3, 2), 0);

        let first = OrderedLassoFit {
            theta_plus: vec![1.0, 0.5, 0.0, 0.0, 0.0, 0.0],
            theta_minus: vec![0.0; 6],
            lambda: 1.0,
            objective_trace: vec![],
        };
        assert_eq!(select_k_from_fit(&first, 1e-3, 2), 1);
    }
}
