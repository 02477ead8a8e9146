//! Companion-form state-space view of the environment, the steady-state
//! Kalman filter that goes with it, and the ground-truth reduction
//! quantities used by validation code.
//!
//! The order-k latent recursion embeds as `zvec_t = Gamma zvec_{t-1} + w_t`
//! with a companion transition matrix, scalar measurement
//! `y_t = (r_t - mu_a) / beta_a = e1' zvec_t + noise`, and per-action reward
//! loading `c_a = beta_a e1`. The steady-state error covariance `P` solves a
//! discrete algebraic Riccati fixed point, and the gain `K` follows from it.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::env::EnvParams;
use crate::error::{Error, Result};

/// Companion-form system matrices for an environment.
#[derive(Debug, Clone)]
pub struct CompanionLds {
    /// Companion transition: first row holds the lag coefficients, the
    /// subdiagonal shifts the window.
    pub transition: DMatrix<f64>,
    /// Process noise covariance; rank one, `sigma_z^2` in the (0,0) entry.
    pub process_noise: DMatrix<f64>,
    /// Measurement row (e1: the newest latent value is what gets measured).
    pub measurement: DVector<f64>,
    /// Per-action reward loadings `beta_a * e1`.
    pub reward_load: Vec<DVector<f64>>,
    /// Measurement noise variance (`sigma_r^2` after normalization).
    pub measurement_var: f64,
    /// Mean of the process noise, `gamma0 * e1`.
    pub drift: DVector<f64>,
}

impl CompanionLds {
    pub fn dim(&self) -> usize {
        self.transition.nrows()
    }

    pub fn num_actions(&self) -> usize {
        self.reward_load.len()
    }
}

/// Builds the companion-form system for validated environment parameters.
pub fn to_companion(params: &EnvParams) -> CompanionLds {
    let k = params.k;
    let mut transition = DMatrix::zeros(k, k);
    for (j, g) in params.gamma.iter().enumerate() {
        transition[(0, j)] = *g;
    }
    for i in 1..k {
        transition[(i, i - 1)] = 1.0;
    }
    let mut process_noise = DMatrix::zeros(k, k);
    process_noise[(0, 0)] = params.sigma_z * params.sigma_z;
    let mut measurement = DVector::zeros(k);
    measurement[0] = 1.0;
    let reward_load = params
        .beta
        .iter()
        .map(|b| {
            let mut c = DVector::zeros(k);
            c[0] = *b;
            c
        })
        .collect();
    let mut drift = DVector::zeros(k);
    drift[0] = params.gamma0;
    CompanionLds {
        transition,
        process_noise,
        measurement,
        reward_load,
        measurement_var: params.sigma_r * params.sigma_r,
        drift,
    }
}

/// Stacks the rows `C, C Gamma, ..., C Gamma^{k-1}`.
pub fn observability_matrix(lds: &CompanionLds) -> DMatrix<f64> {
    let k = lds.dim();
    let mut rows = DMatrix::zeros(k, k);
    let mut row = lds.measurement.transpose();
    for i in 0..k {
        rows.set_row(i, &row.row(0));
        row = &row * &lds.transition;
    }
    rows
}

fn riccati_rhs(lds: &CompanionLds, p: &DMatrix<f64>) -> DMatrix<f64> {
    let gp = &lds.transition * p;
    let u = &gp * &lds.measurement;
    let denom = (p * &lds.measurement).dot(&lds.measurement) + lds.measurement_var;
    let mut next = &gp * lds.transition.transpose() + &lds.process_noise;
    if denom > 0.0 {
        next -= &u * u.transpose() / denom;
    }
    next
}

/// Solves the steady-state Riccati equation by fixed-point iteration from
/// `P_0 = W`, symmetrizing each step. Returns `(P, K, residual)`.
pub fn solve_dare(
    lds: &CompanionLds,
    tol: f64,
    max_iter: usize,
) -> Result<(DMatrix<f64>, DVector<f64>, f64)> {
    if !(tol > 0.0) {
        return Err(Error::Config("riccati tolerance must be positive".into()));
    }
    let mut p = lds.process_noise.clone();
    let mut residual = f64::INFINITY;
    for _ in 0..max_iter {
        let mut next = riccati_rhs(lds, &p);
        next = (&next + next.transpose()) * 0.5;
        residual = (&next - &p).amax();
        p = next;
        if residual <= tol {
            let denom = (&p * &lds.measurement).dot(&lds.measurement) + lds.measurement_var;
            let gain = if denom > 0.0 {
                (&p * &lds.measurement) / denom
            } else {
                DVector::zeros(lds.dim())
            };
            return Ok((p, gain, residual));
        }
    }
    Err(Error::RiccatiDivergence { residual, iterations: max_iter })
}

/// Steady-state filter state: the fixed error covariance and gain plus the
/// running one-step-ahead estimate of the latent window.
#[derive(Debug, Clone)]
pub struct SteadyKalman {
    pub p: DMatrix<f64>,
    pub gain: DVector<f64>,
    pub z_tilde: DVector<f64>,
    /// Riccati fixed-point residual achieved when `p` was computed.
    pub residual: f64,
}

impl SteadyKalman {
    /// Solves the Riccati equation for `lds` and starts the estimate at the
    /// environment's initial mean (zeros by default).
    pub fn init(lds: &CompanionLds, params: &EnvParams, tol: f64, max_iter: usize) -> Result<Self> {
        let (p, gain, residual) = solve_dare(lds, tol, max_iter)?;
        let z_tilde = DVector::from_fn(params.k, |i, _| params.init_mean_at(i));
        Ok(SteadyKalman { p, gain, z_tilde, residual })
    }

    /// One combined predict/update step driven by the previous normalized
    /// measurement: `z~ <- Gamma z~ + drift + Gamma K (y_prev - C z~)`.
    pub fn step(&mut self, lds: &CompanionLds, y_prev: f64) {
        let innovation = y_prev - lds.measurement.dot(&self.z_tilde);
        let gk = &lds.transition * &self.gain;
        self.z_tilde = &lds.transition * &self.z_tilde + &lds.drift + gk * innovation;
    }
}

/// Functional form of [`SteadyKalman::step`].
pub fn kf_step(kf: &SteadyKalman, lds: &CompanionLds, y_prev: f64) -> SteadyKalman {
    let mut next = kf.clone();
    next.step(lds, y_prev);
    next
}

/// Maps a realized reward back to the measurement scale: `(r - mu_a) / beta_a`.
pub fn normalize_measurement(reward: f64, action: usize, params: &EnvParams) -> Result<f64> {
    if action >= params.num_actions {
        return Err(Error::Usage(format!("action {action} out of range")));
    }
    let b = params.beta[action];
    if b == 0.0 {
        return Err(Error::Config("beta must be nonzero to normalize measurements".into()));
    }
    Ok((reward - params.mu[action]) / b)
}

/// Closed-loop transition `Gamma - Gamma K C`.
pub fn closed_loop(lds: &CompanionLds, gain: &DVector<f64>) -> DMatrix<f64> {
    let gk = &lds.transition * gain;
    &lds.transition - gk * lds.measurement.transpose()
}

/// Matrix power by repeated squaring.
pub fn mat_pow(m: &DMatrix<f64>, mut e: usize) -> DMatrix<f64> {
    let mut result = DMatrix::identity(m.nrows(), m.ncols());
    let mut base = m.clone();
    while e > 0 {
        if e & 1 == 1 {
            result = &result * &base;
        }
        e >>= 1;
        if e > 0 {
            base = &base * &base;
        }
    }
    result
}

/// Ground-truth linear parameter for each action under a context window of
/// length `s`, along with the filter-tap coefficients `g[a][j]`.
///
/// Layout per action: the first `s * num_actions` entries weight the reward
/// block (oldest slot first, actions in index order within a slot), the next
/// `s * num_actions` entries hold the action-indicator block *negated* so a
/// plain inner product with the context realizes the subtraction, and the
/// final entry is the constant term. The constant equals `mu_a` when the
/// latent recursion has no intercept; otherwise it absorbs the accumulated
/// drift of the truncated filter unrolling.
#[derive(Debug, Clone)]
pub struct GroundTruthTheta {
    pub theta: Vec<DVector<f64>>,
    pub g: Vec<Vec<f64>>,
    pub s: usize,
}

pub fn ground_truth_theta(
    lds: &CompanionLds,
    gain: &DVector<f64>,
    params: &EnvParams,
    s: usize,
) -> GroundTruthTheta {
    let num_actions = params.num_actions;
    let a_mat = closed_loop(lds, gain);
    let gk = &lds.transition * gain;

    // g[a][j] = c_a' (Gamma - Gamma K C)^j Gamma K; with c_a = beta_a e1 this
    // is beta_a times the first component of the iterated vector.
    let mut taps = vec![0.0; s];
    let mut cur = gk.clone();
    for tap in taps.iter_mut() {
        *tap = cur[0];
        cur = &a_mat * &cur;
    }
    let g: Vec<Vec<f64>> = params
        .beta
        .iter()
        .map(|b| taps.iter().map(|t| b * t).collect())
        .collect();

    // Accumulated drift sum_{i<s} A^i * (gamma0 e1), folded into the constant.
    let mut drift_acc = DVector::zeros(params.k);
    let mut drift_cur = lds.drift.clone();
    for _ in 0..s {
        drift_acc += &drift_cur;
        drift_cur = &a_mat * &drift_cur;
    }

    let dim = 2 * s * num_actions + 1;
    let theta = (0..num_actions)
        .map(|a| {
            let mut th = DVector::zeros(dim);
            for slot in 0..s {
                // Oldest slot first: slot 0 carries the deepest tap g[a][s-1].
                let tap = g[a][s - 1 - slot];
                for other in 0..num_actions {
                    let idx = slot * num_actions + other;
                    th[idx] = tap / params.beta[other];
                    th[s * num_actions + idx] = -params.mu[other] * tap / params.beta[other];
                }
            }
            th[dim - 1] = params.mu[a] + params.beta[a] * drift_acc[0];
            th
        })
        .collect();

    GroundTruthTheta { theta, g, s }
}

/// Residual left over when unrolling the filter only `s` steps:
/// `c_a' (Gamma - Gamma K C)^s z~_{t-s}`.
pub fn bias_term(
    lds: &CompanionLds,
    gain: &DVector<f64>,
    z_tilde_lagged: &DVector<f64>,
    action: usize,
    s: usize,
) -> f64 {
    let a_mat = closed_loop(lds, gain);
    let shifted = mat_pow(&a_mat, s) * z_tilde_lagged;
    lds.reward_load[action].dot(&shifted)
}

/// Largest singular value via power iteration on `M' M`.
pub fn spectral_max(m: &DMatrix<f64>, tol: f64) -> Result<f64> {
    if m.iter().any(|x| !x.is_finite()) {
        return Err(Error::Numeric("spectral_max requires finite entries".into()));
    }
    if m.amax() == 0.0 {
        return Ok(0.0);
    }
    let mtm = m.transpose() * m;
    let d = mtm.nrows();
    let mut v = DVector::from_fn(d, |i, _| 1.0 + i as f64 / d as f64);
    v /= v.norm();
    let mut lambda = 0.0;
    let max_iter = 50_000;
    for _ in 0..max_iter {
        let w = &mtm * &v;
        let norm = w.norm();
        if norm == 0.0 {
            return Ok(0.0);
        }
        let next = v.dot(&w);
        let done = (next - lambda).abs() <= tol * next.abs().max(f64::MIN_POSITIVE);
        lambda = next;
        v = w / norm;
        if done {
            return Ok(lambda.max(0.0).sqrt());
        }
    }
    Err(Error::Numeric(format!(
        "power iteration did not converge to relative tolerance {tol}"
    )))
}

/// Spectral radius (largest eigenvalue modulus).
pub fn spectral_radius(m: &DMatrix<f64>) -> f64 {
    m.clone()
        .complex_eigenvalues()
        .iter()
        .map(|c| c.norm())
        .fold(0.0, f64::max)
}

/// System diagnostics served by the CLI `inspect` subcommand.
#[derive(Debug, Clone, Serialize)]
pub struct Diagnostics {
    pub k: usize,
    pub gamma: Vec<Vec<f64>>,
    pub p: Vec<Vec<f64>>,
    pub k_gain: Vec<f64>,
    pub dare_residual: f64,
    pub sigma_max_gamma: f64,
    pub spectral_radius_gamma: f64,
    pub spectral_radius_closed_loop: f64,
    pub p_op_norm: f64,
    /// `sigma_z^2 / (1 - sigma_max(Gamma)^2)` when the denominator is
    /// positive; the bound is vacuous otherwise.
    pub p_op_bound: Option<f64>,
    pub observability_det: f64,
}

pub fn diagnostics(params: &EnvParams, tol: f64, max_iter: usize) -> Result<Diagnostics> {
    params.validate()?;
    let lds = to_companion(params);
    let (p, gain, residual) = solve_dare(&lds, tol, max_iter)?;
    let smax = spectral_max(&lds.transition, 1e-12)?;
    let closed = closed_loop(&lds, &gain);
    let to_rows = |m: &DMatrix<f64>| -> Vec<Vec<f64>> {
        (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
    };
    let bound = if smax < 1.0 {
        Some(params.sigma_z * params.sigma_z / (1.0 - smax * smax))
    } else {
        None
    };
    Ok(Diagnostics {
        k: params.k,
        gamma: to_rows(&lds.transition),
        p: to_rows(&p),
        k_gain: gain.iter().copied().collect(),
        dare_residual: residual,
        sigma_max_gamma: smax,
        spectral_radius_gamma: spectral_radius(&lds.transition),
        spectral_radius_closed_loop: spectral_radius(&closed),
        p_op_norm: spectral_max(&p, 1e-12)?,
        p_op_bound: bound,
        observability_det: observability_matrix(&lds).determinant(),
    })
}
