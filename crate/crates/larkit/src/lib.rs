//! larkit: simulation and algorithms toolkit for multi-armed bandits whose
//! reward means drift with an unobserved autoregressive latent state.
//!
//! The crate provides:
//!
//! - [`env`]: the seeded latent-state environment;
//! - [`lds`]: its companion-form state-space view, the steady-state Kalman
//!   filter (with a Riccati fixed-point solver), and ground-truth reduction
//!   quantities for validation;
//! - [`agents`]: the context-window linear-UCB agent plus stationary UCB,
//!   sliding-window UCB, restarted Exp3 and autoregressive-UCB baselines;
//! - [`oracle`]: the dynamic oracle and regret accounting;
//! - [`selection`]: information-criterion window selection and a
//!   monotone-constrained lasso for committing to an autoregressive order;
//! - [`harness`]: the Monte-Carlo experiment runner with CSV/SVG outputs.

pub mod agents;
pub mod env;
pub mod error;
pub mod harness;
pub mod lds;
pub mod oracle;
pub mod rng;
pub mod selection;

pub use error::{Error, Result};
