//! Monte-Carlo experiment runner and its file interfaces.
//!
//! A configured experiment fixes an environment template, an agent roster
//! and a master seed; each trial draws its own environment realization from
//! per-trial substreams and replays it identically for every agent. Trials
//! run on a work pool when the `parallel` feature is enabled (the default);
//! `LARKIT_THREADS` caps the pool size.

mod config;
mod report;
mod summary;
mod trial;

pub use config::{
    bias_variance_preset, paper_preset, AgentSpec, BicOptions, EnvConfig, ExperimentConfig, KSpec,
    SPolicy, DEFAULT_REWARD_RANGE, DEFAULT_S_CANDIDATES,
};
pub use report::{
    emit_svg, export_csv, export_pairwise_csv, export_trials_csv, fmt_sig6, read_trials_csv,
    verify_outputs,
};
pub use summary::{
    pairwise_matrix, run_monte_carlo, run_monte_carlo_seq, summarize, thread_cap, MonteCarloRun,
    MonteCarloSummary,
};
pub use trial::{run_trial, AgentTrialResult, TrialResult};
