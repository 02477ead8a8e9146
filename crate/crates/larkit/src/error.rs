//! Error type shared across the crate.

use std::fmt;
use std::path::PathBuf;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug)]
pub enum Error {
    /// Invalid configuration (bad parameters, violated model assumptions).
    Config(String),
    /// Caller misuse of an otherwise valid object (e.g. out-of-range action).
    Usage(String),
    /// A numeric routine failed to produce a usable answer.
    Numeric(String),
    /// The Riccati fixed-point iteration did not converge.
    RiccatiDivergence { residual: f64, iterations: usize },
    /// I/O failure, annotated with the offending path.
    Io { path: PathBuf, source: std::io::Error },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    /// Process exit code convention: 2 for configuration errors, 3 for
    /// numeric failures, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Usage(_) => 2,
            Error::Numeric(_) | Error::RiccatiDivergence { .. } => 3,
            Error::Io { .. } => 1,
        }
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Config(msg) => write!(f, "configuration error: {msg}"),
            Error::Usage(msg) => write!(f, "usage error: {msg}"),
            Error::Numeric(msg) => write!(f, "numeric error: {msg}"),
            Error::RiccatiDivergence { residual, iterations } => write!(
                f,
                "Riccati iteration did not converge after {iterations} steps (last residual {residual:.3e})"
            ),
            Error::Io { path, source } => write!(f, "i/o error on {}: {source}", path.display()),
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Io { source, .. } => Some(source),
            _ => None,
        }
    }
}
