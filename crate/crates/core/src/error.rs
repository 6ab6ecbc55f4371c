use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Why a Picard iteration was abandoned.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoConvergence {
    /// The iteration limit was hit before the update fell below `fp_tol`.
    MaxIters,
    /// An iterate grew past the divergence cap, or the right-hand side overflowed.
    Diverged,
}

impl fmt::Display for NoConvergence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NoConvergence::MaxIters => f.write_str("iteration limit reached"),
            NoConvergence::Diverged => f.write_str("iterates diverged"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A right-hand side or Lipschitz envelope produced a non-finite value.
    #[error("numeric overflow evaluating {what} at t = {t}")]
    NumericOverflow { what: &'static str, t: f64 },

    #[error("inconsistent estimator state: {0}")]
    State(String),

    #[error("Picard iteration failed after {iters} iterations: {reason}")]
    NoConvergence { reason: NoConvergence, iters: usize },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
