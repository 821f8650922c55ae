use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the library. The CLI maps these onto its exit codes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("lattice mismatch: expected (d={expected_d}, K={expected_k}), found (d={found_d}, K={found_k})")]
    LatticeMismatch {
        expected_d: usize,
        expected_k: usize,
        found_d: usize,
        found_k: usize,
    },

    #[error("collocation grid of {grid} points per axis is below the required {required}")]
    GridTooSmall { grid: usize, required: usize },

    #[error("resource bound exceeded: estimated {estimated} exceeds budget {budget}")]
    Resource { estimated: u64, budget: u64 },

    #[error("table file {path}: {reason}")]
    TableFile { path: PathBuf, reason: String },

    #[error("numerical abort at tau={tau}: {reason}")]
    NumericalAbort {
        tau: f64,
        reason: String,
        /// Checkpoints recorded before the abort.
        partial: Option<Box<crate::integrators::Trajectory>>,
    },

    #[error("step size underflow: {0}")]
    StepUnderflow(f64),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
