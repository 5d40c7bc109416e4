use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("unsupported prototype pairing N={num_subbands}, L={length}; supply coefficients explicitly")]
    UnsupportedPrototype { num_subbands: usize, length: usize },

    #[error("need more input: frame requires {needed} samples, got {available}")]
    NeedMoreInput { needed: usize, available: usize },

    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("divergence at iteration {iteration}: {detail}")]
    Diverged { iteration: usize, detail: String },

    #[error("theory recursion produced a non-finite value in {term} at iteration {iteration}")]
    NonFiniteTheory {
        term: &'static str,
        iteration: usize,
    },

    #[error("mean-square unstable configuration (y = {y:.3e} <= 0)")]
    Unstable { y: f64 },

    #[error("{path}:{line}: {reason}")]
    Parse {
        path: PathBuf,
        line: usize,
        reason: String,
    },

    #[error("unsupported audio format: {0}")]
    UnsupportedFormat(String),

    #[error("series alignment failed: {0}")]
    Alignment(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Wav(#[from] hound::Error),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
