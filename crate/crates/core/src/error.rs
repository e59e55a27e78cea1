use std::path::PathBuf;

use thiserror::Error;

/// Errors surfaced by the library.
///
/// Numerical degeneracies inside the estimators are flagged on the
/// estimate structs instead of being returned here.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("covariance matrix is not positive definite (pivot {index})")]
    NotPositiveDefinite { index: usize },

    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("series too short: need at least {needed} values, got {got}")]
    TooShort { needed: usize, got: usize },

    #[error("zero denominator in {0}")]
    ZeroDenominator(&'static str),

    #[error("Hurst index {0} is not below 3/4; the gamma-square series diverges")]
    HTooLarge(f64),

    #[error("circulant embedding has a negative eigenvalue ({value:e} at index {index})")]
    NegativeEmbedding { index: usize, value: f64 },

    #[error("config error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
