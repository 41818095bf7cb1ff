//! Error types shared across the crate.

use thiserror::Error;

/// Library-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// A configuration value violates its documented constraints.
    #[error("configuration error: {0}")]
    Config(String),

    /// A validation check on caller-supplied data failed.
    #[error("validation error: {0}")]
    Validation(String),

    /// Not enough observations to run an estimator; callers usually fall
    /// back to a proxy route.
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// Input data contradicts its own invariants (e.g. more duplicates
    /// than total reports).
    #[error("data integrity error: {0}")]
    DataIntegrity(String),

    /// A numeric computation produced a non-finite value.
    #[error("computation error: {0}")]
    Computation(String),

    /// The calibration pipeline cannot proceed for the given window.
    #[error("calibration error: {0}")]
    Calibration(String),

    /// A serialized artifact does not match the fingerprint of the thing
    /// it is being combined with.
    #[error("fingerprint mismatch: {0}")]
    FingerprintMismatch(String),

    /// Underlying I/O failure.
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    /// Malformed serialized artifact.
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
