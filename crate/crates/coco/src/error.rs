//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by any part of the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// Vector / matrix shapes do not line up.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// A constructed or parsed instance violates a structural invariant.
    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    /// A document could not be parsed; the message carries line/field context.
    #[error("parse error: {0}")]
    Parse(String),

    /// A configuration value is missing or out of range.
    #[error("invalid config: {0}")]
    Config(String),

    /// The solver could not certify a result (numerical trouble, not a status).
    #[error("solver failure: {0}")]
    Solver(String),

    /// Labeled-data collection failed for an instance.
    #[error("labeled-data error: {0}")]
    Data(String),

    /// Training diverged; the message names the offending instance.
    #[error("training diverged: {0}")]
    Divergence(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
