//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by the amser library.
#[derive(Debug, Error)]
pub enum AmserError {
    /// A parameter was outside its documented domain.
    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    /// Two sequences that must align had different lengths.
    #[error("length mismatch: {0}")]
    LengthMismatch(String),

    /// The input carries no usable signal (zero power, all-flat, ...).
    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    /// Not enough data to compute a derived quantity (e.g. < 3 peaks).
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// A feature mask referenced a modality or feature it cannot use.
    #[error("invalid mask: {0}")]
    InvalidMask(String),

    /// A catalog, vector, or model dimension did not match expectations.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// No model in the pool can serve the requested key.
    #[error("model unavailable: {0}")]
    ModelUnavailable(String),

    /// A required file or configuration entry is missing.
    #[error("missing resource: {0}")]
    MissingResource(String),

    /// A configuration file failed validation.
    #[error("invalid config: {0}")]
    InvalidConfig(String),

    /// Underlying I/O failure.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// JSON (de)serialization failure.
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    /// CSV (de)serialization failure.
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, AmserError>;
