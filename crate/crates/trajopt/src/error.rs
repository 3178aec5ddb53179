use thiserror::Error;

/// Errors shared by every module in this crate.
#[derive(Debug, Error)]
pub enum Error {
    /// A sampling distribution violates its own shape invariants.
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    /// A return value was NaN or infinite where a finite one is required.
    #[error("non-finite return at index {0}")]
    InvalidReturn(usize),

    /// NaN or infinity surfaced in a state, action, or gradient.
    #[error("non-finite value: {0}")]
    NonFinite(String),

    /// An argument violates a precondition (shape mismatch, K > G, ...).
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// A run configuration or sweep specification is unusable.
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
