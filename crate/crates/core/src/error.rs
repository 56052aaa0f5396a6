use thiserror::Error;

/// Errors shared by every module in the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// Matrix or vector shapes are incompatible with the requested operation.
    #[error("shape error: {0}")]
    Shape(String),

    /// Total dimension would exceed the configured dense-matrix cap.
    #[error("capacity error: dimension {requested} exceeds cap {cap}")]
    Capacity { requested: usize, cap: usize },

    /// An input violates a constructor or operation contract.
    #[error("contract error: {0}")]
    Contract(String),

    /// An operator that must be (sub)normalized is not.
    #[error("normalization error: {0}")]
    Normalization(String),

    /// A scalar argument is outside the supported range.
    #[error("range error: {0}")]
    Range(String),

    /// A formula argument is outside its mathematical domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// The iterate leaks out of its two-dimensional invariant subspace.
    #[error("not qubitized: leakage residual {residual:e} exceeds {tol:e}")]
    NotQubitized { residual: f64, tol: f64 },

    /// A text input could not be parsed.
    #[error("format error: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;
