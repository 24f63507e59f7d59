//! Error types shared across the library.

use thiserror::Error;

/// Errors produced by the capacity, bounds, and coverage routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A geometric quantity collapsed (zero distance, nonpositive exponent, ...).
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    /// An argument fell outside the supported domain of an operation.
    #[error("argument out of range: {0}")]
    OutOfRange(String),

    /// Matrix dimensions do not match the antenna configuration.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: String, got: String },

    /// A determinant or factorization became too ill-conditioned to trust.
    #[error("numerical instability: {0}")]
    NumericalInstability(String),

    /// The requested rate cannot be met anywhere in the search domain.
    #[error("unachievable target: {0}")]
    Unachievable(String),

    /// An iterative solver hit its iteration cap before converging.
    #[error("no convergence: {0}")]
    NoConvergence(String),
}

pub type Result<T> = std::result::Result<T, Error>;
