use thiserror::Error;

/// Errors raised by the lattice, kernel and construction routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("n = {0} is not prime; CBC construction is only provided for prime n")]
    NotPrime(u64),

    #[error("series tail bound {bound:e} exceeds tolerance {tolerance:e} (alpha = {alpha}, terms = {terms})")]
    SeriesTolerance {
        alpha: f64,
        terms: u64,
        bound: f64,
        tolerance: f64,
    },

    #[error("index set would exceed {limit} elements")]
    IndexSetTooLarge { limit: usize },

    #[error("estimated memory {needed} bytes exceeds the limit of {limit} bytes")]
    MemoryLimit { needed: usize, limit: usize },

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
