use thiserror::Error;

/// Errors produced by the numerical core.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("basis mismatch: {0}")]
    BasisMismatch(String),

    #[error("matrix is not Hermitian (deviation {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("matrix is not positive semidefinite (eigenvalue {eigenvalue:e})")]
    NotPositive { eigenvalue: f64 },

    #[error("negative temperature {0}")]
    NegativeTemperature(f64),

    #[error("non-finite objective value; last finite iterate {last_point:?}")]
    NonFinite { last_point: Vec<f64> },

    #[error("no convergence: {0}")]
    NonConvergence(String),

    #[error("eigensolver failure: {0}")]
    Eigensolver(String),
}

pub type Result<T> = std::result::Result<T, Error>;
