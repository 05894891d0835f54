use thiserror::Error;

/// Errors raised by the numerical routines of this crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("empty input")]
    EmptyInput,

    #[error("input contains NaN or infinite entries")]
    NonFinite,

    #[error("matrix is not Hermitian (deviation {deviation:e})")]
    NonHermitianInput { deviation: f64 },

    #[error("block matrix is not strictly block upper triangular (deviation {deviation:e})")]
    NotStrictlyUpper { deviation: f64 },

    #[error("epsilon must be non-negative, got {0}")]
    NegativeEpsilon(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("Gram matrix has no eigenvalue above the rank cutoff")]
    AllZeroGram,

    #[error("axis index {index} out of range (model has {available} axes)")]
    AxisOutOfRange { index: usize, available: usize },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("eigenvector matrix is numerically singular (condition number {condition:e})")]
    SingularEigvecMatrix { condition: f64 },

    #[error("series of length {len} is shorter than the embedding window {window}")]
    SeriesTooShort { len: usize, window: usize },

    #[error("linear algebra backend failure: {0}")]
    Backend(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<ndarray_linalg::error::LinalgError> for Error {
    fn from(e: ndarray_linalg::error::LinalgError) -> Self {
        Error::Backend(e.to_string())
    }
}
