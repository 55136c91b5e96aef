use thiserror::Error;

/// Errors raised while building states, measurements or quasiprobability tables.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not square: {0}x{1}")]
    NotSquare(usize, usize),

    #[error("matrix is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),

    #[error("trace is {0}, expected 1")]
    InvalidTrace(f64),

    #[error("operator is not positive semidefinite (min eigenvalue {0:e})")]
    NotPositive(f64),

    #[error("dimension must be at least 2, got {0}")]
    DimensionTooSmall(usize),

    #[error("dimension {0} is not prime")]
    NotPrime(usize),

    #[error("requested {requested} bases but dimension {dim} admits at most {max}")]
    TooManyBases {
        requested: usize,
        dim: usize,
        max: usize,
    },

    #[error("Kraus operators are incomplete (deviation from identity {0:e})")]
    IncompleteKraus(f64),

    #[error("table needs {0} entries, more than the dense limit of {1}")]
    TableTooLarge(usize, usize),

    #[error("characteristic table is inconsistent: imaginary residue {0:e}")]
    ImaginaryResidue(f64),

    #[error("characteristic table is not normalized: chi(0) = {0}")]
    Unnormalized(f64),

    #[error("invalid index set: {0}")]
    InvalidIndexSet(String),

    #[error("invalid probability table: {0}")]
    InvalidDistribution(String),

    #[error("setup {0} recorded no detection events")]
    NoDetections(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
