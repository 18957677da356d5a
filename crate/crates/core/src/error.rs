use thiserror::Error;

/// Errors raised by the operator builders, validators and simulators.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not Hermitian (max |M - M^dagger| = {0:e})")]
    NonHermitianInput(f64),

    #[error("matrix is not positive semidefinite (min eigenvalue {0:e})")]
    NotPositive(f64),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("system indices ({0}, {1}) must be distinct and below 3")]
    BadSystemIndex(usize, usize),

    #[error("invalid dimension {0}: must be at least 1")]
    InvalidDimension(usize),

    #[error("separable coefficients are infeasible: {0}")]
    InfeasibleCoefficients(String),

    #[error("at least one sample is required")]
    ZeroSamples,

    #[error("unsupported number of copies {0}: expected 1, 2 or 3")]
    UnsupportedCopies(usize),

    #[error("every outcome of step `{0}` has probability below the sampling floor")]
    NumericalUnderflow(String),

    #[error("malformed transcript line: {0:?}")]
    MalformedTranscript(String),
}

pub type Result<T> = std::result::Result<T, Error>;
