use thiserror::Error;

/// Errors raised by the solvers and their input validation.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("distribution is empty")]
    Empty,

    #[error("negative probability mass {value} at index {index}")]
    NegativeMass { index: usize, value: f64 },

    #[error("probabilities sum to {sum}, not 1")]
    NotNormalized { sum: f64 },

    #[error("non-finite value {value} at index {index}")]
    NonFinite { index: usize, value: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("distortion entry ({row}, {col}) = {value} is not a finite nonnegative number")]
    InvalidDistortion { row: usize, col: usize, value: f64 },

    #[error("kernel row {row} is not a probability distribution (sum {sum})")]
    InvalidKernelRow { row: usize, sum: f64 },

    #[error("initial output distribution has zero mass at symbol {index}")]
    NonPositiveInit { index: usize },

    #[error("slope must be finite and nonpositive, got {0}")]
    InvalidSlope(f64),

    #[error("scale must be positive, got {0}")]
    ScaleNonPositive(f64),

    #[error("lambda must be nonnegative, got {0}")]
    LambdaNonPositive(f64),

    #[error("radius must be finite and nonnegative, got {0}")]
    InvalidRadius(f64),

    #[error("distortion budget {budget} is below the smallest achievable distortion {minimum}")]
    InfeasibleBudget { budget: f64, minimum: f64 },

    #[error("alphabet of size {size} exceeds the oracle limit {max}")]
    AlphabetTooLarge { size: usize, max: usize },

    #[error("codebook would need {words} words, above the cap of {cap}")]
    RateTooLargeForMemory { words: f64, cap: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;
