use thiserror::Error;

/// Errors raised while building or evaluating an apparatus.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("state is not normalized: squared norm {norm_sqr}")]
    NotNormalized { norm_sqr: f64 },

    #[error("non-finite amplitude at index {0}")]
    NonFinite(usize),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("mode {mode} out of range for {n_modes} modes")]
    ModeOutOfRange { mode: usize, n_modes: usize },

    #[error("duplicate target mode {0}")]
    DuplicateMode(usize),

    #[error("invalid detector bank: {0}")]
    InvalidBank(String),

    #[error("incompatible tensor split {factors:?} for dimension {dim}")]
    IncompatibleSplit { factors: Vec<usize>, dim: usize },

    #[error("conditioning on an outcome with probability {0:e}")]
    ZeroProbability(f64),

    #[error("path sum requires {0}")]
    PathSum(&'static str),

    #[error("device at stage {stage} increases the total probability to {weight}")]
    NormIncrease { stage: usize, weight: f64 },

    #[error("missing observable value for outcome {0}")]
    MissingValue(String),

    #[error("{0}")]
    Stats(String),
}

pub type Result<T> = std::result::Result<T, Error>;
