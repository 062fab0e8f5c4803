use thiserror::Error;

use crate::scenario::ParseError;

/// Errors raised anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("register name collision: `{0}`")]
    NameCollision(String),

    #[error("unknown register: `{0}`")]
    UnknownRegister(String),

    /// Total Hilbert-space dimension over the configured cap.
    #[error("dimension {dim} exceeds cap {cap}")]
    DimensionCap { dim: usize, cap: usize },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("non-finite amplitude or matrix entry")]
    NonFinite,

    #[error("operator is not a projector")]
    NotProjector,

    #[error("operator is not unitary")]
    NotUnitary,

    #[error("operator is not hermitian")]
    NotHermitian,

    /// Operator norm above one; such a map cannot be a measurement outcome.
    #[error("operator norm {0} exceeds 1")]
    NotContraction(f64),

    #[error("observable spectrum is not integer-valued")]
    NonIntegerSpectrum,

    #[error("state is not normalized (norm {0})")]
    NotNormalized(f64),

    #[error("chain has no post-selected boundary")]
    MissingPost,

    /// Pre- and post-selection (or a collapse sequence) have zero joint weight.
    #[error("conditioning impossible: conditioning events have zero total weight")]
    ConditioningImpossible,

    #[error("pointer would wrap around: dimension {dim} too small, need at least {required}")]
    Wraparound { dim: usize, required: usize },

    #[error("invalid chain: {0}")]
    InvalidChain(String),

    #[error("invalid measurement plan: {0}")]
    InvalidPlan(String),

    #[error("invalid argument: {0}")]
    Invalid(String),

    #[error(transparent)]
    Parse(#[from] ParseError),
}

pub type Result<T> = std::result::Result<T, Error>;
