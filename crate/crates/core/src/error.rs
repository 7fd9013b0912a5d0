use thiserror::Error;

/// Errors surfaced by the simulator library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("hermiticity violated: {0}")]
    Hermiticity(String),

    #[error("shot allocation error: {0}")]
    ShotAllocation(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("objective returned a non-finite value: {0}")]
    NonFiniteObjective(String),

    #[error("empty particle sector: no basis state with {0} particles")]
    EmptySector(usize),

    #[error("optimizer failed: {0}")]
    Optimizer(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
