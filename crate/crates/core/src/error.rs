//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by circuit construction, distribution arithmetic, and the
/// estimators.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("qubit index error: {0}")]
    QubitIndex(String),

    #[error("alphabet mismatch: left has {left} symbols, right has {right}")]
    AlphabetMismatch { left: usize, right: usize },

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("support violation: {0}")]
    SupportViolation(String),

    #[error("state space of {cells} cells exceeds cap {cap}")]
    StateSpaceTooLarge { cells: usize, cap: usize },

    #[error("graph error: {0}")]
    Graph(String),

    #[error("rejection sampling gave up after {0} attempts")]
    RejectionCapExhausted(usize),

    #[error(transparent)]
    Serialization(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
