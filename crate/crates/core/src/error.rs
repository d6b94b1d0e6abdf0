use thiserror::Error;

/// Errors raised by validation, evaluation and the solvers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("negative entry {value} at ({row}, {col})")]
    NegativeEntry { row: usize, col: usize, value: f64 },

    #[error("entries sum to {total}, expected 1")]
    SumNotOne { total: f64 },

    #[error("data symbol {index} has zero probability")]
    ZeroColumn { index: usize },

    #[error("channel row {row} sums to {total}, expected 1")]
    RowNotStochastic { row: usize, total: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("non-positive entry {value} at position {index}")]
    NonPositiveEntry { index: usize, value: f64 },

    #[error("value {0} outside [0, 1]")]
    OutOfRange(f64),

    #[error("index {index} out of range (limit {limit})")]
    IndexOutOfRange { index: usize, limit: usize },

    #[error("invalid move: {0}")]
    InvalidMove(String),

    #[error("instance too large: {0}")]
    InstanceTooLarge(String),

    #[error("solver needs a binary source, got N = {0}")]
    NotBinary(usize),

    #[error("precondition violated: {0}")]
    PreconditionViolated(String),

    #[error("invalid problem: {0}")]
    InvalidSpec(String),
}

pub type Result<T> = std::result::Result<T, Error>;
