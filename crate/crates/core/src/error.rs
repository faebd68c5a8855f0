use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the solver library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("invalid point cloud: {0}")]
    InvalidCloud(String),

    #[error("complex does not match point cloud: {0}")]
    ComplexMismatch(String),

    #[error("invalid linear program: {0}")]
    InvalidProblem(String),

    #[error("interaction budget exceeded: {count} interactions > limit {limit}")]
    InteractionBudget { count: usize, limit: usize },

    #[error("oracle guard exceeded: {0}")]
    OracleGuard(String),

    #[error("solution is not optimal (status {0})")]
    NotOptimal(String),

    #[error("infinite divergence: reference measure vanishes at index {0} where the first measure is positive")]
    InfiniteDivergence(usize),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("malformed data in {path} at record {record}: {reason}")]
    MalformedRecord {
        path: PathBuf,
        record: usize,
        reason: String,
    },

    #[error("malformed IDX file {path}: {reason}")]
    MalformedIdx { path: PathBuf, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
