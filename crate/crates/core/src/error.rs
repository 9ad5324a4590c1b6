use std::io;

use thiserror::Error;

/// Errors produced anywhere in the clustering, pooling and training stack.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("shape mismatch: expected {expected}, found {found}")]
    ShapeMismatch { expected: String, found: String },

    #[error("index error: {0}")]
    Index(String),

    #[error("subset of size {size} exceeds the oracle cap of {cap}")]
    OracleCap { size: usize, cap: usize },

    #[error("degenerate graph: x.Ax = {0}")]
    Degenerate(f64),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("invalid hierarchy: {0}")]
    InvalidHierarchy(String),

    #[error("training diverged: {0}")]
    Divergence(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn shape(expected: impl ToString, found: impl ToString) -> Self {
        Error::ShapeMismatch {
            expected: expected.to_string(),
            found: found.to_string(),
        }
    }
}
