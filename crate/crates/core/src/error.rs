use std::path::PathBuf;

use thiserror::Error;

/// Errors raised while ingesting or validating solver inputs.
#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed ensemble document: {0}")]
    Malformed(String),

    #[error("tree {tree}: node {node} splits on variable {var}, but the model has {n} variables")]
    VariableOutOfRange {
        tree: usize,
        node: usize,
        var: usize,
        n: usize,
    },

    #[error("tree {tree}: node {node} references missing child {child}")]
    MissingChild { tree: usize, node: usize, child: usize },

    #[error("tree {tree}: nodes do not form a rooted binary tree ({reason})")]
    NotATree { tree: usize, reason: String },

    #[error("tree {tree}: node {node} carries a non-finite value")]
    NonFinite { tree: usize, node: usize },

    #[error("invalid box for variable {var}: lower {lower} must be below upper {upper}")]
    InvalidBounds { var: usize, lower: f64, upper: f64 },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("column {column} has zero variance")]
    ZeroVariance { column: usize },

    #[error("rank {k} out of range for {n} variables")]
    RankOutOfRange { k: usize, n: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("enumeration needs {needed} combinations, above the cap of {cap}")]
    EnumerationCap { needed: u128, cap: u128 },

    #[error("{path}: {message}")]
    Data { path: PathBuf, message: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
