use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("no records")]
    NoRecords,

    #[error("line {line}: timestamp {found} precedes {previous}")]
    Ordering { line: u64, previous: i64, found: i64 },

    #[error("line {line}: node index {index} out of bounds for {node_count} nodes")]
    Bounds { line: u64, index: usize, node_count: usize },

    #[error("invalid split: {0}")]
    Split(String),

    #[error("insufficient data: need at least {needed} steps, have {available}")]
    InsufficientData { needed: usize, available: usize },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite value in batch element {batch_index}")]
    Numeric { batch_index: usize },

    #[error("bias undefined: ground-truth MLU is zero")]
    UndefinedBias,

    #[error("demand {src}->{dst} cannot be routed on the topology")]
    Unroutable { src: usize, dst: usize },

    #[error("LP solver failure: {0}")]
    Solver(String),

    #[error("checkpoint: {0}")]
    Checkpoint(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
