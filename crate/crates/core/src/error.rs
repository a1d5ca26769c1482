use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("index {index} out of range for {len} qubits")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("duplicate qubit index {0}")]
    DuplicateIndex(usize),

    #[error("measurement outcome has zero probability")]
    ImpossibleOutcome,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unknown gate kind `{0}`")]
    UnknownGate(String),

    #[error("circuit construction failed: {0}")]
    Construction(String),

    #[error("inconclusive measurement: {0}")]
    Inconclusive(String),

    #[error("order {r} gives only trivial factors, retry with a new base")]
    Retry { r: u64 },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
