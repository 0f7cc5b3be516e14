use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("syntax error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },

    #[error("unknown operator `{token}` at byte {pos}")]
    UnknownOperator { pos: usize, token: String },

    #[error("unknown variable `{0}`")]
    UnknownVariable(String),

    #[error("sample index {index} out of range for a trace of {len} samples")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("invalid interval [{start}, {end}]")]
    InvalidInterval { start: f64, end: f64 },

    #[error("formula is not in negation normal form")]
    NotNnf,

    #[error("invalid trace: {0}")]
    InvalidTrace(String),

    #[error("parameter error: {0}")]
    Parameter(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("schema mismatch in {path}: {msg}")]
    Schema { path: PathBuf, msg: String },

    #[error("empty data: {0}")]
    Empty(String),

    #[error("optimizer budget exhausted with no finite score")]
    AllNonFinite,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("generator check failed: {0}")]
    Generator(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
