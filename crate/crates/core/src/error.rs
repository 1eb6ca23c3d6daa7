use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("cutoff {cutoff} precedes founding date {founded_on} of profile {id}")]
    CutoffBeforeFounding { id: String, cutoff: chrono::NaiveDate, founded_on: chrono::NaiveDate },

    #[error("degenerate corpus: {0}")]
    DegenerateCorpus(String),

    #[error("embedding cache has no entry for id {0:?}")]
    CacheMiss(String),

    #[error("embedding dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("embedding service error: {0}")]
    Service(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("training labels contain a single class")]
    SingleClass,

    #[error("feature width mismatch: model expects {expected}, got {actual}")]
    WidthMismatch { expected: usize, actual: usize },

    #[error("unsupported model format version {found} (expected {expected})")]
    FormatVersion { found: u32, expected: u32 },

    #[error("model checksum mismatch")]
    Checksum,

    #[error("configuration error in `{key}`: {message}")]
    Config { key: String, message: String },

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(message: impl Into<String>) -> Self {
        Error::InvalidInput(message.into())
    }
}
