use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed WAV: {0}")]
    Decode(String),
    #[error("unsupported audio format: {0}")]
    UnsupportedFormat(String),
    #[error("audio contains no samples")]
    EmptyAudio,
    #[error("invalid fps: {0}")]
    InvalidFps(String),
    #[error("index {index} out of range (len {len})")]
    Index { index: usize, len: usize },
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("invalid window size {0}; must be >= 1")]
    InvalidWindow(usize),
    #[error("format error: {0}")]
    Format(String),
    #[error("degenerate embedding: {0}")]
    DegenerateEmbedding(String),
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    Dimension { expected: usize, actual: usize },
    #[error("schedule has no edit sources")]
    EmptySchedule,
    #[error("validation error: {0}")]
    Validation(String),
    #[error("degenerate series: {0}")]
    DegenerateSeries(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("failed to write {path}: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("failed to read {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn write(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Write {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn read(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Read {
            path: path.into(),
            source,
        }
    }
}
