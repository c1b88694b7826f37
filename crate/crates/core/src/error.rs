use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Parse failures for binary PGM/PPM files.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum PnmError {
    #[error("bad magic number: expected {expected}, found {found:?}")]
    BadMagic { expected: &'static str, found: String },
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("unsupported maxval {0} (only 255 is accepted)")]
    UnsupportedMaxval(u32),
    #[error("truncated payload: expected {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Pnm {
        path: PathBuf,
        #[source]
        source: PnmError,
    },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("value out of range: {0}")]
    Range(String),
    #[error("invalid kernel: {0}")]
    Kernel(String),
    #[error("tensor shape mismatch: {0}")]
    Shape(String),
    #[error("invalid network spec: {0}")]
    Spec(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error("subnet {0} has not been trained")]
    Untrained(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("config: {0}")]
    Config(String),
    #[error("missing artifact: {0}")]
    MissingArtifact(PathBuf),
    #[error("data: {0}")]
    Data(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
