use std::io;
use std::path::PathBuf;

/// Errors from IO, file formats and the command line.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: unsupported audio format: {reason}")]
    UnsupportedFormat { path: PathBuf, reason: String },
    #[error("{path}: {reason}")]
    Audio { path: PathBuf, reason: String },
    #[error("{path}:{line}: {reason}")]
    Parse { path: PathBuf, line: usize, reason: String },
    #[error("{path}: corrupt {kind} file: {reason}")]
    Corrupt { path: PathBuf, kind: &'static str, reason: String },
    #[error("{0}")]
    Core(#[from] randcnn_core::Error),
    #[error("{0}")]
    Data(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
