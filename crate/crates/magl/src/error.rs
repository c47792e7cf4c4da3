use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum MaglError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("data: {0}")]
    Data(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Core(#[from] magl_core::Error),
    #[error("too many failed runs: {failed} of {total}")]
    TooManyFailures { failed: usize, total: usize },
}

pub type Result<T> = std::result::Result<T, MaglError>;

impl MaglError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        MaglError::Io { path: path.into(), source }
    }

    /// 1 usage, 2 data, 3 numeric.
    pub fn exit_code(&self) -> i32 {
        match self {
            MaglError::Usage(_) => 1,
            MaglError::Core(e) if e.is_numeric() => 3,
            MaglError::TooManyFailures { .. } => 3,
            _ => 2,
        }
    }
}

impl From<csv::Error> for MaglError {
    fn from(e: csv::Error) -> Self {
        MaglError::Data(e.to_string())
    }
}

impl From<serde_json::Error> for MaglError {
    fn from(e: serde_json::Error) -> Self {
        MaglError::Data(e.to_string())
    }
}
