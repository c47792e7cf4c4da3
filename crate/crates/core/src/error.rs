use alloc::string::String;

/// Errors raised by the estimation core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("eigendecomposition did not converge after {iterations} iterations")]
    EigenConvergence { iterations: usize },
    #[error("resource limit exceeded: {0}")]
    Resource(String),
    #[error("unsupported operation: {0}")]
    Unsupported(String),
    #[error("search failed: {0}")]
    SearchFailed(String),
}

impl Error {
    /// True for failures of the numerical iteration rather than of the input.
    pub fn is_numeric(&self) -> bool {
        matches!(self, Error::Numeric(_) | Error::EigenConvergence { .. })
    }
}

pub type Result<T> = core::result::Result<T, Error>;

macro_rules! bail {
    ($variant:ident, $($arg:tt)*) => {
        return Err($crate::error::Error::$variant(alloc::format!($($arg)*)))
    };
}
pub(crate) use bail;
