use thiserror::Error;

/// Errors produced by the library. The CLI maps every variant except
/// [`Error::Internal`] and [`Error::Io`] to exit code 2.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("out of range: {0}")]
    OutOfRange(String),

    /// The requested recovery fraction lies where no exact optimum is known.
    #[error("unknown region: {0}")]
    UnknownRegion(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("internal error: {0}")]
    Internal(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn range(msg: impl Into<String>) -> Self {
        Error::OutOfRange(msg.into())
    }

    /// True for errors caused by caller-supplied values rather than by a
    /// failure inside the library.
    pub fn is_usage(&self) -> bool {
        !matches!(self, Error::Internal(_) | Error::Io(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
