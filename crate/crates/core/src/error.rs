use thiserror::Error;

/// Errors raised by the detection engines and model routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument violated a documented precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    /// A numerical routine produced an unusable result.
    #[error("numerical failure: {0}")]
    Numeric(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Self::InvalidArgument(msg.into())
    }

    pub(crate) fn numeric(msg: impl Into<String>) -> Self {
        Self::Numeric(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
