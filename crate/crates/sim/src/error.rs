use thiserror::Error;

/// Errors raised while building scenarios, generating data or running sweeps.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    /// A configuration file could not be parsed.
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Core(#[from] cpkit_core::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Self::InvalidArgument(msg.into())
    }

    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Self::Parse {
            line,
            message: msg.into(),
        }
    }

    /// True when the failure is numerical rather than a bad argument.
    pub fn is_numeric(&self) -> bool {
        matches!(self, Error::Core(cpkit_core::Error::Numeric(_)))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
