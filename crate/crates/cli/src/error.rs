use std::path::{Path, PathBuf};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    /// A malformed input or configuration file. `line` is 1-based; 0 means
    /// the problem is not tied to one line.
    #[error("{}{}: {message}", path.display(), line_suffix(*line))]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Sim(#[from] cpkit_sim::Error),
}

fn line_suffix(line: usize) -> String {
    if line == 0 {
        String::new()
    } else {
        format!(":{line}")
    }
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        Self::Usage(msg.into())
    }

    pub fn parse(path: &Path, line: usize, msg: impl Into<String>) -> Self {
        Self::Parse {
            path: path.to_path_buf(),
            line,
            message: msg.into(),
        }
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    /// Attaches a file name to errors raised while reading that file.
    pub fn in_file(path: &Path, err: cpkit_sim::Error) -> Self {
        match err {
            cpkit_sim::Error::Parse { line, message } => Self::parse(path, line, message),
            cpkit_sim::Error::InvalidArgument(message) => Self::parse(path, 0, message),
            other => Self::Sim(other),
        }
    }

    /// 3 for numerical failures inside a detector, 2 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Sim(e) if e.is_numeric() => 3,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::usage("x").exit_code(), 2);
        let numeric = cpkit_sim::Error::Core(cpkit_core::Error::Numeric("nan".into()));
        assert_eq!(CliError::Sim(numeric).exit_code(), 3);
        let invalid = cpkit_sim::Error::Core(cpkit_core::Error::InvalidArgument("bad".into()));
        assert_eq!(CliError::Sim(invalid).exit_code(), 2);
    }

    #[test]
    fn parse_message_names_file_and_line() {
        let e = CliError::parse(Path::new("a.csv"), 3, "not a number");
        assert_eq!(e.to_string(), "a.csv:3: not a number");
        let e = CliError::parse(Path::new("a.cfg"), 0, "missing key");
        assert_eq!(e.to_string(), "a.cfg: missing key");
    }
}
