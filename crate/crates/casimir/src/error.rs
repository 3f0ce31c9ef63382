use std::path::PathBuf;

use thiserror::Error;

/// Failures surfaced by the command-line driver, each mapped to an exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}:{line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] casimir_core::Error),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    pub fn parse(path: impl Into<PathBuf>, line: u64, message: impl Into<String>) -> Self {
        CliError::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }

    /// 0 success, 1 I/O and file format, 2 domain, configuration and
    /// identifiability, 3 convergence.
    pub fn exit_code(&self) -> i32 {
        use casimir_core::Error as E;
        match self {
            CliError::Io { .. } | CliError::Parse { .. } => 1,
            CliError::Usage(_) => 2,
            CliError::Core(e) => match e {
                E::Convergence { .. } | E::Fit { .. } => 3,
                _ => 2,
            },
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
