use std::path::PathBuf;

use thiserror::Error;

use lsqtomo_core::Error as CoreError;

/// Failures of a command, each mapped to one process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Validation(String),

    #[error("{0}")]
    Core(#[from] CoreError),

    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },

    #[error("{path}: malformed file: {message}")]
    Format { path: PathBuf, message: String },
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, err: impl std::fmt::Display) -> Self {
        Self::Io { path: path.into(), message: err.to_string() }
    }

    pub fn format(path: impl Into<PathBuf>, err: impl std::fmt::Display) -> Self {
        Self::Format { path: path.into(), message: err.to_string() }
    }

    /// 2 validation, 3 numerical failure, 4 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Validation(_) | Self::Format { .. } => 2,
            Self::Io { .. } => 4,
            Self::Core(e) => match e {
                CoreError::QuasiSingular { .. }
                | CoreError::IllConditionedTimeBasis { .. }
                | CoreError::Unnormalized { .. } => 3,
                _ => 2,
            },
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
