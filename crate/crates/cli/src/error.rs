use std::path::PathBuf;
use std::process::ExitCode;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Model(#[from] commitment_core::Error),

    #[error("{0}")]
    Usage(String),

    #[error("config {path}: {message}")]
    Config { path: PathBuf, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    /// 2 for bad input, 1 for failures while running.
    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Model(e) if !e.is_validation() => ExitCode::from(1),
            CliError::Model(_) | CliError::Usage(_) | CliError::Config { .. } => ExitCode::from(2),
            CliError::Io { .. } | CliError::Runtime(_) => ExitCode::from(1),
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
