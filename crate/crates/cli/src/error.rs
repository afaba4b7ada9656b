use std::path::PathBuf;

use thiserror::Error;

/// Exit status for usage, validation and runtime failures.
pub const EXIT_ERROR: i32 = 2;
/// Exit status when a tolerance gate declared in the config fails.
pub const EXIT_GATE: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{}:{line}: parse error: {message}", path.display())]
    Parse { path: PathBuf, line: usize, message: String },

    #[error("invalid config: {field} {message}")]
    Validation { field: String, message: String },

    #[error("conflicting config: {0}")]
    Conflict(String),

    #[error("invalid override '{0}': expected key=value")]
    Override(String),

    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },

    #[error(transparent)]
    Core(#[from] hodohj_core::Error),

    #[error("cannot serialize report: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn validation(field: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Validation { field: field.into(), message: message.into() }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }
}

pub type CliResult<T> = Result<T, CliError>;
