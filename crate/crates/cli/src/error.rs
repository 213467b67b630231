use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, CliError>;

/// Failures that stop the harness before any verdict is reached.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error at `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("{}:{line}: parse error: {message}", path.display())]
    Parse { path: PathBuf, line: usize, message: String },

    #[error("{}: invariant `{name}` violated (residual {residual:e})", path.display())]
    InvariantViolation { path: PathBuf, name: String, residual: f64 },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Core(#[from] qrf_core::Error),
}

impl CliError {
    pub fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Config { field: field.into(), message: message.into() }
    }
}
