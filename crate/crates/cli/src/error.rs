//! Error type for the CLI layer, mapped onto process exit codes by `main`.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Invalid flags, malformed documents, or inconsistent configuration
    /// (exit code 2).
    #[error("invalid configuration: {0}")]
    Config(String),

    /// A verification ran and failed (exit code 1).
    #[error("verification failed: {0}")]
    Verification(String),

    #[error(transparent)]
    Core(#[from] ckff_core::Error),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, CliError>;
