//! Error type for the experiment runner.

use std::path::PathBuf;

use thiserror::Error;

/// Anything that can stop an experiment before a verdict is reached.
///
/// The binary maps every variant to exit code 1; verdict failures are not
/// errors and exit with code 2 instead.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read config {path}")]
    ReadConfig {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("config {path} does not match the experiment schema")]
    ParseConfig {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error(transparent)]
    Core(#[from] nonlocal_lwr::Error),
    #[error("artifact i/o failed")]
    Io(#[from] std::io::Error),
    #[error("artifact serialization failed")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, CliError>;
