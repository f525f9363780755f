//! Configuration, file formats and subcommands behind the `lcflow` binary.

use std::path::PathBuf;

use thiserror::Error;

pub mod commands;
pub mod config;
pub mod formats;

pub use config::{parse_config, ConfigError, RunConfig};

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Core(#[from] lcflow::Error),
    #[error("flow failed: {0}")]
    Flow(String),
    #[error("{0}")]
    Usage(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{}: {msg}", path.display())]
    Format { path: PathBuf, msg: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
