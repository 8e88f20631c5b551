//! Command-line front end for `forage_core`.
//!
//! The binary is a thin shell over [`commands`]; everything here is also
//! usable from tests.

pub mod commands;
pub mod output;
pub mod plot;
pub mod scenario;

use thiserror::Error;

/// CLI failure, split by exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad scenario, bad arguments or unsupported input version: exit 2.
    #[error("{0}")]
    Config(String),
    /// Anything that went wrong while running: exit 1.
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

impl From<forage_core::Error> for CliError {
    fn from(e: forage_core::Error) -> Self {
        use forage_core::Error::*;
        match e {
            Config(_) | Domain(_) | MapFormat { .. } | EmptyMap | NotNavigable(_)
            | TraceVersion { .. } => CliError::Config(e.to_string()),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;
