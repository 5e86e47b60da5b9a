//! Config parsing and scenario dispatch behind the `lognls` binary.

pub mod config;
pub mod scenario;

use std::fmt;

#[derive(Debug)]
pub enum CliError {
    Config(config::ConfigError),
    Core(lognls_core::CoreError),
    Io(std::io::Error),
    Usage(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(e) => write!(f, "config error: {e}"),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "io error: {e}"),
            CliError::Usage(m) => write!(f, "{m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<config::ConfigError> for CliError {
    fn from(e: config::ConfigError) -> Self {
        CliError::Config(e)
    }
}

impl From<lognls_core::CoreError> for CliError {
    fn from(e: lognls_core::CoreError) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}
