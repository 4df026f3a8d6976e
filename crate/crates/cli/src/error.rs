use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("missing state: {} (run the earlier setup subcommand first)", .0.display())]
    MissingState(PathBuf),
    #[error("malformed config: {0}")]
    MalformedConfig(String),
    #[error("malformed state file {path}: {1}", path = .0.display())]
    MalformedState(PathBuf, String),
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("i/o error on {path}: {1}", path = .0.display())]
    Io(PathBuf, std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::MissingState(_) => 3,
            CliError::MalformedConfig(_) | CliError::MalformedState(..) => 4,
            CliError::Protocol(_) => 5,
            CliError::Io(..) => 6,
        }
    }
}

pub fn protocol(e: impl std::fmt::Display) -> CliError {
    CliError::Protocol(e.to_string())
}
