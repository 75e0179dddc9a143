// SPDX-License-Identifier: Apache-2.0

use std::path::PathBuf;

use thiserror::Error;

/// Process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitCode {
    Ok = 0,
    Other = 1,
    Config = 2,
    MissingInput = 3,
    Data = 4,
    Identification = 5,
}

#[derive(Debug, Error)]
pub enum BlinkError {
    #[error("config: {0}")]
    Config(String),
    #[error("missing input {}", .0.display())]
    MissingInput(PathBuf),
    #[error("{phase}: {msg}")]
    Data { phase: &'static str, msg: String },
    #[error("identify: {0}")]
    Identification(String),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Other(String),
}

impl BlinkError {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            BlinkError::Config(_) => ExitCode::Config,
            BlinkError::MissingInput(_) => ExitCode::MissingInput,
            BlinkError::Data { .. } => ExitCode::Data,
            BlinkError::Identification(_) => ExitCode::Identification,
            BlinkError::Io { .. } | BlinkError::Other(_) => ExitCode::Other,
        }
    }

    pub fn data(phase: &'static str, e: impl std::fmt::Display) -> Self {
        BlinkError::Data { phase, msg: e.to_string() }
    }

    /// Maps a failed open to `MissingInput` when the file does not exist.
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        let path = path.into();
        if source.kind() == std::io::ErrorKind::NotFound {
            BlinkError::MissingInput(path)
        } else {
            BlinkError::Io { path, source }
        }
    }
}

pub type Result<T> = std::result::Result<T, BlinkError>;
