use std::path::{Path, PathBuf};

use tactile_grasp_core::Error as CoreError;

/// Failure of a command, carrying the process exit code it maps to.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("invalid input: {0}")]
    Input(String),

    #[error("training failed: {0}")]
    Training(String),

    #[error("io error on {}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Io { .. } => exit::IO,
            CliError::Config(_) | CliError::Input(_) => exit::CONFIG,
            CliError::Training(_) => exit::TRAINING,
        }
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io { path: path.to_path_buf(), source }
    }

    pub fn training(e: CoreError) -> Self {
        match e {
            CoreError::TrainingFailed { .. } => CliError::Training(e.to_string()),
            other => CliError::Config(other.to_string()),
        }
    }
}

/// Process exit codes.
pub mod exit {
    pub const OK: u8 = 0;
    pub const IO: u8 = 1;
    pub const CONFIG: u8 = 2;
    pub const TRAINING: u8 = 3;
    pub const SINGULAR: u8 = 4;
    pub const NOT_CONVERGED: u8 = 5;
}
