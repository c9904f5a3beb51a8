use std::path::Path;

use thiserror::Error;

/// Process exit codes.
pub const EXIT_PASS: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("config error in {field}: {message}")]
    Config { field: String, message: String },
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("bad snapshot {path}: {message}")]
    Snapshot { path: String, message: String },
    #[error("mixed manifests: {0}")]
    MixedManifest(String),
    #[error("missing log columns: {0}")]
    MissingColumns(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl CliError {
    pub fn io(path: &Path, e: std::io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Numerical(_) => EXIT_NUMERICAL,
            _ => EXIT_USAGE,
        }
    }
}
