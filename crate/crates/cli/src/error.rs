use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: invalid manifest: {source}", path.display())]
    Manifest {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("{}:{line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{}: duplicated sample id {id} (lines {first} and {second})", path.display())]
    DuplicateSample {
        path: PathBuf,
        id: String,
        first: usize,
        second: usize,
    },
    #[error(transparent)]
    Core(#[from] mvncd_core::Error),
    #[error("{0}")]
    Invalid(String),
    #[error("objective increased at iteration {iteration}: {before} -> {after}")]
    Monotonicity { iteration: usize, before: f64, after: f64 },
}

impl CliError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit status for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Monotonicity { .. } => 3,
            _ => 2,
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
