use std::path::Path;

use mlrtg::MlrtgError;

/// Failures mapped onto the process exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io { path: String, source: MlrtgError },
    #[error(transparent)]
    Numeric(#[from] MlrtgError),
}

impl CliError {
    pub fn io(path: &Path, e: impl Into<MlrtgError>) -> Self {
        CliError::Io { path: path.display().to_string(), source: e.into() }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Io { .. } => 3,
            CliError::Numeric(MlrtgError::Io(_)) => 3,
            CliError::Numeric(_) => 4,
        }
    }
}

pub trait AtPath<T> {
    /// Attaches a file path to I/O and format failures.
    fn at(self, path: &Path) -> Result<T, CliError>;
}

impl<T> AtPath<T> for mlrtg::Result<T> {
    fn at(self, path: &Path) -> Result<T, CliError> {
        self.map_err(|e| match e {
            MlrtgError::Io(_) | MlrtgError::Format(_) => CliError::io(path, e),
            other => CliError::Numeric(other),
        })
    }
}
