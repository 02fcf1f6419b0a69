use std::path::PathBuf;

use thiserror::Error;

/// Failures of a CLI run, each mapped onto a distinct process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    /// The computation finished but does not support a conclusion.
    #[error("inconclusive: {0}")]
    Inconclusive(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("{0}")]
    Core(#[from] anyon_core::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use anyon_core::Error as E;
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Inconclusive(_) => 4,
            CliError::Io { .. } => 1,
            CliError::Core(E::Numerical(_)) => 3,
            CliError::Core(_) => 2,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> CliError {
        let path = path.into();
        move |source| CliError::Io { path, source }
    }
}

pub type CliResult<T> = Result<T, CliError>;
