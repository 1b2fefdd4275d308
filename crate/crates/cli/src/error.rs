use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = CliError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags or configuration values.
    #[error("{0}")]
    Usage(String),

    #[error("{path}: {message}")]
    Config { path: PathBuf, message: String },

    /// Malformed input files.
    #[error("{path}:{line}: {message}")]
    Parse { path: PathBuf, line: usize, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{context}: {source}")]
    Core {
        context: String,
        #[source]
        source: wassmix::Error,
    },

    #[error("writing output: {0}")]
    Output(String),
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    /// Process exit code: 1 usage or configuration, 2 data, 3 numeric.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config { .. } => 1,
            CliError::Parse { .. } | CliError::Io { .. } | CliError::Output(_) => 2,
            CliError::Core { source, .. } => match source {
                wassmix::Error::InvalidInput(_) | wassmix::Error::Domain(_) => 1,
                wassmix::Error::Format { .. } | wassmix::Error::Io(_) => 2,
                wassmix::Error::Numeric(_)
                | wassmix::Error::DegenerateProjection
                | wassmix::Error::StepSize { .. }
                | wassmix::Error::Tuning(_)
                | wassmix::Error::Experiment(_) => 3,
            },
        }
    }
}

/// Attaches a context string to core errors.
pub trait Context<T> {
    fn context(self, context: impl Into<String>) -> Result<T>;
}

impl<T> Context<T> for wassmix::Result<T> {
    fn context(self, context: impl Into<String>) -> Result<T> {
        self.map_err(|source| CliError::Core { context: context.into(), source })
    }
}
