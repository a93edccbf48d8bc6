use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, RbsbError>;

#[derive(Debug, Error)]
pub enum RbsbError {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The operation is not valid in the current programme state.
    #[error("state error: {0}")]
    State(String),

    #[error("config error: {0}")]
    Config(String),

    /// Malformed case-study or analysis input.
    #[error("input error: {0}")]
    Input(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl RbsbError {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Self::Domain(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Self::Config(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for the command-line front end.
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Config(_) | Self::Input(_) | Self::Domain(_) | Self::State(_) => 2,
            Self::Io { .. } => 3,
            Self::Numeric(_) => 4,
        }
    }
}
