use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] paradmm_core::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    /// Malformed instance or matrix file.
    #[error("{path}: {msg}")]
    Format { path: PathBuf, msg: String },
    /// Bad run configuration file or command-line arguments.
    #[error("config: {0}")]
    Config(String),
    /// A runtime participant sent an unexpected message.
    #[error("protocol error: {0}")]
    Protocol(String),
    /// A worker stopped or timed out.
    #[error("shutdown: {0}")]
    Shutdown(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, msg: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            msg: msg.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
