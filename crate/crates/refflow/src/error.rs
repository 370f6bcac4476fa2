use std::path::Path;

/// Engine-wide error type. Variants map onto the CLI exit codes:
/// `Usage` -> 1, `Data`/`Io` -> 2, `NetworkExhausted` -> 3.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("usage error: {0}")]
    Usage(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("network error: {0}")]
    Network(String),

    #[error("network exhausted after retries: {0}")]
    NetworkExhausted(String),
}

impl Error {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Error::Io {
            path: path.display().to_string(),
            source,
        }
    }

    pub fn data(msg: impl Into<String>) -> Self {
        Error::Data(msg.into())
    }

    pub fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }

    /// Process exit code for this error per the CLI contract.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) => 1,
            Error::Data(_) | Error::Io { .. } | Error::Network(_) => 2,
            Error::NetworkExhausted(_) => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
