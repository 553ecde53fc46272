use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Model(#[from] txconflict_core::Error),

    /// The input does not have the expected overall shape.
    #[error("structural error: {0}")]
    Structure(String),

    /// One transaction inside an otherwise well-formed block is unusable.
    #[error("transaction {index}: {reason}")]
    Transaction { index: usize, reason: String },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn structure(msg: impl Into<String>) -> Self {
        Error::Structure(msg.into())
    }

    pub(crate) fn tx(index: usize, reason: impl Into<String>) -> Self {
        Error::Transaction { index, reason: reason.into() }
    }
}
