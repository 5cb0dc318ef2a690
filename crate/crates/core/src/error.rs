use thiserror::Error;

/// Errors produced by the simulator library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("config parse error at line {line}, column {column}: {message}")]
    ConfigParse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("config key `{key}`: {constraint}")]
    ConfigValidation { key: String, constraint: String },

    #[error("sweep cell {index} ({label}) failed: {source}")]
    Cell {
        index: usize,
        label: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// True for errors caused by bad user configuration rather than runtime failures.
    pub fn is_config_error(&self) -> bool {
        match self {
            Error::ConfigParse { .. } | Error::ConfigValidation { .. } => true,
            Error::Cell { source, .. } => source.is_config_error(),
            _ => false,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
