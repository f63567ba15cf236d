use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller passed arguments that violate an operation's preconditions.
    #[error("usage error: {0}")]
    Usage(String),

    /// A model failed validation (Markov chains, function tables, shape).
    #[error("model error: {0}")]
    Model(String),

    /// A configuration file or CLI argument was rejected.
    #[error("config error: {0}")]
    Config(String),

    /// Null-prefix events exceeded the configured rate.
    #[error("anomaly threshold exceeded: {0}")]
    Anomaly(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Process exit code: 2 for rejected input, 3 for anomalies, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) | Error::Model(_) | Error::Config(_) => 2,
            Error::Anomaly(_) => 3,
            Error::Io(_) | Error::Json(_) | Error::Csv(_) => 1,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Error::Usage(_) => "usage",
            Error::Model(_) => "model",
            Error::Config(_) => "config",
            Error::Anomaly(_) => "anomaly",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
            Error::Csv(_) => "csv",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn usage(msg: impl Into<String>) -> Error {
    Error::Usage(msg.into())
}
