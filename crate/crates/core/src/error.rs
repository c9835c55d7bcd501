use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("invalid control layout: {0}")]
    Layout(String),

    #[error("invalid nonlinearity: {0}")]
    Nonlinearity(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("time frame mismatch: {0}")]
    Frame(String),

    #[error("trajectory diverged at step {step} (non-finite state)")]
    Divergence { step: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("config error at {location}: {message}")]
    Config { location: String, message: String },

    #[error("empty data: {0}")]
    EmptyData(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn config(location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            location: location.into(),
            message: message.into(),
        }
    }

    /// Numerical failures (divergence, non-finite values) as opposed to
    /// malformed input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Divergence { .. })
    }
}
