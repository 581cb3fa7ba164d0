use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("evaluation error: {0}")]
    Evaluation(String),
    #[error("degenerate metric: |beta|_g = {beta_norm} >= 1")]
    DegenerateMetric { beta_norm: f64 },
    #[error("sweep failure: {0}")]
    SweepFailure(String),
    #[error("validation error: {0}")]
    Validation(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable machine-readable tag used in CLI error records.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidArgument(_) => "invalid-argument",
            Error::Evaluation(_) => "evaluation-error",
            Error::DegenerateMetric { .. } => "degenerate-metric",
            Error::SweepFailure(_) => "sweep-failure",
            Error::Validation(_) => "validation-error",
            Error::Io(_) => "io-error",
            Error::Json(_) => "json-error",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
