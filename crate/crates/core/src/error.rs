use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RelaxError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error(
        "iteration diverged: non-finite {what} at index {index} (outer iteration {iteration})"
    )]
    Divergence {
        what: &'static str,
        index: usize,
        iteration: usize,
    },

    #[error("singular linear system: {0}")]
    Singular(String),

    #[error("ODE singularity at x = {x}: denominator {denominator:e} below threshold")]
    OdeSingularity { x: f64, denominator: f64 },

    #[error("shooting failed: {0}")]
    Shooting(String),

    #[error("value {value} outside envelope domain [{lo}, {hi}]")]
    Domain { value: f64, lo: f64, hi: f64 },

    #[error("io error: {0}")]
    Io(String),

    #[error("serialization error: {0}")]
    Serialization(String),
}

impl From<std::io::Error> for RelaxError {
    fn from(e: std::io::Error) -> Self {
        RelaxError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for RelaxError {
    fn from(e: serde_json::Error) -> Self {
        RelaxError::Serialization(e.to_string())
    }
}

impl From<csv::Error> for RelaxError {
    fn from(e: csv::Error) -> Self {
        RelaxError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, RelaxError>;

pub(crate) fn invalid_param(name: &'static str, reason: impl Into<String>) -> RelaxError {
    RelaxError::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
