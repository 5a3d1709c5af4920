use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid weight {0}: weights must be finite and strictly positive")]
    InvalidWeight(f64),

    #[error("vertex {vertex} has two neighbours ({first}, {second}) at the same weight {weight}")]
    TiedWeights {
        vertex: usize,
        first: usize,
        second: usize,
        weight: f64,
    },

    #[error("malformed matching: {0}")]
    MalformedMatching(String),

    #[error("descending closure exceeded the cap of {cap} vertices")]
    ClosureCapExceeded { cap: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("ode integration failed at t = {t}: {reason}")]
    Integration { t: f64, reason: String },

    #[error("t_max too small: certified bound {bound:e} exceeds requested accuracy {accuracy:e}")]
    InsufficientHorizon { bound: f64, accuracy: f64 },

    #[error("interval slack {slack:e} exceeds budget {budget:e}")]
    SlackBudget { slack: f64, budget: f64 },

    #[error("instance format: {0}")]
    Format(String),

    #[error("io: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Format(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}
