use thiserror::Error;

/// Errors raised across the inference toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("empty sample")]
    EmptySample,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("insufficient retained draws: have {have}, need at least {need}")]
    InsufficientDraws { have: usize, need: usize },

    #[error("ARS retained nothing: relax ε or raise R ({calls} simulator calls, {dropped} draws dropped)")]
    ArsRetainedNothing { calls: usize, dropped: usize },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("size cap exceeded: {size} > {cap}")]
    CapExceeded { size: usize, cap: usize },

    #[error("unknown model '{name}'; registered models: {available}")]
    UnknownModel { name: String, available: String },

    #[error("iteration {index}: {source}")]
    Iteration {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn at_iteration(self, index: usize) -> Self {
        Error::Iteration {
            index,
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
