use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite {what} at point {point:?}")]
    Evaluation { what: &'static str, point: Vec<f64> },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error(
        "mixed derivative H_1{index} vanishes at reference point {point:?}; shrink the domain so that it keeps a strict sign"
    )]
    DegenerateSign { index: usize, point: Vec<f64> },

    #[error("classifiers disagree: {0}")]
    InconsistentClassification(String),

    #[error("component {component} is not monotone (witness node {node})")]
    NotMonotone { component: usize, node: usize },

    #[error("field is neither H-monotone nor (-H)-monotone: {0}")]
    NotHMonotone(String),

    #[error("non-linearity is not submodular on the data range: {0}")]
    NotSubmodular(String),

    #[error("brute-force bound exceeded: {0}")]
    BoundExceeded(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
