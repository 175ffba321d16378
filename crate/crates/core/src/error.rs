use thiserror::Error;

/// Failures raised by the gap computations.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("index {index} outside 0..={max}")]
    OutOfRange { index: usize, max: usize },
    #[error("precision of {requested} bits exceeds the backend limit of {limit}")]
    PrecisionUnsupported { requested: usize, limit: usize },
    #[error("eigenvalue {value} lies in a cluster of width {width:e}")]
    NearDegenerate { value: f64, width: f64 },
    #[error("need at least {needed} points, got {got}")]
    InsufficientPoints { needed: usize, got: usize },
    #[error("nonpositive sample {value} at n = {n}")]
    NonPositiveSample { n: f64, value: f64 },
    #[error("no double well for s in [{lo}, {hi}]")]
    NoDoubleWell { lo: f64, hi: f64 },
    #[error("not found: {0}")]
    NotFound(String),
    #[error("method inapplicable: {0}")]
    Inapplicable(String),
}

pub type Result<T> = std::result::Result<T, Error>;
