//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("model has no finite joint support; exact enumeration unavailable ({0})")]
    NotFiniteSupport(String),
    #[error("pairwise operation needs at least 2 samples, got {0}")]
    TooFewSamples(usize),
    #[error("feature dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("empty class: {0}")]
    EmptyClass(String),
    #[error("both label classes are required, got positives={pos}, negatives={neg}")]
    SingleClass { pos: usize, neg: usize },
    #[error("parameter out of range: {0}")]
    ParamRange(String),
    #[error("non-finite value encountered: {0}")]
    NonFinite(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
