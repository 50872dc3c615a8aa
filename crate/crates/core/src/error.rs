use std::io;

use thiserror::Error;

/// Errors produced by the disaggregation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unknown appliance `{0}`")]
    UnknownAppliance(String),

    #[error("index out of range: offset {offset} + length {length} exceeds {available}")]
    OutOfRange {
        offset: usize,
        length: usize,
        available: usize,
    },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("degenerate signal: {0}")]
    DegenerateSignal(String),

    #[error("no switch-on detected in record")]
    NoOnset,

    #[error("single-class input: both positive and negative labels are required")]
    SingleClass,

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("corrupt container: {0}")]
    Corrupt(String),

    #[error("unsupported format version {found} (expected {expected})")]
    Version { found: u32, expected: u32 },

    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
