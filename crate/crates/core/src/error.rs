use std::io;

use thiserror::Error;

/// Errors produced anywhere in the simulation, training and I/O pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("encoding error: {0}")]
    Encoding(String),
    #[error("cannot invert segment: {0}")]
    Inversion(String),
    #[error("unsupported circuit: {0}")]
    UnsupportedCircuit(String),
    #[error("numeric error: {0}")]
    Numeric(String),
    #[error("matrix is not positive semi-definite (min eigenvalue {min_eigenvalue:e})")]
    NotPsd { min_eigenvalue: f64 },
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("format error at byte offset {offset}: {message}")]
    Format { offset: usize, message: String },
    #[error("model file error: {0}")]
    Model(String),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
