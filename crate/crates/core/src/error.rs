use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the solver library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("file not found: {}", .0.display())]
    NotFound(PathBuf),

    #[error("failed to decode image {}: {message}", .path.display())]
    Decode { path: PathBuf, message: String },

    #[error("unsupported channel layout in {}: {channels} channel(s) ({detail})", .path.display())]
    UnsupportedChannels {
        path: PathBuf,
        channels: usize,
        detail: String,
    },

    #[error("failed to write image {}: {message}", .path.display())]
    Write { path: PathBuf, message: String },

    #[error("invalid plane: {0}")]
    InvalidPlane(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid scale factor {0} (must be at least 2)")]
    InvalidScale(usize),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("power iteration collapsed to the zero vector")]
    DegenerateOperator,

    #[error("step-size contract violated: tau*sigma*L^2 = {0}")]
    StepSize(f64),

    #[error("oracle diverged after {0} iterations")]
    OracleDiverged(usize),
}

pub type Result<T> = std::result::Result<T, Error>;
