use std::io;

use thiserror::Error;

/// Errors produced while configuring or running the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("filter design error: {0}")]
    Design(String),

    #[error("stage {stage} is unstable after quantization (pole radius {radius:.6})")]
    UnstableStage { stage: usize, radius: f64 },

    #[error("overflow bound violated: worst-case accumulator {bound} exceeds 32-bit range")]
    Overflow { bound: i64 },

    #[error("sample {index} out of range: {value} (limit ±{limit})")]
    OutOfRange { index: usize, value: i64, limit: i32 },

    #[error("rate mismatch: block expects {expected} sps, series is {actual} sps")]
    RateMismatch { expected: u32, actual: u32 },

    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn design(msg: impl Into<String>) -> Self {
        Error::Design(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
