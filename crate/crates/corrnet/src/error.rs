//! Crate-wide error type with process exit-code mapping for the CLI.

use thiserror::Error;

/// Errors produced anywhere in the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// Input file could not be parsed.
    #[error("format error at line {line}: {message}")]
    Format { line: u64, message: String },

    /// Input parsed but violates a dataset invariant.
    #[error("dataset error: {0}")]
    Dataset(String),

    /// A series or matrix is numerically degenerate (constant column,
    /// zero variance, zero estimated volatility).
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// Two objects that must agree (node counts, lengths, kinds) do not.
    #[error("incompatible inputs: {0}")]
    Incompatible(String),

    /// A windowed estimator was asked for more history than exists.
    #[error("insufficient history: window {window} has {available} predecessors, needs {required}")]
    InsufficientHistory {
        window: usize,
        available: usize,
        required: usize,
    },

    /// Invalid configuration value or combination.
    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code for the CLI: 2 data error, 3 config error,
    /// 4 numerical degeneracy.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Format { .. }
            | Error::Dataset(_)
            | Error::Incompatible(_)
            | Error::Io(_)
            | Error::Csv(_)
            | Error::Json(_) => 2,
            Error::Config(_) => 3,
            Error::Degenerate(_) | Error::InsufficientHistory { .. } => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
