//! Crate-wide error type.

/// Unified error for space handling, model fitting, target execution and
/// log persistence. Variants are coarse on purpose: callers mostly need to
/// distinguish "bad input", "budget ran out", and "replay had no answer".
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A vector had the wrong length for the space or model it was used with.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// A parameter space definition violated its own invariants.
    #[error("invalid parameter space: {0}")]
    InvalidSpace(String),

    /// A value, option, or argument was outside its documented domain.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Not enough (or not diverse enough) data to fit a model.
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// A numeric fit failed to converge or produced non-finite output.
    #[error("fit failed: {0}")]
    FitFailed(String),

    /// The time budget was exhausted before the requested work could start.
    #[error("budget exhausted: {0}")]
    BudgetExhausted(String),

    /// A replay target was asked for an execution it has no record of.
    #[error("replay miss: no recorded run for config at ds={data_scale}, nm={machines}")]
    ReplayMiss { data_scale: f64, machines: u32 },

    /// A trial log line could not be parsed (line numbers are 1-based).
    #[error("log format error at line {line}: {message}")]
    LogFormat { line: usize, message: String },

    /// A resume log disagreed with the experiment being resumed.
    #[error("resume mismatch: {0}")]
    ResumeMismatch(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
