use std::path::PathBuf;

/// Errors raised anywhere in the planning pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    Dimension {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("invalid robot model: {0}")]
    Model(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("task index {index} out of range for {tasks} tasks")]
    TaskIndex { index: usize, tasks: usize },

    #[error("batch normalization needs at least 2 rows in training mode, got {0}")]
    BatchTooSmall(usize),

    #[error("cannot sample {requested} transitions from a buffer holding {available}")]
    EmptyReplay { requested: usize, available: usize },

    #[error("smoothing system is singular: {0}")]
    Singular(String),

    #[error("time {t} outside spline domain [{lo}, {hi}]")]
    OutOfDomain { t: f64, lo: f64, hi: f64 },

    #[error("trajectory infeasible before smoothing joint {joint}: the unsmoothed knots violate a constraint")]
    InfeasibleInput { joint: usize },

    #[error("obstacle sampling exhausted {attempts} attempts without a clear placement")]
    SamplingExhausted { attempts: usize },

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error("malformed CSV {path}: {reason}")]
    Csv { path: PathBuf, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
