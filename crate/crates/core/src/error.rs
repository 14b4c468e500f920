use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A vector or matrix has the wrong shape for the topology or slice count.
    #[error("dimension mismatch in {what}: expected {expected}, got {got}")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{path}:{line}: {message}")]
    Trace {
        path: PathBuf,
        line: usize,
        message: String,
    },

    /// A solver precondition failed (non-positive rate, no resources, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// Operation decisions that do not respect the plan or the slot.
    #[error("infeasible operation decision: {0}")]
    Infeasible(String),

    #[error("cannot sample from an empty replay buffer")]
    EmptyBuffer,

    #[error("search grid has no feasible plan")]
    EmptyGrid,

    #[error("moving average of an empty series")]
    EmptySeries,

    #[error("forward cache is stale: network changed since the forward pass")]
    StaleCache,

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("checkpoint does not match configuration: {0}")]
    CheckpointMismatch(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn dim(what: &'static str, expected: usize, got: usize) -> Self {
        Error::Dimension {
            what,
            expected,
            got,
        }
    }
}
