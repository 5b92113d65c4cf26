//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid configuration: bad dimensions, unknown names, out-of-range values.
    #[error("configuration error: {0}")]
    Config(String),

    /// A loss or gradient became non-finite during training.
    #[error("training diverged at epoch {epoch}: {detail}")]
    Divergence { epoch: usize, detail: String },

    /// An iterative linear solver failed to reach its tolerance.
    #[error("linear solver did not converge: relative residual {residual:.3e}")]
    SolverStall { residual: f64 },

    /// A requested report or data file is missing.
    #[error("missing file: {0}")]
    MissingFile(String),

    /// Malformed persisted data (checkpoint, cache, report).
    #[error("format error in {what}: {detail}")]
    Format { what: String, detail: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
