//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid configuration or parameters. The CLI maps this to exit code 2.
    #[error("configuration error: {0}")]
    Config(String),

    /// The endpoints live in different graph components.
    #[error("no path from vertex {from} to vertex {to}")]
    NoPath { from: usize, to: usize },

    /// The hop cap cannot reach the target.
    #[error("hop cap {hop_cap} is below the BFS hop distance {bfs_distance}")]
    HopCapTooSmall { hop_cap: usize, bfs_distance: usize },

    /// The requested operation does not apply to this input.
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// A runtime numeric failure (non-finite value, stalled sampler, ...).
    #[error("numeric error: {0}")]
    Numeric(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    /// Process exit code used by the CLI: 2 for configuration problems,
    /// 3 for runtime failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Unsupported(_) => 2,
            _ => 3,
        }
    }
}
