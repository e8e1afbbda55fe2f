use std::path::PathBuf;

use thiserror::Error;

use crate::mixed_models::HlmFit;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("format error: {0}")]
    Format(String),

    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },

    #[error("data error: {0}")]
    Data(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("numerical error: {0}")]
    Numerical(String),

    /// The optimizer ran out of iterations; `best` holds the best iterate seen.
    #[error("no convergence after {iterations} iterations (loglik {:.6})", best.loglik)]
    Convergence { iterations: usize, best: Box<HlmFit> },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Argument(_) => 2,
            Error::Format(_)
            | Error::NonFinite { .. }
            | Error::Data(_)
            | Error::Degenerate(_)
            | Error::Io { .. } => 3,
            Error::Numerical(_) | Error::Convergence { .. } => 4,
        }
    }
}
