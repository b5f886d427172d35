use std::io;
use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the reconciliation library.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller passed an argument outside the operation's domain.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// Parity-check matrix construction failed.
    #[error("construction failed: {0}")]
    Construction(String),

    /// Inconsistent configuration (bad selection for a pool, bad file, ...).
    #[error("configuration error: {0}")]
    Config(String),

    /// The QBER estimator has neither history nor decoy data.
    #[error("QBER estimator has no history and no decoy sample")]
    Unseeded,

    /// No undisclosed bits remain for another additional round.
    #[error("no undisclosed bits remain")]
    Exhausted,

    /// A wire frame is incomplete; at least `needed` more bytes are required.
    #[error("incomplete frame: need {needed} more bytes")]
    Incomplete { needed: usize },

    /// Malformed or unexpected protocol data. The session must be aborted.
    #[error("protocol error: {0}")]
    Protocol(String),

    /// The peer closed the link.
    #[error("link closed by peer")]
    Closed,

    #[error("i/o error on {path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("transport error: {0}")]
    Io(#[from] io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }

    pub(crate) fn protocol(msg: impl Into<String>) -> Self {
        Error::Protocol(msg.into())
    }

    pub(crate) fn file(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::File {
            path: path.into(),
            source,
        }
    }
}
