//! Error type shared by every module.

use thiserror::Error;

/// Errors surfaced by the toolkit.
///
/// `Domain` means a mathematical precondition failed (a constant out of
/// range, a non-Hurwitz generator, an empty fit window). `Config` means an
/// experiment or solver setup is unusable before any math runs. The two are
/// kept apart so callers can map them to distinct exit codes.
#[derive(Debug, Error)]
pub enum Error {
    /// A mathematical precondition was violated.
    #[error("domain error: {0}")]
    Domain(String),
    /// A solver or experiment configuration is unusable.
    #[error("config error: {0}")]
    Config(String),
    /// A dense linear-algebra kernel failed (eigensolve, factorization).
    #[error("linear algebra failure: {0}")]
    Linalg(String),
    /// Serialized input could not be parsed.
    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn linalg(msg: impl Into<String>) -> Self {
        Error::Linalg(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
