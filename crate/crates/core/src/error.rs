use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the simulator, the integrators and the file formats.
#[derive(Debug, Error)]
pub enum Error {
    /// An input lies outside the domain where an operation is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// A runtime invariant was broken. Seeing this means an engine bug or a
    /// log replayed against the wrong initial state.
    #[error("invariant violation: {0}")]
    InvariantViolation(String),

    /// Two objects that must share a lattice or a time grid do not.
    #[error("mismatched inputs: {0}")]
    Mismatch(String),

    /// The explicit integrator produced a non-finite or runaway value.
    #[error("numerical blow-up at t = {time}: {detail}")]
    Blowup { time: f64, detail: String },

    /// A configuration key is missing, unknown or out of range.
    #[error("config key `{key}`: {message}")]
    Config { key: String, message: String },

    /// A ladder of scalings does not match the requested limit regime.
    #[error("regime violation: {0}")]
    Regime(String),

    /// A persisted file failed to decode or its hash did not verify.
    #[error("corrupt {what}: {detail}")]
    Corrupt { what: String, detail: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            message: message.into(),
        }
    }

    pub(crate) fn corrupt(what: impl Into<String>, detail: impl Into<String>) -> Self {
        Error::Corrupt {
            what: what.into(),
            detail: detail.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
