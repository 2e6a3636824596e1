//! Error type shared by every fallible operation in the crate.
//!
//! Errors are split into three broad classes so that callers (in particular
//! the command-line front end) can map them onto distinct failure modes:
//!
//! * [`Error::Config`] — a caller supplied an invalid configuration value
//!   (non-positive prior mass, empty truncation interval, an unsupported
//!   attribute count, …).  These are programming/usage errors that no amount
//!   of retrying will fix.
//! * [`Error::Data`] — the observed data are malformed (dimension mismatch
//!   between the response matrix and the Q-matrix, entries outside `{0,1}`,
//!   an all-zero Q-matrix row, …).
//! * [`Error::Numerical`] — a sampler produced a non-finite quantity or an
//!   otherwise unusable intermediate value at run time.  The iteration index
//!   is recorded so the failure can be localised in long chains.

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid configuration supplied by the caller.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// Malformed input data (responses, Q-matrix, attribute profiles, …).
    #[error("invalid data: {0}")]
    Data(String),

    /// A numerical failure inside a sampler or estimator.
    #[error("numerical failure at iteration {iteration}: {message}")]
    Numerical {
        /// Iteration (1-based) at which the failure was detected; 0 means
        /// the failure happened outside any iteration loop (e.g. during
        /// initialisation).
        iteration: usize,
        /// Human-readable description of what went wrong.
        message: String,
    },
}

impl Error {
    /// Convenience constructor for [`Error::Config`].
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    /// Convenience constructor for [`Error::Data`].
    pub fn data(msg: impl Into<String>) -> Self {
        Error::Data(msg.into())
    }

    /// Convenience constructor for [`Error::Numerical`].
    pub fn numerical(iteration: usize, msg: impl Into<String>) -> Self {
        Error::Numerical {
            iteration,
            message: msg.into(),
        }
    }

    /// Attach an iteration index to a numerical error raised by an
    /// iteration-agnostic helper (which reports iteration 0).  Errors that
    /// already carry a non-zero iteration, and non-numerical errors, are
    /// returned unchanged.
    pub(crate) fn at_iteration(self, iteration: usize) -> Self {
        match self {
            Error::Numerical {
                iteration: 0,
                message,
            } => Error::Numerical { iteration, message },
            other => other,
        }
    }
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
