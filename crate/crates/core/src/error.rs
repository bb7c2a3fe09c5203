//! Error type shared by every module of the crate.

use std::path::PathBuf;

use thiserror::Error;

/// Errors raised while building systems, evaluating coherence or running samplers.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed input. `path` names the offending key (e.g. `system.emissions[1][0]`).
    #[error("validation error at `{path}`: {message}")]
    Validation { path: String, message: String },

    /// Every latent has zero likelihood for the conditioning state.
    #[error("degenerate conditioning: every latent has zero likelihood for state {state}")]
    DegenerateConditioning { state: String },

    /// A sampler hit a zero-mass conditioning state.
    #[error("degenerate conditioning at step {step}: {state}")]
    DegenerateAtStep { step: usize, state: String },

    #[error("enumeration cap exceeded: {size} policies > cap {cap}")]
    CapExceeded { size: u128, cap: u64 },

    #[error("empty support: every policy has coherence -inf")]
    EmptySupport,

    #[error("zero marginal probability for context `{context}`")]
    ZeroMarginal { context: String },

    #[error("support mismatch: {0}")]
    SupportMismatch(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("non-finite objective value {value} at {point}")]
    NonFinite { point: i64, value: f64 },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn validation(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation {
            path: path.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for the two flavours of zero-mass conditioning.
    pub fn is_degenerate(&self) -> bool {
        matches!(
            self,
            Error::DegenerateConditioning { .. } | Error::DegenerateAtStep { .. }
        )
    }
}
