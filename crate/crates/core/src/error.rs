use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Parameter outside the range a routine supports (e.g. H >= 2).
    #[error("unsupported parameter: {0}")]
    UnsupportedParameter(String),

    /// A factorization or special-function evaluation failed.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Argument outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Malformed, non-finite, or inconsistently shaped input.
    #[error("invalid input: {0}")]
    Input(String),

    #[error("field under-resolved: {0}")]
    Resolution(String),

    #[error("config error at `{key}`{}: {message}", line.map(|l| format!(" (line {l})")).unwrap_or_default())]
    Config {
        key: String,
        line: Option<usize>,
        message: String,
    },

    #[error("step-size guard: dt * Lip = {product:.3} > 1 (set allow_stiff to proceed)")]
    StepSize { product: f64 },

    #[error("divergence in replica {replica} at step {step}: |X| = {magnitude:e}")]
    Divergence {
        replica: usize,
        step: usize,
        magnitude: f64,
    },

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
}
