use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A caller broke an operation's precondition (shape mismatch, bad probability, ...).
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A record in a dataset file could not be parsed.
    #[error("{msg} at line {line}")]
    Parse { line: usize, msg: String },

    /// A model file could not be decoded.
    #[error("{0}")]
    ModelFormat(String),

    #[error("invalid input: {0}")]
    Invalid(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

macro_rules! ensure_contract {
    ($cond:expr, $($arg:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err($crate::Error::Contract(format!($($arg)+)));
        }
    };
}
pub(crate) use ensure_contract;
