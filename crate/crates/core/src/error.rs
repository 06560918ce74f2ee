use std::io;

use thiserror::Error;

/// Errors raised while configuring or running a simulation.
#[derive(Debug, Error)]
pub enum Error {
    /// Bad configuration value. `key` names the offending setting.
    #[error("configuration error in `{key}`: {msg}")]
    Config { key: String, msg: String },

    /// A simulation invariant was broken. Always a bug in a policy or handler.
    #[error("invariant violation: {0}")]
    Logic(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn config(key: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            msg: msg.into(),
        }
    }

    pub fn logic(msg: impl Into<String>) -> Self {
        Error::Logic(msg.into())
    }

    pub fn io(path: impl Into<String>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit status for this error: 2 for configuration and I/O
    /// problems, 3 for runtime invariant violations.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Logic(_) => 3,
            _ => 2,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
