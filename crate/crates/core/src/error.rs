use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the toolchain.
///
/// Every variant maps onto one machine-readable kind (see [`Error::kind`]),
/// which the command-line front end turns into an exit code.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid configuration, parameters or input values.
    #[error("{0}")]
    Config(String),

    /// A malformed input file; `line` is 1-based.
    #[error("{path}:{line}: {msg}")]
    Schema { path: String, line: u64, msg: String },

    /// An operation was handed data of the wrong kind (e.g. a crack spec to
    /// the porosity injector).
    #[error("contract violation: {0}")]
    Contract(String),

    /// Rendering could not proceed (e.g. a degenerate camera).
    #[error("generation failed: {0}")]
    Generation(String),

    /// A mix plan cannot be satisfied by the available pools.
    #[error("planning failed: {0}")]
    Planning(String),

    /// Audit input is unusable (empty, mismatched layouts).
    #[error("audit failed: {0}")]
    Audit(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Stable short name used in `error.kind=<...>` diagnostics.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Config(_) => "config",
            Error::Schema { .. } => "schema",
            Error::Contract(_) => "contract",
            Error::Generation(_) => "generation",
            Error::Planning(_) => "planning",
            Error::Audit(_) => "audit",
            Error::Io { .. } => "io",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
