use std::path::PathBuf;

/// Errors raised anywhere in the simulator.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Invalid configuration: layer specs, profile tables, code files, run configs.
    #[error("configuration error: {0}")]
    Config(String),
    /// A caller passed arguments that violate an operation's preconditions.
    #[error("usage error: {0}")]
    Usage(String),
    /// Broken internal invariant (e.g. a missing saved activation).
    #[error("internal error: {0}")]
    Internal(String),
    /// Training produced a non-finite loss.
    #[error("non-finite loss at epoch {epoch} (lr {lr:e}, last finite loss {last_finite_loss:e})")]
    NonFinite {
        epoch: usize,
        lr: f64,
        last_finite_loss: f64,
    },
    /// A checkpoint does not describe the architecture it is loaded into.
    #[error("checkpoint architecture mismatch: {0}")]
    ArchitectureMismatch(String),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
