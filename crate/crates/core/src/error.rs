use thiserror::Error;

/// The error type shared by every module of the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid Cantor specification, depth, or run configuration.
    #[error("configuration error: {0}")]
    Config(String),
    /// An argument outside the domain of an operation.
    #[error("invalid argument: {0}")]
    Argument(String),
    /// A kernel was evaluated at the origin.
    #[error("kernel evaluated at the origin")]
    Singularity,
    /// The requested strategy cannot handle this input.
    #[error("unsupported: {0}")]
    Unsupported(String),
    /// A numeric bound could not be established (e.g. a non-positive infimum).
    #[error("inconclusive: {0}")]
    Inconclusive(String),
    /// An extremum search failed to stabilize.
    #[error("search did not converge: {0}")]
    Divergence(String),
    /// Internal consistency check failed.
    #[error("engine error: {0}")]
    Engine(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for errors caused by the caller's configuration rather than the engine.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config(_) | Error::Argument(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
