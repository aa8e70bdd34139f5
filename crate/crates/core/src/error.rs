use thiserror::Error;

/// Errors produced by the game model, verifiers, constructions and solvers.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed or out-of-range input (off-grid price, bad tolerance, wrong arity).
    #[error("input error: {0}")]
    Input(String),

    /// Input is well formed but outside the domain an operation is defined on.
    #[error("domain error: {0}")]
    Domain(String),

    /// The linear-programming backend failed on an instance that should be solvable.
    #[error("solver error: {0}")]
    Solver(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
