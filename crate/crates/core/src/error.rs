use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// Caller supplied arguments that violate an operation's preconditions.
    #[error("invalid input: {0}")]
    Input(String),

    #[error("invalid diagram: {0}")]
    Diagram(String),

    #[error("invalid model specification: {0}")]
    Spec(String),

    #[error("simulation failed: {0}")]
    Simulation(String),

    #[error("{what}: {got} exceeds the limit of {limit}")]
    Size {
        what: &'static str,
        got: usize,
        limit: usize,
    },

    /// A quantity is mathematically undefined for the given input (empty table, single-class batch).
    #[error("undefined: {0}")]
    Undefined(String),

    /// Sampler diagnostics fell outside their accepted range.
    #[error("convergence failure: {0}")]
    Convergence(String),

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn input(msg: impl Into<String>) -> Error {
    Error::Input(msg.into())
}
