use thiserror::Error;

/// Errors shared by every module of the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("capacity exceeded: {what} (got {got}, limit {limit})")]
    Capacity { what: &'static str, got: u64, limit: u64 },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("vertex {vertex} out of range for dimension {d}")]
    VertexOutOfRange { vertex: u32, d: u32 },

    #[error("vertex {0} has degree zero")]
    ZeroDegree(u32),

    #[error("step budget of {budget} exhausted with {unvisited} vertices unvisited")]
    BudgetExhausted { budget: u64, unvisited: u64 },

    #[error("outside the domain of {formula}: {reason}")]
    Domain { formula: &'static str, reason: String },

    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("graph has no edges")]
    NoEdges,

    #[error("i/o: {0}")]
    Io(String),

    #[error("format: {0}")]
    Format(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Format(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Format(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn param(msg: impl Into<String>) -> Error {
    Error::Parameter(msg.into())
}
