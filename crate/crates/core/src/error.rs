use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unknown vertex {0}")]
    UnknownVertex(String),

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("size limit exceeded: {0}")]
    SizeLimit(String),

    #[error("degree mismatch: {0}")]
    DegreeMismatch(String),

    #[error("odd half-edge total {0}")]
    OddHalfEdges(usize),

    #[error("budget exhausted after {attempts} attempts with {accepted} acceptances")]
    BudgetExhausted { attempts: u64, accepted: u64 },

    #[error("invalid gluing plan: {0}")]
    InvalidPlan(String),

    #[error("invalid paired tree: {0}")]
    InvalidPairedTree(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
