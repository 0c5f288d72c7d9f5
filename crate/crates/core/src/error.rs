//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Matrix/vector shapes do not agree; the message names both shapes.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A matrix that should be a Hermitian PSD Gram matrix is not one
    /// (non-square, grossly non-Hermitian, or determinant <= 0 beyond
    /// tolerance).
    #[error("invalid Gram matrix: {0}")]
    InvalidGram(String),

    /// A scalar or structural parameter is out of its valid range.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The requested connection pattern cannot satisfy the row/column/pairing
    /// properties; raised before any construction work.
    #[error("infeasible connection: {0}")]
    InfeasibleConnection(String),

    /// The bipartite RF/antenna graph is not a single connected component.
    #[error("unconnected topology: {0}")]
    UnconnectedTopology(String),

    /// An exhaustive enumeration would exceed its configured cap.
    #[error("enumeration cap exceeded: {0}")]
    EnumerationCap(String),

    /// Configuration file errors (parse or validation), with field context.
    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
