use thiserror::Error;

/// Errors raised by the geometric and numerical routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum FwvError {
    /// Malformed or inconsistent input data.
    #[error("invalid input: {0}")]
    Invalid(String),

    /// The polyhedron has no points.
    #[error("polyhedron is empty")]
    Empty,

    /// The polyhedron is not full-dimensional where that is required.
    #[error("degenerate polyhedron: {0}")]
    Degenerate(String),

    /// Lattice enumeration was requested on an unbounded region without truncation.
    #[error("unbounded enumeration: {0}")]
    Unbounded(String),

    /// The Reeb vector lies outside the open Reeb cone, so the weighted volume diverges.
    #[error("divergent integral: {0}")]
    Divergent(String),

    /// An iterative method stopped before meeting its tolerance.
    #[error("not converged: {0}")]
    NotConverged(String),

    /// A requested level of a weight table is not present.
    #[error("missing level {0}")]
    MissingLevel(u32),

    /// The semigroup saturation exceeded its coordinate budget.
    #[error("coordinate budget exceeded at level {level}")]
    BudgetOverflow { level: u32 },

    /// Semigroup conditions required for the Okounkov-body limit fail.
    #[error("semigroup conditions fail: {0}")]
    Conditions(String),

    /// Integer arithmetic overflowed the fixed-width fast path.
    #[error("integer overflow in {0}")]
    Overflow(&'static str),
}

pub type Result<T> = std::result::Result<T, FwvError>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(FwvError::Invalid(msg.into()))
}
