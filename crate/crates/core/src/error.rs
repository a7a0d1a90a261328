use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// A domain-type invariant was violated by caller input.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A precondition of an operation was not met.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// An internal consistency check failed (indicates a bug, e.g. a wrong
    /// structure constant).
    #[error("internal consistency failure: {0}")]
    Inconsistent(String),

    /// An iterative method did not converge; carries diagnostics.
    #[error("no convergence: {0}")]
    NoConvergence(String),
}
