//! Error type shared across the library.

/// Errors produced by graph handling, calibration, and numeric evaluation.
///
/// The CLI maps these onto exit codes: argument/parse/validation errors exit
/// with 2, an infeasible privacy budget with 3, and numeric failures
/// (non-convergence, domain violations, unstable integration) with 4.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A caller-supplied argument violates a documented precondition.
    #[error("argument error: {0}")]
    Argument(String),

    /// Malformed input text; `line` is 1-based.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    /// Structurally well-formed input that violates a model invariant.
    #[error("validation error: {0}")]
    Validation(String),

    /// No noise scale satisfies the privacy constraint at this budget.
    #[error("infeasible privacy budget: {0}")]
    InfeasibleBudget(String),

    /// An iterative solver ran out of iterations.
    #[error("no convergence after {iterations} iterations (residual {residual:.3e})")]
    Convergence { iterations: usize, residual: f64 },

    /// Evaluation left the numeric domain (underflowed mass, overflow, ...).
    #[error("numeric domain error: {0}")]
    NumericDomain(String),

    /// An ODE integration escaped the physically meaningful region.
    #[error("numerical instability: {0}")]
    Instability(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn argument(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }

    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub(crate) fn numeric(msg: impl Into<String>) -> Self {
        Error::NumericDomain(msg.into())
    }
}
