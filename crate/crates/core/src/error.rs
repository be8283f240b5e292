//! Error type shared by every module in the crate.

use thiserror::Error;

/// Unified error enum. Variants map onto the failure modes of the individual
/// subsystems: configuration parsing/validation, geometry/dimension checks,
/// detector degeneracies, and the convex solvers.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed scenario file (JSON syntax or wrong types).
    #[error("parse error: {0}")]
    Parse(String),

    /// Scenario field failed a validation rule.
    #[error("invalid scenario: field `{field}`: {message}")]
    Validation { field: String, message: String },

    /// Underlying filesystem failure while reading/writing artifacts.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// Array arguments whose lengths do not agree with the scenario.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A scalar argument outside its documented domain.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// OOK energy detector has identical on/off variances; no threshold
    /// separates the hypotheses.
    #[error("degenerate detector: on/off sample variances coincide ({sigma1_sq} vs {sigma0_sq})")]
    DegenerateChannel { sigma1_sq: f64, sigma0_sq: f64 },

    /// Linear program has an empty feasible set.
    #[error("infeasible linear program")]
    InfeasibleLp,

    /// Linear program is unbounded in the optimization direction.
    #[error("unbounded linear program")]
    UnboundedLp,

    /// Quadratic program (or generic convex program) has no feasible point.
    #[error("infeasible problem: {0}")]
    Infeasible(String),

    /// No IRS association satisfies the primary-rate floor in this slot.
    #[error("slot {slot}: no feasible IRS association (best attainable rate {best_rate:.6} < threshold {threshold:.6})")]
    InfeasibleSlot {
        slot: usize,
        best_rate: f64,
        threshold: f64,
    },

    /// Barrier solver was handed a start outside the strictly feasible
    /// region and could not recover one.
    #[error("barrier solver: no strictly feasible start (worst constraint margin {margin:.3e})")]
    InfeasibleStart { margin: f64 },

    /// Iterative solver stopped making progress before reaching its target
    /// accuracy.
    #[error("solver failure: {0}")]
    Solver(String),

    /// Outer loop hit its iteration cap before meeting the convergence
    /// criterion.
    #[error("did not converge: {0}")]
    NonConverged(String),
}

impl Error {
    /// Shorthand used by the scenario validator.
    pub(crate) fn validation(field: &str, message: impl Into<String>) -> Self {
        Error::Validation {
            field: field.to_string(),
            message: message.into(),
        }
    }
}
