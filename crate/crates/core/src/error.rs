use num_complex::Complex64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Parameters violate a structural invariant (α outside (0,1], negative delay, ...).
    #[error("invalid parameter: {0}")]
    InvalidParams(String),

    /// A closed-form expression is evaluated outside the set where it is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// Input sits on a measure-zero line where the classification is not defined.
    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("derivative vanished (|Δ'| = {derivative_norm:.3e}) at λ = {at}")]
    DerivativeNearZero { at: Complex64, derivative_norm: f64 },

    #[error("iteration limit {iterations} exceeded (last λ = {last}, |Δ| = {residual:.3e})")]
    IterationLimit {
        last: Complex64,
        residual: f64,
        iterations: usize,
    },

    #[error("iterate left the finite plane after {iterations} iterations")]
    Diverged { iterations: usize },

    #[error("Δ(0) < 0 but no sign change found on (0, {lambda_max}]; enlarge lambda_max")]
    BracketNotFound { lambda_max: f64 },

    #[error("solver did not converge: {0}")]
    NoConvergence(String),

    #[error("step {step} exceeds the smallest nonzero delay {delay}")]
    StepTooLarge { step: f64, delay: f64 },

    #[error("inconclusive verdict: {0}")]
    InconclusiveVerdict(String),

    #[error("refinement errors are not monotone: {0:?}")]
    NonMonotoneConvergence(Vec<f64>),

    #[error("verdict sequence {0} is outside the known switch catalog")]
    UnknownPattern(String),
}

impl Error {
    /// Solver-side failures, as opposed to bad or degenerate input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::DerivativeNearZero { .. }
                | Error::IterationLimit { .. }
                | Error::Diverged { .. }
                | Error::BracketNotFound { .. }
                | Error::NoConvergence(_)
                | Error::InconclusiveVerdict(_)
                | Error::NonMonotoneConvergence(_)
        )
    }
}
