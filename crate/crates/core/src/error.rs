//! Error type shared by all modules.

/// Errors surfaced by the laboratory operations.
#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    /// The field distribution fails one of the distributional assumptions
    /// (small-ball bound, density floor, or finite moments).
    #[error("field spec violates distribution assumptions: {reason}")]
    SpecViolation { reason: String },

    /// A moment integral diverged or evaluated to a non-finite value.
    #[error("non-finite moment encountered")]
    NonFiniteMoment,

    /// Adaptive quadrature could not reach the requested tolerance.
    #[error(
        "quadrature stalled: tolerance {tol:e} unreachable (best {best:e} after {panels} panels)"
    )]
    QuadratureFailure { tol: f64, best: f64, panels: usize },

    /// An argument fell outside its admissible open interval.
    #[error("{what} = {value} outside valid range ({lo}, {hi})")]
    OutOfRange {
        what: String,
        value: f64,
        lo: f64,
        hi: f64,
    },

    /// A root solve exhausted its iteration budget.
    #[error("{op} did not converge within {iterations} iterations")]
    NoConvergence { op: &'static str, iterations: usize },

    /// The coupled-system scan found no sign change inside the bracket.
    #[error("no root in bracket: residual {f_lo:+e} at lower end, {f_hi:+e} at upper end")]
    NoRootInBracket { f_lo: f64, f_hi: f64 },

    /// Enumeration request beyond the 2^n budget.
    #[error("n = {n} exceeds the enumeration limit {max}")]
    TooLarge { n: usize, max: usize },

    /// A statistic was requested from too few samples.
    #[error("need at least {needed} samples, got {got}")]
    InsufficientData { needed: usize, got: usize },

    /// Arguments that are individually valid but mutually inconsistent.
    #[error("incompatible arguments: {reason}")]
    Incompatible { reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn out_of_range(what: &str, value: f64, lo: f64, hi: f64) -> Self {
        Error::OutOfRange {
            what: what.to_string(),
            value,
            lo,
            hi,
        }
    }
}
