use thiserror::Error;

/// Errors raised by oracles, solvers and diagnostics.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("invalid parameter {name} = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("objective is only scored when l* is identically zero (l is the indicator of the origin)")]
    UnsupportedObjective,

    #[error("metric requires {0}")]
    UnsupportedMetric(&'static str),

    #[error("non-finite value produced by {stage}{}", fmt_iter(*.iteration))]
    NumericalFailure {
        stage: &'static str,
        iteration: Option<usize>,
    },

    #[error("power iteration did not reach tolerance after {iterations} iterations (last estimate {last_estimate})")]
    ConvergenceFailure {
        last_estimate: f64,
        iterations: usize,
    },

    #[error("{algorithm} misuse: {reason}")]
    Misuse {
        algorithm: &'static str,
        reason: &'static str,
    },

    #[error("step sizes rejected for {algorithm}: {condition}")]
    StepSizeRejected {
        algorithm: &'static str,
        condition: String,
    },

    #[error("M is not positive semidefinite: <s, Ms> / (gamma/delta) = {value} for |s|^2 = {norm_sq}")]
    GeometryViolation { value: f64, norm_sq: f64 },

    #[error("{what} out of range: {detail}")]
    OutOfRange {
        what: &'static str,
        detail: String,
    },

    #[error("theorem hypothesis violated: {0}")]
    HypothesisViolation(String),

    #[error("reference cache: {0}")]
    Cache(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn fmt_iter(iteration: Option<usize>) -> String {
    match iteration {
        Some(k) => format!(" at iteration {k}"),
        None => String::new(),
    }
}

impl Error {
    /// Attaches an iteration index to a numerical failure.
    pub fn at_iteration(self, k: usize) -> Self {
        match self {
            Error::NumericalFailure { stage, .. } => Error::NumericalFailure {
                stage,
                iteration: Some(k),
            },
            other => other,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
