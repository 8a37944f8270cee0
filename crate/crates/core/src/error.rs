use thiserror::Error;

/// Errors raised by the bracket, curvature, flow and soliton routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension {0} is outside the supported range 1..=16")]
    UnsupportedDimension(usize),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("gauge is singular (|det h| = {det:e})")]
    SingularGauge { det: f64 },
    #[error("bracket violates the Jacobi identity (residual {residual:e})")]
    NotALieBracket { residual: f64 },
    #[error("bracket is not solvable")]
    NotSolvable,
    #[error("bracket is nilpotent; the operation needs a non-trivial complement of the nilradical")]
    NilpotentInput,
    #[error("the zero bracket is not allowed here")]
    ZeroBracket,
    #[error("gradient flow did not reach criticality after {steps} steps (residual {residual:e})")]
    MaxStepsExceeded { steps: usize, residual: f64 },
    #[error("stratum label is not in canonical (sorted diagonal) form")]
    NonCanonicalBeta,
    #[error("bracket is not gauged correctly for the label: {0}")]
    GaugeMismatch(String),
    #[error("flow variant {0} requires a stratum label")]
    MissingLabel(&'static str),
    #[error("recorded samples too sparse at t = {t}: relative change {change:e} across one interval")]
    InterpolationGap { t: f64, change: f64 },
    #[error("value out of range: {0}")]
    OutOfRange(String),
    #[error("structural identity failed: {0}")]
    IdentityViolation(String),
    #[error("matrix is not positive definite: {0}")]
    NotPositiveDefinite(String),
    #[error("unknown catalog entry `{0}`")]
    UnknownName(String),
    #[error("parameter out of range: {0}")]
    ParamOutOfRange(String),
    #[error("malformed input: {0}")]
    Parse(String),
    #[error("integrator step size underflow at t = {t}")]
    StepFailure { t: f64 },
    #[error("flow diverged at t = {t} (|mu| = {norm:e})")]
    Diverged { t: f64, norm: f64 },
    #[error("unsupported operation: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;
