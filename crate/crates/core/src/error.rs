use thiserror::Error;

/// Failures raised by the numerical kernels and the torus computations built on them.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("step size underflow at t = {t} (trajectory passes too close to a singular point)")]
    StepUnderflow { t: f64 },
    #[error("integration budget t_max = {t_max} exhausted before {wanted} event(s) were seen")]
    EventNotReached { t_max: f64, wanted: usize },
    #[error("quadrature did not converge: estimate {estimate}, error {error_estimate}")]
    QuadratureNonConvergence { estimate: f64, error_estimate: f64 },
    #[error("invalid bracket [{a}, {b}]: f(a) = {fa}, f(b) = {fb}")]
    InvalidBracket { a: f64, b: f64, fa: f64, fb: f64 },
    #[error("finite-difference stencil left the admissible domain at x = {x}")]
    StencilOutOfDomain { x: f64 },
    #[error("equilibrium is not a simple focus-focus point: {0}")]
    NotFocusFocus(&'static str),
    #[error("(h, l) = ({h}, {l}) is outside the regular window: {reason}")]
    OutsideWindow { h: f64, l: f64, reason: &'static str },
    #[error("(h, l) = ({h}, {l}) is too close to the focus-focus value (|j| = {modulus})")]
    TooCloseToFocusFocus { h: f64, l: f64, modulus: f64 },
    #[error("turning points degenerate at (h, l) = ({h}, {l}): near an elliptic boundary")]
    DegenerateTurningPoints { h: f64, l: f64 },
    #[error("engines disagree at (h, l) = ({h}, {l}): relative discrepancy {discrepancy}")]
    EngineDisagreement { h: f64, l: f64, discrepancy: f64 },
    #[error("branch jump of {jump} between neighbouring samples (path step too large)")]
    BranchJump { jump: f64 },
    #[error("ill-conditioned fit: {0}")]
    IllConditioned(&'static str),
    #[error("insufficient data: {0}")]
    InsufficientData(&'static str),
    #[error("level {level} is not attained on the grid")]
    LevelNotAttained { level: f64 },
    #[error("no sign change of the twist along the isoenergy curve h = {h}")]
    NoTwistlessTorus { h: f64 },
    #[error("{count} sign changes of the twist along h = {h} (window too large)")]
    MultipleTwistlessTori { h: f64, count: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(&'static str),
}

pub type Result<T> = core::result::Result<T, Error>;
