use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Invalid or inconsistent system / schedule configuration.
    #[error("configuration error: {0}")]
    Config(String),

    /// The request is valid but has no closed-form solution; use a numerical
    /// propagator instead.
    #[error("not supported by the closed-form solution: {0}")]
    NotAnalytic(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    /// Fixed-step integration drifted off the unit sphere.
    #[error("norm drift {drift:.3e} exceeds {limit:.0e}; reduce the step (currently {step})")]
    Accuracy { drift: f64, limit: f64, step: f64 },

    #[error("profile is not piecewise constant; use the Runge-Kutta propagator")]
    NotPiecewiseConstant,

    #[error("trace mismatch: {0}")]
    TraceMismatch(String),
}
