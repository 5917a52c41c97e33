use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid patch: {0}")]
    InvalidPatch(String),
    #[error("area {area} is not pi within tolerance")]
    AreaNotNormalized { area: f64 },
    #[error("patch is not strictly decreasing on (0, pi/m): {0}")]
    NotMonotone(String),
    #[error("argument out of range: {0}")]
    OutOfRange(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("quadrature error estimate {estimate:e} exceeds tolerance {tolerance:e}")]
    Quadrature { estimate: f64, tolerance: f64 },
    #[error("least-squares fit ill-conditioned (condition {condition:e})")]
    IllConditioned { condition: f64 },
    #[error("boundary residual {residual:e} exceeds tolerance {tolerance:e}")]
    BoundaryResidual { residual: f64, tolerance: f64 },
    #[error("no convergence: {0}")]
    NoConvergence(String),
    #[error("singular jacobian (reciprocal condition {rcond:e})")]
    SingularJacobian { rcond: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
