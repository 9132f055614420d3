use thiserror::Error;

/// Errors raised while building, fitting, measuring or evaluating polygonal approximations.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid interval [{lo}, {hi}]: lower end must be strictly below upper end")]
    InvalidInterval { lo: f64, hi: f64 },

    #[error("segment count must be at least 1")]
    ZeroSegments,

    #[error("knots must be finite and strictly increasing (violated at index {index})")]
    NotStrictlyIncreasing { index: usize },

    #[error("expected {expected} values, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("basis index {index} out of range 0..={max}")]
    IndexOutOfRange { index: usize, max: usize },

    #[error("abscissa {x} lies outside [{lo}, {hi}]")]
    OutOfDomain { x: f64, lo: f64, hi: f64 },

    #[error("{what} is not finite at x = {x}")]
    NonFinite { what: &'static str, x: f64 },

    #[error("second derivative vanishes on [{lo}, {hi}]: the function is linear and any partition is exact")]
    LinearFunction { lo: f64, hi: f64 },

    #[error("adaptive quadrature did not converge on [{lo}, {hi}]")]
    QuadratureNonConvergence { lo: f64, hi: f64 },

    #[error("degenerate interval [{lo}, {hi}]")]
    DegenerateInterval { lo: f64, hi: f64 },

    #[error("tridiagonal system is singular (zero pivot at row {row})")]
    SingularSystem { row: usize },

    #[error("components do not share a domain or partition")]
    ComponentMismatch,

    #[error("invalid fit options: {0}")]
    InvalidOptions(&'static str),

    #[error("tolerance must be positive, got {0}")]
    InvalidTolerance(f64),

    #[error("cost became non-finite during the fit")]
    NonFiniteCost,
}

pub type Result<T> = std::result::Result<T, Error>;
