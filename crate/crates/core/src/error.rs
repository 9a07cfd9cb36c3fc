use thiserror::Error;

use crate::expr::ExprError;
use crate::quantum::StateViolation;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid density: {0}")]
    InvalidDensity(String),

    #[error("invalid quantum state: {0}")]
    InvalidState(#[from] StateViolation),

    #[error("invalid hybrid state at grid point {point}: {violation}")]
    InvalidHybridState { point: usize, violation: String },

    #[error("operator is not Hermitian (max |A - A^dagger| = {max_deviation:e})")]
    NotHermitian { max_deviation: f64 },

    #[error("classical factor must be real (max |Im| = {max_imaginary:e})")]
    ComplexClassicalFactor { max_imaginary: f64 },

    #[error("no exact-characteristics oracle for {0:?}")]
    OracleUnavailable(String),

    #[error("derivative scheme {scheme} requires a periodic grid")]
    IncompatibleBoundary { scheme: &'static str },

    #[error("eigendecomposition failed: {0}")]
    Eigendecomposition(String),

    #[error("generator is not linear (residual {residual:e})")]
    Nonlinear { residual: f64 },

    #[error("identity violated: {what} (residual {residual:e})")]
    IdentityViolation { what: &'static str, residual: f64 },

    #[error("zero-norm wavefunction")]
    ZeroNorm,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("operator of dimension {dim} exceeds the dense limit {limit}")]
    TooLarge { dim: usize, limit: usize },

    #[error(transparent)]
    Expr(#[from] ExprError),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}
