//! Crate-wide error type.

use alloc::string::String;
use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

/// Failures surfaced by validation and by the numerical solvers.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A generator matrix has a negative off-diagonal rate.
    NegativeOffDiagonal { row: usize, col: usize, value: f64 },
    /// A generator matrix row does not sum to zero within tolerance.
    RowSumNonzero { row: usize, sum: f64 },
    /// A parameter violates a model invariant; the message names it.
    InvalidParam(String),
    /// Bernoulli jump thinning was requested with `theta * dt > 1`.
    StepTooCoarse { theta_dt: f64 },
    /// The finite-difference grid violates the monotonicity (sign) condition
    /// of the tridiagonal system even after one automatic refinement.
    GridTooCoarse { detail: String },
    /// Root bracketing failed; signals a violated standing assumption.
    BracketFailure { detail: String },
    /// A query point lies outside a solution grid (no extrapolation).
    DomainError { what: &'static str, value: f64, lo: f64, hi: f64 },
    /// The ODE integrator could not reach the local error tolerance.
    StepRejected { worst: f64, tol: f64 },
    /// A solver detected a non-positive value that positivity arguments rule out.
    PositivityLost { what: &'static str, t: f64, value: f64 },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::NegativeOffDiagonal { row, col, value } => {
                write!(f, "generator entry ({row},{col}) = {value} is negative off the diagonal")
            }
            Error::RowSumNonzero { row, sum } => {
                write!(f, "generator row {row} sums to {sum}, expected 0")
            }
            Error::InvalidParam(msg) => write!(f, "invalid parameter: {msg}"),
            Error::StepTooCoarse { theta_dt } => {
                write!(f, "Bernoulli jump thinning needs theta*dt <= 1, got {theta_dt}")
            }
            Error::GridTooCoarse { detail } => write!(f, "grid too coarse: {detail}"),
            Error::BracketFailure { detail } => write!(f, "root bracketing failed: {detail}"),
            Error::DomainError { what, value, lo, hi } => {
                write!(f, "{what} = {value} outside grid [{lo}, {hi}]")
            }
            Error::StepRejected { worst, tol } => {
                write!(f, "ODE local error estimate {worst} exceeds tolerance {tol}")
            }
            Error::PositivityLost { what, t, value } => {
                write!(f, "{what} lost positivity at t = {t}: {value}")
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for Error {}
