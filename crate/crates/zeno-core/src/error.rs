//! Crate-wide error type.

use core::fmt;

/// Result alias used throughout the crate.
pub type Result<T> = core::result::Result<T, Error>;

/// Errors reported by the engine.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Matrix data length does not match the declared shape, or an operation
    /// received operands of incompatible dimensions.
    DimensionMismatch {
        expected: usize,
        got: usize,
    },
    /// A matrix or vector entry is NaN or infinite.
    NonFinite,
    /// Input matrix violates Hermitian symmetry beyond tolerance.
    NonHermitian {
        defect: f64,
    },
    /// The Jacobi sweep limit was reached before the off-diagonal norm
    /// dropped below threshold (does not occur for finite Hermitian input).
    NoConvergence,
    /// State vector norm exceeds 1 beyond tolerance.
    NotSubNormalized {
        norm_sqr: f64,
    },
    /// Continuum model with no modes.
    EmptyContinuum,
    /// Model invariant violated (negative Rabi coupling, index out of range,
    /// mismatched list lengths).
    InvalidModel(&'static str),
    /// Operation requires `<e|H|e> = 0`; the model has not been energy-shifted.
    NotShifted {
        h_ee: f64,
    },
    /// Protocol parameter out of domain (tau, nu, cycle or round counts).
    InvalidParams(&'static str),
    /// Post-selected branch has exactly zero survival probability; the
    /// protocol cannot continue on this branch.
    BranchAnnihilated,
    /// Explicit composite simulation refused: cycle count exceeds the guard.
    GuardExceeded {
        n_cycles: f64,
        guard: f64,
    },
    /// Requested cycle count is not representable (overflow guard in
    /// `choose_n`, or a zero prior giving no finite N).
    Overflow,
    /// Campaign record contains no surviving rounds; nothing to invert.
    NoSurvivors,
    /// Observed minus-fraction is exactly 1: the phase estimate sits on the
    /// pi/2 inversion boundary and only a one-sided interval exists.
    DegenerateInversion,
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::DimensionMismatch { expected, got } => {
                write!(f, "dimension mismatch: expected {expected}, got {got}")
            }
            Error::NonFinite => write!(f, "non-finite entry"),
            Error::NonHermitian { defect } => {
                write!(f, "matrix is not Hermitian (max |H_ij - conj(H_ji)| = {defect:e})")
            }
            Error::NoConvergence => write!(f, "eigensolver failed to converge"),
            Error::NotSubNormalized { norm_sqr } => {
                write!(f, "state norm^2 = {norm_sqr} exceeds 1")
            }
            Error::EmptyContinuum => write!(f, "continuum model has no modes"),
            Error::InvalidModel(what) => write!(f, "invalid model: {what}"),
            Error::NotShifted { h_ee } => {
                write!(f, "model is not energy-shifted (<e|H|e> = {h_ee:e})")
            }
            Error::InvalidParams(what) => write!(f, "invalid parameters: {what}"),
            Error::BranchAnnihilated => {
                write!(f, "post-selected branch has zero survival probability")
            }
            Error::GuardExceeded { n_cycles, guard } => {
                write!(f, "explicit simulation guard exceeded: N = {n_cycles:e} > {guard:e}")
            }
            Error::Overflow => write!(f, "cycle count overflow (no finite N)"),
            Error::NoSurvivors => write!(f, "no surviving rounds in record"),
            Error::DegenerateInversion => {
                write!(f, "minus-fraction is 1: N*phi estimate at the pi/2 boundary")
            }
        }
    }
}

impl core::error::Error for Error {}
