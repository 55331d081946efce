use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Failure modes shared by every module of the crate.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Point outside `lower < x < upper` or failing the domain guard.
    DomainViolation { point: Vec<f64> },
    /// Point and potential (or state and generator) disagree on dimension.
    DimensionMismatch { expected: usize, found: usize },
    /// A finite-difference stencil left the domain even at the minimum step.
    StencilFailure { point: Vec<f64>, component: usize },
    /// Model id not recognised or parameters missing/invalid.
    InvalidModel(String),
    /// Invalid solver/integrator/difference configuration.
    InvalidConfig(String),
    /// Newton iteration did not reach the gradient tolerance.
    NonConvergence { iterations: usize, residual: f64 },
    /// Hessian is not definite where the Legendre map needs it to be.
    IndefiniteHessian { point: Vec<f64> },
    /// Iterates could not be kept inside the domain by step halving.
    DomainExit { point: Vec<f64> },
    /// Two-equilibrium generator queried where `F_I(x) < F_II(x)` fails.
    OmegaZeroViolation { point: Vec<f64>, lower: f64, upper: f64 },
    /// Root search found no sign change in the bracket.
    NoRootInBracket { lo: f64, hi: f64 },
    /// Integration produced NaN or infinity.
    NonFinite { t: f64 },
    /// A path has fewer than two points or repeats a point.
    DegeneratePath,
    /// Two objects that must be built from the same data are not.
    MismatchedConstruction(String),
}

impl Error {
    /// Coarse category, used by front ends to pick exit codes.
    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::InvalidModel(_)
            | Error::InvalidConfig(_)
            | Error::DimensionMismatch { .. }
            | Error::MismatchedConstruction(_) => ErrorCategory::Validation,
            Error::DomainViolation { .. }
            | Error::StencilFailure { .. }
            | Error::DomainExit { .. }
            | Error::OmegaZeroViolation { .. }
            | Error::DegeneratePath => ErrorCategory::Domain,
            Error::NonConvergence { .. }
            | Error::IndefiniteHessian { .. }
            | Error::NoRootInBracket { .. }
            | Error::NonFinite { .. } => ErrorCategory::Numeric,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    Validation,
    Domain,
    Numeric,
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::DomainViolation { point } => write!(f, "point {point:?} is outside the domain"),
            Error::DimensionMismatch { expected, found } => {
                write!(f, "dimension mismatch: expected {expected}, found {found}")
            }
            Error::StencilFailure { point, component } => write!(
                f,
                "finite-difference stencil at {point:?} leaves the domain along component {component}"
            ),
            Error::InvalidModel(msg) => write!(f, "invalid model: {msg}"),
            Error::InvalidConfig(msg) => write!(f, "invalid configuration: {msg}"),
            Error::NonConvergence { iterations, residual } => {
                write!(f, "no convergence after {iterations} iterations (residual {residual:e})")
            }
            Error::IndefiniteHessian { point } => write!(f, "hessian is not definite at {point:?}"),
            Error::DomainExit { point } => {
                write!(f, "iterate could not be kept inside the domain near {point:?}")
            }
            Error::OmegaZeroViolation { point, lower, upper } => {
                write!(f, "F_I(x) < F_II(x) fails at {point:?} (F_I = {lower}, F_II = {upper})")
            }
            Error::NoRootInBracket { lo, hi } => write!(f, "no root in [{lo}, {hi}]"),
            Error::NonFinite { t } => write!(f, "state became non-finite at t = {t}"),
            Error::DegeneratePath => f.write_str("path needs at least two distinct consecutive points"),
            Error::MismatchedConstruction(msg) => write!(f, "mismatched construction: {msg}"),
        }
    }
}

impl core::error::Error for Error {}
