//! Complete thermodynamic functions and their derivatives.
//!
//! A [`Potential`] carries its value and, when known, analytic gradient and
//! Hessian. Missing derivatives fall back to central finite differences
//! ([`diff`]). Built-in models live in [`builtin`].

pub mod builtin;
pub mod diff;
pub mod response;

use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use crate::domain::Domain;
use crate::error::{Error, Result};
use crate::linalg::Matrix;

pub use builtin::{
    constant, ideal_gas_entropy, ideal_gas_helmholtz, ising_free_energy, make_builtin, quadratic,
    vdw_helmholtz, ModelId, ModelParams,
};
pub use diff::{DerivativeReport, DiffConfig};

pub type ValueFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
pub type GradientFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;
pub type HessianFn = Arc<dyn Fn(&[f64]) -> Matrix + Send + Sync>;

/// Advisory curvature label. Nothing in the crate branches on it; signatures
/// are always computed from the actual Hessian.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum ConvexityHint {
    Convex,
    Concave,
    Indefinite,
    Unknown,
}

/// A complete thermodynamic function `F : Ω → ℝ`.
///
/// Cloning is cheap and clones share the underlying closures, which is what
/// [`Potential::same_source`] checks.
#[derive(Clone)]
pub struct Potential {
    label: String,
    domain: Domain,
    value: ValueFn,
    gradient: Option<GradientFn>,
    hessian: Option<HessianFn>,
    convexity: ConvexityHint,
}

impl Potential {
    pub fn new<F>(label: impl Into<String>, domain: Domain, value: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        Self {
            label: label.into(),
            domain,
            value: Arc::new(value),
            gradient: None,
            hessian: None,
            convexity: ConvexityHint::Unknown,
        }
    }

    pub fn with_gradient<G>(mut self, gradient: G) -> Self
    where
        G: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        self.gradient = Some(Arc::new(gradient));
        self
    }

    pub fn with_hessian<H>(mut self, hessian: H) -> Self
    where
        H: Fn(&[f64]) -> Matrix + Send + Sync + 'static,
    {
        self.hessian = Some(Arc::new(hessian));
        self
    }

    pub fn with_convexity(mut self, hint: ConvexityHint) -> Self {
        self.convexity = hint;
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn convexity_hint(&self) -> ConvexityHint {
        self.convexity
    }

    pub fn has_analytic_gradient(&self) -> bool {
        self.gradient.is_some()
    }

    pub fn has_analytic_hessian(&self) -> bool {
        self.hessian.is_some()
    }

    /// True when both potentials were cloned from the same construction.
    pub fn same_source(&self, other: &Potential) -> bool {
        Arc::ptr_eq(&self.value, &other.value)
    }

    /// `F(x)`.
    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        self.domain.check(x)?;
        let v = (self.value)(x);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::DomainViolation { point: x.to_vec() })
        }
    }

    /// Value without the admissibility check; used inside stencils that have
    /// already been validated.
    pub(crate) fn eval_unchecked(&self, x: &[f64]) -> f64 {
        (self.value)(x)
    }

    /// `∇F(x)`, the conjugate variables `y_a = ∂F/∂x^a`.
    pub fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.domain.check(x)?;
        match &self.gradient {
            Some(g) => Ok(g(x)),
            None => self.fd_gradient(x, &DiffConfig::default()),
        }
    }

    pub(crate) fn analytic_gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        self.gradient.as_ref().map(|g| g(x))
    }

    /// Hessian of `F`, the response matrix `χ_ab = ∂²F/∂x^a∂x^b`. Always
    /// exactly symmetric.
    pub fn hessian(&self, x: &[f64]) -> Result<Matrix> {
        self.domain.check(x)?;
        match &self.hessian {
            Some(h) => {
                let mut m = h(x);
                if m.dim() != self.dim() {
                    return Err(Error::DimensionMismatch { expected: self.dim(), found: m.dim() });
                }
                m.symmetrize();
                Ok(m)
            }
            None => self.fd_hessian(x, &DiffConfig::default()),
        }
    }

    pub fn fd_gradient(&self, x: &[f64], cfg: &DiffConfig) -> Result<Vec<f64>> {
        diff::fd_gradient(self, x, cfg)
    }

    pub fn fd_hessian(&self, x: &[f64], cfg: &DiffConfig) -> Result<Matrix> {
        diff::fd_hessian(self, x, cfg)
    }

    pub fn validate_derivatives(&self, x: &[f64], tol: f64) -> Result<DerivativeReport> {
        diff::validate_derivatives(self, x, tol)
    }
}

impl fmt::Debug for Potential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Potential")
            .field("label", &self.label)
            .field("domain", &self.domain)
            .field("analytic_gradient", &self.gradient.is_some())
            .field("analytic_hessian", &self.hessian.is_some())
            .field("convexity", &self.convexity)
            .finish()
    }
}
