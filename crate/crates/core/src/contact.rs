//! Contact Hamiltonian flows for Hamiltonians `h(x, z)` that do not depend
//! on `y`.
//!
//! On `T*Q × ℝ` with contact form `λ = dz − Σ y_a dx^a` such a Hamiltonian
//! generates
//!
//! ```text
//! ẋ^a = 0,   ẏ_a = y_a ∂h/∂z + ∂h/∂x^a,   ż = h(x, z),
//! ```
//!
//! which is the lifted relaxation field once `Q = Ω` and `T*Q ≅ TΩ` share
//! coordinates. `h_F = F(x) − z` matches the single-set generator and
//! `h = −(z − F_I)(z − F_II)²` the two-set generator.

use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::domain::Domain;
use crate::error::{Error, Result};
use crate::immersion::GraphImmersion;
use crate::linalg::{dot, max_abs_diff, norm};
use crate::potentials::Potential;
use crate::relaxation::{
    integrate_fiber, kernel, GeneratorKind, IntegratorConfig, LiftedState, RelaxationGenerator, Trajectory,
};

type ScalarFn = Arc<dyn Fn(&[f64], f64) -> f64 + Send + Sync>;
type VectorFn = Arc<dyn Fn(&[f64], f64) -> Vec<f64> + Send + Sync>;

#[derive(Clone)]
pub enum ContactHamiltonian {
    /// `h(x, z) = F(x) − z`.
    FromF(Potential),
    /// `h(x, z) = −(z − F_I(x))(z − F_II(x))²`.
    FromPair {
        lower: Potential,
        upper: Potential,
    },
    Custom {
        label: String,
        domain: Domain,
        h: ScalarFn,
        dh_dx: VectorFn,
        dh_dz: ScalarFn,
    },
}

impl fmt::Debug for ContactHamiltonian {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ContactHamiltonian::FromF(p) => f.debug_tuple("FromF").field(p).finish(),
            ContactHamiltonian::FromPair { lower, upper } => {
                f.debug_struct("FromPair").field("lower", lower).field("upper", upper).finish()
            }
            ContactHamiltonian::Custom { label, domain, .. } => {
                f.debug_struct("Custom").field("label", label).field("domain", domain).finish()
            }
        }
    }
}

/// `(x, y, z)` on `T*Q × ℝ`.
#[derive(Debug, Clone, PartialEq)]
pub struct ContactState {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub z: f64,
}

/// `(ẋ, ẏ, ż)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ContactVelocity {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub z: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComparisonReport {
    /// Largest `|contact − lift|` over recorded samples and components.
    pub sup_norm_difference: f64,
    /// `sup_norm_difference / max(1, sup |state|)`.
    pub relative_difference: f64,
    pub steps: usize,
    pub dt: f64,
    /// Both sides wrap the very same potentials.
    pub same_source: bool,
    pub pass: bool,
}

/// Relative tolerance for the contact/lift comparison.
pub const EQUIVALENCE_TOL: f64 = 1e-12;

impl ContactHamiltonian {
    pub fn from_f(f: Potential) -> Self {
        ContactHamiltonian::FromF(f)
    }

    pub fn from_pair(lower: Potential, upper: Potential) -> Result<Self> {
        if lower.dim() != upper.dim() {
            return Err(Error::DimensionMismatch { expected: lower.dim(), found: upper.dim() });
        }
        Ok(ContactHamiltonian::FromPair { lower, upper })
    }

    pub fn dim(&self) -> usize {
        match self {
            ContactHamiltonian::FromF(f) => f.dim(),
            ContactHamiltonian::FromPair { lower, .. } => lower.dim(),
            ContactHamiltonian::Custom { domain, .. } => domain.dim(),
        }
    }

    fn check(&self, x: &[f64]) -> Result<()> {
        match self {
            ContactHamiltonian::FromF(f) => f.domain().check(x),
            ContactHamiltonian::FromPair { lower, upper } => {
                lower.domain().check(x)?;
                upper.domain().check(x)
            }
            ContactHamiltonian::Custom { domain, .. } => domain.check(x),
        }
    }

    /// `h(x, z)`.
    pub fn value(&self, x: &[f64], z: f64) -> Result<f64> {
        self.check(x)?;
        Ok(match self {
            ContactHamiltonian::FromF(f) => kernel::single_w(f.eval(x)?, z),
            ContactHamiltonian::FromPair { lower, upper } => {
                kernel::pair_w(lower.eval(x)?, upper.eval(x)?, z)
            }
            ContactHamiltonian::Custom { h, .. } => h(x, z),
        })
    }

    /// `(∂h/∂x, ∂h/∂z)`.
    pub fn partials(&self, x: &[f64], z: f64) -> Result<(Vec<f64>, f64)> {
        self.check(x)?;
        Ok(match self {
            ContactHamiltonian::FromF(f) => (f.gradient(x)?, -1.0),
            ContactHamiltonian::FromPair { lower, upper } => {
                let (a, b) = (lower.eval(x)?, upper.eval(x)?);
                let (ga, gb) = (lower.gradient(x)?, upper.gradient(x)?);
                (kernel::pair_dx(a, &ga, b, &gb, z), kernel::pair_dz(a, b, z))
            }
            ContactHamiltonian::Custom { dh_dx, dh_dz, .. } => (dh_dx(x, z), dh_dz(x, z)),
        })
    }

    /// Contact Hamiltonian vector field for `h = h(x, z)`.
    pub fn contact_field(&self, s: &ContactState) -> Result<ContactVelocity> {
        if s.y.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: s.y.len() });
        }
        let h = self.value(&s.x, s.z)?;
        let (dh_dx, dh_dz) = self.partials(&s.x, s.z)?;
        Ok(ContactVelocity { x: vec![0.0; s.x.len()], y: kernel::lifted_y(&s.y, dh_dz, &dh_dx), z: h })
    }

    /// RK4 flow. `x` is carried unchanged since `ẋ = 0`.
    pub fn integrate(&self, s0: &ContactState, cfg: &IntegratorConfig) -> Result<Trajectory> {
        self.check(&s0.x)?;
        if s0.y.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: s0.y.len() });
        }
        let x = s0.x.clone();
        let start = LiftedState::new(s0.x.clone(), s0.y.clone(), s0.z);
        integrate_fiber(
            &mut |y: &[f64], z: f64| {
                let v = self.contact_field(&ContactState { x: x.clone(), y: y.to_vec(), z })?;
                debug_assert!(v.x.iter().all(|d| *d == 0.0));
                Ok((v.y, v.z))
            },
            &start,
            cfg,
        )
    }

    fn matches(&self, gen: &RelaxationGenerator) -> Result<bool> {
        match (self, gen.kind()) {
            (ContactHamiltonian::FromF(f), GeneratorKind::Single(g)) => {
                if f.dim() != g.dim() {
                    return Err(Error::MismatchedConstruction("potentials differ in dimension".into()));
                }
                Ok(f.same_source(g))
            }
            (ContactHamiltonian::FromPair { lower, upper }, GeneratorKind::Two { lower: gl, upper: gu }) => {
                if lower.dim() != gl.dim() {
                    return Err(Error::MismatchedConstruction("potentials differ in dimension".into()));
                }
                Ok(lower.same_source(gl) && upper.same_source(gu))
            }
            _ => Err(Error::MismatchedConstruction(
                "contact Hamiltonian and relaxation generator are of different families".into(),
            )),
        }
    }
}

/// `max |contact_field − lifted_field|` at a single state.
pub fn field_difference(ch: &ContactHamiltonian, gen: &RelaxationGenerator, s: &ContactState) -> Result<f64> {
    ch.matches(gen)?;
    let c = ch.contact_field(s)?;
    let (dy, dz) = gen.lifted_field(&LiftedState::new(s.x.clone(), s.y.clone(), s.z))?;
    Ok(max_abs_diff(&c.y, &dy).max((c.z - dz).abs()).max(c.x.iter().fold(0.0, |m, v| m.max(v.abs()))))
}

/// Integrates the contact flow and the lifted relaxation field from the same
/// state with the same integrator and reports the largest difference.
///
/// Different families or dimensions are rejected. Same-family systems built
/// from different potentials are integrated and normally fail the check.
pub fn compare_with_lift(
    ch: &ContactHamiltonian,
    gen: &RelaxationGenerator,
    s0: &ContactState,
    cfg: &IntegratorConfig,
) -> Result<ComparisonReport> {
    let same_source = ch.matches(gen)?;
    let run_cfg = IntegratorConfig { stop_on_convergence: false, ..*cfg };
    let contact = ch.integrate(s0, &run_cfg)?;
    let lift = gen.integrate(&LiftedState::new(s0.x.clone(), s0.y.clone(), s0.z), &run_cfg)?;
    let mut sup = 0.0_f64;
    let mut scale = 1.0_f64;
    for (p, q) in contact.samples.iter().zip(&lift.samples) {
        sup = sup.max(max_abs_diff(&p.y, &q.y)).max((p.z - q.z).abs());
        scale = scale.max(p.y.iter().fold(p.z.abs(), |m, v| m.max(v.abs())));
    }
    let relative = sup / scale;
    Ok(ComparisonReport {
        sup_norm_difference: sup,
        relative_difference: relative,
        steps: contact.steps,
        dt: cfg.dt,
        same_source,
        pass: relative <= EQUIVALENCE_TOL,
    })
}

/// Pullback of `λ = dz − Σ y_a dx^a` to the equilibrium graph
/// `x ↦ (x, ∇F(x), F(x))`, discretised along a path: the largest
/// `|Δz − ȳ·Δx| / ‖Δx‖` over segments, with `ȳ = ∇F` at the midpoint.
pub fn legendrian_pullback_residual(g: &GraphImmersion, path: &[Vec<f64>]) -> Result<f64> {
    if path.len() < 2 {
        return Err(Error::DegeneratePath);
    }
    let p = g.potential();
    let mut worst = 0.0_f64;
    for seg in path.windows(2) {
        let (a, b) = (&seg[0], &seg[1]);
        let dx: Vec<f64> = b.iter().zip(a).map(|(bi, ai)| bi - ai).collect();
        let len = norm(&dx);
        if len == 0.0 {
            return Err(Error::DegeneratePath);
        }
        let mid: Vec<f64> = a.iter().zip(b).map(|(ai, bi)| 0.5 * (ai + bi)).collect();
        let dz = p.eval(b)? - p.eval(a)?;
        let y = p.gradient(&mid)?;
        worst = worst.max((dz - dot(&y, &dx)).abs() / len);
    }
    Ok(worst)
}

/// Straight path from `a` to `b` with `steps` segments.
pub fn straight_path(a: &[f64], b: &[f64], steps: usize) -> Vec<Vec<f64>> {
    (0..=steps)
        .map(|k| {
            let s = k as f64 / steps.max(1) as f64;
            a.iter().zip(b).map(|(ai, bi)| ai + s * (bi - ai)).collect()
        })
        .collect()
}
