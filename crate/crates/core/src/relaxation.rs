//! Relaxation-generating dynamics on the fiber over a frozen base point.
//!
//! A generator is a scalar field `ż = w(z; x)` on the `z` axis above each
//! `x ∈ Ω`. Two families are first class:
//!
//! * single equilibrium set: `w(z; x) = F(x) − z`, which relaxes `z` to
//!   `F(x)` exponentially;
//! * two equilibrium sets: `w(z; x) = −(z − F_I(x))(z − F_II(x))²` on
//!   `Ω₀ = {F_I < F_II}`, which connects the metastable branch `F_II`
//!   (as `t → −∞`) to the stable branch `F_I` (as `t → ∞`).
//!
//! The lift to `(y, z)` is `ẏ_a = y_a ∂w/∂z + ∂w/∂x^a`, `ż = w`; along it
//! `y` tracks `∂z/∂x`, so fixed points of the lift sit on the graph of `∇F`.

use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::domain::Domain;
use crate::error::{Error, Result};
use crate::linalg::{max_abs_diff, norm};
use crate::ode::rk4_step;
use crate::potentials::diff::axis_step_in;
use crate::potentials::{DiffConfig, Potential};

/// Shared closed forms of `w` and its partials. The contact module calls the
/// same kernels so that `h = w` holds to the last bit.
pub(crate) mod kernel {
    use alloc::vec::Vec;

    pub fn single_w(f: f64, z: f64) -> f64 {
        f - z
    }

    pub fn pair_w(lower: f64, upper: f64, z: f64) -> f64 {
        let du = z - upper;
        -(z - lower) * du * du
    }

    pub fn pair_dz(lower: f64, upper: f64, z: f64) -> f64 {
        let du = z - upper;
        -(du * du) - 2.0 * (z - lower) * du
    }

    pub fn pair_dx(lower: f64, grad_lower: &[f64], upper: f64, grad_upper: &[f64], z: f64) -> Vec<f64> {
        let du = z - upper;
        let dl = z - lower;
        grad_lower.iter().zip(grad_upper).map(|(gl, gu)| gl * du * du + 2.0 * dl * du * gu).collect()
    }

    /// `ẏ_a = y_a ∂w/∂z + ∂w/∂x^a`.
    pub fn lifted_y(y: &[f64], dw_dz: f64, dw_dx: &[f64]) -> Vec<f64> {
        y.iter().zip(dw_dx).map(|(ya, wx)| ya * dw_dz + wx).collect()
    }
}

type ScalarFn = Arc<dyn Fn(f64, &[f64]) -> f64 + Send + Sync>;
type VectorFn = Arc<dyn Fn(f64, &[f64]) -> Vec<f64> + Send + Sync>;
type FamilyValue = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type FamilyGradient = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;
/// Right-hand side on the `(y, z)` fiber: `(ẏ, ż)` from `(y, z)`.
pub(crate) type FiberField<'a> = dyn FnMut(&[f64], f64) -> Result<(Vec<f64>, f64)> + 'a;
type FlatRhs<'a> = dyn FnMut(&[f64], &mut [f64]) -> Result<()> + 'a;

/// User-supplied `w(z; x)` with its partials.
#[derive(Clone)]
pub struct CustomField {
    pub label: String,
    pub domain: Domain,
    pub w: ScalarFn,
    pub dw_dz: ScalarFn,
    pub dw_dx: VectorFn,
}

impl fmt::Debug for CustomField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomField").field("label", &self.label).field("domain", &self.domain).finish()
    }
}

#[derive(Debug, Clone)]
pub enum GeneratorKind {
    Single(Potential),
    Two { lower: Potential, upper: Potential },
    Custom(CustomField),
}

#[derive(Debug, Clone)]
pub struct RelaxationGenerator {
    kind: GeneratorKind,
}

/// Point `(x, y, z)` of the lifted space at time `t`; `x` never changes.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftedState {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub z: f64,
    pub t: f64,
}

impl LiftedState {
    pub fn new(x: Vec<f64>, y: Vec<f64>, z: f64) -> Self {
        Self { x, y, z, t: 0.0 }
    }
}

/// Fixed-step RK4 settings. A negative `t_end` integrates backward in time.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct IntegratorConfig {
    pub dt: f64,
    pub t_end: f64,
    #[cfg_attr(feature = "serde", serde(default = "default_record_every"))]
    pub record_every: usize,
    /// Stop as soon as the lifted field is below the convergence residual.
    #[cfg_attr(feature = "serde", serde(default = "default_stop"))]
    pub stop_on_convergence: bool,
}

#[cfg(feature = "serde")]
fn default_record_every() -> usize {
    1
}

#[cfg(feature = "serde")]
fn default_stop() -> bool {
    true
}

impl IntegratorConfig {
    pub fn new(dt: f64, t_end: f64) -> Self {
        Self { dt, t_end, record_every: 1, stop_on_convergence: true }
    }

    pub fn record_every(mut self, every: usize) -> Self {
        self.record_every = every;
        self
    }

    pub fn run_to_end(mut self) -> Self {
        self.stop_on_convergence = false;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::InvalidConfig("dt must be positive and finite".into()));
        }
        if !self.t_end.is_finite() || self.t_end == 0.0 {
            return Err(Error::InvalidConfig("t_end must be finite and non-zero".into()));
        }
        if self.record_every == 0 {
            return Err(Error::InvalidConfig("record_every must be at least 1".into()));
        }
        Ok(())
    }

    /// Number of steps needed to reach `|t_end|`; the last one may be short.
    pub fn steps(&self) -> usize {
        let ratio = self.t_end.abs() / self.dt;
        let rounded = libm::round(ratio);
        if (ratio - rounded).abs() <= 1e-9 * ratio.max(1.0) {
            rounded as usize
        } else {
            libm::ceil(ratio) as usize
        }
    }
}

/// Convergence threshold: `‖(ẏ, ż)‖ ≤ 1e−12 · (1 + ‖(y, z)‖)`.
pub const CONVERGENCE_RTOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub samples: Vec<LiftedState>,
    /// `(y*, z*)` when the convergence residual was reached.
    pub converged_to: Option<(Vec<f64>, f64)>,
    /// `‖(ẏ, ż)‖ / (1 + ‖(y, z)‖)` at the last state.
    pub convergence_residual: f64,
    pub steps: usize,
}

impl Trajectory {
    pub fn last(&self) -> &LiftedState {
        self.samples.last().expect("trajectory always holds the initial state")
    }

    /// Sample recorded closest to time `t`.
    pub fn sample_near(&self, t: f64) -> Option<&LiftedState> {
        self.samples.iter().min_by(|a, b| (a.t - t).abs().total_cmp(&(b.t - t).abs()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stability {
    Stable,
    Unstable,
    /// `∂w/∂z = 0`; at `F_II` of the two-set family this is the semi-stable
    /// metastable branch.
    NonHyperbolic,
}

/// How `y*` of a fixed point was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FixedPointRule {
    /// `∂w/∂z = −1`, so `y*_a = ∂w/∂x^a`.
    Lemma,
    /// `y*_a = −(∂w/∂x^a) / (∂w/∂z)`.
    Linear,
    /// `∂w/∂z = 0`; `y*` is not fixed by the linear equation.
    Undetermined,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FixedPoint {
    pub z: f64,
    pub dw_dz: f64,
    pub y: Option<Vec<f64>>,
    pub rule: FixedPointRule,
    pub stability: Stability,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompressibilityReport {
    /// `∂w/∂z`, divergence of the base field w.r.t. `dz`.
    pub div_base: f64,
    /// `(n + 1) ∂w/∂z`, divergence of the lift w.r.t. `dy₁∧…∧dyₙ∧dz`.
    pub div_lifted: f64,
    pub contracting: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Sign {
    Negative,
    Zero,
    Positive,
}

impl Sign {
    pub fn of(v: f64, tol: f64) -> Self {
        if v.abs() <= tol {
            Sign::Zero
        } else if v > 0.0 {
            Sign::Positive
        } else {
            Sign::Negative
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Sign::Negative => '-',
            Sign::Zero => '0',
            Sign::Positive => '+',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignRow {
    pub z: f64,
    pub w: f64,
    pub div: f64,
    pub sign_w: Sign,
    pub sign_div: Sign,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LyapunovReport {
    /// Largest increase of the applicable Lyapunov function between
    /// consecutive samples (in increasing time), `0` if it never increases.
    pub max_increment: f64,
    pub pairs_checked: usize,
    /// Consecutive samples in different regions (not compared).
    pub region_changes: usize,
    pub pass: bool,
}

/// Maximum Lyapunov increment tolerated as integrator noise.
pub const LYAPUNOV_TOL: f64 = 1e-10;

/// Differentiable initial family `z(0; x)` seeding the induced process.
#[derive(Clone)]
pub struct InitialFamily {
    value: FamilyValue,
    gradient: FamilyGradient,
}

impl InitialFamily {
    pub fn constant(c: f64) -> Self {
        Self { value: Arc::new(move |_| c), gradient: Arc::new(|x| vec![0.0; x.len()]) }
    }

    pub fn new<V, G>(value: V, gradient: G) -> Self
    where
        V: Fn(&[f64]) -> f64 + Send + Sync + 'static,
        G: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        Self { value: Arc::new(value), gradient: Arc::new(gradient) }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        (self.value)(x)
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        (self.gradient)(x)
    }
}

impl fmt::Debug for InitialFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("InitialFamily")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InducedConjugates {
    /// `∂z(t; ·)/∂x` by central differences over separately integrated fibers.
    pub y_fd: Vec<f64>,
    /// `y(t)` from the lifted ODE seeded with `∂z(0; ·)/∂x`.
    pub y_ode: Vec<f64>,
    pub z: f64,
    /// `‖y_fd − y_ode‖`.
    pub residual: f64,
}

impl RelaxationGenerator {
    /// `w(z; x) = F(x) − z`.
    pub fn single(f: Potential) -> Self {
        Self { kind: GeneratorKind::Single(f) }
    }

    /// `w(z; x) = −(z − F_I(x))(z − F_II(x))²`.
    pub fn two(lower: Potential, upper: Potential) -> Result<Self> {
        if lower.dim() != upper.dim() {
            return Err(Error::DimensionMismatch { expected: lower.dim(), found: upper.dim() });
        }
        Ok(Self { kind: GeneratorKind::Two { lower, upper } })
    }

    pub fn custom(field: CustomField) -> Self {
        Self { kind: GeneratorKind::Custom(field) }
    }

    /// The unanalysed variant `w = (z − F_I)(z − F_II)`, as a custom field.
    pub fn product_variant(lower: Potential, upper: Potential) -> Result<Self> {
        if lower.dim() != upper.dim() {
            return Err(Error::DimensionMismatch { expected: lower.dim(), found: upper.dim() });
        }
        let domain = lower.domain().clone();
        let (l1, u1, l2, u2, l3, u3) =
            (lower.clone(), upper.clone(), lower.clone(), upper.clone(), lower, upper);
        Ok(Self::custom(CustomField {
            label: String::from("(z - F_I)(z - F_II)"),
            domain,
            w: Arc::new(move |z, x| {
                (z - l1.eval(x).unwrap_or(f64::NAN)) * (z - u1.eval(x).unwrap_or(f64::NAN))
            }),
            dw_dz: Arc::new(move |z, x| {
                (z - l2.eval(x).unwrap_or(f64::NAN)) + (z - u2.eval(x).unwrap_or(f64::NAN))
            }),
            dw_dx: Arc::new(move |z, x| {
                let (a, b) = (l3.eval(x).unwrap_or(f64::NAN), u3.eval(x).unwrap_or(f64::NAN));
                let ga = l3.gradient(x).unwrap_or_else(|_| vec![f64::NAN; x.len()]);
                let gb = u3.gradient(x).unwrap_or_else(|_| vec![f64::NAN; x.len()]);
                ga.iter().zip(&gb).map(|(gl, gu)| -gl * (z - b) - (z - a) * gu).collect()
            }),
        }))
    }

    pub fn kind(&self) -> &GeneratorKind {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        match &self.kind {
            GeneratorKind::Single(f) => f.dim(),
            GeneratorKind::Two { lower, .. } => lower.dim(),
            GeneratorKind::Custom(c) => c.domain.dim(),
        }
    }

    /// Checks that `x` is in the domain, and in `Ω₀` for the two-set family.
    pub fn check_base(&self, x: &[f64]) -> Result<()> {
        match &self.kind {
            GeneratorKind::Single(f) => f.domain().check(x),
            GeneratorKind::Custom(c) => c.domain.check(x),
            GeneratorKind::Two { lower, upper } => {
                let a = lower.eval(x)?;
                let b = upper.eval(x)?;
                if a < b {
                    Ok(())
                } else {
                    Err(Error::OmegaZeroViolation { point: x.to_vec(), lower: a, upper: b })
                }
            }
        }
    }

    fn base_admissible(&self, x: &[f64]) -> bool {
        self.check_base(x).is_ok()
    }

    /// The equilibrium branches at `x`: `[F(x)]` or `[F_I(x), F_II(x)]`.
    pub fn branches(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_base(x)?;
        match &self.kind {
            GeneratorKind::Single(f) => Ok(vec![f.eval(x)?]),
            GeneratorKind::Two { lower, upper } => Ok(vec![lower.eval(x)?, upper.eval(x)?]),
            GeneratorKind::Custom(_) => Ok(Vec::new()),
        }
    }

    /// `w(z; x)`.
    pub fn w_eval(&self, z: f64, x: &[f64]) -> Result<f64> {
        self.check_base(x)?;
        Ok(match &self.kind {
            GeneratorKind::Single(f) => kernel::single_w(f.eval(x)?, z),
            GeneratorKind::Two { lower, upper } => kernel::pair_w(lower.eval(x)?, upper.eval(x)?, z),
            GeneratorKind::Custom(c) => (c.w)(z, x),
        })
    }

    /// `(∂w/∂z, ∂w/∂x)`.
    pub fn w_partials(&self, z: f64, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        self.check_base(x)?;
        Ok(match &self.kind {
            GeneratorKind::Single(f) => (-1.0, f.gradient(x)?),
            GeneratorKind::Two { lower, upper } => {
                let (a, b) = (lower.eval(x)?, upper.eval(x)?);
                let (ga, gb) = (lower.gradient(x)?, upper.gradient(x)?);
                (kernel::pair_dz(a, b, z), kernel::pair_dx(a, &ga, b, &gb, z))
            }
            GeneratorKind::Custom(c) => ((c.dw_dz)(z, x), (c.dw_dx)(z, x)),
        })
    }

    /// `(ẏ, ż)` of the lifted field.
    pub fn lifted_field(&self, s: &LiftedState) -> Result<(Vec<f64>, f64)> {
        if s.y.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: s.y.len() });
        }
        let w = self.w_eval(s.z, &s.x)?;
        let (dw_dz, dw_dx) = self.w_partials(s.z, &s.x)?;
        Ok((kernel::lifted_y(&s.y, dw_dz, &dw_dx), w))
    }

    /// Integrates the lifted system with fixed-step RK4.
    pub fn integrate(&self, s0: &LiftedState, cfg: &IntegratorConfig) -> Result<Trajectory> {
        self.check_base(&s0.x)?;
        if s0.y.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: s0.y.len() });
        }
        let x = s0.x.clone();
        integrate_fiber(
            &mut |y: &[f64], z: f64| {
                self.lifted_field(&LiftedState { x: x.clone(), y: y.to_vec(), z, t: 0.0 })
            },
            s0,
            cfg,
        )
    }

    /// Forward run of the two-set family that is meant to reach `F_I`;
    /// rejects initial values at or above `F_II(x)`.
    pub fn integrate_to_stable(&self, s0: &LiftedState, cfg: &IntegratorConfig) -> Result<Trajectory> {
        if let GeneratorKind::Two { upper, .. } = &self.kind {
            let b = upper.eval(&s0.x)?;
            if !(s0.z < b) {
                return Err(Error::InvalidConfig(alloc::format!(
                    "relaxation to F_I needs z(0) < F_II(x) = {b}, got {}",
                    s0.z
                )));
            }
        }
        if cfg.t_end < 0.0 {
            return Err(Error::InvalidConfig("relaxation to F_I runs forward in time".into()));
        }
        self.integrate(s0, cfg)
    }

    /// Fixed points of the lift above `x`.
    ///
    /// Roots of `w(·; x)` are analytic for the single and two-set families;
    /// custom fields need `bracket`, which is scanned for sign changes.
    pub fn fixed_points(&self, x: &[f64], bracket: Option<(f64, f64)>) -> Result<Vec<FixedPoint>> {
        self.check_base(x)?;
        let roots = match &self.kind {
            GeneratorKind::Single(_) | GeneratorKind::Two { .. } => self.branches(x)?,
            GeneratorKind::Custom(_) => {
                let (lo, hi) = bracket
                    .ok_or_else(|| Error::InvalidConfig("custom generators need a root bracket".into()))?;
                let w = |z: f64| self.w_eval(z, x);
                scan_roots(&w, lo, hi, 1000)?
            }
        };
        roots
            .into_iter()
            .map(|z| {
                let (dw_dz, dw_dx) = self.w_partials(z, x)?;
                let scale = z.abs().max(1.0);
                let (y, rule) = if dw_dz == -1.0 {
                    (Some(dw_dx), FixedPointRule::Lemma)
                } else if dw_dz.abs() > 1e-12 * scale {
                    (Some(dw_dx.iter().map(|v| -v / dw_dz).collect()), FixedPointRule::Linear)
                } else {
                    (None, FixedPointRule::Undetermined)
                };
                let stability = match Sign::of(dw_dz, 1e-12 * scale) {
                    Sign::Negative => Stability::Stable,
                    Sign::Positive => Stability::Unstable,
                    Sign::Zero => Stability::NonHyperbolic,
                };
                Ok(FixedPoint { z, dw_dz, y, rule, stability })
            })
            .collect()
    }

    pub fn compressibility(&self, x: &[f64], z: f64) -> Result<CompressibilityReport> {
        let (div_base, _) = self.w_partials(z, x)?;
        let div_lifted = (self.dim() + 1) as f64 * div_base;
        Ok(CompressibilityReport { div_base, div_lifted, contracting: div_base < 0.0 })
    }

    /// Signs of `w` and `∂w/∂z` at each sample. Values within `64 ε` of the
    /// natural magnitude (`s³` for `w`, `s²` for the divergence, where `s`
    /// is the sum of `|z|` and the branch magnitudes) count as zero.
    pub fn sign_table(&self, x: &[f64], z_samples: &[f64]) -> Result<Vec<SignRow>> {
        let branches = self.branches(x)?;
        let base: f64 = branches.iter().map(|b| b.abs()).sum();
        z_samples
            .iter()
            .map(|&z| {
                let w = self.w_eval(z, x)?;
                let (div, _) = self.w_partials(z, x)?;
                let s = (z.abs() + base).max(1.0);
                let (tol_w, tol_div) = match self.kind {
                    GeneratorKind::Single(_) => (64.0 * f64::EPSILON * s, 0.0),
                    _ => (64.0 * f64::EPSILON * s * s * s, 64.0 * f64::EPSILON * s * s),
                };
                Ok(SignRow { z, w, div, sign_w: Sign::of(w, tol_w), sign_div: Sign::of(div, tol_div) })
            })
            .collect()
    }

    /// Lyapunov monotonicity along a trajectory of the two-set family:
    /// `V_I = ½(z − F_I)²` on `z < F_II` and `V_II = z − F_II` on `z ≥ F_II`
    /// must not increase with time.
    pub fn lyapunov_check(&self, x: &[f64], traj: &Trajectory) -> Result<LyapunovReport> {
        let (a, b) = match &self.kind {
            GeneratorKind::Two { lower, upper } => {
                self.check_base(x)?;
                (lower.eval(x)?, upper.eval(x)?)
            }
            _ => return Err(Error::InvalidConfig("Lyapunov check applies to the two-set family".into())),
        };
        let mut ordered: Vec<&LiftedState> = traj.samples.iter().collect();
        ordered.sort_by(|p, q| p.t.total_cmp(&q.t));
        let region = |z: f64| z >= b;
        let v = |z: f64| if region(z) { z - b } else { 0.5 * (z - a) * (z - a) };
        let mut report =
            LyapunovReport { max_increment: 0.0, pairs_checked: 0, region_changes: 0, pass: true };
        for pair in ordered.windows(2) {
            let (z0, z1) = (pair[0].z, pair[1].z);
            if region(z0) != region(z1) {
                report.region_changes += 1;
                continue;
            }
            report.pairs_checked += 1;
            report.max_increment = report.max_increment.max(v(z1) - v(z0));
        }
        report.pass = report.max_increment <= LYAPUNOV_TOL;
        Ok(report)
    }

    /// Witness that the lift computes the `x`-derivative of the induced
    /// family `F_t(x) = z(t; x)`.
    ///
    /// `z(t; ·)` is integrated on a central-difference stencil around `x`
    /// from `z(0; ·) = family`, and compared with `y(t)` of the lifted ODE
    /// started at `y(0) = ∇family(x)`. Both use `dt` and run to exactly `t`.
    pub fn induced_conjugates(
        &self,
        x: &[f64],
        t: f64,
        family: &InitialFamily,
        dt: f64,
        fd: &DiffConfig,
    ) -> Result<InducedConjugates> {
        fd.validate()?;
        self.check_base(x)?;
        let n = self.dim();
        let z_at = |xq: &[f64]| -> Result<(Vec<f64>, f64)> {
            let s0 = LiftedState::new(xq.to_vec(), family.gradient(xq), family.value(xq));
            if t == 0.0 {
                return Ok((s0.y, s0.z));
            }
            let cfg = IntegratorConfig { dt, t_end: t, record_every: usize::MAX, stop_on_convergence: false };
            let traj = self.integrate(&s0, &cfg)?;
            let last = traj.last();
            Ok((last.y.clone(), last.z))
        };
        let (y_ode, z) = z_at(x)?;
        let admissible = |q: &[f64]| self.base_admissible(q);
        let mut y_fd = Vec::with_capacity(n);
        for a in 0..n {
            let h = axis_step_in(&admissible, x, a, fd.step_rel, fd)?;
            let mut xp = x.to_vec();
            xp[a] += h;
            let mut xm = x.to_vec();
            xm[a] -= h;
            let (_, zp) = z_at(&xp)?;
            let (_, zm) = z_at(&xm)?;
            y_fd.push((zp - zm) / (2.0 * h));
        }
        let diff: Vec<f64> = y_fd.iter().zip(&y_ode).map(|(p, q)| p - q).collect();
        Ok(InducedConjugates { residual: norm(&diff), y_fd, y_ode, z })
    }
}

/// Exact solution of `ż = F(x) − z`:
/// `z(t) = (1 − e^{−t}) F(x) + e^{−t} z(0)`.
pub fn closed_form_single(f: &Potential, x: &[f64], z0: f64, t: f64) -> Result<f64> {
    let fx = f.eval(x)?;
    Ok(-libm::expm1(-t) * fx + libm::exp(-t) * z0)
}

/// Exact lifted `y` of the single family: `y(t) = (1 − e^{−t}) ∇F + e^{−t} y(0)`.
pub fn closed_form_single_y(f: &Potential, x: &[f64], y0: &[f64], t: f64) -> Result<Vec<f64>> {
    let g = f.gradient(x)?;
    let (a, b) = (-libm::expm1(-t), libm::exp(-t));
    Ok(g.iter().zip(y0).map(|(gi, yi)| a * gi + b * yi).collect())
}

/// Shared RK4 driver for a field on the `(y, z)` fiber.
pub(crate) fn integrate_fiber(
    field: &mut FiberField<'_>,
    s0: &LiftedState,
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    cfg.validate()?;
    let n = s0.y.len();
    let direction = if cfg.t_end < 0.0 { -1.0 } else { 1.0 };
    let total = cfg.t_end.abs();
    let steps = cfg.steps();

    let mut rhs = |state: &[f64], out: &mut [f64]| -> Result<()> {
        let (dy, dz) = field(&state[..n], state[n])?;
        out[..n].copy_from_slice(&dy);
        out[n] = dz;
        Ok(())
    };
    let residual_of = |state: &[f64], rhs: &mut FlatRhs<'_>| -> Result<f64> {
        let mut d = vec![0.0; n + 1];
        rhs(state, &mut d)?;
        Ok(norm(&d) / (1.0 + norm(state)))
    };

    let mut state: Vec<f64> = s0.y.iter().copied().chain(core::iter::once(s0.z)).collect();
    if state.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite { t: s0.t });
    }
    let record =
        |state: &[f64], t: f64| LiftedState { x: s0.x.clone(), y: state[..n].to_vec(), z: state[n], t };
    let mut samples = vec![record(&state, s0.t)];
    let mut residual = residual_of(&state, &mut rhs)?;
    let mut converged = residual <= CONVERGENCE_RTOL;
    let mut taken = 0;
    let mut elapsed = 0.0;

    if !(converged && cfg.stop_on_convergence) {
        for k in 1..=steps {
            let next_elapsed = if k == steps { total } else { (k as f64 * cfg.dt).min(total) };
            let h = next_elapsed - elapsed;
            state = rk4_step(&mut rhs, &state, direction * h)?;
            elapsed = next_elapsed;
            taken = k;
            let t = s0.t + direction * elapsed;
            if state.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite { t });
            }
            residual = residual_of(&state, &mut rhs)?;
            converged = residual <= CONVERGENCE_RTOL;
            let stop = converged && cfg.stop_on_convergence;
            if k % cfg.record_every == 0 || k == steps || stop {
                samples.push(record(&state, t));
            }
            if stop {
                break;
            }
        }
    }
    let converged_to = converged.then(|| (state[..n].to_vec(), state[n]));
    Ok(Trajectory { samples, converged_to, convergence_residual: residual, steps: taken })
}

/// Roots of a scalar function on `[lo, hi]` from a uniform sign scan
/// followed by bisection.
fn scan_roots(f: &dyn Fn(f64) -> Result<f64>, lo: f64, hi: f64, cells: usize) -> Result<Vec<f64>> {
    if !(lo < hi) {
        return Err(Error::InvalidConfig("root bracket needs lo < hi".into()));
    }
    let grid: Vec<f64> = (0..=cells).map(|k| lo + (hi - lo) * k as f64 / cells as f64).collect();
    let vals: Vec<f64> = grid.iter().map(|&z| f(z)).collect::<Result<_>>()?;
    let mut roots = Vec::new();
    for k in 0..=cells {
        if vals[k] == 0.0 {
            roots.push(grid[k]);
        }
        if k < cells && vals[k] * vals[k + 1] < 0.0 {
            let (mut a, mut b, mut fa) = (grid[k], grid[k + 1], vals[k]);
            while b - a > 4.0 * f64::EPSILON * a.abs().max(b.abs()).max(1.0) {
                let m = 0.5 * (a + b);
                let fm = f(m)?;
                if fm == 0.0 {
                    a = m;
                    b = m;
                    break;
                }
                if (fm < 0.0) == (fa < 0.0) {
                    a = m;
                    fa = fm;
                } else {
                    b = m;
                }
            }
            roots.push(0.5 * (a + b));
        }
    }
    if roots.is_empty() {
        Err(Error::NoRootInBracket { lo, hi })
    } else {
        Ok(roots)
    }
}

/// `max |a − b|` between the `(y, z)` parts of two equally sampled trajectories.
pub fn trajectory_distance(a: &Trajectory, b: &Trajectory) -> Option<f64> {
    if a.samples.len() != b.samples.len() {
        return None;
    }
    Some(
        a.samples
            .iter()
            .zip(&b.samples)
            .fold(0.0_f64, |m, (p, q)| m.max(max_abs_diff(&p.y, &q.y)).max((p.z - q.z).abs())),
    )
}
