//! Central finite differences with automatic step shrinking near the domain
//! boundary.

use alloc::vec::Vec;

use super::Potential;
use crate::error::{Error, Result};
use crate::linalg::Matrix;

const MAX_SHRINKS: usize = 20;

/// Step control for central differences.
///
/// The step along component `i` is `step_rel · max(|x_i|, 1)`, floored at
/// `step_abs`. Value-based second differences use `hess_step_rel` instead,
/// since their roundoff grows like `ε/h²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiffConfig {
    pub step_rel: f64,
    pub hess_step_rel: f64,
    pub step_abs: f64,
}

impl Default for DiffConfig {
    fn default() -> Self {
        Self { step_rel: 1e-5, hess_step_rel: 1e-4, step_abs: 1e-8 }
    }
}

impl DiffConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        if ok(self.step_rel) && ok(self.hess_step_rel) && ok(self.step_abs) {
            Ok(())
        } else {
            Err(Error::InvalidConfig("finite-difference steps must be positive".into()))
        }
    }

    fn initial_step(&self, rel: f64, xi: f64) -> f64 {
        (rel * xi.abs().max(1.0)).max(self.step_abs)
    }
}

/// Halve `h` until every stencil point built by `points(h)` is admissible.
pub(crate) fn admissible_step<P>(
    admissible: &dyn Fn(&[f64]) -> bool,
    x: &[f64],
    component: usize,
    mut h: f64,
    floor: f64,
    points: P,
) -> Result<f64>
where
    P: Fn(f64) -> Vec<Vec<f64>>,
{
    for _ in 0..=MAX_SHRINKS {
        if points(h).iter().all(|q| admissible(q)) {
            return Ok(h);
        }
        h *= 0.5;
        if h < floor {
            break;
        }
    }
    Err(Error::StencilFailure { point: x.to_vec(), component })
}

fn shifted(x: &[f64], shifts: &[(usize, f64)]) -> Vec<f64> {
    let mut q = x.to_vec();
    for &(i, d) in shifts {
        q[i] += d;
    }
    q
}

fn axis_step(p: &Potential, x: &[f64], i: usize, rel: f64, cfg: &DiffConfig) -> Result<f64> {
    axis_step_in(&|q: &[f64]| p.domain().contains(q), x, i, rel, cfg)
}

/// Largest admissible central-difference step along axis `i`.
pub(crate) fn axis_step_in(
    admissible: &dyn Fn(&[f64]) -> bool,
    x: &[f64],
    i: usize,
    rel: f64,
    cfg: &DiffConfig,
) -> Result<f64> {
    let h0 = cfg.initial_step(rel, x[i]);
    admissible_step(admissible, x, i, h0, cfg.step_abs, |h| {
        alloc::vec![shifted(x, &[(i, h)]), shifted(x, &[(i, -h)])]
    })
}

/// Central-difference gradient of the potential's value.
pub fn fd_gradient(p: &Potential, x: &[f64], cfg: &DiffConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    p.domain().check(x)?;
    (0..x.len())
        .map(|i| {
            let h = axis_step(p, x, i, cfg.step_rel, cfg)?;
            let fp = p.eval_unchecked(&shifted(x, &[(i, h)]));
            let fm = p.eval_unchecked(&shifted(x, &[(i, -h)]));
            Ok((fp - fm) / (2.0 * h))
        })
        .collect()
}

/// Central-difference Hessian, symmetrized as `(H + Hᵀ)/2`.
///
/// With an analytic gradient the Hessian is the central difference of that
/// gradient. Otherwise it is built from second differences of the value.
pub fn fd_hessian(p: &Potential, x: &[f64], cfg: &DiffConfig) -> Result<Matrix> {
    cfg.validate()?;
    p.domain().check(x)?;
    let n = x.len();
    let mut hess = Matrix::zeros(n);
    if p.has_analytic_gradient() {
        for j in 0..n {
            let h = axis_step(p, x, j, cfg.step_rel, cfg)?;
            let gp = p.analytic_gradient(&shifted(x, &[(j, h)])).unwrap_or_default();
            let gm = p.analytic_gradient(&shifted(x, &[(j, -h)])).unwrap_or_default();
            for i in 0..n {
                hess[(i, j)] = (gp[i] - gm[i]) / (2.0 * h);
            }
        }
    } else {
        let steps =
            (0..n).map(|i| axis_step(p, x, i, cfg.hess_step_rel, cfg)).collect::<Result<Vec<f64>>>()?;
        let f0 = p.eval_unchecked(x);
        for i in 0..n {
            let hi = steps[i];
            let fp = p.eval_unchecked(&shifted(x, &[(i, hi)]));
            let fm = p.eval_unchecked(&shifted(x, &[(i, -hi)]));
            hess[(i, i)] = (fp - 2.0 * f0 + fm) / (hi * hi);
            for j in (i + 1)..n {
                let h0 = steps[i].min(steps[j]);
                let h = admissible_step(&|q: &[f64]| p.domain().contains(q), x, i, h0, cfg.step_abs, |h| {
                    alloc::vec![
                        shifted(x, &[(i, h), (j, h)]),
                        shifted(x, &[(i, h), (j, -h)]),
                        shifted(x, &[(i, -h), (j, h)]),
                        shifted(x, &[(i, -h), (j, -h)]),
                    ]
                })?;
                let fpp = p.eval_unchecked(&shifted(x, &[(i, h), (j, h)]));
                let fpm = p.eval_unchecked(&shifted(x, &[(i, h), (j, -h)]));
                let fmp = p.eval_unchecked(&shifted(x, &[(i, -h), (j, h)]));
                let fmm = p.eval_unchecked(&shifted(x, &[(i, -h), (j, -h)]));
                let v = (fpp - fpm - fmp + fmm) / (4.0 * h * h);
                hess[(i, j)] = v;
                hess[(j, i)] = v;
            }
        }
    }
    hess.symmetrize();
    Ok(hess)
}

/// Outcome of comparing analytic derivatives with finite differences.
///
/// Errors are measured as `|analytic − fd| / max(1, |analytic|)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivativeReport {
    pub gradient_error: Option<f64>,
    /// Component with the largest gradient error.
    pub gradient_worst: Option<usize>,
    pub hessian_error: Option<f64>,
    /// Entry `(i, j)` with the largest Hessian error.
    pub hessian_worst: Option<(usize, usize)>,
    pub tol: f64,
    pub pass: bool,
}

fn scaled_err(analytic: f64, fd: f64) -> f64 {
    let e = (analytic - fd).abs() / analytic.abs().max(1.0);
    if e.is_nan() {
        f64::INFINITY
    } else {
        e
    }
}

pub fn validate_derivatives(p: &Potential, x: &[f64], tol: f64) -> Result<DerivativeReport> {
    p.domain().check(x)?;
    if !p.has_analytic_gradient() && !p.has_analytic_hessian() {
        return Err(Error::InvalidConfig(
            "derivative validation needs an analytic gradient or hessian".into(),
        ));
    }
    let cfg = DiffConfig::default();
    let n = x.len();

    let (mut gradient_error, mut gradient_worst) = (None, None);
    if let Some(g) = p.analytic_gradient(x) {
        if g.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: g.len() });
        }
        let fd = fd_gradient(p, x, &cfg)?;
        let (idx, err) = g
            .iter()
            .zip(&fd)
            .map(|(a, b)| scaled_err(*a, *b))
            .enumerate()
            .fold((0, 0.0), |best, (i, e)| if e > best.1 { (i, e) } else { best });
        gradient_error = Some(err);
        gradient_worst = Some(idx);
    }

    let (mut hessian_error, mut hessian_worst) = (None, None);
    if p.has_analytic_hessian() {
        let analytic = p.hessian(x)?;
        let fd = fd_hessian(p, x, &cfg)?;
        let mut best = ((0, 0), 0.0);
        for i in 0..n {
            for j in 0..n {
                let e = scaled_err(analytic[(i, j)], fd[(i, j)]);
                if e > best.1 {
                    best = ((i, j), e);
                }
            }
        }
        hessian_error = Some(best.1);
        hessian_worst = Some(best.0);
    }

    let pass = gradient_error.is_none_or(|e| e <= tol) && hessian_error.is_none_or(|e| e <= tol);
    Ok(DerivativeReport { gradient_error, gradient_worst, hessian_error, hessian_worst, tol, pass })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::Domain;
    use crate::potentials::builtin::*;
    use alloc::vec;

    #[test]
    fn quadratic_gradient_is_exact() {
        let p = quadratic(Matrix::identity(3), None, 0.0).unwrap();
        let x = [0.3, -1.7, 2.5];
        let g = p.fd_gradient(&x, &DiffConfig::default()).unwrap();
        for (a, b) in g.iter().zip(&x) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn ising_fd_gradient_matches_tanh() {
        let p = ising_free_energy();
        let g = p.fd_gradient(&[1.0], &DiffConfig::default()).unwrap();
        assert!((g[0] - libm::tanh(1.0)).abs() < 1e-8);
        assert!((g[0] - 0.761_594_155_955_764_9).abs() < 1e-8);
    }

    #[test]
    fn stencil_shrinks_then_fails_at_vdw_boundary() {
        let p = vdw_helmholtz(1.0).unwrap();
        let cfg = DiffConfig::default();
        // Close to the boundary the step shrinks and still succeeds.
        let near = 1.0 / 3.0 + 1e-6;
        assert!(p.fd_gradient(&[near], &cfg).is_ok());
        let x = 1.0 / 3.0 + 1e-9;
        match p.fd_gradient(&[x], &cfg) {
            Err(Error::StencilFailure { component, .. }) => assert_eq!(component, 0),
            other => panic!("expected stencil failure, got {other:?}"),
        }
    }

    #[test]
    fn fd_only_hessian_is_symmetric_and_accurate() {
        let p = Potential::new("fd-only", Domain::positive(2), |x: &[f64]| {
            libm::log(x[0]) * x[1] + x[0] * x[0] * x[1]
        });
        let x = [1.5, 0.7];
        let h = p.hessian(&x).unwrap();
        assert!(h.is_symmetric());
        // ∂²/∂x0² = -x1/x0² + 2 x1, ∂²/∂x0∂x1 = 1/x0 + 2 x0, ∂²/∂x1² = 0
        assert!((h[(0, 0)] - (-0.7 / 2.25 + 1.4)).abs() < 1e-6);
        assert!((h[(0, 1)] - (1.0 / 1.5 + 3.0)).abs() < 1e-6);
        assert!(h[(1, 1)].abs() < 1e-6);
    }

    #[test]
    fn validation_passes_for_builtins() {
        let helm = ideal_gas_helmholtz(1.0, 1.0).unwrap();
        assert!(helm.validate_derivatives(&[2.0], 1e-6).unwrap().pass);
        let ising = ising_free_energy();
        assert!(ising.validate_derivatives(&[3.0], 1e-6).unwrap().pass);
    }

    #[test]
    fn validation_locates_wrong_gradient() {
        let p = Potential::new("bad", Domain::unbounded(2), |x: &[f64]| x[0] * x[0] + x[1] * x[1])
            .with_gradient(|x: &[f64]| vec![2.0 * x[0], 3.0 * x[1]]);
        let report = p.validate_derivatives(&[1.0, 1.0], 1e-6).unwrap();
        assert!(!report.pass);
        assert_eq!(report.gradient_worst, Some(1));
        assert!(report.gradient_error.unwrap() > 0.1);
    }

    #[test]
    fn validation_needs_analytic_derivatives() {
        let p = Potential::new("plain", Domain::unbounded(1), |x: &[f64]| x[0]);
        assert!(p.validate_derivatives(&[0.0], 1e-6).is_err());
    }

    #[test]
    fn rejects_bad_config() {
        let p = ising_free_energy();
        let cfg = DiffConfig { step_rel: 0.0, ..DiffConfig::default() };
        assert!(matches!(p.fd_gradient(&[0.0], &cfg), Err(Error::InvalidConfig(_))));
    }
}
