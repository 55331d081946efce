//! Legendre duality on the graph of a definite-Hessian potential and the
//! two routes to the divergence between equilibrium states.
//!
//! The primal coordinates are `θ = x` with potential `ψ = F`; the dual
//! coordinates are `η = ∇F(x)` with potential `φ(η) = ⟨x, η⟩ − F(x)`.
//! The canonical divergence is evaluated in Bregman form,
//! `D(x₁, x₂) = F(x₁) − F(x₂) − ⟨∇F(x₂), x₁ − x₂⟩`, while the geometric
//! divergence pairs the conormal at `x₂` with the chord `f(x₁) − f(x₂)`.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::immersion::{classify, GraphImmersion, DEFAULT_RANK_TOL};
use crate::linalg::{dot, max_abs_diff, norm, Matrix};
use crate::potentials::Potential;

/// Damped Newton settings for inverting `η = ∇F(x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonConfig {
    pub max_iter: usize,
    /// Convergence when `‖∇F(x) − η‖ ≤ tol_grad · max(1, ‖η‖)`.
    pub tol_grad: f64,
    /// Maximum step halvings per iteration.
    pub max_halvings: usize,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        Self { max_iter: 100, tol_grad: 1e-12, max_halvings: 30 }
    }
}

#[derive(Debug, Clone)]
pub struct DualChart {
    potential: Potential,
    newton: NewtonConfig,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DivergenceReport {
    pub canonical: f64,
    pub geometric: f64,
    pub discrepancy: f64,
}

impl DualChart {
    pub fn new(potential: Potential) -> Self {
        Self { potential, newton: NewtonConfig::default() }
    }

    pub fn with_newton(mut self, newton: NewtonConfig) -> Self {
        self.newton = newton;
        self
    }

    pub fn potential(&self) -> &Potential {
        &self.potential
    }

    pub fn newton(&self) -> &NewtonConfig {
        &self.newton
    }

    /// `η = ∇F(x)`.
    pub fn forward_map(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.potential.gradient(x)
    }

    fn definite_hessian(&self, x: &[f64]) -> Result<Matrix> {
        let h = self.potential.hessian(x)?;
        let form = classify(h, DEFAULT_RANK_TOL);
        if form.is_definite() {
            Ok(form.matrix)
        } else {
            Err(Error::IndefiniteHessian { point: x.to_vec() })
        }
    }

    /// Solves `∇F(x) = η` by damped Newton from `x0`. Steps are halved until
    /// the iterate stays in the domain and the residual decreases.
    pub fn inverse_map(&self, eta: &[f64], x0: &[f64]) -> Result<Vec<f64>> {
        let cfg = &self.newton;
        if cfg.max_iter == 0 || !(cfg.tol_grad > 0.0) {
            return Err(Error::InvalidConfig("newton needs max_iter > 0 and tol_grad > 0".into()));
        }
        let n = self.potential.dim();
        if eta.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: eta.len() });
        }
        self.potential.domain().check(x0)?;
        let tol = cfg.tol_grad * norm(eta).max(1.0);
        let residual = |x: &[f64]| -> Result<f64> {
            let g = self.potential.gradient(x)?;
            Ok(norm(&g.iter().zip(eta).map(|(a, b)| a - b).collect::<Vec<_>>()))
        };

        let mut x = x0.to_vec();
        let mut rn = residual(&x)?;
        for _ in 0..cfg.max_iter {
            if rn <= tol {
                return Ok(x);
            }
            let g = self.potential.gradient(&x)?;
            let r: Vec<f64> = g.iter().zip(eta).map(|(a, b)| a - b).collect();
            let h = self.definite_hessian(&x)?;
            let step = h.solve(&r).ok_or_else(|| Error::IndefiniteHessian { point: x.clone() })?;

            let mut t = 1.0;
            let mut best: Option<(Vec<f64>, f64)> = None;
            for _ in 0..=cfg.max_halvings {
                let cand: Vec<f64> = x.iter().zip(&step).map(|(xi, si)| xi - t * si).collect();
                if self.potential.domain().contains(&cand) {
                    let rc = residual(&cand)?;
                    if rc < rn {
                        best = Some((cand, rc));
                        break;
                    }
                    if best.as_ref().is_none_or(|(_, rb)| rc < *rb) {
                        best = Some((cand, rc));
                    }
                }
                t *= 0.5;
            }
            match best {
                Some((cand, rc)) => {
                    x = cand;
                    rn = rc;
                }
                None => return Err(Error::DomainExit { point: x }),
            }
        }
        if rn <= tol {
            Ok(x)
        } else {
            Err(Error::NonConvergence { iterations: cfg.max_iter, residual: rn })
        }
    }

    /// `φ(η) = ⟨x, η⟩ − F(x)` at `x = inverse_map(η)`.
    pub fn dual_potential(&self, eta: &[f64], x0: &[f64]) -> Result<f64> {
        let x = self.inverse_map(eta, x0)?;
        Ok(dot(&x, eta) - self.potential.eval(&x)?)
    }

    /// `F(x) + φ(∇F(x)) − ⟨x, ∇F(x)⟩`, which vanishes on the dually flat chart.
    pub fn triple_identity_residual(&self, x: &[f64]) -> Result<f64> {
        let eta = self.forward_map(x)?;
        let phi = self.dual_potential(&eta, x)?;
        Ok(self.potential.eval(x)? + phi - dot(x, &eta))
    }

    /// Canonical divergence in Bregman form.
    pub fn canonical_divergence(&self, x1: &[f64], x2: &[f64]) -> Result<f64> {
        let f1 = self.potential.eval(x1)?;
        let f2 = self.potential.eval(x2)?;
        let g2 = self.potential.gradient(x2)?;
        let dx: Vec<f64> = x1.iter().zip(x2).map(|(a, b)| a - b).collect();
        Ok(f1 - f2 - dot(&g2, &dx))
    }

    /// `‖Hess F(x) · Hess φ(η(x)) − I‖_max`, with `Hess φ = ∂x/∂η` taken by
    /// central differences of [`DualChart::inverse_map`].
    pub fn metric_duality_residual(&self, x: &[f64]) -> Result<f64> {
        let h = self.definite_hessian(x)?;
        let eta = self.forward_map(x)?;
        let n = eta.len();
        let mut dual_hess = Matrix::zeros(n);
        for a in 0..n {
            let delta = 1e-5 * eta[a].abs().max(1e-3);
            let mut ep = eta.clone();
            ep[a] += delta;
            let mut em = eta.clone();
            em[a] -= delta;
            let xp = self.inverse_map(&ep, x)?;
            let xm = self.inverse_map(&em, x)?;
            for b in 0..n {
                dual_hess[(b, a)] = (xp[b] - xm[b]) / (2.0 * delta);
            }
        }
        Ok(h.mul(&dual_hess).max_abs_diff(&Matrix::identity(n)))
    }
}

/// `D^G(x₁, x₂) = ⟨v(x₂), f(x₁) − f(x₂)⟩`, built literally from the conormal
/// pairing.
pub fn geometric_divergence(g: &GraphImmersion, x1: &[f64], x2: &[f64]) -> Result<f64> {
    let p1 = g.immerse(x1)?;
    let p2 = g.immerse(x2)?;
    let chord: Vec<f64> = p1.iter().zip(&p2).map(|(a, b)| a - b).collect();
    Ok(g.conormal(x2)?.pair(&chord))
}

/// Both divergences and their discrepancy. The chart and immersion must wrap
/// the same potential.
pub fn divergence_report(
    c: &DualChart,
    g: &GraphImmersion,
    x1: &[f64],
    x2: &[f64],
) -> Result<DivergenceReport> {
    if !c.potential().same_source(g.potential()) {
        return Err(Error::MismatchedConstruction(
            "dual chart and graph immersion wrap different potentials".into(),
        ));
    }
    let canonical = c.canonical_divergence(x1, x2)?;
    let geometric = geometric_divergence(g, x1, x2)?;
    Ok(DivergenceReport { canonical, geometric, discrepancy: (canonical - geometric).abs() })
}

/// Round-trip error `‖inverse_map(forward_map(x), x0) − x‖_max`.
pub fn round_trip_error(c: &DualChart, x: &[f64], x0: &[f64]) -> Result<f64> {
    let eta = c.forward_map(x)?;
    Ok(max_abs_diff(&c.inverse_map(&eta, x0)?, x))
}
