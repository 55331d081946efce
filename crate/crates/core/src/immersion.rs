//! Graph immersions `f(x) = (x, F(x))` with transversal field `ξ = ∂/∂z`.
//!
//! For a graph immersion the induced connection is flat in the `x`
//! coordinates, the transversal field is parallel (`S = 0`, `τ = 0`) and the
//! affine fundamental form is the Hessian of `F`. Covectors on ℝⁿ⁺¹ are
//! stored as coefficient vectors in the basis `(dx¹, …, dxⁿ, dz)`.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{dot, Matrix};
use crate::potentials::diff::axis_step_in;
use crate::potentials::{DiffConfig, Potential};

/// Default relative tolerance for counting an eigenvalue as zero.
pub const DEFAULT_RANK_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct GraphImmersion {
    potential: Potential,
}

/// A point of the equilibrium graph in `(x, y, z)` coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumPoint {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub z: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Signature {
    pub plus: usize,
    pub minus: usize,
    pub zero: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Classification {
    Nondegenerate,
    Degenerate,
}

impl Classification {
    pub fn as_str(self) -> &'static str {
        match self {
            Classification::Nondegenerate => "nondegenerate",
            Classification::Degenerate => "degenerate",
        }
    }
}

/// Affine fundamental form `h_ij = ∂²F/∂x^i∂x^j` at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct FundamentalForm {
    pub matrix: Matrix,
    pub det: f64,
    pub eigenvalues: Vec<f64>,
    pub signature: Signature,
    pub classification: Classification,
}

impl FundamentalForm {
    pub fn is_definite(&self) -> bool {
        self.signature.zero == 0 && (self.signature.plus == 0 || self.signature.minus == 0)
    }
}

/// Conormal covector `v = dz − Σ y_a dx^a`, stored as `(−y₁, …, −yₙ, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Conormal {
    pub coeffs: Vec<f64>,
}

impl Conormal {
    /// Pairing `⟨v, u⟩` with a vector of ℝⁿ⁺¹.
    pub fn pair(&self, u: &[f64]) -> f64 {
        dot(&self.coeffs, u)
    }
}

/// Where the fundamental form degenerates along a search segment.
#[derive(Debug, Clone, PartialEq)]
pub struct DegeneracyPoint {
    pub x: Vec<f64>,
    /// `det h` at the point.
    pub det: f64,
    /// `true` when `det h` touches zero without changing sign.
    pub tangential: bool,
}

impl GraphImmersion {
    pub fn new(potential: Potential) -> Self {
        Self { potential }
    }

    pub fn potential(&self) -> &Potential {
        &self.potential
    }

    pub fn dim(&self) -> usize {
        self.potential.dim()
    }

    /// `ξ = ∂/∂z` as a vector of ℝⁿ⁺¹.
    pub fn transversal(&self) -> Vec<f64> {
        let mut xi = vec![0.0; self.dim() + 1];
        xi[self.dim()] = 1.0;
        xi
    }

    /// `f(x) = (x, F(x))`.
    pub fn immerse(&self, x: &[f64]) -> Result<Vec<f64>> {
        let z = self.potential.eval(x)?;
        let mut p = x.to_vec();
        p.push(z);
        Ok(p)
    }

    pub fn equilibrium_point(&self, x: &[f64]) -> Result<EquilibriumPoint> {
        Ok(EquilibriumPoint { x: x.to_vec(), y: self.potential.gradient(x)?, z: self.potential.eval(x)? })
    }

    /// `f_*(∂/∂x^i) = e_i + (∂F/∂x^i) e_z`. The z-components are the
    /// conjugate variables.
    pub fn pushforward_basis(&self, x: &[f64]) -> Result<Vec<Vec<f64>>> {
        let y = self.potential.gradient(x)?;
        let n = self.dim();
        Ok((0..n)
            .map(|i| {
                let mut e = vec![0.0; n + 1];
                e[i] = 1.0;
                e[n] = y[i];
                e
            })
            .collect())
    }

    /// Determinant of the frame `[f_*∂₁, …, f_*∂ₙ, ξ]`; always 1 for a graph,
    /// which is transversality.
    pub fn frame_determinant(&self, x: &[f64]) -> Result<f64> {
        let basis = self.pushforward_basis(x)?;
        let n = self.dim();
        let mut m = Matrix::zeros(n + 1);
        for (col, v) in basis.iter().chain(core::iter::once(&self.transversal())).enumerate() {
            for (row, c) in v.iter().enumerate() {
                m[(row, col)] = *c;
            }
        }
        Ok(m.determinant())
    }

    /// Derivative of `ξ` along the image, `D_X ξ`. Identically zero for a
    /// graph immersion (`S = 0`, `τ = 0`).
    pub fn weingarten(&self, x: &[f64], _direction: &[f64]) -> Result<Vec<f64>> {
        self.potential.domain().check(x)?;
        Ok(vec![0.0; self.dim() + 1])
    }

    pub fn conormal(&self, x: &[f64]) -> Result<Conormal> {
        let y = self.potential.gradient(x)?;
        let mut coeffs: Vec<f64> = y.iter().map(|v| -v).collect();
        coeffs.push(1.0);
        Ok(Conormal { coeffs })
    }

    /// `(|⟨v, ξ⟩ − 1|, maxᵢ |⟨v, f_*∂ᵢ⟩|)`.
    pub fn check_conormal_conditions(&self, x: &[f64]) -> Result<(f64, f64)> {
        let v = self.conormal(x)?;
        let xi_residual = (v.pair(&self.transversal()) - 1.0).abs();
        let tangent_residual = self.pushforward_basis(x)?.iter().fold(0.0_f64, |m, e| m.max(v.pair(e).abs()));
        Ok((xi_residual, tangent_residual))
    }

    /// Fundamental form with signature counted from the symmetric
    /// eigenvalues; `|λ| ≤ rank_tol · max(1, ‖H‖)` counts as zero.
    pub fn fundamental_form(&self, x: &[f64], rank_tol: f64) -> Result<FundamentalForm> {
        if !(rank_tol > 0.0) {
            return Err(Error::InvalidConfig("rank tolerance must be positive".into()));
        }
        let matrix = self.potential.hessian(x)?;
        Ok(classify(matrix, rank_tol))
    }

    /// Codazzi residual for the flat connection: the largest asymmetry of the
    /// third partials `∂ₖ h_ij`, which are computed by central differences of
    /// the Hessian.
    pub fn codazzi_residual(&self, x: &[f64]) -> Result<f64> {
        let n = self.dim();
        let cfg = DiffConfig::default();
        self.potential.domain().check(x)?;
        let mut third = vec![0.0; n * n * n];
        for k in 0..n {
            let domain = self.potential.domain();
            let h = axis_step_in(&|q: &[f64]| domain.contains(q), x, k, cfg.step_rel, &cfg)?;
            let mut xp = x.to_vec();
            xp[k] += h;
            let mut xm = x.to_vec();
            xm[k] -= h;
            let hp = self.potential.hessian(&xp)?;
            let hm = self.potential.hessian(&xm)?;
            for i in 0..n {
                for j in 0..n {
                    third[(i * n + j) * n + k] = (hp[(i, j)] - hm[(i, j)]) / (2.0 * h);
                }
            }
        }
        let t = |i: usize, j: usize, k: usize| third[(i * n + j) * n + k];
        let mut worst = 0.0_f64;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let base = t(i, j, k);
                    for other in [t(i, k, j), t(j, i, k), t(j, k, i), t(k, i, j), t(k, j, i)] {
                        worst = worst.max((base - other).abs());
                    }
                }
            }
        }
        Ok(worst)
    }

    /// Points on the segment `a → b` where `det h` vanishes.
    ///
    /// The segment is scanned on `samples` intervals. Sign changes of
    /// `det h` are refined by bisection; interior extrema of `det h` (sign
    /// changes of its derivative along the segment) that reach zero within
    /// `rank_tol` are reported as tangential degeneracies. Both refinements
    /// stop once the bracket is shorter than `1e-12` in `x`.
    pub fn degeneracy_locus(
        &self,
        a: &[f64],
        b: &[f64],
        samples: usize,
        rank_tol: f64,
    ) -> Result<Vec<DegeneracyPoint>> {
        let n = self.dim();
        if a.len() != n || b.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: a.len().min(b.len()) });
        }
        if samples < 2 {
            return Err(Error::InvalidConfig("degeneracy scan needs at least 2 samples".into()));
        }
        let dir: Vec<f64> = b.iter().zip(a).map(|(bi, ai)| bi - ai).collect();
        let len = crate::linalg::norm(&dir);
        if len == 0.0 {
            return Err(Error::DegeneratePath);
        }
        let at = |s: f64| -> Vec<f64> { a.iter().zip(&dir).map(|(ai, di)| ai + s * di).collect() };
        let det_at = |s: f64| -> Result<f64> { Ok(self.potential.hessian(&at(s))?.determinant()) };
        let domain = self.potential.domain();
        // five-point derivative of det along s
        let ddet_at = |s: f64| -> Result<Option<f64>> {
            let scale = at(s).iter().fold(1.0_f64, |m, v| m.max(v.abs()));
            let mut delta = 1e-4 * scale / len;
            for _ in 0..20 {
                let pts = [s - 2.0 * delta, s - delta, s + delta, s + 2.0 * delta];
                if pts.iter().all(|&q| domain.contains(&at(q))) {
                    let d: Vec<f64> = pts.iter().map(|&q| det_at(q)).collect::<Result<_>>()?;
                    return Ok(Some((d[0] - 8.0 * d[1] + 8.0 * d[2] - d[3]) / (12.0 * delta)));
                }
                delta *= 0.5;
            }
            Ok(None)
        };
        let s_tol = 1e-12 / len;
        let bisect = |mut lo: f64, mut hi: f64, f: &dyn Fn(f64) -> Result<f64>| -> Result<f64> {
            let mut flo = f(lo)?;
            while hi - lo > s_tol {
                let mid = 0.5 * (lo + hi);
                let fm = f(mid)?;
                if fm == 0.0 {
                    return Ok(mid);
                }
                if (fm < 0.0) == (flo < 0.0) {
                    lo = mid;
                    flo = fm;
                } else {
                    hi = mid;
                }
            }
            Ok(0.5 * (lo + hi))
        };

        let grid: Vec<f64> = (0..=samples).map(|k| k as f64 / samples as f64).collect();
        let inside: Vec<bool> = grid.iter().map(|&s| domain.contains(&at(s))).collect();
        let dets: Vec<Option<f64>> = grid
            .iter()
            .zip(&inside)
            .map(|(&s, &ok)| if ok { det_at(s).map(Some) } else { Ok(None) })
            .collect::<Result<_>>()?;

        let mut roots: Vec<(f64, bool)> = Vec::new();
        for k in 0..=samples {
            if dets[k] == Some(0.0) {
                roots.push((grid[k], false));
            }
        }
        for k in 0..samples {
            if let (Some(d0), Some(d1)) = (dets[k], dets[k + 1]) {
                if d0 * d1 < 0.0 {
                    let det_fn = |s: f64| det_at(s);
                    roots.push((bisect(grid[k], grid[k + 1], &det_fn)?, false));
                }
            }
        }
        // Tangential zeros: extrema of det that touch zero.
        let derivs: Vec<Option<f64>> = grid
            .iter()
            .zip(&inside)
            .map(|(&s, &ok)| if ok { ddet_at(s) } else { Ok(None) })
            .collect::<Result<_>>()?;
        for k in 0..samples {
            if let (Some(g0), Some(g1), Some(d0), Some(d1)) = (derivs[k], derivs[k + 1], dets[k], dets[k + 1])
            {
                if g0 * g1 < 0.0 && d0 * d1 > 0.0 {
                    let deriv_fn = |s: f64| -> Result<f64> {
                        ddet_at(s)?.ok_or(Error::StencilFailure { point: at(s), component: 0 })
                    };
                    let s = bisect(grid[k], grid[k + 1], &deriv_fn)?;
                    let x = at(s);
                    let hm = self.potential.hessian(&x)?;
                    let scale = hm.norm().max(1.0);
                    if hm.determinant().abs() <= rank_tol * libm::pow(scale, n as f64) {
                        roots.push((s, true));
                    }
                }
            }
        }
        roots.sort_by(|p, q| p.0.total_cmp(&q.0));
        let mut out: Vec<DegeneracyPoint> = Vec::new();
        for (s, tangential) in roots {
            let x = at(s);
            if let Some(last) = out.last() {
                if crate::linalg::max_abs_diff(&last.x, &x) < 1e-8 {
                    continue;
                }
            }
            let det = self.potential.hessian(&x)?.determinant();
            out.push(DegeneracyPoint { x, det, tangential });
        }
        Ok(out)
    }
}

pub(crate) fn classify(matrix: Matrix, rank_tol: f64) -> FundamentalForm {
    let eigenvalues = matrix.symmetric_eigenvalues();
    let cutoff = rank_tol * matrix.norm().max(1.0);
    let mut signature = Signature { plus: 0, minus: 0, zero: 0 };
    for &l in &eigenvalues {
        if l.abs() <= cutoff {
            signature.zero += 1;
        } else if l > 0.0 {
            signature.plus += 1;
        } else {
            signature.minus += 1;
        }
    }
    let classification =
        if signature.zero > 0 { Classification::Degenerate } else { Classification::Nondegenerate };
    FundamentalForm { det: matrix.determinant(), matrix, eigenvalues, signature, classification }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::Domain;
    use crate::potentials::*;
    use core::f64::consts::LN_2;

    #[test]
    fn immerse_examples() {
        let helm = GraphImmersion::new(ideal_gas_helmholtz(1.0, 1.0).unwrap());
        assert_eq!(helm.immerse(&[1.0]).unwrap(), vec![1.0, 0.0]);
        let ising = GraphImmersion::new(ising_free_energy());
        assert_eq!(ising.immerse(&[0.0]).unwrap(), vec![0.0, LN_2]);
        let ent = GraphImmersion::new(ideal_gas_entropy(1.0, 1.5).unwrap());
        assert_eq!(ent.immerse(&[1.0, 1.0]).unwrap(), vec![1.0, 1.0, 0.0]);
        assert!(helm.immerse(&[-1.0]).is_err());
    }

    #[test]
    fn pushforward_examples() {
        let helm = GraphImmersion::new(ideal_gas_helmholtz(1.0, 1.0).unwrap());
        assert_eq!(helm.pushforward_basis(&[2.0]).unwrap(), vec![vec![1.0, 0.5]]);
        let ent = GraphImmersion::new(ideal_gas_entropy(1.0, 1.5).unwrap());
        assert_eq!(
            ent.pushforward_basis(&[1.0, 1.0]).unwrap(),
            vec![vec![1.0, 0.0, 1.5], vec![0.0, 1.0, 1.0]]
        );
        let ising = GraphImmersion::new(ising_free_energy());
        assert_eq!(ising.pushforward_basis(&[0.0]).unwrap(), vec![vec![1.0, 0.0]]);
        assert_eq!(ent.frame_determinant(&[2.0, 3.0]).unwrap(), 1.0);
    }

    #[test]
    fn conormal_examples() {
        let ent = GraphImmersion::new(ideal_gas_entropy(1.0, 1.5).unwrap());
        assert_eq!(ent.conormal(&[1.0, 1.0]).unwrap().coeffs, vec![-1.5, -1.0, 1.0]);
        let quad = GraphImmersion::new(quadratic(Matrix::identity(3), None, 0.0).unwrap());
        assert_eq!(quad.conormal(&[0.0; 3]).unwrap().coeffs, vec![0.0, 0.0, 0.0, 1.0]);
        let ising = GraphImmersion::new(ising_free_energy());
        let v = ising.conormal(&[1.0]).unwrap();
        assert!((v.coeffs[0] + 0.761_594_155_955_764_9).abs() < 1e-15);
        assert_eq!(v.coeffs[1], 1.0);
    }

    #[test]
    fn conormal_conditions_hold() {
        let ent = GraphImmersion::new(ideal_gas_entropy(1.0, 1.5).unwrap());
        let (a, b) = ent.check_conormal_conditions(&[2.0, 3.0]).unwrap();
        assert_eq!(a, 0.0);
        assert!(b <= 1e-12);
        let fd_only = GraphImmersion::new(Potential::new("fd", Domain::positive(2), |x: &[f64]| {
            libm::log(x[0]) + x[0] * x[1]
        }));
        let (a, b) = fd_only.check_conormal_conditions(&[1.2, 0.4]).unwrap();
        assert_eq!(a, 0.0);
        assert!(b <= 1e-6);
    }

    #[test]
    fn fundamental_form_examples() {
        let helm = GraphImmersion::new(ideal_gas_helmholtz(1.0, 1.0).unwrap());
        let h = helm.fundamental_form(&[2.0], DEFAULT_RANK_TOL).unwrap();
        assert_eq!(h.matrix[(0, 0)], -0.25);
        assert_eq!(h.signature, Signature { plus: 0, minus: 1, zero: 0 });
        assert_eq!(h.classification, Classification::Nondegenerate);

        let vdw = GraphImmersion::new(vdw_helmholtz(1.0).unwrap());
        let h = vdw.fundamental_form(&[1.0], DEFAULT_RANK_TOL).unwrap();
        assert_eq!(h.matrix[(0, 0)], 0.0);
        assert_eq!(h.signature, Signature { plus: 0, minus: 0, zero: 1 });
        assert_eq!(h.classification, Classification::Degenerate);

        let ent = GraphImmersion::new(ideal_gas_entropy(1.0, 1.5).unwrap());
        let h = ent.fundamental_form(&[1.0, 1.0], DEFAULT_RANK_TOL).unwrap();
        assert_eq!(h.matrix, Matrix::diagonal(&[-1.5, -1.0]));
        assert_eq!(h.signature, Signature { plus: 0, minus: 2, zero: 0 });
        assert!(h.is_definite());

        assert!(ent.fundamental_form(&[1.0, 1.0], 0.0).is_err());
    }

    #[test]
    fn codazzi_examples() {
        let a = Matrix::from_rows(&[vec![2.0, 0.5], vec![0.5, 1.0]]).unwrap();
        let quad = GraphImmersion::new(quadratic(a, None, 0.0).unwrap());
        assert!(quad.codazzi_residual(&[0.3, -0.2]).unwrap() <= 1e-10);
        let ent = GraphImmersion::new(ideal_gas_entropy(1.0, 1.5).unwrap());
        assert!(ent.codazzi_residual(&[1.0, 1.0]).unwrap() <= 1e-6);
        let ising = GraphImmersion::new(ising_free_energy());
        assert!(ising.codazzi_residual(&[0.5]).unwrap() <= 1e-6);
    }

    #[test]
    fn vdw_critical_isotherm_touches_zero_at_one() {
        let vdw = GraphImmersion::new(vdw_helmholtz(1.0).unwrap());
        let locus = vdw.degeneracy_locus(&[0.4], &[5.0], 400, DEFAULT_RANK_TOL).unwrap();
        assert_eq!(locus.len(), 1, "{locus:?}");
        assert!((locus[0].x[0] - 1.0).abs() <= 1e-10, "{locus:?}");
    }

    #[test]
    fn helmholtz_has_no_degeneracy() {
        let helm = GraphImmersion::new(ideal_gas_helmholtz(1.0, 1.0).unwrap());
        assert!(helm.degeneracy_locus(&[0.01], &[100.0], 1000, DEFAULT_RANK_TOL).unwrap().is_empty());
    }
}
