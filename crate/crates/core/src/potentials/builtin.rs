//! Built-in complete thermodynamic functions.
//!
//! | model                 | F(x)                             | Ω              |
//! |-----------------------|----------------------------------|----------------|
//! | `ideal_gas_helmholtz` | `RT ln x`                        | `x > 0`        |
//! | `ideal_gas_entropy`   | `R ln(Uᶜ V)`                     | `U, V > 0`     |
//! | `vdw_helmholtz`       | `3/x + (8T/3) ln(3x − 1)`        | `3x − 1 > 0`   |
//! | `ising_free_energy`   | `ln cosh x + ln 2`               | `ℝ`            |
//! | `quadratic`           | `½ xᵀAx + bᵀx + c`               | `ℝⁿ`           |
//!
//! The Helmholtz models use `F = −A`, so `y = ∂F/∂V` is the pressure.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use super::{ConvexityHint, Potential};
use crate::domain::Domain;
use crate::error::{Error, Result};
use crate::linalg::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum ModelId {
    IdealGasHelmholtz,
    IdealGasEntropy,
    VdwHelmholtz,
    IsingFreeEnergy,
    Quadratic,
}

impl ModelId {
    pub const ALL: [ModelId; 5] = [
        ModelId::IdealGasHelmholtz,
        ModelId::IdealGasEntropy,
        ModelId::VdwHelmholtz,
        ModelId::IsingFreeEnergy,
        ModelId::Quadratic,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelId::IdealGasHelmholtz => "ideal_gas_helmholtz",
            ModelId::IdealGasEntropy => "ideal_gas_entropy",
            ModelId::VdwHelmholtz => "vdw_helmholtz",
            ModelId::IsingFreeEnergy => "ising_free_energy",
            ModelId::Quadratic => "quadratic",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::InvalidModel(format!("unknown model_id `{s}`")))
    }

    fn allowed_params(self) -> &'static [&'static str] {
        match self {
            ModelId::IdealGasHelmholtz => &["R", "T"],
            ModelId::IdealGasEntropy => &["R", "c"],
            ModelId::VdwHelmholtz => &["T"],
            ModelId::IsingFreeEnergy => &[],
            ModelId::Quadratic => &["offset"],
        }
    }
}

impl fmt::Display for ModelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Model selection plus its named parameters.
///
/// `quadratic` takes its matrix from `matrix` (rows), an optional linear
/// term from `linear` and an optional constant as the `offset` parameter.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ModelParams {
    pub model_id: ModelId,
    #[cfg_attr(feature = "serde", serde(default))]
    pub params: BTreeMap<String, f64>,
    #[cfg_attr(feature = "serde", serde(default, skip_serializing_if = "Option::is_none"))]
    pub matrix: Option<Vec<Vec<f64>>>,
    #[cfg_attr(feature = "serde", serde(default, skip_serializing_if = "Option::is_none"))]
    pub linear: Option<Vec<f64>>,
}

impl ModelParams {
    pub fn new(model_id: ModelId) -> Self {
        Self { model_id, params: BTreeMap::new(), matrix: None, linear: None }
    }

    pub fn with(mut self, name: &str, value: f64) -> Self {
        self.params.insert(name.to_string(), value);
        self
    }

    pub fn with_matrix(mut self, rows: Vec<Vec<f64>>) -> Self {
        self.matrix = Some(rows);
        self
    }

    pub fn with_linear(mut self, b: Vec<f64>) -> Self {
        self.linear = Some(b);
        self
    }

    fn positive(&self, name: &str) -> Result<f64> {
        let v = *self
            .params
            .get(name)
            .ok_or_else(|| Error::InvalidModel(format!("{} requires parameter `{name}`", self.model_id)))?;
        if v.is_finite() && v > 0.0 {
            Ok(v)
        } else {
            Err(Error::InvalidModel(format!("{}: `{name}` must be positive, got {v}", self.model_id)))
        }
    }

    pub fn validate(&self) -> Result<()> {
        let allowed = self.model_id.allowed_params();
        if let Some(k) = self.params.keys().find(|k| !allowed.contains(&k.as_str())) {
            return Err(Error::InvalidModel(format!(
                "{} does not take parameter `{k}` (allowed: {allowed:?})",
                self.model_id
            )));
        }
        if self.model_id != ModelId::Quadratic && (self.matrix.is_some() || self.linear.is_some()) {
            return Err(Error::InvalidModel(format!("{} takes no matrix or linear term", self.model_id)));
        }
        Ok(())
    }
}

/// Builds the analytic potential described by `params`.
pub fn make_builtin(params: &ModelParams) -> Result<Potential> {
    params.validate()?;
    match params.model_id {
        ModelId::IdealGasHelmholtz => ideal_gas_helmholtz(params.positive("R")?, params.positive("T")?),
        ModelId::IdealGasEntropy => ideal_gas_entropy(params.positive("R")?, params.positive("c")?),
        ModelId::VdwHelmholtz => vdw_helmholtz(params.positive("T")?),
        ModelId::IsingFreeEnergy => Ok(ising_free_energy()),
        ModelId::Quadratic => {
            let rows = params
                .matrix
                .as_ref()
                .ok_or_else(|| Error::InvalidModel("quadratic requires `matrix`".into()))?;
            let a = Matrix::from_rows(rows)
                .ok_or_else(|| Error::InvalidModel("quadratic `matrix` must be square".into()))?;
            let offset = params.params.get("offset").copied().unwrap_or(0.0);
            quadratic(a, params.linear.clone(), offset)
        }
    }
}

fn require_positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidModel(format!("`{name}` must be positive, got {v}")))
    }
}

/// `F(x) = −A(V) = RT ln x` on `x > 0`.
pub fn ideal_gas_helmholtz(r: f64, t: f64) -> Result<Potential> {
    require_positive("R", r)?;
    require_positive("T", t)?;
    let rt = r * t;
    Ok(Potential::new(format!("ideal_gas_helmholtz(R={r}, T={t})"), Domain::positive(1), move |x| {
        rt * libm::log(x[0])
    })
    .with_gradient(move |x| vec![rt / x[0]])
    .with_hessian(move |x| Matrix::diagonal(&[-rt / (x[0] * x[0])]))
    .with_convexity(ConvexityHint::Concave))
}

/// `S(U, V) = R ln(Uᶜ V) = R (c ln U + ln V)` on `U, V > 0`.
pub fn ideal_gas_entropy(r: f64, c: f64) -> Result<Potential> {
    require_positive("R", r)?;
    require_positive("c", c)?;
    let cr = c * r;
    Ok(Potential::new(format!("ideal_gas_entropy(R={r}, c={c})"), Domain::positive(2), move |x| {
        r * (c * libm::log(x[0]) + libm::log(x[1]))
    })
    .with_gradient(move |x| vec![cr / x[0], r / x[1]])
    .with_hessian(move |x| Matrix::diagonal(&[-cr / (x[0] * x[0]), -r / (x[1] * x[1])]))
    .with_convexity(ConvexityHint::Concave))
}

/// Van der Waals in reduced units: `F(x) = −A = 3/x + (8T/3) ln(3x − 1)`,
/// admissible where `3x − 1 > 0`.
pub fn vdw_helmholtz(t: f64) -> Result<Potential> {
    require_positive("T", t)?;
    let domain = Domain::positive(1).with_guard("3x - 1 > 0", |x| 3.0 * x[0] - 1.0 > 0.0);
    Ok(Potential::new(format!("vdw_helmholtz(T={t})"), domain, move |x| {
        3.0 / x[0] + 8.0 * t / 3.0 * libm::log(3.0 * x[0] - 1.0)
    })
    .with_gradient(move |x| {
        let v = x[0];
        vec![-3.0 / (v * v) + 8.0 * t / (3.0 * v - 1.0)]
    })
    .with_hessian(move |x| {
        let v = x[0];
        let d = 3.0 * v - 1.0;
        Matrix::diagonal(&[6.0 / (v * v * v) - 24.0 * t / (d * d)])
    })
    .with_convexity(ConvexityHint::Indefinite))
}

/// `F(x) = ln Z = ln cosh x + ln 2`, the kinetic Ising free energy without
/// spin coupling. Evaluated as `|x| + ln(1 + e^{−2|x|})` to avoid overflow.
pub fn ising_free_energy() -> Potential {
    Potential::new("ising_free_energy", Domain::unbounded(1), |x| {
        let a = x[0].abs();
        a + libm::log1p(libm::exp(-2.0 * a))
    })
    .with_gradient(|x| vec![libm::tanh(x[0])])
    .with_hessian(|x| {
        let t = libm::tanh(x[0]);
        Matrix::diagonal(&[1.0 - t * t])
    })
    .with_convexity(ConvexityHint::Convex)
}

/// `F(x) = ½ xᵀAx + bᵀx + c`. `A` must be symmetric.
pub fn quadratic(a: Matrix, b: Option<Vec<f64>>, offset: f64) -> Result<Potential> {
    let n = a.dim();
    if n == 0 {
        return Err(Error::InvalidModel("quadratic needs a non-empty matrix".into()));
    }
    if !a.is_symmetric() {
        return Err(Error::InvalidModel("quadratic matrix must be symmetric".into()));
    }
    if a.as_slice().iter().any(|v| !v.is_finite()) || !offset.is_finite() {
        return Err(Error::InvalidModel("quadratic coefficients must be finite".into()));
    }
    let b = b.unwrap_or_else(|| vec![0.0; n]);
    if b.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: b.len() });
    }
    let eig = a.symmetric_eigenvalues();
    let hint = if eig.iter().all(|&l| l > 0.0) {
        ConvexityHint::Convex
    } else if eig.iter().all(|&l| l < 0.0) {
        ConvexityHint::Concave
    } else {
        ConvexityHint::Indefinite
    };
    let (a_val, a_grad, a_hess) = (a.clone(), a.clone(), a);
    let b_grad = b.clone();
    Ok(Potential::new(format!("quadratic(n={n})"), Domain::unbounded(n), move |x| {
        let ax = a_val.mul_vec(x);
        0.5 * crate::linalg::dot(x, &ax) + crate::linalg::dot(&b, x) + offset
    })
    .with_gradient(move |x| {
        let mut g = a_grad.mul_vec(x);
        for (gi, bi) in g.iter_mut().zip(&b_grad) {
            *gi += bi;
        }
        g
    })
    .with_hessian(move |_| a_hess.clone())
    .with_convexity(hint))
}

/// The constant function `F ≡ value` on ℝⁿ (a quadratic with `A = 0`).
pub fn constant(n: usize, value: f64) -> Result<Potential> {
    quadratic(Matrix::zeros(n), None, value)
}
