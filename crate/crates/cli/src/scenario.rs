//! Scenario files: what to compute, on which model, at which points.

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thermoaffine_core::{IntegratorConfig, ModelParams};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Geometry,
    Legendre,
    Divergence,
    Relax,
    ContactCompare,
    SignTable,
    Sweep,
}

impl Command {
    pub fn as_str(self) -> &'static str {
        match self {
            Command::Geometry => "geometry",
            Command::Legendre => "legendre",
            Command::Divergence => "divergence",
            Command::Relax => "relax",
            Command::ContactCompare => "contact-compare",
            Command::SignTable => "sign-table",
            Command::Sweep => "sweep",
        }
    }

    fn is_dynamic(self) -> bool {
        matches!(self, Command::Relax | Command::ContactCompare | Command::SignTable | Command::Sweep)
    }
}

/// The two branches `F_I < F_II` of a two-equilibrium system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelPair {
    pub lower: ModelParams,
    pub upper: ModelParams,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    /// `counts[i]` points including both ends.
    #[default]
    Endpoints,
    /// Cell midpoints, so the ends of the box are never sampled.
    Midpoints,
}

/// Tensor-product grid over a box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub counts: Vec<usize>,
    #[serde(default)]
    pub spacing: Spacing,
}

impl Grid {
    fn validate(&self, what: &str) -> Result<()> {
        let n = self.lower.len();
        if n == 0 || self.upper.len() != n || self.counts.len() != n {
            return Err(schema(format!("{what}: lower, upper and counts need the same nonzero length")));
        }
        if self.counts.contains(&0) {
            return Err(schema(format!("{what}: counts must be positive")));
        }
        check_box(what, &self.lower, &self.upper)
    }

    pub fn points(&self) -> Vec<Vec<f64>> {
        let axes: Vec<Vec<f64>> = (0..self.lower.len())
            .map(|i| {
                let (lo, hi, k) = (self.lower[i], self.upper[i], self.counts[i]);
                (0..k)
                    .map(|j| match self.spacing {
                        Spacing::Midpoints => lo + (hi - lo) * (j as f64 + 0.5) / k as f64,
                        Spacing::Endpoints if k == 1 => lo,
                        Spacing::Endpoints => lo + (hi - lo) * j as f64 / (k - 1) as f64,
                    })
                    .collect()
            })
            .collect();
        let mut out = vec![Vec::new()];
        for axis in &axes {
            out = out
                .into_iter()
                .flat_map(|p| {
                    axis.iter().map(move |&v| {
                        let mut q = p.clone();
                        q.push(v);
                        q
                    })
                })
                .collect();
        }
        out
    }
}

/// `count` points drawn uniformly from a box with the scenario seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomBox {
    pub count: usize,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl RandomBox {
    fn validate(&self) -> Result<()> {
        if self.count == 0 {
            return Err(schema("random.count must be positive"));
        }
        if self.lower.is_empty() || self.lower.len() != self.upper.len() {
            return Err(schema("random: lower and upper need the same nonzero length"));
        }
        check_box("random", &self.lower, &self.upper)
    }

    pub fn draw(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        self.lower.iter().zip(&self.upper).map(|(&lo, &hi)| rng.gen_range(lo..hi)).collect()
    }
}

/// Initial fiber state. `z0_range` draws `z0` per sweep item instead.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Initial {
    #[serde(default)]
    pub z0: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y0: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z0_range: Option<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DegeneracyScan {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    #[serde(default = "default_scan_samples")]
    pub samples: usize,
}

fn default_scan_samples() -> usize {
    2000
}

/// `|y_k · x_k − value| ≤ tol` at every point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Homogeneity {
    pub component: usize,
    pub value: f64,
    pub tol: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Target {
    pub value: f64,
    pub tol: f64,
}

/// Optional pass/fail expectations. Absent fields are not checked.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expect {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub derivative_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub residual_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub homogeneity: Option<Homogeneity>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub heat_capacity: Option<Target>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub degeneracy_contains: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub degeneracy_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub degeneracy_count: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub closed_form_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub round_trip_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub discrepancy_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub equilibrium_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub approach_rate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lyapunov_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub comparison_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sign_w: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sign_div: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub div_constant: Option<Target>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub command: Command,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pair: Option<ModelPair>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<Grid>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub random: Option<RandomBox>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub etas: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta_grid: Option<Grid>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z_samples: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub degeneracy: Option<DegeneracyScan>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub integrator: Option<IntegratorConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<Initial>,
    #[serde(default)]
    pub expect: Expect,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
}

fn schema(msg: impl Into<String>) -> CliError {
    CliError::Schema(msg.into())
}

fn check_box(what: &str, lower: &[f64], upper: &[f64]) -> Result<()> {
    if lower.iter().zip(upper).all(|(l, u)| l.is_finite() && u.is_finite() && l <= u) {
        Ok(())
    } else {
        Err(schema(format!("{what}: need finite bounds with lower <= upper")))
    }
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| CliError::ReadScenario { path: path.to_path_buf(), source })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let s: Scenario = serde_json::from_str(text).map_err(|e| schema(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    /// Structural checks that serde cannot express. Model parameters and
    /// domains are checked by the library when the run starts.
    pub fn validate(&self) -> Result<()> {
        let cmd = self.command.as_str();
        match (&self.model, &self.pair) {
            (Some(_), Some(_)) => {
                return Err(schema(format!("{cmd}: give either `model` or `pair`, not both")))
            }
            (None, None) => return Err(schema(format!("{cmd}: a `model` is required"))),
            (None, Some(_)) if !self.command.is_dynamic() => {
                return Err(schema(format!("{cmd} takes a single `model`, not a `pair`")))
            }
            _ => {}
        }

        let sources = [self.points.is_some(), self.grid.is_some(), self.random.is_some()]
            .iter()
            .filter(|&&b| b)
            .count();
        match self.command {
            Command::Legendre => {
                if self.etas.is_some() == self.eta_grid.is_some() {
                    return Err(schema("legendre needs exactly one of `etas` or `eta_grid`"));
                }
            }
            Command::Relax | Command::ContactCompare | Command::SignTable => {
                if self.points.as_ref().map(Vec::len) != Some(1) || sources != 1 {
                    return Err(schema(format!("{cmd} needs `points` with exactly one base point")));
                }
            }
            _ => {
                if sources != 1 {
                    return Err(schema(format!("{cmd} needs exactly one of `points`, `grid` or `random`")));
                }
            }
        }
        if matches!(self.command, Command::Relax | Command::ContactCompare | Command::Sweep)
            && self.integrator.is_none()
        {
            return Err(schema(format!("{cmd} needs an `integrator`")));
        }
        if let Some(p) = &self.points {
            if p.is_empty() || p.iter().any(|x| x.is_empty() || x.len() != p[0].len()) {
                return Err(schema("`points` must be a nonempty list of equal-length vectors"));
            }
        }
        if let Some(g) = &self.grid {
            g.validate("grid")?;
        }
        if let Some(g) = &self.eta_grid {
            g.validate("eta_grid")?;
        }
        if let Some(r) = &self.random {
            r.validate()?;
        }
        if let Some(init) = &self.initial {
            if let Some([lo, hi]) = init.z0_range {
                if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                    return Err(schema("initial.z0_range must be finite with lo < hi"));
                }
            }
        }
        for (key, pattern) in [("sign_w", &self.expect.sign_w), ("sign_div", &self.expect.sign_div)] {
            if pattern.as_ref().is_some_and(|p| !p.chars().all(|c| matches!(c, '+' | '-' | '0'))) {
                return Err(schema(format!("expect.{key} may only contain '+', '-' and '0'")));
            }
        }
        if let Some(cfg) = &self.integrator {
            cfg.validate()?;
        }
        Ok(())
    }

    /// Sample points for the command, deterministic in the seed.
    pub fn sample_points(&self, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
        if let Some(p) = &self.points {
            p.clone()
        } else if let Some(g) = &self.grid {
            g.points()
        } else if let Some(r) = &self.random {
            (0..r.count).map(|_| r.draw(rng)).collect()
        } else {
            Vec::new()
        }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }

    pub fn label(&self) -> String {
        self.name.clone().unwrap_or_else(|| self.command.as_str().to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn midpoint_grid_avoids_the_ends() {
        let g = Grid {
            lower: vec![0.0, 1.0],
            upper: vec![1.0, 2.0],
            counts: vec![2, 3],
            spacing: Spacing::Midpoints,
        };
        let pts = g.points();
        assert_eq!(pts.len(), 6);
        assert_eq!(pts[0], vec![0.25, 1.0 + 1.0 / 6.0]);
        assert_eq!(pts[5], vec![0.75, 1.0 + 5.0 / 6.0]);
    }

    #[test]
    fn endpoint_grid_hits_both_ends() {
        let g = Grid { lower: vec![-1.0], upper: vec![1.0], counts: vec![3], spacing: Spacing::Endpoints };
        assert_eq!(g.points(), vec![vec![-1.0], vec![0.0], vec![1.0]]);
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let e = Scenario::parse(
            r#"{"command":"geometry","model":{"model_id":"ising_free_energy"},"points":[[0]],"bogus":1}"#,
        )
        .unwrap_err();
        assert!(matches!(e, CliError::Schema(_)));
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn relax_needs_one_point_and_an_integrator() {
        let base = r#"{"command":"relax","model":{"model_id":"ising_free_energy"},"points":[[0],[1]],
            "integrator":{"dt":0.001,"t_end":1}}"#;
        assert!(Scenario::parse(base).is_err());
        let no_int = r#"{"command":"relax","model":{"model_id":"ising_free_energy"},"points":[[0]]}"#;
        assert!(Scenario::parse(no_int).is_err());
    }

    #[test]
    fn pair_is_only_for_dynamics() {
        let s = r#"{"command":"divergence","pair":{"lower":{"model_id":"ising_free_energy"},
            "upper":{"model_id":"ising_free_energy"}},"points":[[0]]}"#;
        assert!(Scenario::parse(s).is_err());
    }

    #[test]
    fn random_points_are_seeded() {
        let s = Scenario::parse(
            r#"{"command":"divergence","model":{"model_id":"ising_free_energy"},
            "random":{"count":5,"lower":[-1],"upper":[1]},"seed":7}"#,
        )
        .unwrap();
        assert_eq!(s.sample_points(&mut s.rng()), s.sample_points(&mut s.rng()));
    }
}
