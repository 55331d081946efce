//! The bundled reference scenarios and the suite runner.

use std::path::Path;
use std::time::Instant;

use crate::error::{CliError, Result};
use crate::output::{self, Artifact, Check, RunManifest, ScenarioResult, Status, Summary};
use crate::scenario::Scenario;

macro_rules! bundled {
    ($($name:literal),* $(,)?) => {
        &[$(($name, include_str!(concat!("../scenarios/", $name, ".json")))),*]
    };
}

/// Every reference scenario, in run order.
pub const SUITE: &[(&str, &str)] = bundled![
    "geometry",
    "helmholtz_dual",
    "divergence_quadratic_a",
    "divergence_quadratic_b",
    "divergence_quadratic_c",
    "divergence_helmholtz",
    "divergence_entropy",
    "divergence_ising",
    "vdw_critical",
    "vdw_subcritical",
    "vdw_supercritical",
    "closed_form_helmholtz",
    "closed_form_entropy",
    "closed_form_vdw",
    "closed_form_ising",
    "closed_form_quadratic",
    "relax_ising",
    "kinetic_ising",
    "sign_table_single",
    "sign_table_two",
    "two_equilibrium_forward",
    "two_equilibrium_backward",
    "lyapunov_two",
    "contact_compare",
    "contact_compare_pair",
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuiteOptions {
    /// Multiplies every integrator step. Values above 1 are a sensitivity
    /// control: tolerance-bound RK4 scenarios are expected to fail.
    pub dt_scale: f64,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        Self { dt_scale: 1.0 }
    }
}

fn ensure_empty(dir: &Path) -> Result<()> {
    match std::fs::read_dir(dir) {
        Ok(mut entries) => {
            if entries.next().is_some() {
                return Err(CliError::OutputNotEmpty(dir.to_path_buf()));
            }
            Ok(())
        }
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            std::fs::create_dir_all(dir).map_err(|source| CliError::Write { path: dir.to_path_buf(), source })
        }
        Err(source) => Err(CliError::Write { path: dir.to_path_buf(), source }),
    }
}

pub fn load_bundled(name: &str, text: &str, opts: &SuiteOptions) -> Result<Scenario> {
    let mut s = Scenario::parse(text)?;
    s.name = Some(name.to_string());
    // Keep the recorded time grid when the step changes.
    if let Some(cfg) = s.integrator.as_mut() {
        cfg.dt *= opts.dt_scale;
        cfg.record_every = ((cfg.record_every as f64 / opts.dt_scale).round() as usize).max(1);
    }
    Ok(s)
}

/// Runs every bundled scenario into `dir/<name>/` and writes a top-level
/// summary. `dir` must be empty or absent. Failing scenarios are recorded and
/// the suite carries on.
pub fn emit_reference_suite(dir: &Path, opts: &SuiteOptions) -> Result<RunManifest> {
    if !(opts.dt_scale.is_finite() && opts.dt_scale > 0.0) {
        return Err(CliError::Schema(format!("dt scale must be positive, got {}", opts.dt_scale)));
    }
    ensure_empty(dir)?;
    let start = Instant::now();
    let mut artifacts: Vec<Artifact> = Vec::new();
    let mut results = Vec::new();
    let mut checks = Vec::new();

    for &(name, text) in SUITE {
        let sub = dir.join(name);
        let outcome = load_bundled(name, text, opts).and_then(|s| crate::run_scenario(&s, &sub));
        let prefix = |p: &str| format!("{name}/{p}");
        let result = match outcome {
            Ok(m) => {
                artifacts.extend(m.artifacts.iter().map(|a| Artifact { path: prefix(&a.path), ..a.clone() }));
                let bytes = std::fs::read(sub.join(output::MANIFEST_FILE))
                    .map_err(|source| CliError::Write { path: sub.clone(), source })?;
                artifacts.push(output::write_artifact(dir, &prefix(output::MANIFEST_FILE), &bytes)?);
                ScenarioResult {
                    name: name.to_string(),
                    status: m.summary.status,
                    checks: m
                        .summary
                        .checks
                        .iter()
                        .map(|c| Check { artifact: prefix(&c.artifact), ..c.clone() })
                        .collect(),
                    error: None,
                }
            }
            Err(e) => {
                if let Ok(bytes) = std::fs::read(sub.join("error.json")) {
                    artifacts.push(output::write_artifact(dir, &prefix("error.json"), &bytes)?);
                }
                ScenarioResult {
                    name: name.to_string(),
                    status: Status::Fail,
                    checks: Vec::new(),
                    error: Some(e.to_json()),
                }
            }
        };
        checks
            .extend(result.checks.iter().map(|c| Check { name: format!("{name}: {}", c.name), ..c.clone() }));
        results.push(result);
    }

    let status = if results.iter().all(|r| r.status == Status::Pass) { Status::Pass } else { Status::Fail };
    let summary = Summary { status, checks, scenarios: results };
    artifacts.push(output::write_artifact(dir, "summary.json", &output::json_bytes(&summary))?);
    artifacts.push(output::write_artifact(dir, "summary.txt", summary.render("reference suite").as_bytes())?);

    let manifest = RunManifest {
        scenario: serde_json::json!({
            "suite": SUITE.iter().map(|(n, _)| *n).collect::<Vec<_>>(),
            "dt_scale": opts.dt_scale,
        }),
        library_version: thermoaffine_core::VERSION.to_string(),
        cli_version: env!("CARGO_PKG_VERSION").to_string(),
        wall_time_seconds: start.elapsed().as_secs_f64(),
        artifacts,
        summary,
    };
    output::write_artifact(dir, output::MANIFEST_FILE, &output::json_bytes(&manifest))?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_bundled_scenario_parses_and_is_named_after_its_file() {
        for &(name, text) in SUITE {
            let s = Scenario::parse(text).unwrap_or_else(|e| panic!("{name}: {e}"));
            assert_eq!(s.name.as_deref(), Some(name));
        }
    }

    #[test]
    fn every_scenario_file_is_bundled() {
        let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios");
        let mut files: Vec<String> = std::fs::read_dir(dir)
            .unwrap()
            .map(|e| e.unwrap().file_name().to_string_lossy().trim_end_matches(".json").to_string())
            .collect();
        files.sort();
        let mut bundled: Vec<String> = SUITE.iter().map(|(n, _)| n.to_string()).collect();
        bundled.sort();
        assert_eq!(files, bundled);
    }

    #[test]
    fn dt_scale_multiplies_the_step() {
        let (name, text) = SUITE.iter().find(|(n, _)| *n == "relax_ising").unwrap();
        let s = load_bundled(name, text, &SuiteOptions { dt_scale: 100.0 }).unwrap();
        let cfg = s.integrator.unwrap();
        assert!((cfg.dt - 0.1).abs() < 1e-15);
        assert_eq!(cfg.record_every, 1);
    }
}
