//! Scenario runner for `thermoaffine-core`.
//!
//! A scenario is a JSON file naming a command, a model (or a pair of
//! branches), sample points and optional expectations. [`run`] executes it
//! and writes CSV/JSON artifacts plus a `manifest.json` that lists every file
//! with its SHA-256. [`emit_reference_suite`] runs the bundled reference
//! scenarios into one directory each and writes a PASS/FAIL summary.

pub mod commands;
pub mod error;
pub mod output;
pub mod scenario;
pub mod suite;

use std::path::{Path, PathBuf};
use std::time::Instant;

pub use error::{CliError, Result};
pub use output::{Artifact, Check, RunManifest, Status, Summary};
pub use scenario::{Command, Scenario};
pub use suite::{emit_reference_suite, SuiteOptions};

/// Environment variable holding the default output directory.
pub const OUT_DIR_ENV: &str = "THERMOAFFINE_OUT";

/// `--out` wins, then the scenario's `output_dir`, then [`OUT_DIR_ENV`].
pub fn resolve_output_dir(flag: Option<&Path>, scenario: Option<&Scenario>) -> Result<PathBuf> {
    if let Some(p) = flag {
        return Ok(p.to_path_buf());
    }
    if let Some(p) = scenario.and_then(|s| s.output_dir.clone()) {
        return Ok(p);
    }
    match std::env::var_os(OUT_DIR_ENV) {
        Some(v) if !v.is_empty() => Ok(PathBuf::from(v)),
        _ => Err(CliError::NoOutputDir),
    }
}

/// Loads and runs the scenario at `path`.
pub fn run(path: &Path, out: Option<&Path>) -> Result<RunManifest> {
    let s = Scenario::load(path)?;
    let dir = resolve_output_dir(out, Some(&s))?;
    run_scenario(&s, &dir)
}

/// Runs a parsed scenario into `dir`. On failure an `error.json` is left in
/// `dir` when it can be written.
pub fn run_scenario(s: &Scenario, dir: &Path) -> Result<RunManifest> {
    let result = run_inner(s, dir);
    if let Err(e) = &result {
        let _ = output::write_artifact(dir, "error.json", &output::json_bytes(&e.to_json()));
    }
    result
}

fn run_inner(s: &Scenario, dir: &Path) -> Result<RunManifest> {
    let start = Instant::now();
    s.validate()?;
    std::fs::create_dir_all(dir).map_err(|source| CliError::Write { path: dir.to_path_buf(), source })?;
    let mut set = output::ArtifactSet::new(dir);
    set.json("scenario.json", s)?;
    let checks = commands::execute(s, &mut set)?;
    let summary = Summary::from_checks(checks);
    set.json("summary.json", &summary)?;
    let text = summary.render(&s.label());
    set.push(output::write_artifact(dir, "summary.txt", text.as_bytes())?);

    let manifest = RunManifest {
        scenario: serde_json::to_value(s).expect("scenario serializes"),
        library_version: thermoaffine_core::VERSION.to_string(),
        cli_version: env!("CARGO_PKG_VERSION").to_string(),
        wall_time_seconds: start.elapsed().as_secs_f64(),
        artifacts: set.files,
        summary,
    };
    output::write_artifact(dir, output::MANIFEST_FILE, &output::json_bytes(&manifest))?;
    Ok(manifest)
}
