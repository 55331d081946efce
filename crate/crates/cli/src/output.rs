//! Artifact files, content hashes, checks and the run manifest.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

/// 17 significant digits, enough to round-trip any `f64`.
pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn nums(v: &[f64]) -> impl Iterator<Item = String> + '_ {
    v.iter().map(|&x| num(x))
}

/// Column names `prefix0, prefix1, …`.
pub fn indexed(prefix: &str, n: usize) -> impl Iterator<Item = String> + '_ {
    (0..n).map(move |i| format!("{prefix}{i}"))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Artifact {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

/// Writes one file and returns its manifest entry. `rel` is relative to `root`.
pub fn write_artifact(root: &Path, rel: &str, bytes: &[u8]) -> Result<Artifact> {
    let path = root.join(rel);
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)
            .map_err(|source| CliError::Write { path: parent.to_path_buf(), source })?;
    }
    std::fs::write(&path, bytes).map_err(|source| CliError::Write { path: path.clone(), source })?;
    Ok(Artifact {
        path: rel.replace('\\', "/"),
        sha256: hex::encode(Sha256::digest(bytes)),
        bytes: bytes.len() as u64,
    })
}

pub fn csv_bytes<I, R>(header: impl IntoIterator<Item = String>, rows: I) -> Vec<u8>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    let header: Vec<String> = header.into_iter().collect();
    w.write_record(&header).expect("writing to memory");
    for row in rows {
        w.write_record(row.into_iter().collect::<Vec<_>>()).expect("writing to memory");
    }
    w.into_inner().expect("flushing to memory")
}

pub fn json_bytes<T: Serialize + ?Sized>(value: &T) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(value).expect("json values serialize");
    out.push(b'\n');
    out
}

/// Collects the files written by one command.
#[derive(Debug)]
pub struct ArtifactSet {
    root: PathBuf,
    pub files: Vec<Artifact>,
}

impl ArtifactSet {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into(), files: Vec::new() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn csv<I, R>(&mut self, name: &str, header: impl IntoIterator<Item = String>, rows: I) -> Result<()>
    where
        I: IntoIterator<Item = R>,
        R: IntoIterator<Item = String>,
    {
        let a = write_artifact(&self.root, name, &csv_bytes(header, rows))?;
        self.files.push(a);
        Ok(())
    }

    pub fn json<T: Serialize + ?Sized>(&mut self, name: &str, value: &T) -> Result<()> {
        let a = write_artifact(&self.root, name, &json_bytes(value))?;
        self.files.push(a);
        Ok(())
    }

    pub fn push(&mut self, a: Artifact) {
        self.files.push(a);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Status {
    #[serde(rename = "PASS")]
    Pass,
    #[serde(rename = "FAIL")]
    Fail,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
        })
    }
}

/// One expectation: `value ≤ tol`, or an exact match when `expected` is set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: serde_json::Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expected: Option<serde_json::Value>,
    pub pass: bool,
    /// File the value was computed from.
    pub artifact: String,
}

impl Check {
    pub fn within(name: &str, value: f64, tol: f64, artifact: &str) -> Self {
        Self {
            name: name.into(),
            value: value.into(),
            tol: Some(tol),
            expected: None,
            pass: value <= tol,
            artifact: artifact.into(),
        }
    }

    pub fn equals<T: Serialize + PartialEq>(name: &str, value: T, expected: T, artifact: &str) -> Self {
        let pass = value == expected;
        Self {
            name: name.into(),
            value: serde_json::to_value(value).expect("serializable"),
            tol: None,
            expected: Some(serde_json::to_value(expected).expect("serializable")),
            pass,
            artifact: artifact.into(),
        }
    }

    pub fn line(&self) -> String {
        let value = match &self.value {
            serde_json::Value::Number(n) if n.is_f64() => format!("{:.3e}", n.as_f64().unwrap_or(f64::NAN)),
            other => other.to_string(),
        };
        let bound = match (&self.tol, &self.expected) {
            (Some(t), _) => format!(" <= {t:.1e}"),
            (None, Some(e)) => format!(" == {e}"),
            _ => String::new(),
        };
        format!(
            "{}  {}: {value}{bound}  [{}]",
            if self.pass { "PASS" } else { "FAIL" },
            self.name,
            self.artifact
        )
    }
}

/// Per-scenario result inside a suite summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioResult {
    pub name: String,
    pub status: Status,
    pub checks: Vec<Check>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<serde_json::Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub status: Status,
    pub checks: Vec<Check>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub scenarios: Vec<ScenarioResult>,
}

impl Summary {
    pub fn from_checks(checks: Vec<Check>) -> Self {
        let status = if checks.iter().all(|c| c.pass) { Status::Pass } else { Status::Fail };
        Self { status, checks, scenarios: Vec::new() }
    }

    pub fn failed(&self) -> usize {
        self.checks.iter().filter(|c| !c.pass).count()
    }

    pub fn render(&self, title: &str) -> String {
        let mut out = format!("{}  {title}\n", self.status);
        for s in &self.scenarios {
            out += &format!("{}  {}\n", s.status, s.name);
            if let Some(e) = &s.error {
                out += &format!("      error: {}\n", e["error"]["message"].as_str().unwrap_or("unknown"));
            }
            for c in &s.checks {
                out += &format!("      {}\n", c.line());
            }
        }
        if self.scenarios.is_empty() {
            for c in &self.checks {
                out += &format!("  {}\n", c.line());
            }
        }
        out
    }
}

/// Record of one run: what was asked, what was written, what was found.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub scenario: serde_json::Value,
    pub library_version: String,
    pub cli_version: String,
    pub wall_time_seconds: f64,
    pub artifacts: Vec<Artifact>,
    pub summary: Summary,
}

pub const MANIFEST_FILE: &str = "manifest.json";
