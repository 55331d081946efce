use std::path::PathBuf;

use serde_json::{json, Value};
use thermoaffine_core::error::ErrorCategory;

/// Everything that can stop a run, mapped onto the process exit codes.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("cannot read scenario {path}: {source}")]
    ReadScenario { path: PathBuf, source: std::io::Error },
    #[error("scenario does not match the schema: {0}")]
    Schema(String),
    #[error("no output directory: pass --out, set `output_dir` or THERMOAFFINE_OUT")]
    NoOutputDir,
    #[error("output directory {0} is not empty")]
    OutputNotEmpty(PathBuf),
    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Core(#[from] thermoaffine_core::Error),
    #[error("{failed} check(s) failed")]
    ChecksFailed { failed: usize },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) => match e.category() {
                ErrorCategory::Validation => 2,
                ErrorCategory::Domain => 3,
                ErrorCategory::Numeric => 4,
            },
            CliError::ChecksFailed { .. } => 4,
            _ => 2,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self.exit_code() {
            3 => "domain",
            4 => "numeric",
            _ => "validation",
        }
    }

    /// The offending point for domain errors, when the library reported one.
    pub fn point(&self) -> Option<&[f64]> {
        use thermoaffine_core::Error as E;
        match self {
            CliError::Core(
                E::DomainViolation { point }
                | E::StencilFailure { point, .. }
                | E::DomainExit { point }
                | E::OmegaZeroViolation { point, .. }
                | E::IndefiniteHessian { point },
            ) => Some(point),
            _ => None,
        }
    }

    pub fn to_json(&self) -> Value {
        let mut body = json!({
            "kind": self.kind(),
            "exit_code": self.exit_code(),
            "message": self.to_string(),
        });
        if let Some(p) = self.point() {
            body["point"] = json!(p);
        }
        json!({ "error": body })
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
