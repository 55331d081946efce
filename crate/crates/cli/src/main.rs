use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use thermoaffine::{emit_reference_suite, resolve_output_dir, CliError, Scenario, Status, SuiteOptions};

/// Run a thermoaffine scenario or the bundled reference suite.
///
/// Artifacts go to --out, else the scenario's `output_dir`, else
/// $THERMOAFFINE_OUT. Exit codes: 0 success, 2 validation, 3 domain,
/// 4 numeric failure (including failed checks).
#[derive(Debug, Parser)]
#[command(name = "thermoaffine", version)]
struct Args {
    /// Scenario JSON file.
    #[arg(long, value_name = "PATH", required_unless_present = "suite", conflicts_with = "suite")]
    scenario: Option<PathBuf>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Run every bundled reference scenario into an empty directory.
    #[arg(long)]
    suite: bool,
    /// Multiply every integrator step by this factor (suite only).
    #[arg(long, value_name = "FACTOR", default_value_t = 1.0, requires = "suite")]
    dt_scale: f64,
    /// Print nothing on success.
    #[arg(long)]
    quiet: bool,
}

fn fail(e: &CliError) -> ExitCode {
    eprintln!("{}", serde_json::to_string_pretty(&e.to_json()).expect("json"));
    ExitCode::from(e.exit_code() as u8)
}

fn main() -> ExitCode {
    let args = Args::parse();
    let result = if args.suite {
        resolve_output_dir(args.out.as_deref(), None)
            .and_then(|dir| emit_reference_suite(&dir, &SuiteOptions { dt_scale: args.dt_scale }))
    } else {
        let path = args.scenario.expect("clap enforces --scenario");
        Scenario::load(&path).and_then(|s| {
            let dir = resolve_output_dir(args.out.as_deref(), Some(&s))?;
            thermoaffine::run_scenario(&s, &dir)
        })
    };
    match result {
        Ok(m) => {
            if !args.quiet {
                print!("{}", m.summary.render(if args.suite { "reference suite" } else { "scenario" }));
            }
            if m.summary.status == Status::Fail {
                let failed =
                    m.summary.failed() + m.summary.scenarios.iter().filter(|s| s.error.is_some()).count();
                return fail(&CliError::ChecksFailed { failed });
            }
            ExitCode::SUCCESS
        }
        Err(e) => fail(&e),
    }
}
