use std::path::PathBuf;
use std::process::ExitCode;

use binary_povm_cli::{parse_scenario_with, run, CliError, Overrides, RunReport, Status};
use clap::{Parser, ValueEnum};

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Json,
    Csv,
}

/// Run a binary-POVM scenario file and print its report.
///
/// Exit codes: 0 success, 1 FAILED residuals, 2 input error.
#[derive(Debug, Parser)]
#[command(name = "binpovm", version)]
struct Args {
    /// Scenario file (JSON).
    scenario: PathBuf,
    /// Override the scenario's shot count.
    #[arg(long)]
    shots: Option<u64>,
    /// Override the scenario's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Write the report here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

fn execute(args: &Args) -> Result<RunReport, CliError> {
    let overrides = Overrides {
        shots: args.shots,
        seed: args.seed,
    };
    let scenario = parse_scenario_with(&args.scenario, overrides)?;
    let report = run(&scenario)?;
    let text = match args.format {
        Format::Json => report.to_json()? + "\n",
        Format::Csv => report.to_csv()?,
    };
    match &args.out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CliError::Output(format!("{}: {e}", path.display())))?,
        None => print!("{text}"),
    }
    Ok(report)
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match execute(&args) {
        Ok(report) if report.status == Status::Ok => ExitCode::SUCCESS,
        Ok(report) => {
            for failure in &report.failures {
                eprintln!("FAILED: {failure}");
            }
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
