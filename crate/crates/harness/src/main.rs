use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use qbundle_harness::checks::REGISTRY;
use qbundle_harness::suite::thread_pool_from_env;
use qbundle_harness::{emit_report, parse_scenario, run_suite, Format, ScenarioSpec};

const EXIT_FAILED_CHECK: u8 = 1;
const EXIT_USAGE: u8 = 2;

#[derive(Parser)]
#[command(name = "qbundle", version, about = "Run verification scenarios for the qbundle engine")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and emit its report.
    Run {
        scenario: PathBuf,
        /// Write the report here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = OutputFormat::JsonLines)]
        format: OutputFormat,
        /// Override the scenario seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the absolute tolerance.
        #[arg(long)]
        tol: Option<f64>,
        /// Override the number of time steps.
        #[arg(long)]
        steps: Option<usize>,
    },
    /// List every check with the identity it verifies.
    ListChecks,
    /// Parse and validate a scenario without running it.
    Validate { scenario: PathBuf },
}

#[derive(Clone, Copy, ValueEnum)]
enum OutputFormat {
    JsonLines,
    CsvSeries,
    HumanSummary,
}

impl From<OutputFormat> for Format {
    fn from(f: OutputFormat) -> Self {
        match f {
            OutputFormat::JsonLines => Format::JsonLines,
            OutputFormat::CsvSeries => Format::CsvSeries,
            OutputFormat::HumanSummary => Format::HumanSummary,
        }
    }
}

fn load(path: &Path) -> Result<ScenarioSpec, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    parse_scenario(&text).map_err(|e| format!("{}: {e}", path.display()))
}

fn run(cli: Cli) -> Result<u8, String> {
    match cli.command {
        Command::ListChecks => {
            let mut out = io::stdout().lock();
            for check in &REGISTRY {
                writeln!(out, "{:<28} {}", check.name, check.formula).map_err(|e| e.to_string())?;
            }
            Ok(0)
        }
        Command::Validate { scenario } => {
            let spec = load(&scenario)?;
            println!("ok {} ({} checks)", spec.digest(), spec.checks.len());
            Ok(0)
        }
        Command::Run { scenario, out, format, seed, tol, steps } => {
            let spec = load(&scenario)?.with_overrides(seed, tol, steps).map_err(|e| e.to_string())?;
            let report = match thread_pool_from_env()? {
                Some(pool) => pool.install(|| run_suite(&spec)),
                None => run_suite(&spec),
            };
            let mut buf = Vec::new();
            emit_report(&report, format.into(), &mut buf).map_err(|e| e.to_string())?;
            match out {
                Some(path) => fs::write(&path, &buf).map_err(|e| format!("{}: {e}", path.display()))?,
                None => io::stdout().lock().write_all(&buf).map_err(|e| e.to_string())?,
            }
            for failed in report.failed() {
                eprintln!("check failed: {} ({})", failed.name, failed.detail.as_deref().unwrap_or("residual above threshold"));
            }
            Ok(if report.pass() { 0 } else { EXIT_FAILED_CHECK })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}
