//! Command-line front end: scenario files in, JSON reports or CSV out.
//!
//! ```text
//! relpos run <file> [--seed N] [--mode M] [--output PATH] [--quiet]
//! relpos validate <file> [--mode M] [--quiet]
//! relpos export-csv <file> [--seed N] [--mode M] [--output PATH] [--quiet]
//! ```
//!
//! Exit codes: 0 success, 1 a solve raised an error, 2 bad input.

pub mod export;
pub mod report;
pub mod run;
pub mod scenario;

use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

pub use report::Report;
pub use run::{run, run_at};
pub use scenario::{parse_scenario, parse_scenario_str, Mode, ScenarioFile};

pub const EXIT_OK: i32 = 0;
pub const EXIT_SOLVE_ERROR: i32 = 1;
pub const EXIT_INPUT_ERROR: i32 = 2;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum CliError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },

    #[error("invalid field `{field}`: {message}")]
    Validation { field: String, message: String },

    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

#[derive(Debug, Parser)]
#[command(name = "relpos", version, about = "Relative positioning scenarios: TDOA, trilateration, Doppler")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve a scenario and write the JSON report.
    Run(RunArgs),
    /// Check a scenario file without solving it.
    Validate(CommonArgs),
    /// Solve a scenario and write one CSV row per trial.
    ExportCsv(RunArgs),
}

#[derive(Debug, Args)]
struct CommonArgs {
    file: PathBuf,
    /// Override `solve.mode`.
    #[arg(long)]
    mode: Option<Mode>,
    /// Suppress the summary on stderr.
    #[arg(long)]
    quiet: bool,
}

#[derive(Debug, Args)]
struct RunArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Override `scenario.seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Write here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
}

fn load(args: &CommonArgs, seed: Option<u64>) -> Result<ScenarioFile, CliError> {
    let mut file = scenario::read_scenario(&args.file)?;
    if let Some(mode) = args.mode {
        file.solve.mode = mode;
    }
    if let Some(seed) = seed {
        file.scenario.seed = seed;
    }
    file.validate()?;
    Ok(file)
}

fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    match path {
        Some(p) => File::create(p)
            .map(|f| Box::new(f) as Box<dyn Write>)
            .map_err(|e| CliError::Io { path: p.display().to_string(), message: e.to_string() }),
        None => Ok(Box::new(io::stdout().lock())),
    }
}

fn summary(report: &Report) -> String {
    let failed = report.solves.iter().filter(|s| s.error.is_some()).count();
    let mut line = format!("{}: {} solve(s), {} failed", report.mode, report.solves.len(), failed);
    if let Some(mc) = &report.monte_carlo {
        for level in &mc.levels {
            let median = level.median_m.map_or("n/a".to_owned(), |m| format!("{m:.3e} m"));
            line.push_str(&format!(
                "\n  sigma_t {:e} s: median error {median} over {} trials ({} failed)",
                level.sigma_t, level.trials, level.failures
            ));
        }
    }
    line
}

fn execute(command: Command) -> Result<i32, CliError> {
    match command {
        Command::Validate(args) => {
            let file = load(&args, None)?;
            if !args.quiet {
                println!(
                    "ok: mode {}, {} emitter(s), {} receiver(s)",
                    file.solve.mode,
                    file.scenario.emitters.len(),
                    file.scenario.receivers.len()
                );
            }
            Ok(EXIT_OK)
        }
        Command::Run(args) => solve_and_write(&args, false),
        Command::ExportCsv(args) => solve_and_write(&args, true),
    }
}

fn solve_and_write(args: &RunArgs, csv: bool) -> Result<i32, CliError> {
    let file = load(&args.common, args.seed)?;
    let report = run(&file);
    let target = args.output.as_deref();
    let io_err = |e: String| CliError::Io {
        path: target.map_or("<stdout>".to_owned(), |p| p.display().to_string()),
        message: e,
    };
    let mut out = open_output(target)?;
    if csv {
        export::write_csv(&report, &mut out).map_err(|e| io_err(e.to_string()))?;
    } else {
        writeln!(out, "{}", report.to_json()).map_err(|e| io_err(e.to_string()))?;
    }
    out.flush().map_err(|e| io_err(e.to_string()))?;
    if !args.common.quiet {
        eprintln!("{}", summary(&report));
    }
    Ok(if report.has_errors() { EXIT_SOLVE_ERROR } else { EXIT_OK })
}

/// Parses `args` (including the program name) and runs the command,
/// returning the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT_ERROR } else { EXIT_OK };
        }
    };
    match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_INPUT_ERROR
        }
    }
}
