//! Batch command-line driver: `hodohj <command> --config <path> [--out <dir>]
//! [--workers N] [--override key=value ...]`.
//!
//! Exit codes are 0 on success, 2 on invalid input or runtime failure, and 3
//! when a tolerance gate declared in the config fails.

pub mod commands;
pub mod config;
pub mod error;
pub mod report;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, ValueEnum};

pub use commands::{dispatch, Command, Outcome};
pub use config::{load_config, parse_config, RunConfig};
pub use error::{CliError, CliResult, EXIT_ERROR, EXIT_GATE};
pub use report::RunReport;

#[derive(Clone, Copy, Debug, ValueEnum)]
enum CommandArg {
    Solve,
    Verify,
    Transform,
    Conjugate,
    Compare,
    RankMap,
}

impl From<CommandArg> for Command {
    fn from(c: CommandArg) -> Self {
        match c {
            CommandArg::Solve => Command::Solve,
            CommandArg::Verify => Command::Verify,
            CommandArg::Transform => Command::Transform,
            CommandArg::Conjugate => Command::Conjugate,
            CommandArg::Compare => Command::Compare,
            CommandArg::RankMap => Command::RankMap,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "hodohj", version, about = "Implicit Hamilton-Jacobi solutions via the hodograph transformation")]
struct Args {
    #[arg(value_enum)]
    command: CommandArg,

    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,

    /// Output directory (overrides output.dir).
    #[arg(long)]
    out: Option<PathBuf>,

    /// Worker threads; results do not depend on this.
    #[arg(long)]
    workers: Option<usize>,

    /// Dotted config key and TOML value, e.g. solver.max_iter=20.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

fn execute(args: Args) -> CliResult<Outcome> {
    let mut cfg = load_config(&args.config, &args.overrides)?;
    if let Some(out) = args.out {
        cfg.output.dir = out;
    }
    let command = Command::from(args.command);
    match args.workers {
        Some(0) => Err(CliError::validation("--workers", "must be at least 1")),
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build()
            .map_err(|e| CliError::validation("--workers", e.to_string()))?
            .install(|| dispatch(command, &cfg)),
        None => dispatch(command, &cfg),
    }
}

/// Parses `argv`, runs the command and returns the process exit code.
/// Diagnostics for nonzero codes go to stderr.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = match Args::try_parse_from(argv) {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(args) {
        Ok(outcome) => {
            if outcome.exit_code != 0 {
                for g in outcome.report.gates.iter().filter(|g| !g.passed) {
                    let value = g.value.map_or("none".to_string(), |v| format!("{v:e}"));
                    eprintln!("hodohj: gate '{}' failed: {value} > {:e} {}", g.name, g.threshold, g.detail);
                }
            }
            outcome.exit_code
        }
        Err(e) => {
            eprintln!("hodohj: error: {e}");
            EXIT_ERROR
        }
    }
}
