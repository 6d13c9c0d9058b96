//! Command-line front end: configuration parsing with a small
//! coefficient-expression language, command dispatch and byte-stable
//! output.
//!
//! * [`expr`] parses and evaluates complex expressions in `x` and `t`.
//! * [`config`] reads the nested key/value configuration format.
//! * [`commands`] implements `validate`, `solve`, `eigs`, `identities`
//!   and `compare`.
//! * [`emit`] formats CSV and JSON output.

pub mod commands;
pub mod config;
pub mod emit;
pub mod error;
pub mod expr;
pub mod spline;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::Parser;

use crate::commands::{Command, OracleKind, Overrides};
use crate::config::Grid;
use crate::error::CliError;

/// Solve, analyse and cross-check variable-coefficient diffusion problems.
#[derive(Debug, Parser)]
#[command(name = "utm", version)]
pub struct Cli {
    #[arg(value_enum)]
    pub command: Command,
    /// Problem configuration file.
    #[arg(long, value_name = "PATH")]
    pub config: PathBuf,
    /// Directory for output files; stdout when absent.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Output grid "nx,nt,xa,xb,ta,tb".
    #[arg(long, value_name = "SPEC")]
    pub grid: Option<Grid>,
    /// Number of eigenvalues.
    #[arg(long, value_name = "M")]
    pub count: Option<usize>,
    /// Fixed truncation Δ_N (accumulation levels 0..=2N).
    #[arg(long, value_name = "N")]
    pub nmax: Option<usize>,
    /// Reference solver for `compare`.
    #[arg(long, value_enum)]
    pub oracle: Option<OracleKind>,
    /// Seed for the randomised identity checks.
    #[arg(long, value_name = "S", default_value_t = commands::DEFAULT_SEED)]
    pub seed: u64,
}

/// Runs the CLI. Output files go to `--out` (or `output.dir`) or are
/// concatenated on `stdout`; failures are one JSON object on `stderr`.
/// Returns the process exit code.
pub fn execute<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = write!(stdout, "{e}");
            return 0;
        }
        Err(e) => return report(stderr, &CliError::Usage(e.to_string().trim_end().to_string())),
    };
    match run(&cli, stdout) {
        Ok(None) => 0,
        Ok(Some(e)) | Err(e) => report(stderr, &e),
    }
}

fn report(stderr: &mut dyn Write, e: &CliError) -> i32 {
    let _ = writeln!(stderr, "{}", e.to_json());
    match e {
        CliError::Usage(_) => 2,
        _ => 1,
    }
}

fn run(cli: &Cli, stdout: &mut dyn Write) -> Result<Option<CliError>, CliError> {
    let cfg = config::parse_config(&cli.config)?;
    let ov = Overrides { grid: cli.grid, count: cli.count, nmax: cli.nmax, oracle: cli.oracle, seed: cli.seed };
    let outcome = commands::run(cli.command, &cfg, &ov)?;
    match cli.out.as_ref().or(cfg.output.dir.as_ref()) {
        Some(dir) => {
            std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
            for a in &outcome.artifacts {
                let path = dir.join(a.name);
                std::fs::write(&path, &a.contents).map_err(|e| CliError::io(&path, e))?;
            }
        }
        None => {
            for a in &outcome.artifacts {
                stdout.write_all(a.contents.as_bytes()).map_err(|e| CliError::io("<stdout>", e))?;
            }
        }
    }
    Ok(outcome.failure)
}
