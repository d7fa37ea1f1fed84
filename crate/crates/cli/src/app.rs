//! Argument parsing and dispatch of the `smsplit` binary.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::config;
use crate::error::HarnessError;
use crate::harness;

#[derive(Parser)]
#[command(name = "smsplit", version, about = "Stefan–Maxwell transport-reaction splitting solver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write trajectory.csv, summary.txt and probe.csv.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the convergence study against the (190, 80000) iter3 reference.
    Convergence {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the Arrhenius rates at electron temperature Te.
    Rates {
        #[arg(long = "Te", allow_negative_numbers = true)]
        te: f64,
    },
    /// Check the explicit-diffusion step bound for a grid.
    Cfl {
        #[arg(long, value_parser = config::parse_grid)]
        grid: (usize, usize),
        #[arg(long)]
        scenario: String,
    },
}

/// Exit code and captured output of one invocation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Invocation {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

fn read(path: &Path) -> Result<String, HarnessError> {
    std::fs::read_to_string(path).map_err(|source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Runs a command; `Ok` and `Err` both carry the text for stdout.
fn execute(command: Command) -> Result<String, (String, HarnessError)> {
    let plain = |e: HarnessError| (String::new(), e);
    match command {
        Command::Run { config, out } => {
            let cfg = config::parse_config(&read(&config).map_err(plain)?).map_err(plain)?;
            let outcome = harness::run(&cfg, out.as_deref()).map_err(plain)?;
            Ok(format!(
                "{} snapshots written to {}\n",
                outcome.trajectory.len(),
                outcome.out_dir.display()
            ))
        }
        Command::Convergence { config, workers, out } => {
            let cfg = config::parse_convergence_config(&read(&config).map_err(plain)?).map_err(plain)?;
            let outcome = harness::convergence(&cfg, workers, out.as_deref()).map_err(plain)?;
            Ok(format!(
                "{} tableau rows written to {}\n",
                outcome.rows.len(),
                outcome.out_dir.join("tableau.csv").display()
            ))
        }
        Command::Rates { te } => harness::rates_report(te).map_err(plain),
        Command::Cfl { grid, scenario } => {
            let (report, ok) = harness::cfl_report(grid, &scenario).map_err(plain)?;
            if ok {
                Ok(report)
            } else {
                let e = HarnessError::Validation(format!("grid {}x{} violates the CFL bound", grid.0, grid.1));
                Err((report, e))
            }
        }
    }
}

/// Parses `args` (including the program name) and runs the command.
/// Exit codes: 0 success, 1 validation (including usage), 2 solver, 3 I/O.
pub fn run_cli<I, T>(args: I) -> Invocation
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                Invocation {
                    code: 1,
                    stdout: String::new(),
                    stderr: text,
                }
            } else {
                Invocation {
                    code: 0,
                    stdout: text,
                    stderr: String::new(),
                }
            };
        }
    };
    match execute(cli.command) {
        Ok(stdout) => Invocation {
            code: 0,
            stdout,
            stderr: String::new(),
        },
        Err((stdout, e)) => Invocation {
            code: e.exit_code(),
            stdout,
            stderr: format!("error: {e}\n"),
        },
    }
}
