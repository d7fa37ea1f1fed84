//! Command-line harness: configuration files, run orchestration and the
//! CSV/summary outputs of the `smsplit` binary.

pub mod app;
pub mod config;
pub mod error;
pub mod harness;
pub mod output;

pub use app::{run_cli, Invocation};
pub use config::{parse_config, parse_convergence_config, ConvergenceConfig, RunConfig, ScenarioKind};
pub use error::{HarnessError, Result};
pub use harness::{cfl_report, convergence, rates_report, run, ConvergenceOutcome, RunOutcome};
