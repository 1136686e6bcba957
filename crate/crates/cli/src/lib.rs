//! Command-line front end: single scenario runs, transfer-time sweeps and a
//! self-verification suite, writing plain CSV and JSON files.

pub mod config;
pub mod output;
pub mod runner;

pub use config::{Method, PartialConfig, RunConfig};
pub use runner::{run_scenario, run_sweep, verify, Check, RunOutcome, SweepConfig, SweepOutcome};

/// Exit status for invalid input.
pub const EXIT_USAGE: i32 = 1;
/// Exit status when results disagree beyond the configured tolerance.
pub const EXIT_TOLERANCE: i32 = 2;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("tolerance breach: {0}")]
    Tolerance(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Core(#[from] qbtransfer::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Tolerance(_) | CliError::Core(qbtransfer::Error::Accuracy { .. }) => {
                EXIT_TOLERANCE
            }
            _ => EXIT_USAGE,
        }
    }
}
