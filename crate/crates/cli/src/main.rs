use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Parser, Subcommand};

use qbtransfer::Scenario;
use qbtransfer_cli::runner::{default_sweep_g, DEFAULT_SWEEP_SIGMA};
use qbtransfer_cli::{
    run_scenario, run_sweep, verify, CliError, PartialConfig, RunConfig, SweepConfig,
    EXIT_TOLERANCE, EXIT_USAGE,
};

#[derive(Parser)]
#[command(
    name = "qbtransfer",
    version,
    about = "Energy transfer between two-level systems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one scenario and write traces and a report
    Run {
        /// TOML file with run settings; flags override it
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        overrides: Box<PartialConfig>,
    },
    /// Tabulate transfer times against the coupling strength
    Sweep {
        #[arg(long, value_delimiter = ',', value_parser = parse_scenario)]
        scenarios: Option<Vec<Scenario>>,
        /// Couplings g / omega_b
        #[arg(long = "g", value_delimiter = ',')]
        g_values: Option<Vec<f64>>,
        /// Two-step delay omega_b sigma
        #[arg(long, default_value_t = DEFAULT_SWEEP_SIGMA)]
        sigma: f64,
        /// Cross-check every point by exact propagation
        #[arg(long)]
        numeric: bool,
        /// CSV destination; standard output when absent
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Compare closed-form and numerical results and print pass/fail
    Verify,
}

fn parse_scenario(s: &str) -> Result<Scenario, String> {
    Scenario::from_str(s).map_err(|e| e.to_string())
}

fn warn(lines: &[String]) {
    for line in lines {
        eprintln!("warning: {line}");
    }
}

fn execute(command: Command) -> Result<(), CliError> {
    match command {
        Command::Run { config, overrides } => {
            let base = match config {
                Some(path) => PartialConfig::load(&path)?,
                None => PartialConfig::default(),
            };
            let config = RunConfig::resolve(base.merge(*overrides))?;
            let outcome = run_scenario(&config)?;
            warn(&outcome.report.warnings);
            for r in &outcome.report.results {
                println!(
                    "{}: g t_b_max = {:.12}, E_B/omega_b = {:.12}{}",
                    r.method,
                    r.g_t_b_max,
                    r.e_b_max,
                    if r.no_interior_maximum {
                        " (no interior maximum)"
                    } else {
                        ""
                    }
                );
            }
            Ok(())
        }
        Command::Sweep {
            scenarios,
            g_values,
            sigma,
            numeric,
            output,
        } => {
            let config = SweepConfig {
                scenarios: scenarios.unwrap_or_else(|| Scenario::ALL.to_vec()),
                g_values: g_values.unwrap_or_else(default_sweep_g),
                sigma,
                numeric,
            };
            let outcome = run_sweep(&config)?;
            warn(&outcome.warnings);
            match output {
                Some(path) => {
                    let mut w = BufWriter::new(File::create(path)?);
                    outcome.write_csv(&mut w)?;
                    w.flush()?;
                }
                None => outcome.write_csv(io::stdout().lock())?,
            }
            if outcome.failures.is_empty() {
                Ok(())
            } else {
                Err(CliError::Tolerance(outcome.failures.join("; ")))
            }
        }
        Command::Verify => {
            let checks = verify();
            for c in &checks {
                println!(
                    "{} {}: {}",
                    if c.passed { "PASS" } else { "FAIL" },
                    c.name,
                    c.detail
                );
            }
            let failed = checks.iter().filter(|c| !c.passed).count();
            if failed == 0 {
                Ok(())
            } else {
                Err(CliError::Tolerance(format!(
                    "{failed} of {} checks failed",
                    checks.len()
                )))
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let code = e.exit_code();
            debug_assert!(code == EXIT_USAGE || code == EXIT_TOLERANCE);
            ExitCode::from(code as u8)
        }
    }
}
