use std::f64::consts::PI;
use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use qbtransfer::analytic::{self, transfer_time};
use qbtransfer::{
    compare_traces, energies_from_states, find_first_maximum, locate_first_maximum,
    make_protocol_schedule, propagate_piecewise, propagate_rk4, EnergyTrace, FullState,
    ModelVariant, ProtocolSchedule, ReducedState, Scenario, StateVector, SwitchingSchedule,
    SystemSpec, TauChoice, TimeGrid, TransferReport,
};

use crate::config::{Method, RunConfig};
use crate::output::{suffixed, trace_path, write_sweep, write_trace};
use crate::CliError;

#[derive(Debug, Clone, Serialize)]
pub struct MethodResult {
    pub method: Method,
    pub trace_file: String,
    pub g_t_b_max: f64,
    pub omega_b_t_b_max: f64,
    pub e_b_max: f64,
    pub k_index: u32,
    pub no_interior_maximum: bool,
    pub max_energy_sum: f64,
    /// Largest `| |psi| - 1 |`; absent for closed-form traces.
    pub max_norm_error: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub scenario: Scenario,
    pub variant: &'static str,
    pub g_over_omega_b: f64,
    pub omega_c: f64,
    pub omega_m: Option<f64>,
    pub g_tau: f64,
    pub g_sigma: Option<f64>,
    pub n_samples: usize,
    pub warnings: Vec<String>,
    pub results: Vec<MethodResult>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PairComparison {
    pub a: Method,
    pub b: Method,
    pub max_abs_e_b: f64,
    pub max_abs_e_c: f64,
    pub max_abs_e_m: Option<f64>,
    pub max_abs: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ComparisonReport {
    pub tolerance: f64,
    pub passed: bool,
    pub pairs: Vec<PairComparison>,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub report: RunReport,
    pub comparison: Option<ComparisonReport>,
    pub traces: Vec<(Method, EnergyTrace)>,
}

fn system_warnings(spec: &SystemSpec, protocol: &ProtocolSchedule) -> Vec<String> {
    let mut w = Vec::new();
    if spec.rwa_warning() {
        w.push(format!(
            "g/omega_b = {} exceeds 0.1; the rotating-wave approximation may not hold",
            spec.g()
        ));
    }
    if protocol.separation_warning() {
        w.push("two-step legs are closer than five on-durations".to_string());
    }
    w
}

fn numeric_states<S: StateVector>(
    spec: &SystemSpec,
    protocol: &ProtocolSchedule,
    grid: &TimeGrid,
    method: Method,
    rk4_step: f64,
) -> Result<(EnergyTrace, f64), CliError> {
    let init = S::designated_initial(spec.scenario());
    let states = match method {
        Method::Piecewise => propagate_piecewise(spec, protocol.drive(), grid, &init)?,
        Method::Rk4 => propagate_rk4(spec, protocol.drive(), grid, rk4_step, &init)?.states,
        Method::Analytic => unreachable!("closed-form traces are not propagated"),
    };
    let norm_error = states
        .iter()
        .map(|s| (s.norm() - 1.0).abs())
        .fold(0.0, f64::max);
    Ok((energies_from_states(spec, &states)?, norm_error))
}

fn method_trace(
    config: &RunConfig,
    spec: &SystemSpec,
    protocol: &ProtocolSchedule,
    grid: &TimeGrid,
    method: Method,
) -> Result<(EnergyTrace, Option<f64>), CliError> {
    match method {
        Method::Analytic => Ok((analytic::trace(spec, protocol, grid)?, None)),
        _ if spec.model_variant().is_full() => {
            let (t, n) =
                numeric_states::<FullState>(spec, protocol, grid, method, config.rk4_step)?;
            Ok((t, Some(n)))
        }
        _ => {
            let (t, n) =
                numeric_states::<ReducedState>(spec, protocol, grid, method, config.rk4_step)?;
            Ok((t, Some(n)))
        }
    }
}

/// Computes every selected method without touching the filesystem.
pub fn compute_run(config: &RunConfig) -> Result<RunOutcome, CliError> {
    let spec = config.spec()?;
    let protocol = config.protocol()?;
    let t_end = config.t_end(&protocol)?;
    let grid = TimeGrid::for_drive(0.0, t_end, config.n_samples, &protocol.drive())?;

    let mut traces = Vec::new();
    let mut results = Vec::new();
    for &method in &config.methods {
        let (trace, norm_error) = method_trace(config, &spec, &protocol, &grid, method)?;
        trace
            .check_physical(&spec, method.physical_tolerance())
            .map_err(|e| CliError::Tolerance(format!("{method} trace: {e}")))?;
        let max = find_first_maximum(&trace);
        results.push(MethodResult {
            method,
            trace_file: trace_path(&config.trace, method).display().to_string(),
            g_t_b_max: config.g * max.t_b_max,
            omega_b_t_b_max: max.t_b_max,
            e_b_max: max.e_b_max / spec.omega_b(),
            k_index: max.k_index,
            no_interior_maximum: max.no_interior_maximum,
            max_energy_sum: trace.max_energy_sum(),
            max_norm_error: norm_error,
        });
        traces.push((method, trace));
    }

    let comparison = (traces.len() >= 2)
        .then(|| compare_all(&traces, config.tolerance))
        .transpose()?;

    let report = RunReport {
        scenario: config.scenario,
        variant: config.variant.name(),
        g_over_omega_b: config.g,
        omega_c: config.omega_c,
        omega_m: config.omega_m,
        g_tau: config.g * protocol.tau(),
        g_sigma: protocol.sigma().map(|s| config.g * s),
        n_samples: grid.len(),
        warnings: system_warnings(&spec, &protocol),
        results,
    };
    Ok(RunOutcome {
        report,
        comparison,
        traces,
    })
}

fn compare_all(
    traces: &[(Method, EnergyTrace)],
    tolerance: f64,
) -> Result<ComparisonReport, CliError> {
    let mut pairs = Vec::new();
    for (i, (a, ta)) in traces.iter().enumerate() {
        for (b, tb) in &traces[i + 1..] {
            let c = compare_traces(ta, tb)?;
            pairs.push(PairComparison {
                a: *a,
                b: *b,
                max_abs_e_b: c.max_abs_e_b,
                max_abs_e_c: c.max_abs_e_c,
                max_abs_e_m: c.max_abs_e_m,
                max_abs: c.max(),
                passed: c.passes(tolerance),
            });
        }
    }
    Ok(ComparisonReport {
        tolerance,
        passed: pairs.iter().all(|p| p.passed),
        pairs,
    })
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text =
        serde_json::to_string_pretty(value).map_err(|e| CliError::Io(std::io::Error::other(e)))?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

/// Runs `config`, writes one trace per method, the report and, with two or
/// more methods, a comparison report next to it. Fails with
/// [`CliError::Tolerance`] after writing when the methods disagree.
pub fn run_scenario(config: &RunConfig) -> Result<RunOutcome, CliError> {
    let outcome = compute_run(config)?;
    let omega_b = config.spec()?.omega_b();
    for (method, trace) in &outcome.traces {
        let path = trace_path(&config.trace, *method);
        let mut w = create(&path)?;
        write_trace(&mut w, trace, config.g, omega_b)?;
        std::io::Write::flush(&mut w)?;
    }
    create(&config.report)?;
    write_json(&config.report, &outcome.report)?;
    if let Some(cmp) = &outcome.comparison {
        write_json(&suffixed(&config.report, "comparison"), cmp)?;
        if !cmp.passed {
            let worst = cmp.pairs.iter().map(|p| p.max_abs).fold(0.0, f64::max);
            return Err(CliError::Tolerance(format!(
                "methods differ by {worst:.3e} (tolerance {:.0e})",
                cmp.tolerance
            )));
        }
    }
    Ok(outcome)
}

pub const DEFAULT_SWEEP_SIGMA: f64 = 100.0;
pub const SWEEP_RELATIVE_TOL: f64 = 1e-9;
const SWEEP_SCAN_SAMPLES: usize = 64;

pub fn default_sweep_g() -> Vec<f64> {
    (1..=10).map(|i| f64::from(i) / 100.0).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub scenarios: Vec<Scenario>,
    pub g_values: Vec<f64>,
    /// Two-step delay in units of `1/omega_b`.
    pub sigma: f64,
    /// Also locate each maximum by exact propagation.
    pub numeric: bool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            scenarios: Scenario::ALL.to_vec(),
            g_values: default_sweep_g(),
            sigma: DEFAULT_SWEEP_SIGMA,
            numeric: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub g_over_omega_b: f64,
    pub scenario: Scenario,
    pub omega_b_t_max: f64,
    pub method: Method,
}

#[derive(Debug, Clone, Default)]
pub struct SweepOutcome {
    pub rows: Vec<SweepRow>,
    pub warnings: Vec<String>,
    /// Numeric maxima further than the relative tolerance from the formula.
    pub failures: Vec<String>,
}

impl SweepOutcome {
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> std::io::Result<()> {
        write_sweep(w, &self.rows)
    }
}

/// Couplings held on well past the first maximum; the two-step first leg
/// still lasts exactly one quarter period so the second leg starts from a
/// fully charged mediator.
fn sweep_protocol(scenario: Scenario, g: f64, sigma: f64) -> Result<ProtocolSchedule, CliError> {
    let long = 2.0 * PI / g;
    Ok(match scenario {
        Scenario::TwoStepMediated => ProtocolSchedule::custom(
            scenario,
            SwitchingSchedule::single(0.0, PI / (2.0 * g))?,
            Some(SwitchingSchedule::single(sigma, sigma + long)?),
        )?,
        _ => make_protocol_schedule(scenario, g, TauChoice::Explicit(long), None)?,
    })
}

fn numeric_maximum(scenario: Scenario, g: f64, sigma: f64) -> Result<TransferReport, CliError> {
    let spec = SystemSpec::resonant(scenario, ModelVariant::Reduced, g)?;
    let protocol = sweep_protocol(scenario, g, sigma)?;
    let init = ReducedState::designated_initial(scenario);
    Ok(locate_first_maximum(
        &spec,
        protocol.drive(),
        &init,
        protocol.end(),
        SWEEP_SCAN_SAMPLES,
    )?)
}

/// Transfer times `omega_b t_b_max` for every scenario and coupling, from the
/// closed form and optionally from exact propagation. Points run in parallel;
/// rows keep the input order.
pub fn run_sweep(config: &SweepConfig) -> Result<SweepOutcome, CliError> {
    if config.g_values.is_empty() {
        return Err(CliError::Usage("the coupling list is empty".into()));
    }
    if config.scenarios.is_empty() {
        return Err(CliError::Usage("the scenario list is empty".into()));
    }
    if let Some(g) = config
        .g_values
        .iter()
        .find(|g| !(g.is_finite() && **g > 0.0))
    {
        return Err(CliError::Usage(format!(
            "coupling g must be positive, got {g}"
        )));
    }
    if !(config.sigma.is_finite() && config.sigma >= 0.0) {
        return Err(CliError::Usage(format!(
            "invalid delay sigma = {}",
            config.sigma
        )));
    }
    let points: Vec<(f64, Scenario)> = config
        .g_values
        .iter()
        .flat_map(|&g| config.scenarios.iter().map(move |&s| (g, s)))
        .collect();

    type Point = (Vec<SweepRow>, Vec<String>, Vec<String>);
    let results: Vec<Result<Point, CliError>> = points
        .par_iter()
        .map(|&(g, scenario)| {
            let sigma = (scenario == Scenario::TwoStepMediated).then_some(config.sigma);
            let k = if scenario == Scenario::CoherentMediated { 0 } else { 1 };
            let expected = transfer_time(scenario, g, k, sigma)?.t_b_max;
            let mut rows = vec![SweepRow {
                g_over_omega_b: g,
                scenario,
                omega_b_t_max: expected,
                method: Method::Analytic,
            }];
            let mut warnings = Vec::new();
            let mut failures = Vec::new();
            if g > qbtransfer::model::RWA_COUPLING_LIMIT {
                warnings.push(format!("g/omega_b = {g} is outside the rotating-wave regime"));
            }
            let overlapping = scenario == Scenario::TwoStepMediated && config.sigma < PI / (2.0 * g);
            if overlapping {
                warnings.push(format!(
                    "g/omega_b = {g}: two-step legs overlap (omega_b sigma < pi/(2g)); no numeric check"
                ));
            } else if config.numeric {
                let found = numeric_maximum(scenario, g, config.sigma)?;
                let rel = (found.t_b_max / expected - 1.0).abs();
                if found.no_interior_maximum || rel > SWEEP_RELATIVE_TOL {
                    failures.push(format!(
                        "{scenario} at g/omega_b = {g}: numeric {} vs {expected} (relative {rel:.2e})",
                        found.t_b_max
                    ));
                }
                rows.push(SweepRow {
                    g_over_omega_b: g,
                    scenario,
                    omega_b_t_max: found.t_b_max,
                    method: Method::Piecewise,
                });
            }
            Ok((rows, warnings, failures))
        })
        .collect();

    let mut outcome = SweepOutcome::default();
    for r in results {
        let (rows, warnings, failures) = r?;
        outcome.rows.extend(rows);
        outcome.warnings.extend(warnings);
        outcome.failures.extend(failures);
    }
    Ok(outcome)
}

/// One line of the verification suite.
#[derive(Debug, Clone)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }

    fn failed(name: impl Into<String>, err: &CliError) -> Self {
        Self::new(name, false, err.to_string())
    }
}

const VERIFY_G: f64 = 0.05;

fn verify_cases() -> Vec<(&'static str, Scenario, Option<f64>)> {
    vec![
        ("direct", Scenario::Direct, None),
        (
            "two-step g sigma = 2.5",
            Scenario::TwoStepMediated,
            Some(2.5),
        ),
        (
            "two-step g sigma = 7.5",
            Scenario::TwoStepMediated,
            Some(7.5),
        ),
        ("coherent", Scenario::CoherentMediated, None),
    ]
}

fn comparison_check(
    label: &str,
    scenario: Scenario,
    sigma_g: Option<f64>,
    variant: ModelVariant,
    methods: Vec<Method>,
    tolerance: f64,
) -> Check {
    let name = format!(
        "{label}: {} ({variant})",
        methods
            .iter()
            .map(|m| m.name())
            .collect::<Vec<_>>()
            .join(" vs ")
    );
    let config = RunConfig {
        scenario,
        variant,
        g: VERIFY_G,
        omega_c: 1.0,
        omega_m: scenario.is_mediated().then_some(1.0),
        sigma_g,
        tau_g: None,
        cm_windows: None,
        bm_windows: None,
        t_end_g: None,
        n_samples: 1001,
        trace: "unused.csv".into(),
        report: "unused.json".into(),
        methods,
        rk4_step: crate::config::DEFAULT_RK4_STEP,
        tolerance,
    };
    match compute_run(&config) {
        Ok(out) => {
            let cmp = out.comparison.expect("two methods compared");
            let worst = cmp.pairs.iter().map(|p| p.max_abs).fold(0.0, f64::max);
            Check::new(
                name,
                cmp.passed,
                format!("max |dE| = {worst:.2e} (tolerance {tolerance:.0e})"),
            )
        }
        Err(e) => Check::failed(name, &e),
    }
}

/// Closed form against both propagators for every scenario, the full models
/// against the reduced one, and the transfer-time sweep against exact
/// propagation.
pub fn verify() -> Vec<Check> {
    let mut checks = Vec::new();
    for (label, scenario, sigma_g) in verify_cases() {
        checks.push(comparison_check(
            label,
            scenario,
            sigma_g,
            ModelVariant::Reduced,
            vec![Method::Analytic, Method::Piecewise],
            1e-10,
        ));
        checks.push(comparison_check(
            label,
            scenario,
            sigma_g,
            ModelVariant::Reduced,
            vec![Method::Analytic, Method::Rk4],
            1e-8,
        ));
        checks.push(comparison_check(
            label,
            scenario,
            sigma_g,
            ModelVariant::FullRwa,
            vec![Method::Analytic, Method::Piecewise],
            1e-10,
        ));
        if scenario != Scenario::CoherentMediated {
            checks.push(comparison_check(
                label,
                scenario,
                sigma_g,
                ModelVariant::FullCounterRotating,
                vec![Method::Analytic, Method::Piecewise],
                1e-10,
            ));
        }
    }
    let sweep = SweepConfig {
        numeric: true,
        ..SweepConfig::default()
    };
    checks.push(match run_sweep(&sweep) {
        Ok(out) => Check::new(
            "transfer-time sweep: analytic vs piecewise",
            out.failures.is_empty(),
            if out.failures.is_empty() {
                format!(
                    "{} rows within {SWEEP_RELATIVE_TOL:.0e} relative",
                    out.rows.len()
                )
            } else {
                out.failures.join("; ")
            },
        ),
        Err(e) => Check::failed("transfer-time sweep", &e),
    });
    checks
}
