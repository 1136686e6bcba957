//! Run configuration: a flat TOML file merged with command-line overrides.
//!
//! Every quantity is dimensionless: couplings in units of `omega_b`, times as
//! `g t` unless the key says otherwise.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, ValueEnum};
use serde::{Deserialize, Deserializer, Serialize};

use qbtransfer::{
    make_protocol_schedule, ModelVariant, ProtocolSchedule, Scenario, SwitchingSchedule,
    SystemSpec, TauChoice, Window,
};

use crate::CliError;

pub const DEFAULT_N_SAMPLES: usize = 2001;
pub const DEFAULT_RK4_STEP: f64 = 1e-3;
/// Window after the protocol ends, as a fraction of its length.
pub const DEFAULT_TAIL_FRACTION: f64 = 0.25;

#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, ValueEnum, Serialize, Deserialize,
)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Analytic,
    Piecewise,
    Rk4,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Analytic => "analytic",
            Method::Piecewise => "piecewise",
            Method::Rk4 => "rk4",
        }
    }

    /// Tolerance of the conservation and bound checks applied to every trace.
    pub fn physical_tolerance(self) -> f64 {
        match self {
            Method::Analytic | Method::Piecewise => 1e-10,
            Method::Rk4 => 1e-7,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

fn parse_scenario(s: &str) -> Result<Scenario, String> {
    Scenario::from_str(s).map_err(|e| e.to_string())
}

fn parse_variant(s: &str) -> Result<ModelVariant, String> {
    ModelVariant::from_str(s).map_err(|e| e.to_string())
}

fn by_name<'de, D, T>(d: D) -> Result<Option<T>, D::Error>
where
    D: Deserializer<'de>,
    T: FromStr,
    T::Err: fmt::Display,
{
    Option::<String>::deserialize(d)?
        .map(|s| s.parse().map_err(serde::de::Error::custom))
        .transpose()
}

/// Optional settings, shared by the config file and the `run` flags.
#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartialConfig {
    /// direct, two-step or coherent
    #[arg(long, value_parser = parse_scenario)]
    #[serde(default, deserialize_with = "by_name")]
    pub scenario: Option<Scenario>,
    /// Coupling g / omega_b
    #[arg(long = "g")]
    pub g: Option<f64>,
    /// Delay between the two-step legs, as g sigma
    #[arg(long)]
    pub sigma_g: Option<f64>,
    /// On-duration g tau; defaults to the first battery maximum
    #[arg(long)]
    pub tau_g: Option<f64>,
    /// reduced, full-rwa or full-counter-rotating
    #[arg(long, value_parser = parse_variant)]
    #[serde(default, deserialize_with = "by_name")]
    pub variant: Option<ModelVariant>,
    /// Charger frequency / omega_b
    #[arg(long)]
    pub omega_c: Option<f64>,
    /// Mediator frequency / omega_b
    #[arg(long)]
    pub omega_m: Option<f64>,
    /// End of the sampled window, as g t
    #[arg(long)]
    pub t_end_g: Option<f64>,
    #[arg(long)]
    pub n_samples: Option<usize>,
    /// Trace path; one file per method is written as <stem>_<method>.<ext>
    #[arg(long)]
    pub trace: Option<PathBuf>,
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(long, value_enum, value_delimiter = ',')]
    pub methods: Option<Vec<Method>>,
    /// Runge-Kutta step in units of 1/omega_b
    #[arg(long)]
    pub rk4_step: Option<f64>,
    /// Maximum deviation allowed between methods
    #[arg(long)]
    pub tolerance: Option<f64>,
    /// Charger-mediator (or direct) windows in g t units; config file only
    #[arg(skip)]
    pub cm_windows: Option<Vec<Window>>,
    /// Battery-mediator windows in g t units; config file only
    #[arg(skip)]
    pub bm_windows: Option<Vec<Window>>,
}

impl PartialConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Usage(format!("invalid config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// Values set in `other` win.
    pub fn merge(self, other: PartialConfig) -> PartialConfig {
        PartialConfig {
            scenario: other.scenario.or(self.scenario),
            g: other.g.or(self.g),
            sigma_g: other.sigma_g.or(self.sigma_g),
            tau_g: other.tau_g.or(self.tau_g),
            variant: other.variant.or(self.variant),
            omega_c: other.omega_c.or(self.omega_c),
            omega_m: other.omega_m.or(self.omega_m),
            t_end_g: other.t_end_g.or(self.t_end_g),
            n_samples: other.n_samples.or(self.n_samples),
            trace: other.trace.or(self.trace),
            report: other.report.or(self.report),
            methods: other.methods.or(self.methods),
            rk4_step: other.rk4_step.or(self.rk4_step),
            tolerance: other.tolerance.or(self.tolerance),
            cm_windows: other.cm_windows.or(self.cm_windows),
            bm_windows: other.bm_windows.or(self.bm_windows),
        }
    }
}

/// A complete, validated run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub scenario: Scenario,
    pub variant: ModelVariant,
    pub g: f64,
    pub omega_c: f64,
    pub omega_m: Option<f64>,
    pub sigma_g: Option<f64>,
    pub tau_g: Option<f64>,
    pub cm_windows: Option<Vec<Window>>,
    pub bm_windows: Option<Vec<Window>>,
    pub t_end_g: Option<f64>,
    pub n_samples: usize,
    pub trace: PathBuf,
    pub report: PathBuf,
    pub methods: Vec<Method>,
    pub rk4_step: f64,
    pub tolerance: f64,
}

fn positive(name: &str, value: f64) -> Result<f64, CliError> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(CliError::Usage(format!(
            "{name} must be positive, got {value}"
        )))
    }
}

impl RunConfig {
    pub fn resolve(partial: PartialConfig) -> Result<Self, CliError> {
        let scenario = partial
            .scenario
            .ok_or_else(|| CliError::Usage("scenario is required".into()))?;
        let g = positive(
            "g",
            partial
                .g
                .ok_or_else(|| CliError::Usage("g is required".into()))?,
        )?;
        let mut methods = partial
            .methods
            .unwrap_or_else(|| vec![Method::Analytic, Method::Piecewise]);
        methods.sort();
        methods.dedup();
        if methods.is_empty() {
            return Err(CliError::Usage("select at least one method".into()));
        }
        let windows = partial.cm_windows.is_some() || partial.bm_windows.is_some();
        if windows && (partial.tau_g.is_some() || partial.sigma_g.is_some()) {
            return Err(CliError::Usage(
                "explicit windows replace tau_g and sigma_g; give one or the other".into(),
            ));
        }
        if !windows && scenario == Scenario::TwoStepMediated && partial.sigma_g.is_none() {
            return Err(CliError::Usage(
                "the two-step scenario requires sigma_g".into(),
            ));
        }
        if scenario != Scenario::TwoStepMediated && partial.sigma_g.is_some() {
            return Err(CliError::Usage(format!(
                "sigma_g does not apply to the {scenario} scenario"
            )));
        }
        if !scenario.is_mediated() && partial.omega_m.is_some() {
            return Err(CliError::Usage("omega_m needs a mediated scenario".into()));
        }
        let n_samples = partial.n_samples.unwrap_or(DEFAULT_N_SAMPLES);
        if n_samples < 2 {
            return Err(CliError::Usage("n_samples must be at least 2".into()));
        }
        let rk4_step = positive("rk4_step", partial.rk4_step.unwrap_or(DEFAULT_RK4_STEP))?;
        let default_tolerance = if methods.contains(&Method::Rk4) {
            1e-8
        } else {
            1e-10
        };
        let tolerance = positive("tolerance", partial.tolerance.unwrap_or(default_tolerance))?;
        let config = RunConfig {
            scenario,
            variant: partial.variant.unwrap_or(ModelVariant::Reduced),
            g,
            omega_c: partial.omega_c.unwrap_or(1.0),
            omega_m: scenario
                .is_mediated()
                .then(|| partial.omega_m.unwrap_or(1.0)),
            sigma_g: partial.sigma_g,
            tau_g: partial.tau_g,
            cm_windows: partial.cm_windows,
            bm_windows: partial.bm_windows,
            t_end_g: partial
                .t_end_g
                .map(|t| positive("t_end_g", t))
                .transpose()?,
            n_samples,
            trace: partial.trace.unwrap_or_else(|| PathBuf::from("trace.csv")),
            report: partial
                .report
                .unwrap_or_else(|| PathBuf::from("report.json")),
            methods,
            rk4_step,
            tolerance,
        };
        config.spec()?;
        config.protocol()?;
        Ok(config)
    }

    pub fn spec(&self) -> Result<SystemSpec, CliError> {
        Ok(SystemSpec::new(
            self.scenario,
            self.variant,
            self.g,
            self.omega_c,
            self.omega_m,
        )?)
    }

    fn windows_in_time(&self, windows: &[Window]) -> Result<SwitchingSchedule, CliError> {
        Ok(SwitchingSchedule::new(windows.to_vec())?.scaled_time(1.0 / self.g)?)
    }

    pub fn protocol(&self) -> Result<ProtocolSchedule, CliError> {
        if self.cm_windows.is_some() || self.bm_windows.is_some() {
            let cm = self
                .cm_windows
                .as_deref()
                .ok_or_else(|| CliError::Usage("cm_windows is required with bm_windows".into()))?;
            let cm = self.windows_in_time(cm)?;
            let bm = self
                .bm_windows
                .as_deref()
                .map(|w| self.windows_in_time(w))
                .transpose()?;
            return Ok(ProtocolSchedule::custom(self.scenario, cm, bm)?);
        }
        let tau = match self.tau_g {
            Some(tau_g) => TauChoice::Explicit(tau_g / self.g),
            None => TauChoice::FirstMaximum,
        };
        Ok(make_protocol_schedule(
            self.scenario,
            self.g,
            tau,
            self.sigma_g.map(|s| s / self.g),
        )?)
    }

    /// End of the sampled window in units of `1/omega_b`.
    pub fn t_end(&self, protocol: &ProtocolSchedule) -> Result<f64, CliError> {
        match self.t_end_g {
            Some(t) => Ok(t / self.g),
            None if protocol.end() > 0.0 => Ok((1.0 + DEFAULT_TAIL_FRACTION) * protocol.end()),
            None => Err(CliError::Usage(
                "the couplings never switch on; set t_end_g".into(),
            )),
        }
    }
}
