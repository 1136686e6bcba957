//! Time-dependent coupling profiles and their accumulated angles.

use std::f64::consts::{PI, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Scenario;

/// A delay shorter than this many on-durations raises the two-step
/// separation warning.
pub const WELL_SEPARATED_FACTOR: f64 = 5.0;

fn unit_amplitude() -> f64 {
    1.0
}

/// Interval `[t_on, t_off)` during which the coupling is switched on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub t_on: f64,
    pub t_off: f64,
    #[serde(default = "unit_amplitude")]
    pub amplitude: f64,
}

impl Window {
    pub fn new(t_on: f64, t_off: f64) -> Self {
        Self {
            t_on,
            t_off,
            amplitude: 1.0,
        }
    }

    pub fn with_amplitude(mut self, amplitude: f64) -> Self {
        self.amplitude = amplitude;
        self
    }

    pub fn duration(&self) -> f64 {
        self.t_off - self.t_on
    }
}

/// Piecewise-constant switching function: zero outside its windows, the
/// window amplitude inside. Windows are sorted, non-overlapping and start at
/// `t >= 0`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(try_from = "Vec<Window>", into = "Vec<Window>")]
pub struct SwitchingSchedule {
    windows: Vec<Window>,
}

impl TryFrom<Vec<Window>> for SwitchingSchedule {
    type Error = Error;

    fn try_from(windows: Vec<Window>) -> Result<Self> {
        Self::new(windows)
    }
}

impl From<SwitchingSchedule> for Vec<Window> {
    fn from(s: SwitchingSchedule) -> Self {
        s.windows
    }
}

impl SwitchingSchedule {
    pub fn new(windows: Vec<Window>) -> Result<Self> {
        for w in &windows {
            if !(w.t_on.is_finite() && w.t_off.is_finite() && w.amplitude.is_finite()) {
                return Err(Error::Config(format!("non-finite window {w:?}")));
            }
            if w.t_on < 0.0 {
                return Err(Error::Config(format!("window starts before t = 0: {w:?}")));
            }
            if w.t_on >= w.t_off {
                return Err(Error::Config(format!("window needs t_on < t_off: {w:?}")));
            }
        }
        if let Some(pair) = windows.windows(2).find(|p| p[1].t_on < p[0].t_off) {
            return Err(Error::Config(format!(
                "windows overlap or are unsorted: {:?} then {:?}",
                pair[0], pair[1]
            )));
        }
        Ok(Self { windows })
    }

    /// Coupling never switched on.
    pub fn off() -> Self {
        Self::default()
    }

    /// A single unit window `[t_on, t_off)`.
    pub fn single(t_on: f64, t_off: f64) -> Result<Self> {
        Self::new(vec![Window::new(t_on, t_off)])
    }

    pub fn windows(&self) -> &[Window] {
        &self.windows
    }

    pub fn is_empty(&self) -> bool {
        self.windows.is_empty()
    }

    /// True when every window has unit amplitude.
    pub fn is_step(&self) -> bool {
        self.windows.iter().all(|w| w.amplitude == 1.0)
    }

    /// End of the last window.
    pub fn end(&self) -> Option<f64> {
        self.windows.last().map(|w| w.t_off)
    }

    pub fn start(&self) -> Option<f64> {
        self.windows.first().map(|w| w.t_on)
    }

    /// Total switched-on time (amplitude-weighted).
    pub fn on_duration(&self) -> f64 {
        self.windows
            .iter()
            .map(|w| w.amplitude * w.duration())
            .sum()
    }

    /// The same profile delayed by `sigma`.
    pub fn shifted(&self, sigma: f64) -> Result<Self> {
        Self::new(
            self.windows
                .iter()
                .map(|w| Window {
                    t_on: w.t_on + sigma,
                    t_off: w.t_off + sigma,
                    ..*w
                })
                .collect(),
        )
    }

    /// Rescales the time axis, e.g. from `g*t` units to `omega_b*t` units
    /// with `factor = 1/g`.
    pub fn scaled_time(&self, factor: f64) -> Result<Self> {
        if !(factor.is_finite() && factor > 0.0) {
            return Err(Error::Config(format!(
                "time scale must be positive, got {factor}"
            )));
        }
        Self::new(
            self.windows
                .iter()
                .map(|w| Window {
                    t_on: w.t_on * factor,
                    t_off: w.t_off * factor,
                    ..*w
                })
                .collect(),
        )
    }

    /// Switching value at `t`; right-continuous, so the value at `t_off` is
    /// already the post-switch value.
    pub fn evaluate(&self, t: f64) -> f64 {
        self.windows
            .iter()
            .find(|w| w.t_on <= t && t < w.t_off)
            .map_or(0.0, |w| w.amplitude)
    }

    /// Limit of the switching value approaching `t` from below.
    pub fn left_limit(&self, t: f64) -> f64 {
        self.windows
            .iter()
            .find(|w| w.t_on < t && t <= w.t_off)
            .map_or(0.0, |w| w.amplitude)
    }

    /// Exact `int_0^t f(t') dt'`.
    pub fn integral(&self, t: f64) -> f64 {
        self.windows
            .iter()
            .take_while(|w| w.t_on < t)
            .map(|w| w.amplitude * (t.min(w.t_off) - w.t_on))
            .sum()
    }

    /// Every switching instant, in increasing order.
    pub fn breakpoints(&self) -> Vec<f64> {
        self.windows
            .iter()
            .flat_map(|w| [w.t_on, w.t_off])
            .collect()
    }
}

/// Value of the switching function at `t`.
pub fn evaluate(schedule: &SwitchingSchedule, t: f64) -> f64 {
    schedule.evaluate(t)
}

/// Accumulated angle `scale * g * int_0^t f(t') dt'`.
///
/// `scale` is 1 for the direct and two-step protocols and `sqrt(2)` for the
/// coherent mediated one.
pub fn angle(schedule: &SwitchingSchedule, t: f64, g: f64, scale: f64) -> f64 {
    scale * g * schedule.integral(t)
}

/// A coupling profile a propagator can sample.
pub trait CouplingProfile: Send + Sync {
    fn value(&self, t: f64) -> f64;

    /// Limit from below. Continuous profiles keep the default.
    fn left_limit(&self, t: f64) -> f64 {
        self.value(t)
    }

    /// Switching instants if the profile is piecewise constant, `None`
    /// otherwise.
    fn breakpoints(&self) -> Option<Vec<f64>>;
}

impl CouplingProfile for SwitchingSchedule {
    fn value(&self, t: f64) -> f64 {
        self.evaluate(t)
    }

    fn left_limit(&self, t: f64) -> f64 {
        SwitchingSchedule::left_limit(self, t)
    }

    fn breakpoints(&self) -> Option<Vec<f64>> {
        Some(SwitchingSchedule::breakpoints(self))
    }
}

/// Arbitrary continuous profile given by a closure.
pub struct SmoothProfile<F>(pub F);

impl<F> CouplingProfile for SmoothProfile<F>
where
    F: Fn(f64) -> f64 + Send + Sync,
{
    fn value(&self, t: f64) -> f64 {
        (self.0)(t)
    }

    fn breakpoints(&self) -> Option<Vec<f64>> {
        None
    }
}

/// The switching functions a propagator drives the Hamiltonian with. `bm` is
/// ignored for the direct scenario.
#[derive(Clone, Copy)]
pub struct Drive<'a> {
    pub cm: &'a dyn CouplingProfile,
    pub bm: Option<&'a dyn CouplingProfile>,
}

impl<'a> Drive<'a> {
    pub fn direct(f: &'a dyn CouplingProfile) -> Self {
        Self { cm: f, bm: None }
    }

    pub fn mediated(cm: &'a dyn CouplingProfile, bm: &'a dyn CouplingProfile) -> Self {
        Self { cm, bm: Some(bm) }
    }

    /// `(f_cm, f_bm)` at `t`.
    pub fn values(&self, t: f64) -> (f64, f64) {
        (self.cm.value(t), self.bm.map_or(0.0, |p| p.value(t)))
    }

    pub fn left_limits(&self, t: f64) -> (f64, f64) {
        (
            self.cm.left_limit(t),
            self.bm.map_or(0.0, |p| p.left_limit(t)),
        )
    }

    /// Union of both profiles' switching instants, sorted and deduplicated.
    pub fn breakpoints(&self) -> Option<Vec<f64>> {
        let mut all = self.cm.breakpoints()?;
        if let Some(bm) = self.bm {
            all.extend(bm.breakpoints()?);
        }
        all.sort_by(f64::total_cmp);
        all.dedup();
        Some(all)
    }
}

/// How the on-duration of each window is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum TauChoice {
    /// Switch off exactly at the first maximum of the battery energy.
    FirstMaximum,
    /// Explicit on-duration in units of `1/omega_b`.
    Explicit(f64),
}

/// Switching functions of one transfer protocol.
#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolSchedule {
    scenario: Scenario,
    cm: SwitchingSchedule,
    bm: Option<SwitchingSchedule>,
    tau: f64,
    sigma: Option<f64>,
}

impl ProtocolSchedule {
    /// Assembles a protocol from arbitrary schedules.
    ///
    /// For the direct scenario `bm` must be absent; for the coherent one it
    /// must be absent or equal to `cm`; the two-step one requires it. The
    /// reported `tau` is the on-duration of `cm` and `sigma` the delay between
    /// the first windows of the two legs.
    pub fn custom(
        scenario: Scenario,
        cm: SwitchingSchedule,
        bm: Option<SwitchingSchedule>,
    ) -> Result<Self> {
        let bm = match (scenario, bm) {
            (Scenario::Direct, None) => None,
            (Scenario::Direct, Some(_)) => {
                return Err(Error::Config(
                    "direct protocol takes a single schedule".into(),
                ))
            }
            (Scenario::CoherentMediated, None) => Some(cm.clone()),
            (Scenario::CoherentMediated, Some(bm)) if bm == cm => Some(bm),
            (Scenario::CoherentMediated, Some(_)) => {
                return Err(Error::Config(
                    "coherent protocol needs identical charger and battery schedules".into(),
                ))
            }
            (Scenario::TwoStepMediated, Some(bm)) => Some(bm),
            (Scenario::TwoStepMediated, None) => {
                return Err(Error::Config(
                    "two-step protocol requires a second schedule".into(),
                ))
            }
        };
        let sigma = match (scenario, &bm) {
            (Scenario::TwoStepMediated, Some(bm)) => match (cm.start(), bm.start()) {
                (Some(a), Some(b)) => Some(b - a),
                _ => None,
            },
            _ => None,
        };
        Ok(Self {
            scenario,
            tau: cm.on_duration(),
            cm,
            bm,
            sigma,
        })
    }

    pub fn scenario(&self) -> Scenario {
        self.scenario
    }

    pub fn cm(&self) -> &SwitchingSchedule {
        &self.cm
    }

    pub fn bm(&self) -> Option<&SwitchingSchedule> {
        self.bm.as_ref()
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn sigma(&self) -> Option<f64> {
        self.sigma
    }

    /// Soft warning: two-step legs are closer than five on-durations.
    pub fn separation_warning(&self) -> bool {
        match (self.scenario, self.sigma) {
            (Scenario::TwoStepMediated, Some(sigma)) => sigma < WELL_SEPARATED_FACTOR * self.tau,
            _ => false,
        }
    }

    /// Time after which every coupling stays off.
    pub fn end(&self) -> f64 {
        let a = self.cm.end().unwrap_or(0.0);
        let b = self.bm.as_ref().and_then(|s| s.end()).unwrap_or(0.0);
        a.max(b)
    }

    /// Whether every schedule is a pure 0/1 step function.
    pub fn is_step(&self) -> bool {
        self.cm.is_step() && self.bm.as_ref().is_none_or(|s| s.is_step())
    }

    pub fn drive(&self) -> Drive<'_> {
        Drive {
            cm: &self.cm,
            bm: self.bm.as_ref().map(|s| s as &dyn CouplingProfile),
        }
    }
}

/// Builds the step-function schedules of a protocol.
///
/// With [`TauChoice::FirstMaximum`] each window lasts `pi/(2g)` (direct and
/// each two-step leg) or `pi/(sqrt(2) g)` (coherent). Two-step legs start at
/// `0` and `sigma`; `sigma >= tau` is required so they never overlap.
pub fn make_protocol_schedule(
    scenario: Scenario,
    g: f64,
    tau_choice: TauChoice,
    sigma: Option<f64>,
) -> Result<ProtocolSchedule> {
    if !(g.is_finite() && g > 0.0) {
        return Err(Error::Config(format!(
            "coupling g must be positive, got {g}"
        )));
    }
    let tau = match tau_choice {
        TauChoice::FirstMaximum => match scenario {
            Scenario::Direct | Scenario::TwoStepMediated => PI / (2.0 * g),
            Scenario::CoherentMediated => PI / (SQRT_2 * g),
        },
        TauChoice::Explicit(tau) if tau.is_finite() && tau > 0.0 => tau,
        TauChoice::Explicit(tau) => {
            return Err(Error::Config(format!(
                "on-duration must be positive, got {tau}"
            )))
        }
    };
    let cm = SwitchingSchedule::single(0.0, tau)?;
    match (scenario, sigma) {
        (Scenario::TwoStepMediated, None) => Err(Error::Config(
            "two-step protocol requires a delay sigma".into(),
        )),
        (Scenario::TwoStepMediated, Some(sigma)) => {
            if !(sigma.is_finite() && sigma >= tau) {
                return Err(Error::Precondition(format!(
                    "two-step legs overlap: sigma = {sigma} < tau = {tau}"
                )));
            }
            let bm = cm.shifted(sigma)?;
            Ok(ProtocolSchedule {
                scenario,
                cm,
                bm: Some(bm),
                tau,
                sigma: Some(sigma),
            })
        }
        (_, Some(_)) => Err(Error::Config(format!(
            "sigma only applies to the two-step protocol, not {scenario}"
        ))),
        (Scenario::Direct, None) => Ok(ProtocolSchedule {
            scenario,
            cm,
            bm: None,
            tau,
            sigma: None,
        }),
        (Scenario::CoherentMediated, None) => Ok(ProtocolSchedule {
            scenario,
            bm: Some(cm.clone()),
            cm,
            tau,
            sigma: None,
        }),
    }
}
