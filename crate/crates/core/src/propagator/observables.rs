use serde::Serialize;

use super::AffineHamiltonian;
use crate::analytic::TransferReport;
use crate::error::{Error, Result};
use crate::model::{Scenario, Site, StateVector, SystemSpec, C64};
use crate::switching::Drive;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TraceSource {
    Analytic,
    Numeric,
}

/// Stored energies (units of `omega_b`) sampled on a time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyTrace {
    scenario: Scenario,
    source: TraceSource,
    times: Vec<f64>,
    e_b: Vec<f64>,
    e_c: Vec<f64>,
    e_m: Option<Vec<f64>>,
}

impl EnergyTrace {
    pub fn new(
        scenario: Scenario,
        source: TraceSource,
        times: Vec<f64>,
        e_b: Vec<f64>,
        e_c: Vec<f64>,
        e_m: Option<Vec<f64>>,
    ) -> Result<Self> {
        let n = times.len();
        let lengths_ok =
            e_b.len() == n && e_c.len() == n && e_m.as_ref().is_none_or(|m| m.len() == n);
        if !lengths_ok {
            return Err(Error::TraceMismatch("channel lengths differ".into()));
        }
        if e_m.is_some() != scenario.is_mediated() {
            return Err(Error::TraceMismatch(format!(
                "mediator channel presence does not match the {scenario} scenario"
            )));
        }
        Ok(Self {
            scenario,
            source,
            times,
            e_b,
            e_c,
            e_m,
        })
    }

    pub fn scenario(&self) -> Scenario {
        self.scenario
    }

    pub fn source(&self) -> TraceSource {
        self.source
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn e_b(&self) -> &[f64] {
        &self.e_b
    }

    pub fn e_c(&self) -> &[f64] {
        &self.e_c
    }

    pub fn e_m(&self) -> Option<&[f64]> {
        self.e_m.as_deref()
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Largest `|E_B + E_C + E_M|` over the samples.
    pub fn max_energy_sum(&self) -> f64 {
        (0..self.len())
            .map(|i| {
                let m = self.e_m.as_ref().map_or(0.0, |m| m[i]);
                (self.e_b[i] + self.e_c[i] + m).abs()
            })
            .fold(0.0, f64::max)
    }

    /// Checks `0 <= E_B <= omega_b`, `-omega_c <= E_C <= 0`,
    /// `0 <= E_M <= omega_m` within `tol`, plus energy conservation when the
    /// model conserves the free energy (resonant, exchange coupling only).
    pub fn check_physical(&self, spec: &SystemSpec, conservation_tol: f64) -> Result<()> {
        let tol = conservation_tol;
        let within = |x: f64, lo: f64, hi: f64| x >= lo - tol && x <= hi + tol;
        let wb = spec.omega_b();
        let wc = spec.omega_c();
        if let Some(i) = (0..self.len()).find(|&i| !within(self.e_b[i], 0.0, wb)) {
            return Err(Error::Precondition(format!(
                "E_B = {} out of bounds at t = {}",
                self.e_b[i], self.times[i]
            )));
        }
        if let Some(i) = (0..self.len()).find(|&i| !within(self.e_c[i], -wc, 0.0)) {
            return Err(Error::Precondition(format!(
                "E_C = {} out of bounds at t = {}",
                self.e_c[i], self.times[i]
            )));
        }
        if let (Some(m), Some(wm)) = (&self.e_m, spec.omega_m()) {
            if let Some(i) = (0..self.len()).find(|&i| !within(m[i], 0.0, wm)) {
                return Err(Error::Precondition(format!(
                    "E_M = {} out of bounds at t = {}",
                    m[i], self.times[i]
                )));
            }
        }
        let conserving = spec.is_resonant()
            && spec.model_variant() != crate::model::ModelVariant::FullCounterRotating;
        if conserving {
            let err = self.max_energy_sum();
            if err > tol {
                return Err(Error::Precondition(format!(
                    "energy sum deviates from zero by {err:.3e} (tolerance {tol:.0e})"
                )));
            }
        }
        Ok(())
    }
}

/// Stored energies `E_X(t) = omega_X [P_X(t) - P_X(t_0)]`, where `P_X` is the
/// probability of site `X` being excited and `t_0` the first state's time.
/// This equals the expectation of the local `omega_X/2 sigma_z` minus its
/// initial value in either representation.
pub fn energies_from_states<S: StateVector>(
    spec: &SystemSpec,
    states: &[S],
) -> Result<EnergyTrace> {
    let first = states
        .first()
        .ok_or_else(|| Error::TraceMismatch("no states to evaluate".into()))?;
    if let Some(bad) = states
        .iter()
        .find(|s| s.amplitudes().len() != spec.state_dim())
    {
        return Err(Error::Dimension {
            expected: spec.state_dim(),
            found: bad.amplitudes().len(),
        });
    }
    let channel = |site: Site| -> Option<Vec<f64>> {
        let w = spec.omega(site)?;
        let p0 = first.excited_population(site);
        Some(
            states
                .iter()
                .map(|s| w * (s.excited_population(site) - p0))
                .collect(),
        )
    };
    EnergyTrace::new(
        spec.scenario(),
        TraceSource::Numeric,
        states.iter().map(|s| s.time()).collect(),
        channel(Site::Battery).expect("battery always present"),
        channel(Site::Charger).expect("charger always present"),
        channel(Site::Mediator),
    )
}

/// Expectation of the coupling term(s) of `H(t)` in `state`.
pub fn interaction_energy<S: StateVector>(
    spec: &SystemSpec,
    drive: Drive<'_>,
    state: &S,
) -> Result<f64> {
    if state.amplitudes().len() != spec.state_dim() {
        return Err(Error::Dimension {
            expected: spec.state_dim(),
            found: state.amplitudes().len(),
        });
    }
    let h = AffineHamiltonian::new(spec)?.interaction(drive.values(state.time()));
    let psi = state.amplitudes();
    let value: C64 = psi.dotc(&(h * psi));
    Ok(value.re)
}

/// Per-channel maximum absolute deviation between two traces.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceComparison {
    pub max_abs_e_b: f64,
    pub max_abs_e_c: f64,
    pub max_abs_e_m: Option<f64>,
}

impl TraceComparison {
    pub fn max(&self) -> f64 {
        self.max_abs_e_b
            .max(self.max_abs_e_c)
            .max(self.max_abs_e_m.unwrap_or(0.0))
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.max() <= tol
    }
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

pub fn compare_traces(a: &EnergyTrace, b: &EnergyTrace) -> Result<TraceComparison> {
    if a.times != b.times {
        return Err(Error::TraceMismatch(
            "traces are sampled on different grids".into(),
        ));
    }
    let max_abs_e_m = match (&a.e_m, &b.e_m) {
        (Some(x), Some(y)) => Some(max_abs_diff(x, y)),
        (None, None) => None,
        _ => {
            return Err(Error::TraceMismatch(
                "only one trace carries a mediator channel".into(),
            ))
        }
    };
    Ok(TraceComparison {
        max_abs_e_b: max_abs_diff(&a.e_b, &b.e_b),
        max_abs_e_c: max_abs_diff(&a.e_c, &b.e_c),
        max_abs_e_m,
    })
}

/// Vertex of the parabola through three points, clamped to their span.
fn parabola_vertex((x0, y0): (f64, f64), (x1, y1): (f64, f64), (x2, y2): (f64, f64)) -> (f64, f64) {
    let d0 = (y1 - y0) / (x1 - x0);
    let d1 = (y2 - y1) / (x2 - x1);
    let curvature = (d1 - d0) / (x2 - x0);
    if curvature >= 0.0 {
        return (x1, y1);
    }
    // y = y1 + slope (x - x1) + curvature (x - x1)^2 with the slope at x1
    let slope = d0 + curvature * (x1 - x0);
    let x = (x1 - slope / (2.0 * curvature)).clamp(x0, x2);
    let y = y1 + slope * (x - x1) + curvature * (x - x1) * (x - x1);
    (x, y.max(y1))
}

/// First local maximum of `E_B`.
///
/// A maximum is the first sample after a rise that is followed by a decrease
/// or by a plateau lasting to the end of the trace (energy frozen after the
/// coupling is switched off). Strict interior peaks are refined with a
/// three-point parabola. When `E_B` never peaks the last sample is returned
/// with `no_interior_maximum` set.
pub fn find_first_maximum(trace: &EnergyTrace) -> TransferReport {
    let e = trace.e_b();
    let t = trace.times();
    let scale = e.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let flat = 1e-12 * scale.max(f64::MIN_POSITIVE);
    let k_index = match trace.scenario() {
        Scenario::CoherentMediated => 0,
        _ => 1,
    };
    let report = |t_b_max: f64, e_b_max: f64, no_interior_maximum: bool| TransferReport {
        e_b_max,
        t_b_max,
        k_index,
        scenario: trace.scenario(),
        no_interior_maximum,
    };

    let mut rising = false;
    let mut i = 1;
    while i < e.len() {
        if e[i] > e[i - 1] + flat {
            rising = true;
            i += 1;
            continue;
        }
        if rising {
            let peak = i - 1;
            let next_change = (i..e.len()).find(|&j| (e[j] - e[peak]).abs() > flat);
            match next_change {
                Some(j) if e[j] > e[peak] => {
                    // shoulder: keep climbing
                    i = j;
                    continue;
                }
                Some(j) if j == i => {
                    let (x, y) = parabola_vertex(
                        (t[peak - 1], e[peak - 1]),
                        (t[peak], e[peak]),
                        (t[i], e[i]),
                    );
                    return report(x, y, false);
                }
                _ => return report(t[peak], e[peak], false),
            }
        }
        i += 1;
    }
    let last = e.len() - 1;
    report(t[last], e[last], true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{FullState, ModelVariant, ReducedState};
    use crate::propagator::{propagate_piecewise, TimeGrid};
    use crate::switching::{make_protocol_schedule, TauChoice};
    use std::f64::consts::{PI, SQRT_2};

    fn trace_of(scenario: Scenario, times: Vec<f64>, e_b: Vec<f64>) -> EnergyTrace {
        let e_c = e_b.iter().map(|x| -x).collect();
        let e_m = scenario.is_mediated().then(|| vec![0.0; times.len()]);
        EnergyTrace::new(scenario, TraceSource::Numeric, times, e_b, e_c, e_m).unwrap()
    }

    #[test]
    fn energies_of_reduced_direct_at_quarter_period() {
        let g = 0.05;
        let spec = SystemSpec::resonant(Scenario::Direct, ModelVariant::Reduced, g).unwrap();
        let p = make_protocol_schedule(Scenario::Direct, g, TauChoice::FirstMaximum, None).unwrap();
        let grid = TimeGrid::for_drive(0.0, p.tau(), 5, &p.drive()).unwrap();
        let init = ReducedState::designated_initial(Scenario::Direct);
        let states = propagate_piecewise(&spec, p.drive(), &grid, &init).unwrap();
        let tr = energies_from_states(&spec, &states).unwrap();
        let last = tr.len() - 1;
        assert!((tr.e_b()[last] - 1.0).abs() < 1e-12);
        assert!((tr.e_c()[last] + 1.0).abs() < 1e-12);
        assert_eq!((tr.e_b()[0], tr.e_c()[0]), (0.0, 0.0));
    }

    #[test]
    fn coherent_mediator_half_charged() {
        let g = 0.05;
        for variant in [ModelVariant::Reduced, ModelVariant::FullRwa] {
            let spec = SystemSpec::resonant(Scenario::CoherentMediated, variant, g).unwrap();
            let p = make_protocol_schedule(
                Scenario::CoherentMediated,
                g,
                TauChoice::FirstMaximum,
                None,
            )
            .unwrap();
            let t_half = PI / (2.0 * SQRT_2 * g);
            let grid = TimeGrid::from_times(vec![0.0, t_half]).unwrap();
            let tr = if variant.is_full() {
                let init = FullState::designated_initial(Scenario::CoherentMediated);
                energies_from_states(
                    &spec,
                    &propagate_piecewise(&spec, p.drive(), &grid, &init).unwrap(),
                )
            } else {
                let init = ReducedState::designated_initial(Scenario::CoherentMediated);
                energies_from_states(
                    &spec,
                    &propagate_piecewise(&spec, p.drive(), &grid, &init).unwrap(),
                )
            }
            .unwrap();
            assert!((tr.e_m().unwrap()[1] - 0.5).abs() < 1e-12, "{variant}");
        }
    }

    #[test]
    fn compare_identical_and_mismatched() {
        let a = trace_of(Scenario::Direct, vec![0.0, 1.0, 2.0], vec![0.0, 0.5, 1.0]);
        let c = compare_traces(&a, &a).unwrap();
        assert_eq!(c.max(), 0.0);
        assert!(c.passes(0.0));
        let b = trace_of(Scenario::Direct, vec![0.0, 1.0, 3.0], vec![0.0, 0.5, 1.0]);
        assert!(matches!(
            compare_traces(&a, &b),
            Err(Error::TraceMismatch(_))
        ));
        let m = trace_of(
            Scenario::CoherentMediated,
            vec![0.0, 1.0, 2.0],
            vec![0.0, 0.5, 1.0],
        );
        assert!(compare_traces(&a, &m).is_err());
    }

    #[test]
    fn trace_channel_validation() {
        assert!(EnergyTrace::new(
            Scenario::Direct,
            TraceSource::Numeric,
            vec![0.0, 1.0],
            vec![0.0],
            vec![0.0, 0.0],
            None
        )
        .is_err());
        assert!(EnergyTrace::new(
            Scenario::Direct,
            TraceSource::Numeric,
            vec![0.0],
            vec![0.0],
            vec![0.0],
            Some(vec![0.0])
        )
        .is_err());
    }

    #[test]
    fn maximum_of_sampled_sine() {
        let g = 0.05;
        let times: Vec<f64> = (0..=2000).map(|i| i as f64 * 0.05).collect();
        let e_b = times.iter().map(|t| (g * t).sin().powi(2)).collect();
        let r = find_first_maximum(&trace_of(Scenario::Direct, times, e_b));
        assert!(!r.no_interior_maximum);
        assert!((g * r.t_b_max - PI / 2.0).abs() < 1e-6);
        assert!((r.e_b_max - 1.0).abs() < 1e-9);
    }

    #[test]
    fn maximum_at_switch_off_plateau() {
        // zero plateau, rise, frozen plateau
        let e_b = vec![0.0, 0.0, 0.0, 0.3, 0.8, 1.0, 1.0, 1.0];
        let times = (0..e_b.len()).map(|i| i as f64).collect();
        let r = find_first_maximum(&trace_of(Scenario::TwoStepMediated, times, e_b));
        assert_eq!(
            (r.t_b_max, r.e_b_max, r.no_interior_maximum),
            (5.0, 1.0, false)
        );
        assert_eq!(r.k_index, 1);
    }

    #[test]
    fn shoulder_is_not_a_maximum() {
        let e_b = vec![0.0, 0.4, 0.4, 0.4, 0.9, 0.5];
        let times = (0..e_b.len()).map(|i| i as f64).collect();
        let r = find_first_maximum(&trace_of(Scenario::Direct, times, e_b));
        assert!(r.t_b_max > 3.0 && r.t_b_max < 5.0);
        assert!(r.e_b_max >= 0.9);
    }

    #[test]
    fn flat_and_monotone_traces_are_flagged() {
        let times: Vec<f64> = (0..10).map(f64::from).collect();
        let r = find_first_maximum(&trace_of(Scenario::Direct, times.clone(), vec![0.0; 10]));
        assert!(r.no_interior_maximum);
        let rising = times.iter().map(|t| t * 0.1).collect();
        let r = find_first_maximum(&trace_of(Scenario::CoherentMediated, times, rising));
        assert!(r.no_interior_maximum);
        assert_eq!(r.t_b_max, 9.0);
        assert_eq!(r.k_index, 0);
    }

    #[test]
    fn check_physical_flags_violations() {
        let spec = SystemSpec::resonant(Scenario::Direct, ModelVariant::Reduced, 0.05).unwrap();
        let good = trace_of(Scenario::Direct, vec![0.0, 1.0], vec![0.0, 1.0]);
        assert!(good.check_physical(&spec, 1e-12).is_ok());
        let bad = trace_of(Scenario::Direct, vec![0.0, 1.0], vec![0.0, 1.1]);
        assert!(bad.check_physical(&spec, 1e-12).is_err());
        let leaky = EnergyTrace::new(
            Scenario::Direct,
            TraceSource::Numeric,
            vec![0.0, 1.0],
            vec![0.0, 0.5],
            vec![0.0, -0.4],
            None,
        )
        .unwrap();
        assert!(leaky.check_physical(&spec, 1e-12).is_err());
    }
}
