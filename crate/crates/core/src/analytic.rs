//! Closed-form evolution of the three resonant protocols.
//!
//! All functions take the designated charger-excited initial state and
//! require a resonant system driven by pure 0/1 step schedules.

use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};

use nalgebra::DVector;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{ReducedState, Scenario, StateVector, SystemSpec, C64};
use crate::propagator::{EnergyTrace, TimeGrid, TraceSource};
use crate::switching::{angle, ProtocolSchedule};

/// `|cos|` of the first-leg angle below which the charger -> mediator
/// transfer counts as complete.
pub const COMPLETE_TRANSFER_TOL: f64 = 1e-7;

/// Stored energies (units of `omega_b`) at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Energies {
    pub e_b: f64,
    pub e_c: f64,
    pub e_m: Option<f64>,
}

impl Energies {
    pub fn sum(&self) -> f64 {
        self.e_b + self.e_c + self.e_m.unwrap_or(0.0)
    }
}

/// Time and value of a battery-energy maximum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TransferReport {
    pub e_b_max: f64,
    pub t_b_max: f64,
    /// Which maximum: 1-based for direct/two-step, 0-based for coherent.
    pub k_index: u32,
    pub scenario: Scenario,
    /// Set when the located value is the end of the window rather than an
    /// interior maximum.
    pub no_interior_maximum: bool,
}

fn require_analytic(spec: &SystemSpec, protocol: &ProtocolSchedule, want: Scenario) -> Result<()> {
    if spec.scenario() != want || protocol.scenario() != want {
        return Err(Error::NotAnalytic(format!(
            "{want} solution requested for a {} system driven by a {} protocol",
            spec.scenario(),
            protocol.scenario()
        )));
    }
    if !spec.is_resonant() {
        return Err(Error::NotAnalytic(
            "detuned systems have no closed form; use a numerical propagator".into(),
        ));
    }
    if !protocol.is_step() {
        return Err(Error::NotAnalytic(
            "closed form needs unit-amplitude step schedules".into(),
        ));
    }
    Ok(())
}

fn reduced(amps: [C64; 3], dim: usize, t: f64) -> ReducedState {
    ReducedState::from_parts(DVector::from_iterator(dim, amps.into_iter().take(dim)), t)
        .expect("reduced dimension is 2 or 3")
}

/// `(cos phi, -i sin phi)` with `phi = g int_0^t f`.
pub fn direct_state(
    spec: &SystemSpec,
    protocol: &ProtocolSchedule,
    t: f64,
) -> Result<ReducedState> {
    require_analytic(spec, protocol, Scenario::Direct)?;
    let phi = angle(protocol.cm(), t, spec.g(), 1.0);
    Ok(reduced(
        [
            C64::new(phi.cos(), 0.0),
            C64::new(0.0, -phi.sin()),
            C64::default(),
        ],
        2,
        t,
    ))
}

pub fn direct_energies(spec: &SystemSpec, protocol: &ProtocolSchedule, t: f64) -> Result<Energies> {
    require_analytic(spec, protocol, Scenario::Direct)?;
    let s2 = angle(protocol.cm(), t, spec.g(), 1.0).sin().powi(2);
    let w = spec.omega_b();
    Ok(Energies {
        e_b: w * s2,
        e_c: -w * s2,
        e_m: None,
    })
}

/// Leg angles `(phi_cm, phi_bm)` after validating the two-step preconditions.
fn two_step_angles(spec: &SystemSpec, protocol: &ProtocolSchedule, t: f64) -> Result<(f64, f64)> {
    require_analytic(spec, protocol, Scenario::TwoStepMediated)?;
    let bm = protocol
        .bm()
        .ok_or_else(|| Error::Config("two-step protocol without a second schedule".into()))?;
    if let (Some(cm_end), Some(bm_start)) = (protocol.cm().end(), bm.start()) {
        if bm_start < cm_end {
            return Err(Error::Precondition(format!(
                "two-step legs overlap: second leg starts at {bm_start} before the first ends at {cm_end}"
            )));
        }
    }
    let g = spec.g();
    let leg1_total = angle(protocol.cm(), f64::INFINITY, g, 1.0);
    if leg1_total.cos().abs() > COMPLETE_TRANSFER_TOL {
        return Err(Error::NotAnalytic(format!(
            "first leg angle {leg1_total} is not an odd multiple of pi/2 (incomplete transfer)"
        )));
    }
    Ok((angle(protocol.cm(), t, g, 1.0), angle(bm, t, g, 1.0)))
}

/// Composed two-step state: the first leg rotates `Psi1 -> Psi2`, the second
/// `Psi2 -> Psi3`.
pub fn two_step_state(
    spec: &SystemSpec,
    protocol: &ProtocolSchedule,
    t: f64,
) -> Result<ReducedState> {
    let (cm, bm) = two_step_angles(spec, protocol, t)?;
    let (c1, s1) = (cm.cos(), cm.sin());
    let (c2, s2) = (bm.cos(), bm.sin());
    Ok(reduced(
        [
            C64::new(c1, 0.0),
            C64::new(0.0, -s1 * c2),
            C64::new(-s1 * s2, 0.0),
        ],
        3,
        t,
    ))
}

pub fn two_step_energies(
    spec: &SystemSpec,
    protocol: &ProtocolSchedule,
    t: f64,
) -> Result<Energies> {
    let (cm, bm) = two_step_angles(spec, protocol, t)?;
    let w = spec.omega_b();
    let (s_cm, s_bm) = (cm.sin().powi(2), bm.sin().powi(2));
    Ok(Energies {
        e_b: w * s_bm,
        e_c: -w * s_cm,
        e_m: Some(w * (s_cm - s_bm)),
    })
}

fn coherent_angle(spec: &SystemSpec, protocol: &ProtocolSchedule, t: f64) -> Result<f64> {
    require_analytic(spec, protocol, Scenario::CoherentMediated)?;
    if protocol.bm() != Some(protocol.cm()) {
        return Err(Error::NotAnalytic(
            "coherent solution needs identical schedules on both bonds".into(),
        ));
    }
    Ok(angle(protocol.cm(), t, spec.g(), SQRT_2))
}

/// `(1/2 [cos phi + 1], -i/sqrt2 sin phi, 1/2 [cos phi - 1])` with
/// `phi = sqrt2 g int_0^t f`.
pub fn coherent_state(
    spec: &SystemSpec,
    protocol: &ProtocolSchedule,
    t: f64,
) -> Result<ReducedState> {
    let phi = coherent_angle(spec, protocol, t)?;
    let c = phi.cos();
    Ok(reduced(
        [
            C64::new(0.5 * (c + 1.0), 0.0),
            C64::new(0.0, -FRAC_1_SQRT_2 * phi.sin()),
            C64::new(0.5 * (c - 1.0), 0.0),
        ],
        3,
        t,
    ))
}

pub fn coherent_energies(
    spec: &SystemSpec,
    protocol: &ProtocolSchedule,
    t: f64,
) -> Result<Energies> {
    let phi = coherent_angle(spec, protocol, t)?;
    let w = spec.omega_b();
    let c = phi.cos();
    Ok(Energies {
        e_b: w * (0.5 * c - 0.5).powi(2),
        e_c: w * (0.25 * c * c + 0.5 * c - 0.75),
        e_m: Some(0.5 * w * phi.sin().powi(2)),
    })
}

/// Closed-form state for whichever protocol `spec` describes.
pub fn state(spec: &SystemSpec, protocol: &ProtocolSchedule, t: f64) -> Result<ReducedState> {
    match spec.scenario() {
        Scenario::Direct => direct_state(spec, protocol, t),
        Scenario::TwoStepMediated => two_step_state(spec, protocol, t),
        Scenario::CoherentMediated => coherent_state(spec, protocol, t),
    }
}

/// Closed-form stored energies for whichever protocol `spec` describes.
pub fn energies(spec: &SystemSpec, protocol: &ProtocolSchedule, t: f64) -> Result<Energies> {
    match spec.scenario() {
        Scenario::Direct => direct_energies(spec, protocol, t),
        Scenario::TwoStepMediated => two_step_energies(spec, protocol, t),
        Scenario::CoherentMediated => coherent_energies(spec, protocol, t),
    }
}

/// Samples the closed-form energies on `grid`.
pub fn trace(
    spec: &SystemSpec,
    protocol: &ProtocolSchedule,
    grid: &TimeGrid,
) -> Result<EnergyTrace> {
    let samples = grid
        .times()
        .iter()
        .map(|&t| energies(spec, protocol, t))
        .collect::<Result<Vec<_>>>()?;
    let mediated = spec.scenario().is_mediated();
    EnergyTrace::new(
        spec.scenario(),
        TraceSource::Analytic,
        grid.times().to_vec(),
        samples.iter().map(|e| e.e_b).collect(),
        samples.iter().map(|e| e.e_c).collect(),
        mediated.then(|| samples.iter().map(|e| e.e_m.unwrap_or(0.0)).collect()),
    )
}

/// Time of the `k`-th battery-energy maximum when the coupling stays on.
///
/// Direct and two-step count maxima from `k = 1` (`t = (2k-1) pi/(2g)`, plus
/// `sigma` for two-step); coherent counts from `k = 0`
/// (`t = (2k+1) pi/(sqrt2 g)`). Every maximum stores the full `omega_b`.
pub fn transfer_time(
    scenario: Scenario,
    g: f64,
    k: u32,
    sigma: Option<f64>,
) -> Result<TransferReport> {
    if !(g.is_finite() && g > 0.0) {
        return Err(Error::Precondition(format!(
            "coupling g must be positive, got {g}"
        )));
    }
    let t = match scenario {
        Scenario::Direct | Scenario::TwoStepMediated if k == 0 => {
            return Err(Error::Precondition(format!(
                "{scenario} maxima are numbered from k = 1"
            )))
        }
        Scenario::Direct => f64::from(2 * k - 1) * PI / (2.0 * g),
        Scenario::TwoStepMediated => {
            let sigma = sigma.ok_or_else(|| {
                Error::Precondition("two-step transfer time needs the delay sigma".into())
            })?;
            if !(sigma.is_finite() && sigma >= 0.0) {
                return Err(Error::Precondition(format!(
                    "invalid delay sigma = {sigma}"
                )));
            }
            f64::from(2 * k - 1) * PI / (2.0 * g) + sigma
        }
        Scenario::CoherentMediated => f64::from(2 * k + 1) * PI / (SQRT_2 * g),
    };
    Ok(TransferReport {
        e_b_max: 1.0,
        t_b_max: t,
        k_index: k,
        scenario,
        no_interior_maximum: false,
    })
}
