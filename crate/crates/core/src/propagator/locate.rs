use super::{propagate_piecewise, validate, AffineHamiltonian, TimeGrid};
use crate::analytic::TransferReport;
use crate::error::{Error, Result};
use crate::model::{Scenario, Site, StateVector, SystemSpec, C64};
use crate::switching::Drive;

const BISECTION_STEPS: usize = 200;

/// `dE_B/dt` in units of `omega_b^2`, from `d psi/dt = -i H psi`.
///
/// `P_B` is a quadratic form, so its derivative along `phi = -i H psi` is
/// `[P_B(psi + phi) - P_B(psi - phi)] / 2` exactly.
pub fn battery_power<S: StateVector>(
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
    let h = AffineHamiltonian::new(spec)?;
    power(spec, &h, drive.values(state.time()), state)
}

fn power<S: StateVector>(
    spec: &SystemSpec,
    hamiltonian: &AffineHamiltonian,
    values: (f64, f64),
    state: &S,
) -> Result<f64> {
    let h = hamiltonian.at(values);
    let psi = state.amplitudes();
    let phi = (h * psi) * C64::new(0.0, -1.0);
    let plus = S::from_parts(psi + &phi, state.time())?.excited_population(Site::Battery);
    let minus = S::from_parts(psi - &phi, state.time())?.excited_population(Site::Battery);
    Ok(spec.omega_b() * 0.5 * (plus - minus))
}

/// First maximum of `E_B` on `[t_0, t_end]`, located as the first sign change
/// of [`battery_power`] from positive to non-positive and refined by
/// bisection with exact piecewise propagation.
///
/// `n_scan` samples bracket the maximum; every bracket must contain at most
/// one maximum. Falls back to the end of the window with
/// `no_interior_maximum` when the power never turns.
pub fn locate_first_maximum<S: StateVector>(
    spec: &SystemSpec,
    drive: Drive<'_>,
    initial: &S,
    t_end: f64,
    n_scan: usize,
) -> Result<TransferReport> {
    let grid = TimeGrid::for_drive(initial.time(), t_end, n_scan, &drive)?;
    validate(spec, &drive, &grid, initial)?;
    let states = propagate_piecewise(spec, drive, &grid, initial)?;
    let p0 = initial.excited_population(Site::Battery);
    let energy = |s: &S| spec.omega_b() * (s.excited_population(Site::Battery) - p0);
    let k_index = match spec.scenario() {
        Scenario::CoherentMediated => 0,
        _ => 1,
    };
    let report = |t_b_max: f64, e_b_max: f64, no_interior_maximum: bool| TransferReport {
        e_b_max,
        t_b_max,
        k_index,
        scenario: spec.scenario(),
        no_interior_maximum,
    };

    let hamiltonian = AffineHamiltonian::new(spec)?;
    let power_at = |s: &S| power(spec, &hamiltonian, drive.values(s.time()), s);
    // the left limit sees the power drop at a switch-off
    let power_before = |s: &S| power(spec, &hamiltonian, drive.left_limits(s.time()), s);

    let mut rising = false;
    for i in 1..states.len() {
        let (a, b) = (&states[i - 1], &states[i]);
        let p_a = power_at(a)?;
        let p_b = power_before(b)?;
        if p_a > 0.0 {
            rising = true;
        }
        if !(rising && p_a > 0.0 && p_b <= 0.0) {
            if rising && p_b > 0.0 && power_at(b)? <= 0.0 {
                // coupling switched off while the battery was still charging
                return Ok(report(b.time(), energy(b), false));
            }
            continue;
        }
        let (mut lo, mut hi) = (a.clone(), b.time());
        for _ in 0..BISECTION_STEPS {
            let mid = 0.5 * (lo.time() + hi);
            if mid <= lo.time() || mid >= hi {
                break;
            }
            let pair = TimeGrid::from_times(vec![lo.time(), mid])?;
            let s = propagate_piecewise(spec, drive, &pair, &lo)?
                .pop()
                .expect("two samples");
            if power_at(&s)? > 0.0 {
                lo = s;
            } else {
                hi = mid;
            }
        }
        let pair = TimeGrid::from_times(vec![lo.time(), hi])?;
        let s = propagate_piecewise(spec, drive, &pair, &lo)?
            .pop()
            .expect("two samples");
        let (t, e) = if energy(&s) >= energy(&lo) {
            (hi, energy(&s))
        } else {
            (lo.time(), energy(&lo))
        };
        return Ok(report(t, e, false));
    }
    let last = states.last().expect("grid has at least two samples");
    Ok(report(last.time(), energy(last), true))
}
