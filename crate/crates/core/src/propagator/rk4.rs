use nalgebra::DVector;

use super::{validate, AffineHamiltonian, TimeGrid};
use crate::error::{Error, Result};
use crate::model::{StateVector, SystemSpec, C64};
use crate::switching::Drive;

/// Largest tolerated deviation of the state norm from its initial value.
pub const MAX_NORM_DRIFT: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct Rk4Run<S> {
    pub states: Vec<S>,
    /// Largest `| |psi(t)| - |psi(0)| |` over the samples. The states are
    /// never renormalized.
    pub max_norm_drift: f64,
}

/// Fixed-step fourth-order Runge-Kutta integration of `d psi/dt = -i H(t) psi`.
///
/// Each grid interval is split into equal substeps no longer than `step`.
/// The last stage of a substep samples the switching functions from the
/// left, so a grid containing every switching instant never straddles a
/// discontinuity.
pub fn propagate_rk4<S: StateVector>(
    spec: &SystemSpec,
    drive: Drive<'_>,
    grid: &TimeGrid,
    step: f64,
    initial: &S,
) -> Result<Rk4Run<S>> {
    validate(spec, &drive, grid, initial)?;
    let span = grid.end() - grid.start();
    if !(step > 0.0 && step <= span / 100.0) {
        return Err(Error::Precondition(format!(
            "step {step} must be positive and at most 1/100 of the window ({span})"
        )));
    }
    let hamiltonian = AffineHamiltonian::new(spec)?;
    let minus_i = C64::new(0.0, -1.0);
    let rhs = |f: (f64, f64), psi: &DVector<C64>| (hamiltonian.at(f) * psi) * minus_i;

    let norm0 = initial.norm();
    let times = grid.times();
    let mut psi = initial.amplitudes().clone();
    let mut max_drift: f64 = 0.0;
    let mut states = Vec::with_capacity(times.len());
    states.push(S::from_parts(psi.clone(), times[0])?);

    for pair in times.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let n = ((b - a) / step).ceil().max(1.0) as usize;
        let h = (b - a) / n as f64;
        let hc = C64::new(h, 0.0);
        for j in 0..n {
            let t = a + j as f64 * h;
            let t_next = if j + 1 == n {
                b
            } else {
                (a + (j + 1) as f64 * h).min(b)
            };
            let f_start = drive.values(t);
            let f_mid = drive.values(0.5 * (t + t_next));
            let f_end = drive.left_limits(t_next);
            let k1 = rhs(f_start, &psi);
            let k2 = rhs(f_mid, &(&psi + &k1 * (hc * 0.5)));
            let k3 = rhs(f_mid, &(&psi + &k2 * (hc * 0.5)));
            let k4 = rhs(f_end, &(&psi + &k3 * hc));
            psi += (k1 + k2 * C64::new(2.0, 0.0) + k3 * C64::new(2.0, 0.0) + k4) * (hc / 6.0);
        }
        max_drift = max_drift.max((psi.norm() - norm0).abs());
        states.push(S::from_parts(psi.clone(), b)?);
    }

    if max_drift > MAX_NORM_DRIFT {
        return Err(Error::Accuracy {
            drift: max_drift,
            limit: MAX_NORM_DRIFT,
            step,
        });
    }
    Ok(Rk4Run {
        states,
        max_norm_drift: max_drift,
    })
}
