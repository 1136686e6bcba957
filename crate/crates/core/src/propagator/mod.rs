//! Numerical evolution of the reduced and full models, used as an
//! independent check of the closed-form results.
//!
//! [`propagate_piecewise`] applies the exact unitary `exp(-i H dt)` on every
//! interval where the Hamiltonian is constant, obtained from a Hermitian
//! eigendecomposition. [`propagate_rk4`] is a classic fixed-step fourth-order
//! Runge-Kutta integrator that also accepts continuous profiles.

mod grid;
mod locate;
mod observables;
mod piecewise;
mod rk4;

pub use grid::TimeGrid;
pub use locate::{battery_power, locate_first_maximum};
pub use observables::{
    compare_traces, energies_from_states, find_first_maximum, interaction_energy, EnergyTrace,
    TraceComparison, TraceSource,
};
pub use piecewise::propagate_piecewise;
pub use rk4::{propagate_rk4, Rk4Run, MAX_NORM_DRIFT};

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::model::{build_hamiltonian, StateVector, SystemSpec, C64};
use crate::switching::Drive;

/// `H(t) = free + f_cm(t) cm + f_bm(t) bm`; every builder is affine in the
/// switching values, so three evaluations recover the decomposition exactly.
#[derive(Debug, Clone)]
pub(crate) struct AffineHamiltonian {
    free: DMatrix<C64>,
    cm: DMatrix<C64>,
    bm: DMatrix<C64>,
}

impl AffineHamiltonian {
    pub(crate) fn new(spec: &SystemSpec) -> Result<Self> {
        let free = build_hamiltonian(spec, 0.0, 0.0)?.into_entries();
        let cm = build_hamiltonian(spec, 1.0, 0.0)?.into_entries() - &free;
        let bm = if spec.scenario().is_mediated() {
            build_hamiltonian(spec, 0.0, 1.0)?.into_entries() - &free
        } else {
            DMatrix::zeros(free.nrows(), free.ncols())
        };
        Ok(Self { free, cm, bm })
    }

    pub(crate) fn at(&self, (f_cm, f_bm): (f64, f64)) -> DMatrix<C64> {
        let mut h = self.free.clone();
        if f_cm != 0.0 {
            h += &self.cm * C64::new(f_cm, 0.0);
        }
        if f_bm != 0.0 {
            h += &self.bm * C64::new(f_bm, 0.0);
        }
        h
    }

    /// The coupling part only.
    pub(crate) fn interaction(&self, (f_cm, f_bm): (f64, f64)) -> DMatrix<C64> {
        &self.cm * C64::new(f_cm, 0.0) + &self.bm * C64::new(f_bm, 0.0)
    }
}

/// Shared checks on a propagation request.
pub(crate) fn validate<S: StateVector>(
    spec: &SystemSpec,
    drive: &Drive<'_>,
    grid: &TimeGrid,
    initial: &S,
) -> Result<()> {
    if S::FULL != spec.model_variant().is_full() {
        return Err(Error::Config(format!(
            "{} model variant used with a {} state",
            spec.model_variant(),
            if S::FULL { "full" } else { "reduced" }
        )));
    }
    let dim = initial.amplitudes().len();
    if dim != spec.state_dim() {
        return Err(Error::Dimension {
            expected: spec.state_dim(),
            found: dim,
        });
    }
    if spec.scenario().is_mediated() && drive.bm.is_none() {
        return Err(Error::Config(
            "mediated scenario needs a schedule for the mediator-battery bond".into(),
        ));
    }
    let t0 = grid.start();
    if (initial.time() - t0).abs() > 1e-12 * t0.abs().max(1.0) {
        return Err(Error::Precondition(format!(
            "initial state given at t = {} but the grid starts at {t0}",
            initial.time()
        )));
    }
    Ok(())
}
