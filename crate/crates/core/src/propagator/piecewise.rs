use nalgebra::{DMatrix, DVector};

use super::{validate, AffineHamiltonian, TimeGrid};
use crate::error::{Error, Result};
use crate::model::{StateVector, SystemSpec, C64};
use crate::switching::Drive;

/// Spectral form of a constant Hamiltonian, `H = V diag(lambda) V^dagger`.
struct ConstantSegment {
    eigenvalues: DVector<f64>,
    eigenvectors: DMatrix<C64>,
    adjoint: DMatrix<C64>,
}

impl ConstantSegment {
    fn new(h: DMatrix<C64>) -> Self {
        let eig = h.symmetric_eigen();
        let adjoint = eig.eigenvectors.adjoint();
        Self {
            eigenvalues: eig.eigenvalues,
            eigenvectors: eig.eigenvectors,
            adjoint,
        }
    }

    /// `exp(-i H dt) psi`.
    fn evolve(&self, psi: &DVector<C64>, dt: f64) -> DVector<C64> {
        let mut coeffs = &self.adjoint * psi;
        for (c, lambda) in coeffs.iter_mut().zip(self.eigenvalues.iter()) {
            *c *= C64::from_polar(1.0, -lambda * dt);
        }
        &self.eigenvectors * coeffs
    }
}

/// Evolves `initial` through every time of `grid` with the exact propagator
/// of each constant-Hamiltonian segment.
///
/// Samples inside a segment are computed from the state at the segment start,
/// so rounding does not accumulate with the sampling density. The profiles in
/// `drive` must be piecewise constant.
pub fn propagate_piecewise<S: StateVector>(
    spec: &SystemSpec,
    drive: Drive<'_>,
    grid: &TimeGrid,
    initial: &S,
) -> Result<Vec<S>> {
    validate(spec, &drive, grid, initial)?;
    let breakpoints = drive.breakpoints().ok_or(Error::NotPiecewiseConstant)?;
    let hamiltonian = AffineHamiltonian::new(spec)?;
    let segment_at = |t: f64| ConstantSegment::new(hamiltonian.at(drive.values(t)));

    let times = grid.times();
    let mut upcoming = breakpoints.into_iter().filter(|&b| b > times[0]).peekable();
    let mut seg_start = times[0];
    let mut seg_state = initial.amplitudes().clone();
    let mut segment = segment_at(seg_start);

    let mut out = Vec::with_capacity(times.len());
    out.push(S::from_parts(seg_state.clone(), times[0])?);
    for &t in &times[1..] {
        while let Some(&b) = upcoming.peek() {
            if b >= t {
                break;
            }
            seg_state = segment.evolve(&seg_state, b - seg_start);
            seg_start = b;
            segment = segment_at(b);
            upcoming.next();
        }
        out.push(S::from_parts(segment.evolve(&seg_state, t - seg_start), t)?);
    }
    Ok(out)
}
