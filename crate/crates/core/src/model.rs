//! Domain types and Hamiltonian assembly.
//!
//! Energies are measured in units of the battery level spacing `omega_b`
//! (which is therefore always 1) and times in units of `1/omega_b`, with
//! `hbar = 1`.
//!
//! Two representations are supported:
//!
//! * the *reduced* one, restricted to the single-excitation sector, with
//!   basis `|1_C 0_B>, |0_C 1_B>` (direct) or `|1_C 0_M 0_B>, |0_C 1_M 0_B>,
//!   |0_C 0_M 1_B>` (mediated);
//! * the *full* tensor-product one, ordered big-endian `C (x) M (x) B` with
//!   the local ground state `|0>` first. Index bit `1` means "excited".

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector, Matrix2};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Two level spacings closer than this count as equal.
pub const RESONANCE_TOL: f64 = 1e-12;

/// Coupling above which the rotating-wave approximation becomes questionable,
/// in units of `omega_b`.
pub const RWA_COUPLING_LIMIT: f64 = 0.1;

/// Norm tolerance enforced by the checked state constructors.
pub const STATE_NORM_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    /// Charger and battery coupled directly.
    Direct,
    /// Charger -> mediator, then (after a delay) mediator -> battery.
    TwoStepMediated,
    /// Both mediator bonds switched simultaneously with the same profile.
    CoherentMediated,
}

impl Scenario {
    pub const ALL: [Scenario; 3] = [
        Scenario::Direct,
        Scenario::TwoStepMediated,
        Scenario::CoherentMediated,
    ];

    pub fn is_mediated(self) -> bool {
        !matches!(self, Scenario::Direct)
    }

    /// Sites present, in basis order.
    pub fn sites(self) -> &'static [Site] {
        if self.is_mediated() {
            &[Site::Charger, Site::Mediator, Site::Battery]
        } else {
            &[Site::Charger, Site::Battery]
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Scenario::Direct => "direct",
            Scenario::TwoStepMediated => "two-step",
            Scenario::CoherentMediated => "coherent",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "direct" => Ok(Scenario::Direct),
            "two-step" | "two-step-mediated" | "twostep" => Ok(Scenario::TwoStepMediated),
            "coherent" | "coherent-mediated" => Ok(Scenario::CoherentMediated),
            other => Err(Error::Config(format!("unknown scenario `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelVariant {
    /// Single-excitation sector only (2x2 or 3x3).
    Reduced,
    /// Full tensor-product space, exchange coupling only.
    FullRwa,
    /// Full tensor-product space, exchange plus pair-creation/annihilation
    /// terms on every coupled bond.
    FullCounterRotating,
}

impl ModelVariant {
    pub fn is_full(self) -> bool {
        !matches!(self, ModelVariant::Reduced)
    }

    pub fn name(self) -> &'static str {
        match self {
            ModelVariant::Reduced => "reduced",
            ModelVariant::FullRwa => "full-rwa",
            ModelVariant::FullCounterRotating => "full-counter-rotating",
        }
    }
}

impl fmt::Display for ModelVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "reduced" => Ok(ModelVariant::Reduced),
            "full-rwa" | "rwa" => Ok(ModelVariant::FullRwa),
            "full-counter-rotating" | "counter-rotating" | "full-cr" => {
                Ok(ModelVariant::FullCounterRotating)
            }
            other => Err(Error::Config(format!("unknown model variant `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Site {
    Charger,
    Mediator,
    Battery,
}

/// Physical parameters of the charger / (mediator) / battery system.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemSpec {
    omega_c: f64,
    omega_m: Option<f64>,
    omega_b: f64,
    g: f64,
    model_variant: ModelVariant,
    scenario: Scenario,
}

impl SystemSpec {
    /// `omega_c` and `omega_m` are given in units of `omega_b`.
    pub fn new(
        scenario: Scenario,
        model_variant: ModelVariant,
        g: f64,
        omega_c: f64,
        omega_m: Option<f64>,
    ) -> Result<Self> {
        if !(g.is_finite() && g > 0.0) {
            return Err(Error::Config(format!(
                "coupling g must be positive, got {g}"
            )));
        }
        if !(omega_c.is_finite() && omega_c > 0.0) {
            return Err(Error::Config(format!(
                "omega_c must be positive, got {omega_c}"
            )));
        }
        match (scenario.is_mediated(), omega_m) {
            (false, Some(_)) => {
                return Err(Error::Config(
                    "direct scenario has no mediator; omega_m must be absent".into(),
                ))
            }
            (true, None) => return Err(Error::Config("mediated scenario requires omega_m".into())),
            (true, Some(w)) if !(w.is_finite() && w > 0.0) => {
                return Err(Error::Config(format!("omega_m must be positive, got {w}")))
            }
            _ => {}
        }
        Ok(Self {
            omega_c,
            omega_m,
            omega_b: 1.0,
            g,
            model_variant,
            scenario,
        })
    }

    /// All level spacings equal to `omega_b`.
    pub fn resonant(scenario: Scenario, model_variant: ModelVariant, g: f64) -> Result<Self> {
        let omega_m = scenario.is_mediated().then_some(1.0);
        Self::new(scenario, model_variant, g, 1.0, omega_m)
    }

    pub fn with_variant(&self, model_variant: ModelVariant) -> Self {
        Self {
            model_variant,
            ..self.clone()
        }
    }

    pub fn omega_c(&self) -> f64 {
        self.omega_c
    }

    pub fn omega_m(&self) -> Option<f64> {
        self.omega_m
    }

    pub fn omega_b(&self) -> f64 {
        self.omega_b
    }

    pub fn g(&self) -> f64 {
        self.g
    }

    pub fn model_variant(&self) -> ModelVariant {
        self.model_variant
    }

    pub fn scenario(&self) -> Scenario {
        self.scenario
    }

    pub fn omega(&self, site: Site) -> Option<f64> {
        match site {
            Site::Charger => Some(self.omega_c),
            Site::Mediator => self.omega_m,
            Site::Battery => Some(self.omega_b),
        }
    }

    pub fn is_resonant(&self) -> bool {
        let close = |w: f64| (w - self.omega_b).abs() <= RESONANCE_TOL * self.omega_b;
        close(self.omega_c) && self.omega_m.is_none_or(close)
    }

    /// Soft flag: the coupling is outside the regime where the rotating-wave
    /// approximation is accurate.
    pub fn rwa_warning(&self) -> bool {
        self.g > RWA_COUPLING_LIMIT * self.omega_b
    }

    pub fn n_sites(&self) -> usize {
        self.scenario.sites().len()
    }

    /// Dimension of the state vector for the configured model variant.
    pub fn state_dim(&self) -> usize {
        if self.model_variant.is_full() {
            1 << self.n_sites()
        } else {
            self.n_sites()
        }
    }

    /// Constant energy dropped from the reduced Hamiltonian relative to the
    /// single-excitation block of the full one.
    ///
    /// Only the resonant mediated matrix drops its uniform `-omega_b/2`
    /// diagonal; the direct matrix and the detuned mediated matrix coincide
    /// with the full block.
    pub fn sector_offset(&self) -> f64 {
        if self.scenario.is_mediated() && self.is_resonant() {
            -0.5 * self.omega_b
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianMatrix {
    entries: DMatrix<C64>,
    time_tag: Option<f64>,
}

impl HamiltonianMatrix {
    pub fn new(entries: DMatrix<C64>) -> Self {
        Self {
            entries,
            time_tag: None,
        }
    }

    pub fn at(mut self, t: f64) -> Self {
        self.time_tag = Some(t);
        self
    }

    pub fn entries(&self) -> &DMatrix<C64> {
        &self.entries
    }

    pub fn into_entries(self) -> DMatrix<C64> {
        self.entries
    }

    pub fn time_tag(&self) -> Option<f64> {
        self.time_tag
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    /// Largest entrywise deviation from the conjugate transpose.
    pub fn hermiticity_error(&self) -> f64 {
        let adj = self.entries.adjoint();
        (&self.entries - adj)
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }
}

fn real(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Reduced 2x2 Hamiltonian of the direct configuration for a given switching
/// value `f`.
pub fn build_reduced_direct(spec: &SystemSpec, f_value: f64) -> Result<HamiltonianMatrix> {
    if spec.scenario != Scenario::Direct {
        return Err(Error::Config(format!(
            "reduced direct Hamiltonian requested for {} scenario",
            spec.scenario
        )));
    }
    let d = 0.5 * (spec.omega_c - spec.omega_b);
    let d = if spec.is_resonant() { 0.0 } else { d };
    let c = spec.g * f_value;
    Ok(HamiltonianMatrix::new(DMatrix::from_row_slice(
        2,
        2,
        &[real(d), real(c), real(c), real(-d)],
    )))
}

/// Reduced 3x3 tridiagonal Hamiltonian of the mediated configuration.
pub fn build_reduced_mediated(
    spec: &SystemSpec,
    f_cm: f64,
    f_bm: f64,
) -> Result<HamiltonianMatrix> {
    if !spec.scenario.is_mediated() {
        return Err(Error::Config(
            "reduced mediated Hamiltonian requested for direct scenario".into(),
        ));
    }
    let omega_m = spec
        .omega_m
        .ok_or_else(|| Error::Config("mediated scenario requires omega_m".into()))?;
    let (wc, wm, wb) = (spec.omega_c, omega_m, spec.omega_b);
    let diag = if spec.is_resonant() {
        [0.0; 3]
    } else {
        [
            0.5 * (wc - wm - wb),
            0.5 * (-wc + wm - wb),
            0.5 * (-wc - wm + wb),
        ]
    };
    let (a, b) = (spec.g * f_cm, spec.g * f_bm);
    let z = C64::new(0.0, 0.0);
    Ok(HamiltonianMatrix::new(DMatrix::from_row_slice(
        3,
        3,
        &[
            real(diag[0]),
            real(a),
            z,
            real(a),
            real(diag[1]),
            real(b),
            z,
            real(b),
            real(diag[2]),
        ],
    )))
}

fn sigma_z() -> Matrix2<C64> {
    // |0> = ground first, sigma_z |0> = -|0>.
    Matrix2::new(real(-1.0), real(0.0), real(0.0), real(1.0))
}

fn sigma_plus() -> Matrix2<C64> {
    // |1><0|
    Matrix2::new(real(0.0), real(0.0), real(1.0), real(0.0))
}

fn sigma_minus() -> Matrix2<C64> {
    Matrix2::new(real(0.0), real(1.0), real(0.0), real(0.0))
}

/// Embeds the product of single-site operators `ops` (position, operator) in
/// an `n`-site register; unlisted sites carry the identity.
fn embed(n: usize, ops: &[(usize, Matrix2<C64>)]) -> DMatrix<C64> {
    let mut out = DMatrix::<C64>::identity(1, 1);
    for pos in 0..n {
        let local = ops
            .iter()
            .find(|(p, _)| *p == pos)
            .map(|(_, m)| DMatrix::from_iterator(2, 2, m.iter().copied()))
            .unwrap_or_else(|| DMatrix::identity(2, 2));
        out = out.kronecker(&local);
    }
    out
}

/// Full `2^N`-dimensional Hamiltonian (N = 2 direct, 3 mediated).
///
/// For the direct scenario `f_bm` is ignored and `f_cm` plays the role of the
/// single switching function.
pub fn build_full(spec: &SystemSpec, f_cm: f64, f_bm: f64) -> Result<HamiltonianMatrix> {
    if !spec.model_variant.is_full() {
        return Err(Error::Config(
            "full Hamiltonian requested for the reduced model variant".into(),
        ));
    }
    let sites = spec.scenario.sites();
    let n = sites.len();
    let dim = 1 << n;
    let mut h = DMatrix::<C64>::zeros(dim, dim);
    for (pos, site) in sites.iter().enumerate() {
        let w = spec.omega(*site).expect("site present in scenario");
        h += embed(n, &[(pos, sigma_z())]) * real(0.5 * w);
    }
    let bonds: Vec<(usize, usize, f64)> = if spec.scenario.is_mediated() {
        vec![(0, 1, f_cm), (1, 2, f_bm)]
    } else {
        vec![(0, 1, f_cm)]
    };
    let counter_rotating = spec.model_variant == ModelVariant::FullCounterRotating;
    for (i, j, f) in bonds {
        let amp = real(spec.g * f);
        let mut bond = embed(n, &[(i, sigma_minus()), (j, sigma_plus())])
            + embed(n, &[(i, sigma_plus()), (j, sigma_minus())]);
        if counter_rotating {
            bond += embed(n, &[(i, sigma_minus()), (j, sigma_minus())])
                + embed(n, &[(i, sigma_plus()), (j, sigma_plus())]);
        }
        h += bond * amp;
    }
    Ok(HamiltonianMatrix::new(h))
}

/// Dispatches to the builder matching `spec.model_variant()`.
pub fn build_hamiltonian(spec: &SystemSpec, f_cm: f64, f_bm: f64) -> Result<HamiltonianMatrix> {
    match (spec.model_variant, spec.scenario) {
        (ModelVariant::Reduced, Scenario::Direct) => build_reduced_direct(spec, f_cm),
        (ModelVariant::Reduced, _) => build_reduced_mediated(spec, f_cm, f_bm),
        _ => build_full(spec, f_cm, f_bm),
    }
}

/// Total excitation-number operator on an `n`-site register.
pub fn excitation_number_operator(n_sites: usize) -> DMatrix<C64> {
    let number = Matrix2::new(real(0.0), real(0.0), real(0.0), real(1.0));
    let dim = 1 << n_sites;
    (0..n_sites).fold(DMatrix::zeros(dim, dim), |acc, pos| {
        acc + embed(n_sites, &[(pos, number)])
    })
}

/// Index into the full basis of the product state with exactly `excited`
/// sites excited (positions in `C, (M,) B` order).
pub fn full_index(n_sites: usize, excited: &[usize]) -> usize {
    excited
        .iter()
        .fold(0, |acc, &pos| acc | (1 << (n_sites - 1 - pos)))
}

/// Common interface of reduced and full state vectors.
pub trait StateVector: Clone + fmt::Debug + Send + Sync {
    /// Whether this type lives in the full tensor-product space.
    const FULL: bool;

    /// Builds a state without checking its norm. Propagators use this so that
    /// integrator drift stays observable.
    fn from_parts(amplitudes: DVector<C64>, time: f64) -> Result<Self>;

    fn amplitudes(&self) -> &DVector<C64>;

    fn time(&self) -> f64;

    /// The charger-excited state every protocol starts from.
    fn designated_initial(scenario: Scenario) -> Self;

    /// Probability of `site` being excited. Zero for sites the state does not
    /// carry.
    fn excited_population(&self, site: Site) -> f64;

    fn norm(&self) -> f64 {
        self.amplitudes().norm()
    }
}

fn check_norm(amplitudes: &DVector<C64>) -> Result<()> {
    let n = amplitudes.norm();
    if (n - 1.0).abs() > STATE_NORM_TOL {
        return Err(Error::Precondition(format!("state norm {n} is not 1")));
    }
    Ok(())
}

/// Amplitudes over the single-excitation basis (charger-excited first,
/// battery-excited last).
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedState {
    amplitudes: DVector<C64>,
    time: f64,
}

impl ReducedState {
    pub fn new(amplitudes: DVector<C64>, time: f64) -> Result<Self> {
        check_norm(&amplitudes)?;
        Self::from_parts(amplitudes, time)
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_mediated(&self) -> bool {
        self.dim() == 3
    }
}

impl StateVector for ReducedState {
    const FULL: bool = false;

    fn from_parts(amplitudes: DVector<C64>, time: f64) -> Result<Self> {
        match amplitudes.len() {
            2 | 3 => Ok(Self { amplitudes, time }),
            n => Err(Error::Dimension {
                expected: if n < 3 { 2 } else { 3 },
                found: n,
            }),
        }
    }

    fn amplitudes(&self) -> &DVector<C64> {
        &self.amplitudes
    }

    fn time(&self) -> f64 {
        self.time
    }

    fn designated_initial(scenario: Scenario) -> Self {
        let mut amps = DVector::zeros(scenario.sites().len());
        amps[0] = real(1.0);
        Self {
            amplitudes: amps,
            time: 0.0,
        }
    }

    fn excited_population(&self, site: Site) -> f64 {
        let idx = match (self.is_mediated(), site) {
            (_, Site::Charger) => Some(0),
            (true, Site::Mediator) => Some(1),
            (false, Site::Mediator) => None,
            (_, Site::Battery) => Some(self.dim() - 1),
        };
        idx.map_or(0.0, |i| self.amplitudes[i].norm_sqr())
    }
}

/// Amplitudes over the full `2^N` tensor-product basis.
#[derive(Debug, Clone, PartialEq)]
pub struct FullState {
    amplitudes: DVector<C64>,
    time: f64,
}

impl FullState {
    pub fn new(amplitudes: DVector<C64>, time: f64) -> Result<Self> {
        check_norm(&amplitudes)?;
        Self::from_parts(amplitudes, time)
    }

    pub fn n_sites(&self) -> usize {
        self.amplitudes.len().trailing_zeros() as usize
    }

    fn sector_indices(&self) -> Vec<usize> {
        let n = self.n_sites();
        (0..n).map(|pos| full_index(n, &[pos])).collect()
    }

    /// Population outside the single-excitation sector.
    pub fn out_of_sector_population(&self) -> f64 {
        let sector = self.sector_indices();
        self.amplitudes
            .iter()
            .enumerate()
            .filter(|(i, _)| !sector.contains(i))
            .map(|(_, a)| a.norm_sqr())
            .sum()
    }

    /// Projects onto the single-excitation sector and removes the phase of
    /// the constant energy the reduced model drops, so the result is directly
    /// comparable with a reduced evolution of `spec`.
    pub fn to_reduced(&self, spec: &SystemSpec) -> Result<ReducedState> {
        if self.n_sites() != spec.n_sites() {
            return Err(Error::Dimension {
                expected: 1 << spec.n_sites(),
                found: self.amplitudes.len(),
            });
        }
        let phase = C64::from_polar(1.0, spec.sector_offset() * self.time);
        let amps = DVector::from_iterator(
            spec.n_sites(),
            self.sector_indices()
                .into_iter()
                .map(|i| self.amplitudes[i] * phase),
        );
        ReducedState::from_parts(amps, self.time)
    }

    /// Inverse of [`FullState::to_reduced`].
    pub fn from_reduced(state: &ReducedState, spec: &SystemSpec) -> Result<Self> {
        if state.dim() != spec.n_sites() {
            return Err(Error::Dimension {
                expected: spec.n_sites(),
                found: state.dim(),
            });
        }
        let n = spec.n_sites();
        let phase = C64::from_polar(1.0, -spec.sector_offset() * state.time());
        let mut amps = DVector::zeros(1 << n);
        for pos in 0..n {
            amps[full_index(n, &[pos])] = state.amplitudes()[pos] * phase;
        }
        Self::from_parts(amps, state.time())
    }
}

impl StateVector for FullState {
    const FULL: bool = true;

    fn from_parts(amplitudes: DVector<C64>, time: f64) -> Result<Self> {
        match amplitudes.len() {
            4 | 8 => Ok(Self { amplitudes, time }),
            n => Err(Error::Dimension {
                expected: if n < 8 { 4 } else { 8 },
                found: n,
            }),
        }
    }

    fn amplitudes(&self) -> &DVector<C64> {
        &self.amplitudes
    }

    fn time(&self) -> f64 {
        self.time
    }

    fn designated_initial(scenario: Scenario) -> Self {
        let n = scenario.sites().len();
        let mut amps = DVector::zeros(1 << n);
        amps[full_index(n, &[0])] = real(1.0);
        Self {
            amplitudes: amps,
            time: 0.0,
        }
    }

    fn excited_population(&self, site: Site) -> f64 {
        let n = self.n_sites();
        let pos = match (n, site) {
            (_, Site::Charger) => 0,
            (3, Site::Mediator) => 1,
            (_, Site::Mediator) => return 0.0,
            (_, Site::Battery) => n - 1,
        };
        let bit = 1 << (n - 1 - pos);
        self.amplitudes
            .iter()
            .enumerate()
            .filter(|(i, _)| i & bit != 0)
            .map(|(_, a)| a.norm_sqr())
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_matrix_eq(m: &DMatrix<C64>, expected: &[f64], tol: f64) {
        let n = m.nrows();
        for i in 0..n {
            for j in 0..n {
                let want = expected[i * n + j];
                assert!(
                    (m[(i, j)] - real(want)).norm() <= tol,
                    "entry ({i},{j}) = {} expected {want}",
                    m[(i, j)]
                );
            }
        }
    }

    fn direct(variant: ModelVariant) -> SystemSpec {
        SystemSpec::resonant(Scenario::Direct, variant, 0.05).unwrap()
    }

    #[test]
    fn spec_validation() {
        assert!(SystemSpec::resonant(Scenario::Direct, ModelVariant::Reduced, 0.0).is_err());
        assert!(SystemSpec::resonant(Scenario::Direct, ModelVariant::Reduced, -0.1).is_err());
        assert!(SystemSpec::new(
            Scenario::Direct,
            ModelVariant::Reduced,
            0.05,
            1.0,
            Some(1.0)
        )
        .is_err());
        assert!(SystemSpec::new(
            Scenario::CoherentMediated,
            ModelVariant::Reduced,
            0.05,
            1.0,
            None
        )
        .is_err());
        assert!(SystemSpec::new(Scenario::Direct, ModelVariant::Reduced, 0.05, 0.0, None).is_err());
        let detuned =
            SystemSpec::new(Scenario::Direct, ModelVariant::Reduced, 0.05, 1.2, None).unwrap();
        assert!(!detuned.is_resonant());
        assert!(direct(ModelVariant::Reduced).is_resonant());
        assert_eq!(direct(ModelVariant::Reduced).omega_b(), 1.0);
    }

    #[test]
    fn rwa_flag() {
        assert!(!direct(ModelVariant::Reduced).rwa_warning());
        let strong = SystemSpec::resonant(Scenario::Direct, ModelVariant::Reduced, 0.2).unwrap();
        assert!(strong.rwa_warning());
    }

    #[test]
    fn reduced_direct_examples() {
        let spec = direct(ModelVariant::Reduced);
        let h = build_reduced_direct(&spec, 1.0).unwrap();
        assert_matrix_eq(h.entries(), &[0.0, 0.05, 0.05, 0.0], 0.0);
        let h = build_reduced_direct(&spec, 0.0).unwrap();
        assert_matrix_eq(h.entries(), &[0.0; 4], 0.0);

        let detuned =
            SystemSpec::new(Scenario::Direct, ModelVariant::Reduced, 0.05, 1.2, None).unwrap();
        let h = build_reduced_direct(&detuned, 1.0).unwrap();
        assert_matrix_eq(h.entries(), &[0.1, 0.05, 0.05, -0.1], 1e-15);
    }

    #[test]
    fn reduced_builders_reject_wrong_scenario() {
        let med =
            SystemSpec::resonant(Scenario::CoherentMediated, ModelVariant::Reduced, 0.05).unwrap();
        assert!(matches!(
            build_reduced_direct(&med, 1.0),
            Err(Error::Config(_))
        ));
        let dir = direct(ModelVariant::Reduced);
        assert!(matches!(
            build_reduced_mediated(&dir, 1.0, 1.0),
            Err(Error::Config(_))
        ));
        assert!(matches!(build_full(&dir, 1.0, 0.0), Err(Error::Config(_))));
    }

    #[test]
    fn reduced_mediated_examples() {
        let spec =
            SystemSpec::resonant(Scenario::CoherentMediated, ModelVariant::Reduced, 0.05).unwrap();
        let h = build_reduced_mediated(&spec, 1.0, 1.0).unwrap();
        #[rustfmt::skip]
        assert_matrix_eq(h.entries(), &[
            0.0, 0.05, 0.0,
            0.05, 0.0, 0.05,
            0.0, 0.05, 0.0,
        ], 0.0);

        let h = build_reduced_mediated(&spec, 1.0, 0.0).unwrap();
        #[rustfmt::skip]
        assert_matrix_eq(h.entries(), &[
            0.0, 0.05, 0.0,
            0.05, 0.0, 0.0,
            0.0, 0.0, 0.0,
        ], 0.0);

        let h = build_reduced_mediated(&spec, 0.0, 0.0).unwrap();
        assert_matrix_eq(h.entries(), &[0.0; 9], 0.0);
    }

    #[test]
    fn reduced_mediated_detuned_diagonal() {
        let spec = SystemSpec::new(
            Scenario::TwoStepMediated,
            ModelVariant::Reduced,
            0.05,
            1.2,
            Some(0.9),
        )
        .unwrap();
        let h = build_reduced_mediated(&spec, 0.0, 0.0).unwrap();
        let d = h.entries().diagonal();
        assert!((d[0].re - 0.5 * (1.2 - 0.9 - 1.0)).abs() < 1e-15);
        assert!((d[1].re - 0.5 * (-1.2 + 0.9 - 1.0)).abs() < 1e-15);
        assert!((d[2].re - 0.5 * (-1.2 - 0.9 + 1.0)).abs() < 1e-15);
    }

    #[test]
    fn free_direct_spectrum() {
        let h = build_full(&direct(ModelVariant::FullRwa), 0.0, 0.0).unwrap();
        // |00>, |01>, |10>, |11>
        assert_matrix_eq(
            &DMatrix::from_diagonal(&h.entries().diagonal()),
            &[
                -1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0,
            ],
            0.0,
        );
        assert!((h.entries() - DMatrix::from_diagonal(&h.entries().diagonal())).norm() == 0.0);
    }

    #[test]
    fn full_direct_matches_hand_built_tensor_product() {
        // H = 1/2 (sz (x) 1 + 1 (x) sz) + g (s- (x) s+ + s+ (x) s-) written out
        // in the |00>,|01>,|10>,|11> basis.
        let g = 0.05;
        #[rustfmt::skip]
        let by_hand = [
            -1.0, 0.0, 0.0, 0.0,
             0.0, 0.0, g,   0.0,
             0.0, g,   0.0, 0.0,
             0.0, 0.0, 0.0, 1.0,
        ];
        let full = build_full(&direct(ModelVariant::FullRwa), 1.0, 0.0).unwrap();
        assert_matrix_eq(full.entries(), &by_hand, 1e-14);

        let reduced = build_reduced_direct(&direct(ModelVariant::Reduced), 1.0).unwrap();
        let idx = [full_index(2, &[0]), full_index(2, &[1])];
        for (a, &i) in idx.iter().enumerate() {
            for (b, &j) in idx.iter().enumerate() {
                let diff = full.entries()[(i, j)] - reduced.entries()[(a, b)];
                assert!(diff.norm() <= 1e-14);
            }
        }
    }

    #[test]
    fn counter_rotating_annihilates_charger_excited_state() {
        let rwa = build_full(&direct(ModelVariant::FullRwa), 1.0, 0.0).unwrap();
        let cr = build_full(&direct(ModelVariant::FullCounterRotating), 1.0, 0.0).unwrap();
        let pair = cr.entries() - rwa.entries();
        let mut psi = DVector::<C64>::zeros(4);
        psi[full_index(2, &[0])] = real(1.0);
        let out = &pair * &psi;
        assert_eq!(out.norm(), 0.0);
        // the pair term does connect |00> and |11>
        assert!((pair[(0, 3)] - real(0.05)).norm() < 1e-15);
    }

    #[test]
    fn hermitian_and_number_conserving() {
        for scenario in Scenario::ALL {
            for variant in [ModelVariant::FullRwa, ModelVariant::FullCounterRotating] {
                let spec = SystemSpec::new(
                    scenario,
                    variant,
                    0.07,
                    1.1,
                    scenario.is_mediated().then_some(0.95),
                )
                .unwrap();
                let h = build_full(&spec, 0.8, 0.3).unwrap();
                assert!(h.hermiticity_error() <= 1e-14);
                let n = excitation_number_operator(spec.n_sites());
                let comm = h.entries() * &n - &n * h.entries();
                let c = comm.iter().map(|z| z.norm()).fold(0.0, f64::max);
                if variant == ModelVariant::FullRwa {
                    assert!(c <= 1e-14, "{scenario} commutator {c}");
                } else {
                    assert!(c > 1e-3);
                }
            }
        }
    }

    #[test]
    fn reduced_is_offset_shifted_sector_block() {
        for (scenario, wc, wm) in [
            (Scenario::Direct, 1.0, None),
            (Scenario::Direct, 1.3, None),
            (Scenario::CoherentMediated, 1.0, Some(1.0)),
            (Scenario::TwoStepMediated, 1.2, Some(0.8)),
        ] {
            let full_spec = SystemSpec::new(scenario, ModelVariant::FullRwa, 0.04, wc, wm).unwrap();
            let red_spec = full_spec.with_variant(ModelVariant::Reduced);
            let full = build_full(&full_spec, 0.6, 0.9).unwrap();
            let red = build_hamiltonian(&red_spec, 0.6, 0.9).unwrap();
            let n = full_spec.n_sites();
            let off = full_spec.sector_offset();
            for a in 0..n {
                for b in 0..n {
                    let (i, j) = (full_index(n, &[a]), full_index(n, &[b]));
                    let shift = if a == b { off } else { 0.0 };
                    let diff = full.entries()[(i, j)] - red.entries()[(a, b)] - real(shift);
                    assert!(diff.norm() <= 1e-14, "{scenario} ({a},{b})");
                }
            }
        }
    }

    #[test]
    fn populations_and_projection() {
        let spec =
            SystemSpec::resonant(Scenario::CoherentMediated, ModelVariant::FullRwa, 0.05).unwrap();
        let s = 0.5f64.sqrt();
        let red = ReducedState::new(
            DVector::from_vec(vec![real(s), C64::new(0.0, -0.5), real(0.5)]),
            3.0,
        )
        .unwrap();
        let full = FullState::from_reduced(&red, &spec).unwrap();
        assert!((full.excited_population(Site::Charger) - 0.5).abs() < 1e-15);
        assert!((full.excited_population(Site::Mediator) - 0.25).abs() < 1e-15);
        assert!((full.excited_population(Site::Battery) - 0.25).abs() < 1e-15);
        assert_eq!(full.out_of_sector_population(), 0.0);
        let back = full.to_reduced(&spec).unwrap();
        assert!((back.amplitudes() - red.amplitudes()).norm() < 1e-15);
    }

    #[test]
    fn state_constructors_check_norm_and_dim() {
        assert!(ReducedState::new(DVector::from_vec(vec![real(1.0), real(1.0)]), 0.0).is_err());
        assert!(matches!(
            ReducedState::new(DVector::from_vec(vec![real(1.0)]), 0.0),
            Err(Error::Dimension { .. })
        ));
        assert!(FullState::new(DVector::from_vec(vec![real(1.0); 3]), 0.0).is_err());
        let init = FullState::designated_initial(Scenario::TwoStepMediated);
        assert_eq!(init.amplitudes()[4], real(1.0));
        assert_eq!(init.excited_population(Site::Charger), 1.0);
    }

    #[test]
    fn parse_names() {
        assert_eq!(
            "two-step".parse::<Scenario>().unwrap(),
            Scenario::TwoStepMediated
        );
        assert_eq!(
            "Coherent".parse::<Scenario>().unwrap(),
            Scenario::CoherentMediated
        );
        assert!("sideways".parse::<Scenario>().is_err());
        assert_eq!(
            "full-counter-rotating".parse::<ModelVariant>().unwrap(),
            ModelVariant::FullCounterRotating
        );
    }
}
