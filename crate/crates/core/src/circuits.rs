//! Superconducting-circuit Hamiltonians in the charge basis (islands) and on
//! a phase grid (loops), their spectra, noise susceptibilities and the
//! relaxation and dephasing rates derived from them.

use std::f64::consts::TAU;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::qcore::{eigh, CMatrix, Operator, QcoreError, ZERO};
use crate::tridiag::SymTridiagonal;

pub const DEFAULT_NCUT: usize = 30;
pub const DEFAULT_GRID_TURNS: f64 = 4.0;
pub const DEFAULT_GRID_POINTS: usize = 2048;
pub const MIN_GRID_POINTS: usize = 128;
pub const MIN_NCUT: usize = 5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CircuitError {
    #[error("invalid circuit parameters: {0}")]
    InvalidParams(String),
    #[error("charge cutoff {0} is below the minimum of {MIN_NCUT}")]
    CutoffTooSmall(usize),
    #[error("phase grid with {0} points is below the minimum of {MIN_GRID_POINTS}")]
    GridTooCoarse(usize),
    #[error("requested {requested} levels but only {available} are available")]
    TooManyLevels { requested: usize, available: usize },
    #[error("at least 3 levels are needed to define a qubit frequency and anharmonicity")]
    TooFewLevels,
    #[error("effective Josephson energy vanishes, so the inductance diverges")]
    InfiniteInductance,
    #[error("no sign change of the derivative in [{0}, {1}]")]
    SweetSpotNotFound(f64, f64),
    #[error("this operation needs an island circuit (E_L = 0)")]
    NotIsland,
    #[error("this operation needs a loop circuit (E_L > 0)")]
    NotLoop,
    #[error(transparent)]
    Linear(#[from] QcoreError),
}

pub type Result<T> = std::result::Result<T, CircuitError>;

/// Parameters of the generic single-mode circuit. Energies in GHz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CircuitParams {
    pub ej: f64,
    pub ec: f64,
    pub el: f64,
    pub n_ext: f64,
    pub phi_ext: f64,
}

impl CircuitParams {
    pub fn island(ej: f64, ec: f64, n_ext: f64) -> Self {
        Self { ej, ec, el: 0.0, n_ext, phi_ext: 0.0 }
    }

    pub fn looped(ej: f64, ec: f64, el: f64, phi_ext: f64) -> Self {
        Self { ej, ec, el, n_ext: 0.0, phi_ext }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.ej, self.ec, self.el, self.n_ext, self.phi_ext].iter().all(|v| v.is_finite());
        if !finite {
            return Err(CircuitError::InvalidParams("non-finite value".into()));
        }
        if self.ej < 0.0 || self.ec <= 0.0 || self.el < 0.0 {
            return Err(CircuitError::InvalidParams(format!(
                "need E_J >= 0, E_C > 0, E_L >= 0 (got {}, {}, {})",
                self.ej, self.ec, self.el
            )));
        }
        Ok(())
    }

    pub fn is_island(&self) -> bool {
        self.el == 0.0
    }
}

/// Two junctions in a loop threaded by `phi_ext`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SquidParams {
    pub ej1: f64,
    pub ej2: f64,
    pub phi_ext: f64,
}

pub fn squid_effective_ej(p: &SquidParams) -> f64 {
    let s = p.ej1 * p.ej1 + p.ej2 * p.ej2 + 2.0 * p.ej1 * p.ej2 * p.phi_ext.cos();
    s.max(0.0).sqrt()
}

/// Josephson inductance in units of `(Phi_0 / 2 pi)^2`, i.e. `1/E_J,eff`.
/// For a symmetric SQUID this is `1/(2 E_J |cos(phi_ext/2)|)`.
pub fn squid_inductance(p: &SquidParams) -> Result<f64> {
    let ej = if p.ej1 == p.ej2 { 2.0 * p.ej1 * (p.phi_ext / 2.0).cos().abs() } else { squid_effective_ej(p) };
    if ej <= 1e-12 * (p.ej1 + p.ej2).max(1.0) {
        return Err(CircuitError::InfiniteInductance);
    }
    Ok(1.0 / ej)
}

/// Charge-basis Hamiltonian over charges `-ncut..=ncut`. Row `k` has charge
/// `k - ncut`.
pub fn island_hamiltonian(p: &CircuitParams, ncut: usize) -> Result<Operator> {
    p.validate()?;
    if !p.is_island() {
        return Err(CircuitError::NotIsland);
    }
    if ncut < MIN_NCUT {
        return Err(CircuitError::CutoffTooSmall(ncut));
    }
    let dim = 2 * ncut + 1;
    let hop = Complex64::new(-p.ej / 2.0, 0.0);
    Ok(Operator::from_fn(dim, |r, c| {
        if r == c {
            let n = r as f64 - ncut as f64 - p.n_ext;
            Complex64::new(4.0 * p.ec * n * n, 0.0)
        } else if r.abs_diff(c) == 1 {
            hop
        } else {
            ZERO
        }
    }))
}

/// Uniform phase grid over `[-turns*2pi, +turns*2pi]` with Dirichlet ends.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseGrid {
    pub turns: f64,
    pub npoints: usize,
}

impl Default for PhaseGrid {
    fn default() -> Self {
        Self { turns: DEFAULT_GRID_TURNS, npoints: DEFAULT_GRID_POINTS }
    }
}

impl PhaseGrid {
    pub fn half_width(&self) -> f64 {
        self.turns * TAU
    }

    /// Spacing between interior points; the boundary points carry psi = 0.
    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width() / (self.npoints as f64 + 1.0)
    }

    pub fn points(&self) -> Vec<f64> {
        let h = self.spacing();
        let l = self.half_width();
        (0..self.npoints).map(|i| -l + (i as f64 + 1.0) * h).collect()
    }
}

/// Phase-grid Hamiltonian stored in its tridiagonal form.
#[derive(Debug, Clone, PartialEq)]
pub struct LoopHamiltonian {
    pub grid: PhaseGrid,
    pub phis: Vec<f64>,
    pub matrix: SymTridiagonal,
}

impl LoopHamiltonian {
    pub fn dim(&self) -> usize {
        self.phis.len()
    }

    pub fn to_operator(&self) -> Operator {
        let d = self.matrix.to_dense();
        Operator::new(d.map(|v| Complex64::new(v, 0.0))).expect("square by construction")
    }

    pub fn spectrum(&self, nlevels: usize) -> Result<SpectrumResult> {
        if nlevels < 3 {
            return Err(CircuitError::TooFewLevels);
        }
        if nlevels > self.dim() {
            return Err(CircuitError::TooManyLevels { requested: nlevels, available: self.dim() });
        }
        let energies = self.matrix.lowest_eigenvalues(nlevels);
        let mut vectors: Vec<Vec<f64>> = Vec::with_capacity(nlevels);
        for &e in &energies {
            let v = self.matrix.eigenvector(e, &vectors);
            vectors.push(v);
        }
        let n = self.dim();
        let evecs = CMatrix::from_fn(n, nlevels, |r, c| Complex64::new(vectors[c][r], 0.0));
        Ok(SpectrumResult::from_energies(&energies, evecs))
    }
}

pub fn loop_hamiltonian(p: &CircuitParams, grid: &PhaseGrid) -> Result<LoopHamiltonian> {
    p.validate()?;
    if p.is_island() {
        return Err(CircuitError::NotLoop);
    }
    if grid.npoints < MIN_GRID_POINTS {
        return Err(CircuitError::GridTooCoarse(grid.npoints));
    }
    let h = grid.spacing();
    let kin = 4.0 * p.ec / (h * h);
    let phis = grid.points();
    let diag = phis.iter().map(|&phi| 2.0 * kin + 0.5 * p.el * phi * phi - p.ej * (phi - p.phi_ext).cos()).collect();
    let off = vec![-kin; grid.npoints - 1];
    Ok(LoopHamiltonian { grid: *grid, phis, matrix: SymTridiagonal::new(diag, off) })
}

/// Ground-referenced levels and eigenvectors (columns, construction basis).
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumResult {
    pub levels: Vec<f64>,
    pub omega_q: f64,
    pub alpha: f64,
    pub eigenvectors: CMatrix,
    pub ground_energy: f64,
}

impl SpectrumResult {
    fn from_energies(energies: &[f64], eigenvectors: CMatrix) -> Self {
        let e0 = energies[0];
        let levels: Vec<f64> = energies.iter().map(|e| e - e0).collect();
        let omega_q = levels[1];
        let alpha = (levels[2] - levels[1]) - omega_q;
        Self { levels, omega_q, alpha, eigenvectors, ground_energy: e0 }
    }
}

/// Lowest `nlevels` of a Hermitian operator.
pub fn spectrum(h: &Operator, nlevels: usize) -> Result<SpectrumResult> {
    if nlevels < 3 {
        return Err(CircuitError::TooFewLevels);
    }
    if nlevels > h.dim() {
        return Err(CircuitError::TooManyLevels { requested: nlevels, available: h.dim() });
    }
    let dev = h.hermitian_deviation();
    if dev > 1e-10 * (1.0 + h.max_abs()) {
        return Err(QcoreError::NotHermitian(dev).into());
    }
    let (vals, vecs) = eigh(h);
    let evecs = vecs.columns(0, nlevels).into_owned();
    Ok(SpectrumResult::from_energies(&vals[..nlevels], evecs))
}

/// Basis used to represent a circuit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum CircuitBasis {
    Charge { ncut: usize },
    Phase(PhaseGrid),
}

impl CircuitBasis {
    pub fn default_for(p: &CircuitParams) -> Self {
        if p.is_island() {
            CircuitBasis::Charge { ncut: DEFAULT_NCUT }
        } else {
            CircuitBasis::Phase(PhaseGrid::default())
        }
    }
}

/// A circuit together with its diagonalization.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalizedCircuit {
    pub params: CircuitParams,
    pub basis: CircuitBasis,
    pub spectrum: SpectrumResult,
}

pub fn diagonalize(p: &CircuitParams, basis: CircuitBasis, nlevels: usize) -> Result<DiagonalizedCircuit> {
    let spectrum = match basis {
        CircuitBasis::Charge { ncut } => spectrum(&island_hamiltonian(p, ncut)?, nlevels)?,
        CircuitBasis::Phase(grid) => loop_hamiltonian(p, &grid)?.spectrum(nlevels)?,
    };
    Ok(DiagonalizedCircuit { params: *p, basis, spectrum })
}

/// Qubit frequency in GHz. Skips eigenvectors.
pub fn qubit_frequency(p: &CircuitParams, basis: CircuitBasis) -> Result<f64> {
    match basis {
        CircuitBasis::Charge { ncut } => Ok(spectrum(&island_hamiltonian(p, ncut)?, 3)?.omega_q),
        CircuitBasis::Phase(grid) => {
            let e = loop_hamiltonian(p, &grid)?.matrix.lowest_eigenvalues(2);
            Ok(e[1] - e[0])
        }
    }
}

/// `omega_q(N_ext = 0) - omega_q(N_ext = 0.5)` for an island circuit.
pub fn charge_dispersion(p: &CircuitParams, ncut: usize) -> Result<f64> {
    if !p.is_island() {
        return Err(CircuitError::NotIsland);
    }
    let at = |n_ext| {
        let q = CircuitParams { n_ext, ..*p };
        qubit_frequency(&q, CircuitBasis::Charge { ncut })
    };
    Ok(at(0.0)? - at(0.5)?)
}

/// Noise susceptibilities in the energy eigenbasis, in GHz.
#[derive(Debug, Clone, PartialEq)]
pub struct Dipoles {
    /// `8 E_C N`
    pub charge: CMatrix,
    /// `-E_J sin(phi - phi_ext)`
    pub flux: CMatrix,
    /// `-E_J cos(phi - phi_ext)`
    pub critical_current: CMatrix,
    /// Bare `N` matrix elements.
    pub number: CMatrix,
}

impl Dipoles {
    pub fn channel(&self, ch: NoiseChannel) -> &CMatrix {
        match ch {
            NoiseChannel::Charge => &self.charge,
            NoiseChannel::Flux => &self.flux,
            NoiseChannel::CriticalCurrent => &self.critical_current,
        }
    }
}

pub fn dipole_elements(d: &DiagonalizedCircuit) -> Dipoles {
    let p = &d.params;
    let v = &d.spectrum.eigenvectors;
    let (number, sin, cos) = match d.basis {
        CircuitBasis::Charge { ncut } => {
            let dim = 2 * ncut + 1;
            let number =
                CMatrix::from_fn(
                    dim,
                    dim,
                    |r, c| {
                        if r == c {
                            Complex64::new(r as f64 - ncut as f64, 0.0)
                        } else {
                            ZERO
                        }
                    },
                );
            // e^{i phi} raises the charge by one.
            let half_i = Complex64::new(0.0, 0.5);
            let sin = CMatrix::from_fn(dim, dim, |r, c| {
                if r == c + 1 {
                    -half_i
                } else if c == r + 1 {
                    half_i
                } else {
                    ZERO
                }
            });
            let cos =
                CMatrix::from_fn(dim, dim, |r, c| if r.abs_diff(c) == 1 { Complex64::new(0.5, 0.0) } else { ZERO });
            let project = |m: &CMatrix| -> CMatrix { v.adjoint() * m * v };
            (project(&number), project(&sin), project(&cos))
        }
        CircuitBasis::Phase(grid) => {
            // Grids are too large for dense operators, so project directly.
            let phis = grid.points();
            let h = grid.spacing();
            let k = v.ncols();
            let n = phis.len();
            let diag_element = |f: &dyn Fn(f64) -> f64| {
                CMatrix::from_fn(k, k, |a, b| (0..n).map(|i| v[(i, a)].conj() * v[(i, b)] * f(phis[i])).sum())
            };
            // N = -i d/dphi by central differences.
            let number = CMatrix::from_fn(k, k, |a, b| {
                let mut acc = ZERO;
                for i in 0..n {
                    let up = if i + 1 < n { v[(i + 1, b)] } else { ZERO };
                    let down = if i > 0 { v[(i - 1, b)] } else { ZERO };
                    acc += v[(i, a)].conj() * (up - down);
                }
                acc * Complex64::new(0.0, -1.0 / (2.0 * h))
            });
            let sin = diag_element(&|phi| (phi - p.phi_ext).sin());
            let cos = diag_element(&|phi| (phi - p.phi_ext).cos());
            (number, sin, cos)
        }
    };
    Dipoles {
        charge: number.map(|z| z * 8.0 * p.ec),
        flux: sin.map(|z| z * -p.ej),
        critical_current: cos.map(|z| z * -p.ej),
        number,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseChannel {
    Charge,
    Flux,
    CriticalCurrent,
}

/// Power-law noise `S(omega) = A^2 (2 pi x 1 Hz / omega)^mu`.
///
/// The amplitude `A` carries the whole unit burden: rates come out in 1/ns
/// when `A^2` is expressed in ns per (rad/ns)^2 of the susceptibility.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub channel: NoiseChannel,
    pub amplitude: f64,
    pub exponent: f64,
}

impl NoiseSpec {
    /// Spectral density at angular frequency `omega` in rad/ns.
    pub fn psd(&self, omega: f64) -> f64 {
        let omega_rad_per_s = omega.abs() * 1e9;
        self.amplitude * self.amplitude * (TAU / omega_rad_per_s).powf(self.exponent)
    }
}

/// Golden-rule relaxation rate in 1/ns for a qubit at `omega_q_ghz`.
///
/// `sum |<1|X|0>|^2 |S(w) + S(-w)|` with `X` converted to rad/ns. The model
/// spectrum is even in frequency so the bracket is `2 S(w)`.
pub fn thermalization_rate(dipoles: &Dipoles, noise: &[NoiseSpec], omega_q_ghz: f64) -> f64 {
    let w = TAU * omega_q_ghz;
    noise
        .iter()
        .map(|spec| {
            let x10 = TAU * dipoles.channel(spec.channel)[(1, 0)].norm();
            x10 * x10 * (spec.psd(w) + spec.psd(-w)).abs()
        })
        .sum()
}

fn bias_period(ch: NoiseChannel) -> f64 {
    match ch {
        NoiseChannel::Charge => 1.0,
        NoiseChannel::Flux => TAU,
        NoiseChannel::CriticalCurrent => 1.0,
    }
}

fn with_bias(p: &CircuitParams, ch: NoiseChannel, value: f64) -> CircuitParams {
    match ch {
        NoiseChannel::Charge => CircuitParams { n_ext: value, ..*p },
        NoiseChannel::Flux => CircuitParams { phi_ext: value, ..*p },
        NoiseChannel::CriticalCurrent => CircuitParams { ej: value, ..*p },
    }
}

fn bias_value(p: &CircuitParams, ch: NoiseChannel) -> f64 {
    match ch {
        NoiseChannel::Charge => p.n_ext,
        NoiseChannel::Flux => p.phi_ext,
        NoiseChannel::CriticalCurrent => p.ej,
    }
}

/// Default central-difference step: 1e-4 of the bias period (or of E_J).
pub fn default_step(p: &CircuitParams, ch: NoiseChannel) -> f64 {
    match ch {
        NoiseChannel::CriticalCurrent => 1e-4 * p.ej.max(1e-3),
        _ => 1e-4 * bias_period(ch),
    }
}

pub fn central_derivative(f: impl Fn(f64) -> f64, x: f64, step: f64) -> f64 {
    (f(x + step) - f(x - step)) / (2.0 * step)
}

/// Root of `f'` inside `bracket` by bisection on the sign of the central
/// difference.
pub fn stationary_point(f: impl Fn(f64) -> f64, bracket: (f64, f64), step: f64) -> Result<f64> {
    let (mut lo, mut hi) = bracket;
    let mut dlo = central_derivative(&f, lo, step);
    let dhi = central_derivative(&f, hi, step);
    if dlo == 0.0 {
        return Ok(lo);
    }
    if dhi == 0.0 {
        return Ok(hi);
    }
    if dlo.signum() == dhi.signum() {
        return Err(CircuitError::SweetSpotNotFound(bracket.0, bracket.1));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let dm = central_derivative(&f, mid, step);
        if dm == 0.0 {
            return Ok(mid);
        }
        if dm.signum() == dlo.signum() {
            lo = mid;
            dlo = dm;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Dephasing estimate `Gamma_phi ~ A |d omega_q / d lambda|` in 1/ns.
///
/// This is an order-of-magnitude relation, so the result carries
/// `is_estimate = true`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DephasingEstimate {
    pub gamma_phi: f64,
    /// `d omega_q / d lambda` in GHz per unit bias.
    pub slope: f64,
    pub is_estimate: bool,
}

pub fn dephasing_rate(
    p: &CircuitParams,
    basis: CircuitBasis,
    noise: &NoiseSpec,
    step: f64,
) -> Result<DephasingEstimate> {
    let ch = noise.channel;
    let x0 = bias_value(p, ch);
    let wq = |x: f64| qubit_frequency(&with_bias(p, ch, x), basis);
    let slope = (wq(x0 + step)? - wq(x0 - step)?) / (2.0 * step);
    Ok(DephasingEstimate { gamma_phi: noise.amplitude * TAU * slope.abs(), slope, is_estimate: true })
}

/// Bias inside `bracket` where `d omega_q / d lambda` changes sign.
pub fn sweet_spot(p: &CircuitParams, basis: CircuitBasis, ch: NoiseChannel, bracket: (f64, f64)) -> Result<f64> {
    let step = default_step(p, ch);
    // Surface diagonalization errors before the search.
    qubit_frequency(&with_bias(p, ch, bracket.0), basis)?;
    let wq = |x: f64| qubit_frequency(&with_bias(p, ch, x), basis).unwrap_or(f64::NAN);
    stationary_point(wq, bracket, step)
}

/// Longitudinal and transverse rates with `1/T1 = G_par` and
/// `1/T2 = G_par/2 + G_phi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelaxationRates {
    pub gamma_par: f64,
    pub gamma_phi: f64,
    pub t1: f64,
    pub t2: f64,
}

impl RelaxationRates {
    pub fn new(gamma_par: f64, gamma_phi: f64) -> Result<Self> {
        if gamma_par < 0.0 || gamma_phi < 0.0 || !gamma_par.is_finite() || !gamma_phi.is_finite() {
            return Err(CircuitError::InvalidParams("rates must be finite and non-negative".into()));
        }
        let t1 = if gamma_par > 0.0 { 1.0 / gamma_par } else { f64::INFINITY };
        let g2 = gamma_par / 2.0 + gamma_phi;
        let t2 = if g2 > 0.0 { 1.0 / g2 } else { f64::INFINITY };
        Ok(Self { gamma_par, gamma_phi, t1, t2 })
    }
}

/// Dense real-symmetric form of a charge-basis Hamiltonian.
pub fn island_hamiltonian_real(p: &CircuitParams, ncut: usize) -> Result<DMatrix<f64>> {
    Ok(island_hamiltonian(p, ncut)?.matrix().map(|z| z.re))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn squid_energy_limits() {
        let sym = |phi| SquidParams { ej1: 10.0, ej2: 10.0, phi_ext: phi };
        assert!((squid_effective_ej(&sym(0.0)) - 20.0).abs() < 1e-12);
        assert!(squid_effective_ej(&sym(PI)).abs() < 1e-7);
        let asym = SquidParams { ej1: 12.0, ej2: 8.0, phi_ext: PI / 2.0 };
        assert!((squid_effective_ej(&asym) - 208f64.sqrt()).abs() < 1e-12);
        assert!(matches!(squid_inductance(&sym(PI)), Err(CircuitError::InfiniteInductance)));
        assert!((squid_inductance(&sym(0.0)).unwrap() - 1.0 / 20.0).abs() < 1e-15);
    }

    #[test]
    fn free_charge_levels() {
        let p = CircuitParams::island(0.0, 0.3, 0.2);
        let s = spectrum(&island_hamiltonian(&p, 10).unwrap(), 5).unwrap();
        let mut bare: Vec<f64> = (-10..=10).map(|n| 4.0 * 0.3 * (n as f64 - 0.2).powi(2)).collect();
        bare.sort_by(f64::total_cmp);
        for (k, l) in s.levels.iter().enumerate() {
            assert!((l - (bare[k] - bare[0])).abs() < 1e-12);
        }
    }

    #[test]
    fn degeneracy_point_gap_is_ej() {
        let p = CircuitParams::island(0.05, 1.0, 0.5);
        let s = spectrum(&island_hamiltonian(&p, 10).unwrap(), 3).unwrap();
        assert!((s.omega_q - 0.05).abs() / 0.05 < 0.01);
    }

    #[test]
    fn harmonic_oscillator_has_no_anharmonicity() {
        let n = 12;
        let h = Operator::diagonal_real(&(0..n).map(|k| 1.3 * k as f64 + 0.65).collect::<Vec<_>>());
        let s = spectrum(&h, 4).unwrap();
        assert!(s.alpha.abs() < 1e-12);
        assert!(matches!(spectrum(&h, 20), Err(CircuitError::TooManyLevels { .. })));
    }

    #[test]
    fn parabola_stationary_point() {
        let (a, x0) = (2.5, 0.3137);
        let f = |x: f64| a * (x - x0) * (x - x0);
        let d = central_derivative(f, 1.0, 1e-4);
        assert!((d - 2.0 * a * (1.0 - x0)).abs() < 1e-8);
        let root = stationary_point(f, (-1.0, 2.0), 1e-4).unwrap();
        assert!((root - x0).abs() < 1e-8);
        assert!(stationary_point(f, (1.0, 2.0), 1e-4).is_err());
    }

    #[test]
    fn rates_assemble() {
        let r = RelaxationRates::new(0.02, 0.005).unwrap();
        assert!((r.t1 - 50.0).abs() < 1e-12);
        assert!((1.0 / r.t2 - 0.015).abs() < 1e-15);
        assert!(r.t2 <= 2.0 * r.t1 + 1e-12);
    }
}
