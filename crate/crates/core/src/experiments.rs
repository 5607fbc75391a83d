//! Virtual characterization experiments on top of the dynamics engine:
//! resonator and two-tone spectroscopy, Rabi, T1 and Ramsey sequences,
//! least-squares fits of the standard decay models, the single-qubit
//! Clifford group and randomized benchmarking.
//!
//! Qubit frequencies and detunings are in GHz, rates in 1/ns, Rabi rates in
//! rad/ns. All time-domain signals are the probability of reading `1`.

use std::f64::consts::{PI, TAU};
use std::io::Write;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coupling::{dispersive_shift, CouplingError, JCParams};
use crate::dynamics::{lindblad_evolve, CollapseOp, DynamicsError, TimeDependentH};
use crate::ghz_to_angular;
use crate::qcore::{
    gate_x, gate_y, gate_z, hadamard, number, pauli_x, phase_s, rotation_operator, Axis, CMatrix, DensityMatrix,
    Operator, QcoreError,
};

/// Fewest samples accepted by the curve fitters.
pub const MIN_FIT_POINTS: usize = 8;
/// Drive strength `Omega^2 / (Gamma_1 Gamma_2)` below which a two-tone scan
/// counts as a weak probe.
pub const WEAK_PROBE_LIMIT: f64 = 0.1;
/// Levenberg-Marquardt iteration cap.
pub const MAX_FIT_ITERATIONS: usize = 500;
/// Variance floor for the RB inverse-variance weights.
pub const RB_VARIANCE_FLOOR: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("need at least {MIN_FIT_POINTS} data points, got {0}")]
    TooFewPoints(usize),
    #[error("x has {x} samples but y has {y}")]
    LengthMismatch { x: usize, y: usize },
    #[error("invalid system: {0}")]
    InvalidSystem(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("decay fit is unphysical: p = {p}")]
    FitQuality { p: f64 },
    #[error("steady state is not unique")]
    Singular,
    #[error("gate is not a single-qubit Clifford")]
    NotClifford,
    #[error(transparent)]
    Coupling(#[from] CouplingError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Linear(#[from] QcoreError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, ExperimentError>;

// ---------------------------------------------------------------------------
// Resonator spectroscopy

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QubitState {
    Ground,
    Excited,
}

/// Complex transmission of the dressed resonator over a frequency grid.
#[derive(Debug, Clone, Serialize)]
pub struct ResonatorTrace {
    pub freqs: Vec<f64>,
    #[serde(skip)]
    pub response: Vec<Complex64>,
    /// Dressed resonator frequency for this qubit state, GHz.
    pub center: f64,
    pub linewidth: f64,
}

impl ResonatorTrace {
    pub fn magnitude(&self) -> Vec<f64> {
        self.response.iter().map(|s| s.norm()).collect()
    }

    pub fn phase(&self) -> Vec<f64> {
        self.response.iter().map(|s| s.arg()).collect()
    }

    /// Grid frequency with the largest magnitude.
    pub fn peak_frequency(&self) -> f64 {
        let mag = self.magnitude();
        let k = argmax(&mag);
        self.freqs[k]
    }
}

/// `1 / (1 + 2i (f - f_c) / kappa)` for a line at `f_c` of FWHM `kappa`.
pub fn lorentzian_response(f: f64, center: f64, kappa: f64) -> Complex64 {
    Complex64::new(1.0, 0.0) / Complex64::new(1.0, 2.0 * (f - center) / kappa)
}

/// Resonator line with the qubit in `state`. The line sits at `omega_r + chi`
/// for `|g>` and `omega_r - chi` for `|e>`, with `chi = g^2 / (omega_r - omega_q)`
/// as in [`dispersive_shift`], and has FWHM `kappa` (GHz).
pub fn resonator_response(p: &JCParams, state: QubitState, freqs: &[f64]) -> Result<ResonatorTrace> {
    if p.kappa <= 0.0 {
        return Err(ExperimentError::InvalidSystem("resonator linewidth kappa must be positive".into()));
    }
    let report = dispersive_shift(p)?;
    let center = match state {
        QubitState::Ground => report.resonator_ground,
        QubitState::Excited => report.resonator_excited,
    };
    Ok(ResonatorTrace {
        freqs: freqs.to_vec(),
        response: freqs.iter().map(|&f| lorentzian_response(f, center, p.kappa)).collect(),
        center,
        linewidth: p.kappa,
    })
}

/// Distance between the ground and excited responses at probe frequency `f`.
pub fn state_separation(p: &JCParams, f: f64) -> Result<f64> {
    let g = resonator_response(p, QubitState::Ground, &[f])?;
    let e = resonator_response(p, QubitState::Excited, &[f])?;
    Ok((g.response[0] - e.response[0]).norm())
}

// ---------------------------------------------------------------------------
// Qubit model and readout

/// A driven qubit with Markovian decay and optional quasi-static frequency
/// noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QubitSystem {
    /// Bare qubit frequency, GHz.
    pub omega_q: f64,
    /// Energy relaxation rate, 1/ns.
    pub gamma1: f64,
    /// Pure dephasing rate, 1/ns.
    pub gamma_phi: f64,
    /// Dispersive shift from the readout resonator, GHz. The drive sees the
    /// qubit at `omega_q - chi`.
    #[serde(default)]
    pub chi: f64,
    /// Standard deviation of a static frequency offset, GHz. Ramsey data are
    /// averaged over it, giving Gaussian decay.
    #[serde(default)]
    pub quasi_static_sigma: f64,
}

impl QubitSystem {
    pub fn new(omega_q: f64, gamma1: f64, gamma_phi: f64) -> Self {
        Self { omega_q, gamma1, gamma_phi, chi: 0.0, quasi_static_sigma: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        let vals = [self.omega_q, self.gamma1, self.gamma_phi, self.chi, self.quasi_static_sigma];
        if vals.iter().any(|v| !v.is_finite()) {
            return Err(ExperimentError::InvalidSystem("non-finite parameter".into()));
        }
        if self.gamma1 < 0.0 || self.gamma_phi < 0.0 || self.quasi_static_sigma < 0.0 {
            return Err(ExperimentError::InvalidSystem("rates and noise widths must be non-negative".into()));
        }
        Ok(())
    }

    /// Frequency at which the drive is resonant, GHz.
    pub fn apparent_frequency(&self) -> f64 {
        self.omega_q - self.chi
    }

    pub fn t1(&self) -> f64 {
        1.0 / self.gamma1
    }

    /// `1 / (Gamma_1 / 2 + Gamma_phi)`.
    pub fn t2(&self) -> f64 {
        1.0 / (0.5 * self.gamma1 + self.gamma_phi)
    }

    /// Gaussian decay time `sqrt(2) / (2 pi sigma)` from quasi-static noise.
    pub fn gaussian_t2(&self) -> f64 {
        2f64.sqrt() / ghz_to_angular(self.quasi_static_sigma)
    }

    fn collapse(&self) -> Result<Vec<CollapseOp>> {
        let mut ops = Vec::new();
        if self.gamma1 > 0.0 {
            ops.push(CollapseOp::relaxation(self.gamma1, 2)?);
        }
        if self.gamma_phi > 0.0 {
            ops.push(CollapseOp::dephasing(self.gamma_phi)?);
        }
        Ok(ops)
    }

    /// Drive-frame Hamiltonian `-2 pi delta |1><1| + (rate / 2) X` in rad/ns,
    /// where `delta` is the drive detuning from the apparent frequency.
    fn frame_hamiltonian(delta: f64, rate: f64) -> Operator {
        number(2).scale_real(-ghz_to_angular(delta)) + pauli_x().scale_real(0.5 * rate)
    }
}

/// Assignment errors: `e01` is P(read 1 | 0) and `e10` is P(read 0 | 1).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ReadoutModel {
    pub e01: f64,
    pub e10: f64,
}

impl ReadoutModel {
    pub fn ideal() -> Self {
        Self::default()
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |e: f64| (0.0..=1.0).contains(&e);
        if !ok(self.e01) || !ok(self.e10) {
            return Err(ExperimentError::InvalidConfig("assignment errors must lie in [0, 1]".into()));
        }
        Ok(())
    }

    /// Probability of reading `1` given excited population `p1`.
    pub fn read_one(&self, p1: f64) -> f64 {
        self.e01 * (1.0 - p1) + (1.0 - self.e10) * p1
    }
}

/// A sampled signal `y(x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataSeries {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl DataSeries {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if x.len() != y.len() {
            return Err(ExperimentError::LengthMismatch { x: x.len(), y: y.len() });
        }
        Ok(Self { x, y })
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn write_csv<W: Write>(&self, x_name: &str, y_name: &str, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([x_name, y_name])?;
        for (x, y) in self.x.iter().zip(&self.y) {
            w.write_record([format!("{x:.11e}"), format!("{y:.11e}")])?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Two-tone spectroscopy

/// Unique steady state of the Lindblad equation, found as the null vector of
/// the Liouvillian with the trace fixed to one.
pub fn steady_state(h: &Operator, collapse: &[CollapseOp]) -> Result<DensityMatrix> {
    let n = h.dim();
    let hm = h.matrix();
    let jumps: Vec<&CMatrix> = collapse.iter().map(|c| c.op().matrix()).collect();
    let mut half_rate = CMatrix::zeros(n, n);
    for l in &jumps {
        half_rate += l.adjoint() * *l * Complex64::new(0.5, 0.0);
    }
    let minus_i = Complex64::new(0.0, -1.0);
    let n2 = n * n;
    let mut sup = DMatrix::<Complex64>::zeros(n2, n2);
    for i in 0..n {
        for j in 0..n {
            let mut e = CMatrix::zeros(n, n);
            e[(i, j)] = Complex64::new(1.0, 0.0);
            let mut out = (hm * &e - &e * hm) * minus_i - &half_rate * &e - &e * &half_rate;
            for l in &jumps {
                out += *l * &e * l.adjoint();
            }
            let col = i * n + j;
            for a in 0..n {
                for b in 0..n {
                    sup[(a * n + b, col)] = out[(a, b)];
                }
            }
        }
    }
    let mut rhs = DVector::<Complex64>::zeros(n2);
    for col in 0..n2 {
        sup[(0, col)] = Complex64::new(0.0, 0.0);
    }
    for k in 0..n {
        sup[(0, k * n + k)] = Complex64::new(1.0, 0.0);
    }
    rhs[0] = Complex64::new(1.0, 0.0);
    let v = sup.lu().solve(&rhs).ok_or(ExperimentError::Singular)?;
    let m = CMatrix::from_fn(n, n, |a, b| v[a * n + b]);
    let m = (&m + m.adjoint()) * Complex64::new(0.5, 0.0);
    Ok(DensityMatrix::new_unchecked(m))
}

#[derive(Debug, Clone, Serialize)]
pub struct TwoToneScan {
    pub freqs: Vec<f64>,
    /// Steady-state excited population at each drive frequency.
    pub excited: Vec<f64>,
    /// `Omega^2 / (Gamma_1 Gamma_2)`.
    pub saturation: f64,
    /// Set when `saturation` is below [`WEAK_PROBE_LIMIT`].
    pub weak_probe: bool,
}

/// Steady-state excited population versus drive frequency (GHz) for a drive
/// of Rabi rate `drive_rate` (rad/ns). The line is centred on
/// [`QubitSystem::apparent_frequency`] and has FWHM `1 / (pi T2)` in the
/// weak-probe limit.
pub fn two_tone_scan(sys: &QubitSystem, drive_rate: f64, freqs: &[f64]) -> Result<TwoToneScan> {
    sys.validate()?;
    if sys.gamma1 <= 0.0 {
        return Err(ExperimentError::InvalidSystem("two-tone steady state needs gamma1 > 0".into()));
    }
    let collapse = sys.collapse()?;
    let excited = freqs
        .iter()
        .map(|&f| {
            let h = QubitSystem::frame_hamiltonian(f - sys.apparent_frequency(), drive_rate);
            steady_state(&h, &collapse).map(|rho| rho.population(1))
        })
        .collect::<Result<Vec<_>>>()?;
    let gamma2 = 1.0 / sys.t2();
    let saturation = drive_rate * drive_rate / (sys.gamma1 * gamma2);
    Ok(TwoToneScan { freqs: freqs.to_vec(), excited, saturation, weak_probe: saturation < WEAK_PROBE_LIMIT })
}

// ---------------------------------------------------------------------------
// Time-domain sequences

/// Constant drive applied for the swept pulse length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RabiDrive {
    /// Rabi rate on resonance, rad/ns.
    pub rabi_rate: f64,
    /// Drive frequency minus the apparent qubit frequency, GHz.
    #[serde(default)]
    pub detuning: f64,
}

impl RabiDrive {
    pub fn resonant(rabi_rate: f64) -> Self {
        Self { rabi_rate, detuning: 0.0 }
    }

    /// Generalized Rabi frequency, rad/ns.
    pub fn oscillation_rate(&self) -> f64 {
        self.rabi_rate.hypot(ghz_to_angular(self.detuning))
    }
}

/// A calibrated square pi pulse.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PiPulse {
    pub rabi_rate: f64,
    pub duration: f64,
}

impl PiPulse {
    pub fn new(rabi_rate: f64) -> Result<Self> {
        if !(rabi_rate > 0.0 && rabi_rate.is_finite()) {
            return Err(ExperimentError::InvalidConfig("Rabi rate must be positive".into()));
        }
        Ok(Self { rabi_rate, duration: PI / rabi_rate })
    }

    /// Pi pulse from a Rabi fit, using its `omega_r`.
    pub fn from_rabi_fit(fit: &FitResult) -> Result<Self> {
        let rate = fit.get("omega_r").ok_or_else(|| ExperimentError::InvalidConfig("not a Rabi fit".into()))?;
        Self::new(rate.abs())
    }
}

fn check_sweep(values: &[f64]) -> Result<()> {
    if values.iter().any(|v| !v.is_finite() || *v < 0.0) || values.windows(2).any(|w| w[1] < w[0]) {
        return Err(ExperimentError::InvalidConfig("sweep must be non-negative and non-decreasing".into()));
    }
    Ok(())
}

/// Output times with a leading zero so evolution starts at `t = 0`; returns
/// the times and the number of prepended samples to drop.
fn from_zero(sweep: &[f64]) -> (Vec<f64>, usize) {
    if sweep.first() == Some(&0.0) {
        (sweep.to_vec(), 0)
    } else {
        (std::iter::once(0.0).chain(sweep.iter().copied()).collect(), 1)
    }
}

fn evolve_states(
    h: &Operator,
    rho0: &DensityMatrix,
    collapse: &[CollapseOp],
    sweep: &[f64],
    dt: f64,
) -> Result<Vec<DensityMatrix>> {
    let (times, skip) = from_zero(sweep);
    let out = lindblad_evolve(&TimeDependentH::constant(h.clone()), rho0, collapse, &times, dt, &[])?;
    Ok(out.states.into_iter().skip(skip).collect())
}

fn evolve_for(h: &Operator, rho0: &DensityMatrix, collapse: &[CollapseOp], t: f64, dt: f64) -> Result<DensityMatrix> {
    let out = lindblad_evolve(&TimeDependentH::constant(h.clone()), rho0, collapse, &[0.0, t], dt, &[])?;
    Ok(out.states.into_iter().last().expect("two output times"))
}

/// Rabi oscillation: ground state, drive for each length in `durations`, read.
pub fn run_rabi(
    sys: &QubitSystem,
    drive: &RabiDrive,
    durations: &[f64],
    readout: &ReadoutModel,
    dt: f64,
) -> Result<DataSeries> {
    sys.validate()?;
    readout.validate()?;
    check_sweep(durations)?;
    let h = QubitSystem::frame_hamiltonian(drive.detuning, drive.rabi_rate);
    let states = evolve_states(&h, &DensityMatrix::basis(2, 0), &sys.collapse()?, durations, dt)?;
    let y = states.iter().map(|s| readout.read_one(s.population(1))).collect();
    DataSeries::new(durations.to_vec(), y)
}

/// Energy relaxation: pi pulse, wait each delay, read.
pub fn run_t1(sys: &QubitSystem, pi: &PiPulse, delays: &[f64], readout: &ReadoutModel, dt: f64) -> Result<DataSeries> {
    sys.validate()?;
    readout.validate()?;
    check_sweep(delays)?;
    let collapse = sys.collapse()?;
    let drive = QubitSystem::frame_hamiltonian(0.0, pi.rabi_rate);
    let excited = evolve_for(&drive, &DensityMatrix::basis(2, 0), &collapse, pi.duration, dt)?;
    let states = evolve_states(&Operator::zeros(2), &excited, &collapse, delays, dt)?;
    let y = states.iter().map(|s| readout.read_one(s.population(1))).collect();
    DataSeries::new(delays.to_vec(), y)
}

/// Quadrature nodes `(offset, weight)` for a Gaussian of width `sigma`.
fn gaussian_nodes(sigma: f64) -> Vec<(f64, f64)> {
    if sigma == 0.0 {
        return vec![(0.0, 1.0)];
    }
    const HALF: i32 = 24;
    let h = 0.25 * sigma;
    let raw: Vec<(f64, f64)> = (-HALF..=HALF)
        .map(|k| {
            let x = k as f64 * h;
            (x, (-0.5 * (x / sigma).powi(2)).exp())
        })
        .collect();
    let total: f64 = raw.iter().map(|(_, w)| w).sum();
    raw.into_iter().map(|(x, w)| (x, w / total)).collect()
}

/// Ramsey fringes: pi/2 about +x, free evolution for each delay with the
/// drive detuned by `detuning` (GHz), pi/2 about -x, read. The detuning acts
/// during the pulses as well. Quasi-static noise is averaged by quadrature.
pub fn run_ramsey(
    sys: &QubitSystem,
    pi: &PiPulse,
    detuning: f64,
    delays: &[f64],
    readout: &ReadoutModel,
    dt: f64,
) -> Result<DataSeries> {
    sys.validate()?;
    readout.validate()?;
    check_sweep(delays)?;
    let collapse = sys.collapse()?;
    let half = 0.5 * pi.duration;
    let mut y = vec![0.0; delays.len()];
    for (offset, weight) in gaussian_nodes(sys.quasi_static_sigma) {
        let delta = detuning - offset;
        let open = QubitSystem::frame_hamiltonian(delta, pi.rabi_rate);
        let close = QubitSystem::frame_hamiltonian(delta, -pi.rabi_rate);
        let free = QubitSystem::frame_hamiltonian(delta, 0.0);
        let after_open = evolve_for(&open, &DensityMatrix::basis(2, 0), &collapse, half, dt)?;
        let states = evolve_states(&free, &after_open, &collapse, delays, dt)?;
        for (acc, s) in y.iter_mut().zip(&states) {
            let fin = evolve_for(&close, s, &collapse, half, dt)?;
            *acc += weight * readout.read_one(fin.population(1));
        }
    }
    DataSeries::new(delays.to_vec(), y)
}

// ---------------------------------------------------------------------------
// Curve fitting

/// Least-squares fit summary. Decay constants are reported as times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub names: Vec<String>,
    pub values: Vec<f64>,
    /// One-sigma uncertainties from the scaled covariance; infinite when a
    /// parameter is not determined by the data.
    pub sigmas: Vec<f64>,
    /// Root of the (weighted) sum of squared residuals.
    pub residual_norm: f64,
    pub converged: bool,
    pub iterations: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl FitResult {
    pub fn get(&self, name: &str) -> Option<f64> {
        self.index(name).map(|i| self.values[i])
    }

    pub fn sigma(&self, name: &str) -> Option<f64> {
        self.index(name).map(|i| self.sigmas[i])
    }

    fn index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }
}

struct LmOutcome {
    params: Vec<f64>,
    sigmas: Vec<f64>,
    residual_norm: f64,
    converged: bool,
    iterations: usize,
}

/// Levenberg-Marquardt on `sum w (y - f(x; p))^2`. `model` returns `f` and
/// writes the gradient with respect to the parameters.
fn levenberg_marquardt<F>(x: &[f64], y: &[f64], weights: Option<&[f64]>, init: Vec<f64>, model: F) -> LmOutcome
where
    F: Fn(f64, &[f64], &mut [f64]) -> f64,
{
    let n = x.len();
    let k = init.len();
    let w = |i: usize| weights.map_or(1.0, |w| w[i]);
    let cost_of = |p: &[f64]| -> f64 {
        let mut g = vec![0.0; k];
        (0..n).map(|i| w(i) * (y[i] - model(x[i], p, &mut g)).powi(2)).sum()
    };
    let normal = |p: &[f64]| -> (DMatrix<f64>, DVector<f64>) {
        let mut a = DMatrix::zeros(k, k);
        let mut b = DVector::zeros(k);
        let mut g = vec![0.0; k];
        for i in 0..n {
            let r = y[i] - model(x[i], p, &mut g);
            for u in 0..k {
                b[u] += w(i) * g[u] * r;
                for v in 0..k {
                    a[(u, v)] += w(i) * g[u] * g[v];
                }
            }
        }
        (a, b)
    };

    let mut p = init;
    let mut cost = cost_of(&p);
    let mut lambda = 1e-3;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < MAX_FIT_ITERATIONS {
        iterations += 1;
        let (a, b) = normal(&p);
        let mut accepted = false;
        while lambda < 1e12 {
            let mut damped = a.clone();
            for u in 0..k {
                damped[(u, u)] += lambda * a[(u, u)].max(1e-12);
            }
            let Some(step) = damped.lu().solve(&b) else {
                lambda *= 10.0;
                continue;
            };
            let trial: Vec<f64> = p.iter().zip(step.iter()).map(|(p, s)| p + s).collect();
            let trial_cost = cost_of(&trial);
            if trial_cost.is_finite() && trial_cost <= cost {
                let small_step = step.iter().zip(&p).all(|(s, p)| s.abs() <= 1e-10 * (p.abs() + 1e-10));
                let small_gain = cost - trial_cost <= 1e-14 * cost.max(1e-300);
                p = trial;
                cost = trial_cost;
                lambda = (lambda / 3.0).max(1e-12);
                accepted = true;
                if small_step || small_gain {
                    converged = true;
                }
                break;
            }
            lambda *= 4.0;
        }
        // No descent direction at any damping: a minimum to working precision.
        if !accepted {
            converged = true;
        }
        if converged {
            break;
        }
    }

    let (a, _) = normal(&p);
    let dof = n.saturating_sub(k).max(1) as f64;
    let scale = cost / dof;
    let sigmas = match a.try_inverse() {
        Some(cov) => (0..k).map(|u| (cov[(u, u)].max(0.0) * scale).sqrt()).collect(),
        None => vec![f64::INFINITY; k],
    };
    LmOutcome { params: p, sigmas, residual_norm: cost.sqrt(), converged: converged && cost.is_finite(), iterations }
}

fn check_data(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(ExperimentError::LengthMismatch { x: x.len(), y: y.len() });
    }
    if x.len() < MIN_FIT_POINTS {
        return Err(ExperimentError::TooFewPoints(x.len()));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(ExperimentError::InvalidConfig("data must be finite".into()));
    }
    Ok(())
}

/// Linear least squares with design columns `basis(x)`.
fn linear_fit(x: &[f64], y: &[f64], cols: usize, mut basis: impl FnMut(f64, &mut [f64])) -> (Vec<f64>, f64) {
    let mut a = DMatrix::zeros(x.len(), cols);
    let mut row = vec![0.0; cols];
    for (i, &xi) in x.iter().enumerate() {
        basis(xi, &mut row);
        for (c, v) in row.iter().enumerate() {
            a[(i, c)] = *v;
        }
    }
    let b = DVector::from_column_slice(y);
    let coef = a.clone().svd(true, true).solve(&b, 1e-12).unwrap_or_else(|_| DVector::zeros(cols));
    let resid = (&a * &coef - b).norm_squared();
    (coef.iter().copied().collect(), resid)
}

/// Dominant nonzero angular frequency of `y(x)` from a zero-padded FFT with
/// parabolic peak refinement. `None` when the peak is the DC bin.
fn fft_peak_rate(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len();
    let span = x[n - 1] - x[0];
    if span <= 0.0 {
        return None;
    }
    let h = span / (n - 1) as f64;
    let mean = y.iter().sum::<f64>() / n as f64;
    let padded = (8 * n).next_power_of_two();
    let mut buf: Vec<Complex64> =
        (0..padded).map(|k| Complex64::new(if k < n { y[k] - mean } else { 0.0 }, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(padded).process(&mut buf);
    let mag: Vec<f64> = buf[..padded / 2].iter().map(|z| z.norm()).collect();
    // Skip the DC lobe, whose half-width is about one unpadded bin.
    let skip = padded / n;
    let k = skip + argmax(&mag[skip..]);
    if k + 1 >= mag.len() || mag[k] <= mag[..skip].iter().cloned().fold(0.0, f64::max) {
        return None;
    }
    let (a, b, c) = (mag[k - 1], mag[k], mag[k + 1]);
    let denom = a - 2.0 * b + c;
    let shift = if denom.abs() > 0.0 { 0.5 * (a - c) / denom } else { 0.0 };
    Some(TAU * (k as f64 + shift) / (padded as f64 * h))
}

/// Decay rate guess from the RMS of the first and second halves about the
/// mean of the last quarter.
fn envelope_rate(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len();
    let span = x[n - 1] - x[0];
    let tail = &y[3 * n / 4..];
    let base = tail.iter().sum::<f64>() / tail.len() as f64;
    let rms = |s: &[f64]| (s.iter().map(|v| (v - base).powi(2)).sum::<f64>() / s.len() as f64).sqrt();
    let (r1, r2) = (rms(&y[..n / 2]), rms(&y[n / 2..]));
    let rate = if r1 > 0.0 && r2 > 0.0 { (r1 / r2).ln() / (0.5 * span) } else { 0.0 };
    rate.clamp(0.1 / span, 20.0 / span)
}

fn damped_cosine(t: f64, p: &[f64], g: &mut [f64]) -> f64 {
    let (a0, a1, a2, w, gamma) = (p[0], p[1], p[2], p[3], p[4]);
    let e = (-gamma * t).exp();
    let (s, c) = (w * t + a2).sin_cos();
    g[0] = 1.0;
    g[1] = c * e;
    g[2] = -a1 * s * e;
    g[3] = -a1 * s * e * t;
    g[4] = -a1 * c * e * t;
    a0 + a1 * c * e
}

fn exp_decay(t: f64, p: &[f64], g: &mut [f64]) -> f64 {
    let e = (-p[2] * t).exp();
    g[0] = 1.0;
    g[1] = e;
    g[2] = -p[1] * e * t;
    p[0] + p[1] * e
}

/// Converts a fitted rate and its sigma to a time constant.
fn rate_to_time(rate: f64, sigma: f64) -> (f64, f64) {
    if rate > 0.0 {
        (1.0 / rate, sigma / (rate * rate))
    } else {
        (f64::INFINITY, f64::INFINITY)
    }
}

fn fit_exp_internal(x: &[f64], y: &[f64]) -> LmOutcome {
    let n = x.len();
    let span = x[n - 1] - x[0];
    // Log-linear slope of |dy/dx|, weighted by the step size.
    let (mut sw, mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for i in 0..n - 1 {
        let dx = x[i + 1] - x[i];
        let dy = y[i + 1] - y[i];
        if dx <= 0.0 || dy == 0.0 {
            continue;
        }
        let (t, v, w) = (0.5 * (x[i] + x[i + 1]), (dy / dx).abs().ln(), dy.abs());
        sw += w;
        sx += w * t;
        sy += w * v;
        sxx += w * t * t;
        sxy += w * t * v;
    }
    let det = sw * sxx - sx * sx;
    let slope = if det > 0.0 { (sw * sxy - sx * sy) / det } else { 0.0 };
    let rate = if slope < 0.0 { (-slope).clamp(0.01 / span, 50.0 / span) } else { 1.0 / span };
    let (ab, _) = linear_fit(x, y, 2, |t, r| {
        r[0] = 1.0;
        r[1] = (-rate * t).exp();
    });
    levenberg_marquardt(x, y, None, vec![ab[0], ab[1], rate], exp_decay)
}

fn fit_damped_cosine(x: &[f64], y: &[f64], rate_name: &str, decay_name: &str) -> Result<FitResult> {
    check_data(x, y)?;
    let span = x[x.len() - 1] - x[0];
    let names = |r: &str| vec!["a0".to_string(), "a1".into(), "a2".into(), r.into(), decay_name.into()];
    let exp_only = fit_exp_internal(x, y);

    let oscillating = fft_peak_rate(x, y).map(|w| {
        let gamma = envelope_rate(x, y);
        let (cs, _) = linear_fit(x, y, 3, |t, r| {
            let e = (-gamma * t).exp();
            r[0] = 1.0;
            r[1] = e * (w * t).cos();
            r[2] = -e * (w * t).sin();
        });
        let a1 = cs[1].hypot(cs[2]);
        let a2 = cs[2].atan2(cs[1]);
        levenberg_marquardt(x, y, None, vec![cs[0], a1, a2, w, gamma], damped_cosine)
    });

    // Degeneracy guard: without a resolved oscillation the phase and rate
    // are not identifiable, so report the pure decay.
    let resolved = oscillating
        .as_ref()
        .filter(|o| o.params[3].abs() * span >= 0.5 * PI && o.residual_norm < 0.999 * exp_only.residual_norm);
    let Some(o) = resolved else {
        let o = exp_only;
        let (t, st) = rate_to_time(o.params[2], o.sigmas[2]);
        return Ok(FitResult {
            names: names(rate_name),
            values: vec![o.params[0], o.params[1], 0.0, 0.0, t],
            sigmas: vec![o.sigmas[0], o.sigmas[1], f64::INFINITY, f64::INFINITY, st],
            residual_norm: o.residual_norm,
            converged: o.converged,
            iterations: o.iterations,
            note: Some("no oscillation resolved; fitted as pure decay".into()),
        });
    };
    let mut p = o.params.clone();
    // Canonical sign: positive amplitude and rate, phase in (-pi, pi].
    if p[1] < 0.0 {
        p[1] = -p[1];
        p[2] += PI;
    }
    if p[3] < 0.0 {
        p[3] = -p[3];
        p[2] = -p[2];
    }
    p[2] = wrap_phase(p[2]);
    let (t, st) = rate_to_time(p[4], o.sigmas[4]);
    Ok(FitResult {
        names: names(rate_name),
        values: vec![p[0], p[1], p[2], p[3], t],
        sigmas: vec![o.sigmas[0], o.sigmas[1], o.sigmas[2], o.sigmas[3], st],
        residual_norm: o.residual_norm,
        converged: o.converged,
        iterations: o.iterations,
        note: None,
    })
}

fn wrap_phase(a: f64) -> f64 {
    let w = a.rem_euclid(TAU);
    if w > PI {
        w - TAU
    } else {
        w
    }
}

/// Fits `a0 + a1 cos(omega_r t + a2) exp(-t / t_r)`.
pub fn fit_rabi(data: &DataSeries) -> Result<FitResult> {
    fit_damped_cosine(&data.x, &data.y, "omega_r", "t_r")
}

/// Fits `a0 + a1 cos(omega_qd t + a2) exp(-t / t2)`.
pub fn fit_ramsey(data: &DataSeries) -> Result<FitResult> {
    fit_damped_cosine(&data.x, &data.y, "omega_qd", "t2")
}

/// Fits `a0 + a1 exp(-t / t1)`.
pub fn fit_t1(data: &DataSeries) -> Result<FitResult> {
    check_data(&data.x, &data.y)?;
    let o = fit_exp_internal(&data.x, &data.y);
    let (t, st) = rate_to_time(o.params[2], o.sigmas[2]);
    Ok(FitResult {
        names: vec!["a0".into(), "a1".into(), "t1".into()],
        values: vec![o.params[0], o.params[1], t],
        sigmas: vec![o.sigmas[0], o.sigmas[1], st],
        residual_norm: o.residual_norm,
        converged: o.converged,
        iterations: o.iterations,
        note: None,
    })
}

/// Fits `a0 + a1 exp(-t^2 / t_g^2) exp(-t / 2 t1)` with `t1` held fixed.
pub fn fit_ramsey_gaussian(data: &DataSeries, t1: f64) -> Result<FitResult> {
    check_data(&data.x, &data.y)?;
    if !(t1 > 0.0) {
        return Err(ExperimentError::InvalidConfig("t1 must be positive".into()));
    }
    let (x, y) = (&data.x, &data.y);
    let span = x[x.len() - 1] - x[0];
    let half_rate = 0.5 / t1;
    // Coarse scan of beta = 1 / t_g^2 with the amplitudes solved linearly.
    let mut best = (f64::INFINITY, 0.0, 0.0, 0.0);
    for k in 0..=120 {
        let beta = 10f64.powf(-3.0 + 6.0 * k as f64 / 120.0) / (span * span);
        let (ab, resid) = linear_fit(x, y, 2, |t, r| {
            r[0] = 1.0;
            r[1] = (-beta * t * t - half_rate * t).exp();
        });
        if resid < best.0 {
            best = (resid, ab[0], ab[1], beta);
        }
    }
    let model = |t: f64, p: &[f64], g: &mut [f64]| {
        let e = (-p[2] * t * t - half_rate * t).exp();
        g[0] = 1.0;
        g[1] = e;
        g[2] = -p[1] * e * t * t;
        p[0] + p[1] * e
    };
    let o = levenberg_marquardt(x, y, None, vec![best.1, best.2, best.3], model);
    let beta = o.params[2];
    let (tg, stg) = if beta > 0.0 {
        (beta.powf(-0.5), 0.5 * o.sigmas[2] * beta.powf(-1.5))
    } else {
        (f64::INFINITY, f64::INFINITY)
    };
    Ok(FitResult {
        names: vec!["a0".into(), "a1".into(), "t_g".into()],
        values: vec![o.params[0], o.params[1], tg],
        sigmas: vec![o.sigmas[0], o.sigmas[1], stg],
        residual_norm: o.residual_norm,
        converged: o.converged,
        iterations: o.iterations,
        note: None,
    })
}

/// Fits `a / (1 + (2 (f - f0) / fwhm)^2) + b` to a spectroscopy trace.
pub fn fit_lorentzian(freqs: &[f64], y: &[f64]) -> Result<FitResult> {
    check_data(freqs, y)?;
    let lo = y.iter().cloned().fold(f64::INFINITY, f64::min);
    let k = argmax(y);
    let hi = y[k];
    let above = y.iter().filter(|v| **v >= 0.5 * (hi + lo)).count().max(1);
    let step = (freqs[freqs.len() - 1] - freqs[0]) / (freqs.len() - 1) as f64;
    let init = vec![hi - lo, freqs[k], above as f64 * step.abs(), lo];
    let model = |f: f64, p: &[f64], g: &mut [f64]| {
        let u = 2.0 * (f - p[1]) / p[2];
        let d = 1.0 / (1.0 + u * u);
        g[0] = d;
        g[1] = p[0] * d * d * 2.0 * u * 2.0 / p[2];
        g[2] = p[0] * d * d * 2.0 * u * u / p[2];
        g[3] = 1.0;
        p[0] * d + p[3]
    };
    let o = levenberg_marquardt(freqs, y, None, init, model);
    let mut values = o.params.clone();
    values[2] = values[2].abs();
    Ok(FitResult {
        names: vec!["amplitude".into(), "center".into(), "fwhm".into(), "baseline".into()],
        values,
        sigmas: o.sigmas,
        residual_norm: o.residual_norm,
        converged: o.converged,
        iterations: o.iterations,
        note: None,
    })
}

fn argmax(v: &[f64]) -> usize {
    v.iter().enumerate().fold((0, f64::NEG_INFINITY), |best, (i, &x)| if x > best.1 { (i, x) } else { best }).0
}

// ---------------------------------------------------------------------------
// Single-qubit Clifford group

/// The 24 single-qubit Cliffords, generated from H and S, with their
/// multiplication table.
#[derive(Debug, Clone)]
pub struct CliffordGroup {
    elements: Vec<Operator>,
    words: Vec<String>,
    /// `table[i][j]` is the index of `C_i C_j`.
    table: Vec<Vec<usize>>,
    inverse: Vec<usize>,
}

/// Fixes the global phase so the first entry of non-negligible magnitude is
/// real and positive.
fn canonical_phase(op: &Operator) -> Operator {
    let m = op.matrix();
    let lead = m.iter().find(|z| z.norm() > 1e-6).copied().unwrap_or(Complex64::new(1.0, 0.0));
    op.scale(lead.conj() / lead.norm())
}

impl CliffordGroup {
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[Operator] {
        &self.elements
    }

    pub fn element(&self, i: usize) -> &Operator {
        &self.elements[i]
    }

    /// Shortest H/S word; the rightmost letter acts first. Empty for identity.
    pub fn word(&self, i: usize) -> &str {
        &self.words[i]
    }

    /// Index of `C_i C_j`.
    pub fn compose(&self, i: usize, j: usize) -> usize {
        self.table[i][j]
    }

    pub fn inverse(&self, i: usize) -> usize {
        self.inverse[i]
    }

    pub fn identity(&self) -> usize {
        0
    }

    /// Index of the element equal to `op` up to global phase.
    pub fn find(&self, op: &Operator) -> Option<usize> {
        if op.dim() != 2 {
            return None;
        }
        let c = canonical_phase(op);
        self.elements.iter().position(|e| e.max_diff(&c) < 1e-9)
    }
}

/// Breadth-first closure of `{H, S}` with phase normalization.
pub fn clifford_1q() -> CliffordGroup {
    let gens = [("H", hadamard()), ("S", phase_s())];
    let mut elements = vec![Operator::identity(2)];
    let mut words = vec![String::new()];
    let mut frontier = 0;
    while frontier < elements.len() {
        let base = elements[frontier].clone();
        let base_word = words[frontier].clone();
        for (name, g) in &gens {
            let next = canonical_phase(&(g * &base));
            if !elements.iter().any(|e| e.max_diff(&next) < 1e-9) {
                elements.push(next);
                words.push(if base_word.is_empty() { name.to_string() } else { format!("{name} {base_word}") });
            }
        }
        frontier += 1;
    }
    let find = |op: &Operator| {
        let c = canonical_phase(op);
        elements.iter().position(|e| e.max_diff(&c) < 1e-9).expect("Clifford group is closed")
    };
    let n = elements.len();
    let table: Vec<Vec<usize>> =
        (0..n).map(|i| (0..n).map(|j| find(&(&elements[i] * &elements[j]))).collect()).collect();
    let inverse = (0..n).map(|i| (0..n).find(|&j| table[i][j] == 0).expect("every element has an inverse")).collect();
    CliffordGroup { elements, words, table, inverse }
}

// ---------------------------------------------------------------------------
// Randomized benchmarking

/// Error applied after each gate.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ErrorChannel {
    #[default]
    None,
    /// Depolarizing channel with average gate infidelity `r`.
    Depolarizing { r: f64 },
    /// Amplitude damping and dephasing over one gate time (ns).
    Relaxation { gamma1: f64, gamma_phi: f64, gate_time: f64 },
    /// Fixed over-rotation about an axis (rad).
    Coherent { axis: Axis, angle: f64 },
}

impl ErrorChannel {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Self::None => true,
            Self::Depolarizing { r } => (0.0..=0.75).contains(&r),
            Self::Relaxation { gamma1, gamma_phi, gate_time } => {
                gamma1 >= 0.0 && gamma_phi >= 0.0 && gate_time >= 0.0 && (gamma1 + gamma_phi + gate_time).is_finite()
            }
            Self::Coherent { angle, .. } => angle.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(ExperimentError::InvalidConfig(format!("invalid error channel {self:?}")))
        }
    }

    /// Depolarizing strength `p = 1 - d r / (d - 1)` for a qubit.
    pub fn depolarizing_p(r: f64) -> f64 {
        1.0 - 2.0 * r
    }

    fn apply(&self, rho: &CMatrix) -> CMatrix {
        match *self {
            Self::None => rho.clone(),
            Self::Depolarizing { r } => {
                let p = Self::depolarizing_p(r);
                let mixed = CMatrix::identity(2, 2) * Complex64::new(0.5 * (1.0 - p) * rho.trace().re, 0.0);
                rho * Complex64::new(p, 0.0) + mixed
            }
            Self::Relaxation { gamma1, gamma_phi, gate_time } => {
                let keep = (-gamma1 * gate_time).exp();
                let coherence = (-(0.5 * gamma1 + gamma_phi) * gate_time).exp();
                let p1 = rho[(1, 1)].re * keep;
                let mut out = rho * Complex64::new(coherence, 0.0);
                out[(0, 0)] = Complex64::new(rho[(0, 0)].re + rho[(1, 1)].re - p1, 0.0);
                out[(1, 1)] = Complex64::new(p1, 0.0);
                out
            }
            Self::Coherent { axis, angle } => {
                let u = rotation_operator(axis, angle);
                u.matrix() * rho * u.matrix().adjoint()
            }
        }
    }
}

/// Named single-qubit Cliffords for interleaving.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NamedGate {
    I,
    X,
    Y,
    Z,
    H,
    S,
    Sdg,
    X90,
    Y90,
}

impl NamedGate {
    pub fn unitary(&self) -> Operator {
        match self {
            Self::I => Operator::identity(2),
            Self::X => gate_x(),
            Self::Y => gate_y(),
            Self::Z => gate_z(),
            Self::H => hadamard(),
            Self::S => phase_s(),
            Self::Sdg => phase_s().dagger(),
            Self::X90 => rotation_operator(Axis::X, 0.5 * PI),
            Self::Y90 => rotation_operator(Axis::Y, 0.5 * PI),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InterleavedGate {
    pub gate: NamedGate,
    /// Error of the interleaved gate itself.
    #[serde(default)]
    pub error: ErrorChannel,
}

/// State-preparation and measurement errors.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Spam {
    /// Probability of starting in `|1>`.
    #[serde(default)]
    pub prep_error: f64,
    #[serde(default)]
    pub readout: ReadoutModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RBConfig {
    /// Sequence lengths `m` (number of random Cliffords before recovery).
    pub lengths: Vec<usize>,
    /// Random sequences per length.
    pub sequences: usize,
    /// Measurement shots per sequence; zero uses exact probabilities.
    pub shots: usize,
    /// Error after every Clifford, including the recovery gate.
    pub error: ErrorChannel,
    #[serde(default)]
    pub spam: Spam,
    #[serde(default)]
    pub interleaved: Option<InterleavedGate>,
    pub seed: u64,
}

impl RBConfig {
    pub fn validate(&self) -> Result<()> {
        if self.lengths.is_empty() || self.lengths.contains(&0) {
            return Err(ExperimentError::InvalidConfig("sequence lengths must be at least 1".into()));
        }
        let mut sorted = self.lengths.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.lengths.len() {
            return Err(ExperimentError::InvalidConfig("sequence lengths must be distinct".into()));
        }
        if self.lengths.len() < 3 {
            return Err(ExperimentError::InvalidConfig("need at least three lengths to fit A p^m + B".into()));
        }
        if self.sequences == 0 {
            return Err(ExperimentError::InvalidConfig("need at least one sequence per length".into()));
        }
        if !(0.0..=1.0).contains(&self.spam.prep_error) {
            return Err(ExperimentError::InvalidConfig("preparation error must lie in [0, 1]".into()));
        }
        self.spam.readout.validate()?;
        self.error.validate()?;
        if let Some(g) = &self.interleaved {
            g.error.validate()?;
        }
        Ok(())
    }
}

/// Fit of `A p^m + B`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub a: f64,
    pub p: f64,
    pub b: f64,
    pub sigma_p: f64,
    pub residual_norm: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RbCurve {
    pub lengths: Vec<usize>,
    /// Mean survival probability per length.
    pub survival: Vec<f64>,
    /// Standard error of the mean per length.
    pub stderr: Vec<f64>,
    pub fit: DecayFit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RbResult {
    pub curve: RbCurve,
    /// Average error per Clifford `(d - 1)(1 - p) / d`.
    pub r: f64,
    pub sigma_r: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterleavedResult {
    pub reference: RbResult,
    pub interleaved: RbCurve,
    pub p_c: f64,
    /// `(d - 1)(1 - p_C / p) / d`.
    pub r_c: f64,
    pub sigma_r_c: f64,
    /// Interval for `r_C` allowing for coherent, non-depolarizing errors.
    pub bounds: (f64, f64),
}

const DIM: f64 = 2.0;

fn error_rate(p: f64) -> f64 {
    (DIM - 1.0) * (1.0 - p) / DIM
}

/// Survival of one random sequence: exact probability, or the fraction of
/// `shots` Bernoulli draws.
fn run_sequence(
    group: &CliffordGroup,
    cfg: &RBConfig,
    interleave: Option<(&Operator, usize, &ErrorChannel)>,
    m: usize,
    rng: &mut ChaCha8Rng,
) -> f64 {
    let eps = cfg.spam.prep_error;
    let mut rho = CMatrix::zeros(2, 2);
    rho[(0, 0)] = Complex64::new(1.0 - eps, 0.0);
    rho[(1, 1)] = Complex64::new(eps, 0.0);
    let conj = |u: &Operator, rho: &CMatrix| u.matrix() * rho * u.matrix().adjoint();
    let mut net = group.identity();
    for _ in 0..m {
        let k = rng.random_range(0..group.len());
        rho = cfg.error.apply(&conj(group.element(k), &rho));
        net = group.compose(k, net);
        if let Some((g, gi, err)) = interleave {
            rho = err.apply(&conj(g, &rho));
            net = group.compose(gi, net);
        }
    }
    let recovery = group.inverse(net);
    rho = cfg.error.apply(&conj(group.element(recovery), &rho));
    let ro = &cfg.spam.readout;
    let p0 = ((1.0 - ro.e01) * rho[(0, 0)].re + ro.e10 * rho[(1, 1)].re).clamp(0.0, 1.0);
    if cfg.shots == 0 {
        p0
    } else {
        let hits = (0..cfg.shots).filter(|_| rng.random::<f64>() < p0).count();
        hits as f64 / cfg.shots as f64
    }
}

/// Runs every (length, sequence) pair in parallel. Each pair draws from its
/// own ChaCha stream, so results do not depend on the thread count.
fn rb_curve(
    group: &CliffordGroup,
    cfg: &RBConfig,
    interleave: Option<(&Operator, usize, &ErrorChannel)>,
    stream: u64,
) -> Result<RbCurve> {
    let jobs: Vec<(usize, usize)> =
        (0..cfg.lengths.len()).flat_map(|l| (0..cfg.sequences).map(move |s| (l, s))).collect();
    let survivals: Vec<f64> = jobs
        .par_iter()
        .map(|&(l, s)| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(stream);
            rng.set_word_pos(((l * cfg.sequences + s) as u128) << 40);
            run_sequence(group, cfg, interleave, cfg.lengths[l], &mut rng)
        })
        .collect();
    let mut survival = Vec::with_capacity(cfg.lengths.len());
    let mut stderr = Vec::with_capacity(cfg.lengths.len());
    for chunk in survivals.chunks(cfg.sequences) {
        let n = chunk.len() as f64;
        let mean = chunk.iter().sum::<f64>() / n;
        let var = if chunk.len() > 1 { chunk.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
        survival.push(mean);
        stderr.push((var / n).sqrt());
    }
    let fit = fit_rb_decay(&cfg.lengths, &survival, &stderr)?;
    Ok(RbCurve { lengths: cfg.lengths.clone(), survival, stderr, fit })
}

/// Weighted fit of `A p^m + B` with inverse-variance weights. Returns a
/// fit-quality error when `p` leaves `(0, 1]`.
pub fn fit_rb_decay(lengths: &[usize], survival: &[f64], stderr: &[f64]) -> Result<DecayFit> {
    if lengths.len() != survival.len() || lengths.len() != stderr.len() {
        return Err(ExperimentError::LengthMismatch { x: lengths.len(), y: survival.len() });
    }
    let x: Vec<f64> = lengths.iter().map(|&m| m as f64).collect();
    let mean = survival.iter().sum::<f64>() / survival.len() as f64;
    if survival.iter().all(|s| (s - mean).abs() < 1e-12) {
        return Ok(DecayFit { a: 0.0, p: 1.0, b: mean, sigma_p: 0.0, residual_norm: 0.0, converged: true });
    }
    let w: Vec<f64> = stderr.iter().map(|s| 1.0 / (s * s).max(RB_VARIANCE_FLOOR)).collect();
    let sw: Vec<f64> = w.iter().map(|v| v.sqrt()).collect();
    let wy: Vec<f64> = survival.iter().zip(&sw).map(|(y, s)| y * s).collect();
    // Scan |1 - p| on a log grid with A and B solved by weighted least
    // squares. Growing candidates are included so that rising data end up
    // outside (0, 1] instead of pinned at the boundary.
    let mut best = (f64::INFINITY, 0.0, 0.0, 0.0);
    let candidates = (0..=240).flat_map(|k| {
        let q = 10f64.powf(-7.0 + 7.0 * k as f64 / 240.0) * 0.999;
        [1.0 - q, 1.0 + 0.1 * q]
    });
    for p in candidates {
        let mut i = 0;
        let (ab, resid) = linear_fit(&x, &wy, 2, |m, r| {
            r[0] = sw[i] * p.powf(m);
            r[1] = sw[i];
            i += 1;
        });
        if resid < best.0 {
            best = (resid, ab[0], ab[1], p);
        }
    }
    let model = |m: f64, q: &[f64], g: &mut [f64]| {
        let pm = q[1].powf(m);
        g[0] = pm;
        g[1] = if m == 0.0 { 0.0 } else { q[0] * m * q[1].powf(m - 1.0) };
        g[2] = 1.0;
        q[0] * pm + q[2]
    };
    let o = levenberg_marquardt(&x, survival, Some(&w), vec![best.1, best.3, best.2], model);
    let p = o.params[1];
    if !(p > 0.0 && p <= 1.0 + 1e-12) || !p.is_finite() {
        return Err(ExperimentError::FitQuality { p });
    }
    Ok(DecayFit {
        a: o.params[0],
        p: p.min(1.0),
        b: o.params[2],
        sigma_p: o.sigmas[1],
        residual_norm: o.residual_norm,
        converged: o.converged,
    })
}

/// Standard randomized benchmarking.
pub fn rb_standard(cfg: &RBConfig) -> Result<RbResult> {
    cfg.validate()?;
    let group = clifford_1q();
    let curve = rb_curve(&group, cfg, None, 0)?;
    let r = error_rate(curve.fit.p);
    let sigma_r = (DIM - 1.0) / DIM * curve.fit.sigma_p;
    Ok(RbResult { curve, r, sigma_r })
}

/// Interval half-width for `r_C` from a depolarizing reference `p` and the
/// interleaved decay `p_c`, covering coherent errors.
pub fn interleaved_error_bound(p: f64, p_c: f64) -> f64 {
    let d = DIM;
    let first = (d - 1.0) * ((p - p_c / p).abs() + (1.0 - p)) / d;
    let second =
        2.0 * (d * d - 1.0) * (1.0 - p) / (p * d * d) + 4.0 * (1.0 - p).max(0.0).sqrt() * (d * d - 1.0).sqrt() / p;
    first.min(second)
}

/// Interleaved randomized benchmarking against a standard reference run.
pub fn rb_interleaved(cfg: &RBConfig) -> Result<InterleavedResult> {
    cfg.validate()?;
    let gate = cfg.interleaved.ok_or_else(|| ExperimentError::InvalidConfig("interleaved gate is required".into()))?;
    let group = clifford_1q();
    let u = gate.gate.unitary();
    let index = group.find(&u).ok_or(ExperimentError::NotClifford)?;
    let reference_curve = rb_curve(&group, cfg, None, 0)?;
    let interleaved = rb_curve(&group, cfg, Some((&u, index, &gate.error)), 1)?;
    let p = reference_curve.fit.p;
    let p_c = interleaved.fit.p;
    let r_c = (DIM - 1.0) * (1.0 - p_c / p) / DIM;
    let dr_dpc = (DIM - 1.0) / (DIM * p);
    let dr_dp = (DIM - 1.0) * p_c / (DIM * p * p);
    let sigma_r_c = (dr_dpc * interleaved.fit.sigma_p).hypot(dr_dp * reference_curve.fit.sigma_p);
    let e = interleaved_error_bound(p, p_c);
    let reference =
        RbResult { r: error_rate(p), sigma_r: (DIM - 1.0) / DIM * reference_curve.fit.sigma_p, curve: reference_curve };
    Ok(InterleavedResult { reference, interleaved, p_c, r_c, sigma_r_c, bounds: (r_c - e, r_c + e) })
}
