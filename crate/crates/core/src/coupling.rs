//! Coupled systems: the Jaynes-Cummings model and its dispersive limit,
//! capacitive qubit-qubit coupling, the Kerr picture of a transmon, two-qubit
//! Hamiltonians and the classical two-oscillator model.
//!
//! Hamiltonian builders take GHz parameters and return operators in rad/ns.

use std::f64::consts::TAU;

use nalgebra::DMatrix;
use rustfft::{num_complex::Complex, FftPlanner};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ghz_to_angular;
use crate::qcore::{annihilation, creation, number, tensor, Operator, QcoreError};

pub const DEFAULT_NMAX: usize = 10;
/// Detuning-to-coupling ratio from which the dispersive limit is assumed.
pub const DISPERSIVE_RATIO: f64 = 10.0;
/// Relative tolerance for flagging `kappa = 2 chi` as the SNR optimum.
pub const SNR_OPTIMAL_TOL: f64 = 0.05;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CouplingError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("resonator truncation n_max = {0} is below 2")]
    TruncationTooSmall(usize),
    #[error("not in the dispersive limit: |detuning| = {detuning} GHz < {DISPERSIVE_RATIO} g = {limit} GHz")]
    NotDispersive { detuning: f64, limit: f64 },
    #[error("resonator frequency is resonant with the {from}->{to} transition")]
    Resonance { from: usize, to: usize },
    #[error("cutoff level {cutoff} exceeds the {levels} levels provided")]
    CutoffTooLarge { cutoff: usize, levels: usize },
    #[error("time step {dt} does not resolve the fastest frequency {f_max} (need dt < {limit})")]
    StepTooLarge { dt: f64, f_max: f64, limit: f64 },
    #[error("integration diverged at t = {0}")]
    Diverged(f64),
    #[error(transparent)]
    Linear(#[from] QcoreError),
}

pub type Result<T> = std::result::Result<T, CouplingError>;

/// Qubit-resonator system. Frequencies in GHz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JCParams {
    pub omega_q: f64,
    pub omega_r: f64,
    pub g: f64,
    pub kappa: f64,
    pub gamma: f64,
    pub n_max: usize,
}

impl JCParams {
    pub fn new(omega_q: f64, omega_r: f64, g: f64) -> Self {
        Self { omega_q, omega_r, g, kappa: 0.0, gamma: 0.0, n_max: DEFAULT_NMAX }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_max < 2 {
            return Err(CouplingError::TruncationTooSmall(self.n_max));
        }
        let vals = [self.omega_q, self.omega_r, self.g, self.kappa, self.gamma];
        if vals.iter().any(|v| !v.is_finite()) {
            return Err(CouplingError::InvalidParams("non-finite frequency".into()));
        }
        if self.g < 0.0 || self.kappa < 0.0 || self.gamma < 0.0 {
            return Err(CouplingError::InvalidParams("g, kappa and gamma must be non-negative".into()));
        }
        Ok(())
    }

    /// `omega_r - omega_q` in GHz.
    pub fn detuning(&self) -> f64 {
        self.omega_r - self.omega_q
    }

    pub fn is_dispersive(&self) -> bool {
        self.detuning().abs() >= DISPERSIVE_RATIO * self.g
    }

    pub fn dim(&self) -> usize {
        2 * (self.n_max + 1)
    }
}

/// Basis index of `|qubit, photons>` on the qubit-first product space.
pub fn jc_index(n_max: usize, qubit: usize, photons: usize) -> usize {
    qubit * (n_max + 1) + photons
}

fn qr_parts(p: &JCParams) -> Result<(Operator, Operator, Operator)> {
    p.validate()?;
    let levels = p.n_max + 1;
    let iq = Operator::identity(2);
    let ir = Operator::identity(levels);
    let bare = tensor(&[&number(2), &ir])?.scale_real(ghz_to_angular(p.omega_q))
        + tensor(&[&iq, &number(levels)])?.scale_real(ghz_to_angular(p.omega_r));
    let sp = creation(2);
    let sm = annihilation(2);
    let a = annihilation(levels);
    let ad = creation(levels);
    let gw = ghz_to_angular(p.g);
    let rotating = (tensor(&[&sp, &a])? + tensor(&[&sm, &ad])?).scale_real(gw);
    let counter = (tensor(&[&sp, &ad])? + tensor(&[&sm, &a])?).scale_real(gw);
    Ok((bare, rotating, counter))
}

/// Jaynes-Cummings Hamiltonian `w_q |e><e| + w_r a^dag a + g (s+ a + s- a^dag)`
/// in rad/ns. The qubit term equals `w_q sigma_z / 2` up to a constant.
pub fn jc_hamiltonian(p: &JCParams) -> Result<Operator> {
    let (bare, rot, _) = qr_parts(p)?;
    Ok(bare + rot)
}

/// Qubit-resonator Hamiltonian with the full transverse coupling
/// `g sigma_x (a + a^dag)`; `rwa = true` gives [`jc_hamiltonian`].
pub fn qubit_resonator_hamiltonian(p: &JCParams, rwa: bool) -> Result<Operator> {
    let (bare, rot, counter) = qr_parts(p)?;
    Ok(if rwa { bare + rot } else { bare + rot + counter })
}

/// Total excitation number `|e><e| + a^dag a`.
pub fn excitation_number(p: &JCParams) -> Result<Operator> {
    let levels = p.n_max + 1;
    Ok(tensor(&[&number(2), &Operator::identity(levels)])? + tensor(&[&Operator::identity(2), &number(levels)])?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DispersiveReport {
    /// `g^2 / (omega_r - omega_q)` in GHz.
    pub chi: f64,
    /// Critical photon number `Delta^2 / (4 g^2)`.
    pub n_crit: f64,
    /// Set when `kappa` is within [`SNR_OPTIMAL_TOL`] of `2 |chi|`.
    pub snr_optimal: bool,
    /// Resonator frequency with the qubit in |g> and |e>, GHz.
    pub resonator_ground: f64,
    pub resonator_excited: f64,
}

/// `chi = g^2 / Delta`, GHz in and out.
pub fn dispersive_chi(g: f64, delta: f64) -> f64 {
    g * g / delta
}

/// Critical photon number `Delta^2 / (4 g^2)`.
pub fn critical_photon_number(g: f64, delta: f64) -> f64 {
    if g == 0.0 {
        f64::INFINITY
    } else {
        delta * delta / (4.0 * g * g)
    }
}

pub fn dispersive_shift(p: &JCParams) -> Result<DispersiveReport> {
    p.validate()?;
    if !p.is_dispersive() {
        return Err(CouplingError::NotDispersive { detuning: p.detuning().abs(), limit: DISPERSIVE_RATIO * p.g });
    }
    let delta = p.detuning();
    let chi = dispersive_chi(p.g, delta);
    let n_crit = critical_photon_number(p.g, delta);
    let snr_optimal = chi != 0.0 && (p.kappa - 2.0 * chi.abs()).abs() <= SNR_OPTIMAL_TOL * 2.0 * chi.abs();
    Ok(DispersiveReport {
        chi,
        n_crit,
        snr_optimal,
        resonator_ground: p.omega_r + chi,
        resonator_excited: p.omega_r - chi,
    })
}

/// Dressed energies (GHz) labelled by bare states, assigning each eigenvector
/// to the bare basis state it overlaps most.
pub fn dressed_energies(h: &Operator) -> Vec<f64> {
    let (vals, vecs) = crate::qcore::eigh(h);
    let n = h.dim();
    let mut out = vec![f64::NAN; n];
    let mut taken = vec![false; n];
    for (k, &e) in vals.iter().enumerate() {
        let col = vecs.column(k);
        let best = (0..n)
            .filter(|&i| !taken[i])
            .max_by(|&a, &b| col[a].norm_sqr().total_cmp(&col[b].norm_sqr()))
            .expect("unassigned bare state");
        taken[best] = true;
        out[best] = e / TAU;
    }
    out
}

/// Dispersive shift extracted from exact diagonalization: half the difference
/// of the resonator frequency with the qubit in |g> and |e>, GHz.
pub fn dressed_chi(p: &JCParams, rwa: bool) -> Result<f64> {
    let h = qubit_resonator_hamiltonian(p, rwa)?;
    let e = dressed_energies(&h);
    let idx = |q, n| jc_index(p.n_max, q, n);
    let wg = e[idx(0, 1)] - e[idx(0, 0)];
    let we = e[idx(1, 1)] - e[idx(1, 0)];
    Ok(0.5 * (wg - we))
}

/// Total dispersive shift including higher levels of a multilevel qubit.
///
/// `g[(i, j)]` are the coupling elements and `energies[i]` the level energies
/// (GHz). The transition frequency `w_{i-j} = E_i - E_j` is the energy
/// released going from `i` to `j`, negative for `i < j`.
pub fn chi_total(g: &DMatrix<f64>, energies: &[f64], omega_r: f64, cutoff: usize) -> Result<f64> {
    let levels = energies.len();
    if g.nrows() != levels || g.ncols() != levels {
        return Err(CouplingError::InvalidParams("coupling matrix does not match the level count".into()));
    }
    if levels < 2 || cutoff >= levels {
        return Err(CouplingError::CutoffTooLarge { cutoff, levels });
    }
    let chi = |i: usize, j: usize| -> Result<f64> {
        let gij = g[(i, j)];
        if i == j || gij == 0.0 {
            return Ok(0.0);
        }
        let denom = omega_r - (energies[i] - energies[j]);
        if denom.abs() < 1e-12 * (1.0 + omega_r.abs()) {
            return Err(CouplingError::Resonance { from: i, to: j });
        }
        Ok(gij * gij / denom)
    };
    let mut total = 0.0;
    for j in 0..=cutoff {
        total += (chi(j, 1)? - chi(1, j)?) - (chi(j, 0)? - chi(0, j)?);
    }
    Ok(0.5 * total)
}

/// Capacitive coupling description. Capacitances share one arbitrary unit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CapacitiveCouplingSpec {
    pub beta: f64,
    pub v_r0: f64,
    pub c12: f64,
    pub cq1: f64,
    pub cq2: f64,
    pub cr: f64,
}

impl CapacitiveCouplingSpec {
    pub fn qubit_qubit(c12: f64, cq1: f64, cq2: f64) -> Self {
        Self { beta: 0.0, v_r0: 0.0, c12, cq1, cq2, cr: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.beta) {
            return Err(CouplingError::InvalidParams(format!("beta = {} outside [0, 1]", self.beta)));
        }
        if self.c12 < 0.0 || self.cq1 <= 0.0 || self.cq2 <= 0.0 || self.cr <= 0.0 {
            return Err(CouplingError::InvalidParams("capacitances must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QubitQubitCoupling {
    /// Coupling constant in GHz.
    pub j: f64,
    /// `C_12` exceeds a tenth of the smaller qubit capacitance.
    pub weak_coupling_warning: bool,
}

/// `J = (C_12 / sqrt(C_q1 C_q2)) sqrt(w_q1 w_q2) / 2`, frequencies in GHz.
pub fn qubit_qubit_j(spec: &CapacitiveCouplingSpec, omega_q1: f64, omega_q2: f64) -> Result<QubitQubitCoupling> {
    spec.validate()?;
    if omega_q1 < 0.0 || omega_q2 < 0.0 {
        return Err(CouplingError::InvalidParams("qubit frequencies must be non-negative".into()));
    }
    let j = 0.5 * spec.c12 / (spec.cq1 * spec.cq2).sqrt() * (omega_q1 * omega_q2).sqrt();
    Ok(QubitQubitCoupling { j, weak_coupling_warning: spec.c12 > 0.1 * spec.cq1.min(spec.cq2) })
}

/// Qubit-resonator coupling `2 e beta V_r0 <i|N|j>` expressed in GHz, given
/// `V_r0` in volts and the charge matrix element.
pub fn qubit_resonator_g(spec: &CapacitiveCouplingSpec, n_ij: f64) -> f64 {
    const E_CHARGE: f64 = 1.602_176_634e-19;
    const PLANCK: f64 = 6.626_070_15e-34;
    2.0 * E_CHARGE * spec.beta * spec.v_r0 * n_ij / PLANCK * 1e-9
}

/// Weakly anharmonic oscillator picture of a transmon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KerrMap {
    pub omega_q: f64,
    pub kerr: f64,
    pub n0: f64,
    pub phi0: f64,
    /// `E_J / E_C` is below 20, where the expansion is unreliable.
    pub regime_warning: bool,
}

pub fn transmon_kerr_map(ej: f64, ec: f64) -> Result<KerrMap> {
    if !(ej > 0.0 && ec > 0.0) {
        return Err(CouplingError::InvalidParams("E_J and E_C must be positive".into()));
    }
    Ok(KerrMap {
        omega_q: (8.0 * ej * ec).sqrt() - ec,
        kerr: -ec,
        n0: (ej / (32.0 * ec)).powf(0.25),
        phi0: (2.0 * ec / ej).powf(0.25),
        regime_warning: ej / ec < 20.0,
    })
}

/// Two coupled qubits or transmons. Frequencies in GHz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoQubitParams {
    pub omega_q1: f64,
    pub omega_q2: f64,
    pub j: f64,
    pub alpha1: Option<f64>,
    pub alpha2: Option<f64>,
    /// Levels per qubit, 2 or 3.
    pub levels: usize,
}

impl TwoQubitParams {
    pub fn qubits(omega_q1: f64, omega_q2: f64, j: f64) -> Self {
        Self { omega_q1, omega_q2, j, alpha1: None, alpha2: None, levels: 2 }
    }

    pub fn transmons(omega_q1: f64, omega_q2: f64, j: f64, alpha1: f64, alpha2: f64) -> Self {
        Self { omega_q1, omega_q2, j, alpha1: Some(alpha1), alpha2: Some(alpha2), levels: 3 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.j < 0.0 || !self.j.is_finite() {
            return Err(CouplingError::InvalidParams("J must be non-negative".into()));
        }
        if !(2..=3).contains(&self.levels) {
            return Err(CouplingError::InvalidParams(format!("levels = {} (expected 2 or 3)", self.levels)));
        }
        Ok(())
    }

    /// `omega_q1 - omega_q2` in GHz.
    pub fn detuning(&self) -> f64 {
        self.omega_q1 - self.omega_q2
    }

    pub fn dim(&self) -> usize {
        self.levels * self.levels
    }
}

fn anharmonic_oscillator(levels: usize, omega: f64, alpha: f64) -> Operator {
    let diag: Vec<f64> = (0..levels)
        .map(|n| {
            let n = n as f64;
            ghz_to_angular(omega * n + 0.5 * alpha * n * (n - 1.0))
        })
        .collect();
    Operator::diagonal_real(&diag)
}

/// Two-qubit Hamiltonian in rad/ns with exchange coupling
/// `J (b1 + b1^dag)(b2 + b2^dag)`, or `J (b1^dag b2 + b1 b2^dag)` with `rwa`.
pub fn two_qubit_hamiltonian(p: &TwoQubitParams, rwa: bool) -> Result<Operator> {
    p.validate()?;
    let l = p.levels;
    let id = Operator::identity(l);
    let h1 = anharmonic_oscillator(l, p.omega_q1, if l > 2 { p.alpha1.unwrap_or(0.0) } else { 0.0 });
    let h2 = anharmonic_oscillator(l, p.omega_q2, if l > 2 { p.alpha2.unwrap_or(0.0) } else { 0.0 });
    let b = annihilation(l);
    let bd = creation(l);
    let exchange = tensor(&[&bd, &b])? + tensor(&[&b, &bd])?;
    let coupling = if rwa { exchange } else { exchange + tensor(&[&bd, &bd])? + tensor(&[&b, &b])? };
    Ok(tensor(&[&h1, &id])? + tensor(&[&id, &h2])? + coupling.scale_real(ghz_to_angular(p.j)))
}

/// Total excitation number `n1 + n2` on the two-qubit space.
pub fn two_qubit_excitation(p: &TwoQubitParams) -> Result<Operator> {
    let id = Operator::identity(p.levels);
    let n = number(p.levels);
    Ok(tensor(&[&n, &id])? + tensor(&[&id, &n])?)
}

/// Classical coupled-oscillator parameters (dimensionless).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassicalOscParams {
    pub m1: f64,
    pub m2: f64,
    pub k1: f64,
    pub k2: f64,
    pub kappa0: f64,
    pub kappa_m: f64,
    pub f_m: f64,
    pub a_d: f64,
    pub f_d: f64,
    /// Initial `(x1, v1, x2, v2)`.
    pub initial: [f64; 4],
}

impl Default for ClassicalOscParams {
    fn default() -> Self {
        let m = |x: f64| x / (TAU * TAU);
        Self {
            m1: m(10.0),
            m2: m(2.5),
            k1: 10.0,
            k2: 40.0,
            kappa0: 1.0,
            kappa_m: 0.0,
            f_m: 0.0,
            a_d: 0.0,
            f_d: 0.0,
            initial: [1.0, 0.0, 0.0, 0.0],
        }
    }
}

impl ClassicalOscParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.m1 > 0.0 && self.m2 > 0.0 && self.k1 > 0.0 && self.k2 > 0.0) {
            return Err(CouplingError::InvalidParams("masses and spring constants must be positive".into()));
        }
        Ok(())
    }

    /// Loaded frequencies `sqrt((k_i + kappa0) / m_i) / 2 pi`.
    pub fn natural_frequencies(&self) -> (f64, f64) {
        (((self.k1 + self.kappa0) / self.m1).sqrt() / TAU, ((self.k2 + self.kappa0) / self.m2).sqrt() / TAU)
    }

    /// Normal-mode frequencies of the static system, ascending.
    pub fn normal_mode_frequencies(&self) -> (f64, f64) {
        let a = (self.k1 + self.kappa0) / self.m1;
        let d = (self.k2 + self.kappa0) / self.m2;
        let bc = self.kappa0 * self.kappa0 / (self.m1 * self.m2);
        let mean = 0.5 * (a + d);
        let disc = (0.25 * (a - d) * (a - d) + bc).sqrt();
        ((mean - disc).sqrt() / TAU, (mean + disc).sqrt() / TAU)
    }

    pub fn max_frequency(&self) -> f64 {
        let (_, hi) = self.normal_mode_frequencies();
        let drive = if self.a_d != 0.0 { self.f_d.abs() } else { 0.0 };
        let pump = if self.kappa_m != 0.0 { self.f_m.abs() } else { 0.0 };
        hi.max(drive).max(pump)
    }

    pub fn default_dt(&self) -> f64 {
        1.0 / (40.0 * self.max_frequency())
    }

    /// Mechanical energy of the static system.
    pub fn energy(&self, s: &[f64; 4]) -> f64 {
        let [x1, v1, x2, v2] = *s;
        0.5 * self.m1 * v1 * v1
            + 0.5 * self.m2 * v2 * v2
            + 0.5 * (self.k1 + self.kappa0) * x1 * x1
            + 0.5 * (self.k2 + self.kappa0) * x2 * x2
            - self.kappa0 * x1 * x2
    }

    fn derivative(&self, t: f64, s: &[f64; 4]) -> [f64; 4] {
        let [x1, v1, x2, v2] = *s;
        let kappa = self.kappa0 + self.kappa_m * (TAU * self.f_m * t).cos();
        let drive = self.a_d * (TAU * self.f_d * t).cos();
        [
            v1,
            (-(self.k1 + kappa) * x1 + kappa * x2 + drive) / self.m1,
            v2,
            (-(self.k2 + kappa) * x2 + kappa * x1) / self.m2,
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OscTrajectory {
    pub times: Vec<f64>,
    pub x1: Vec<f64>,
    pub x2: Vec<f64>,
    pub v1: Vec<f64>,
    pub v2: Vec<f64>,
    /// Frequency axis of the one-sided spectra.
    pub freqs: Vec<f64>,
    pub spectrum1: Vec<f64>,
    pub spectrum2: Vec<f64>,
}

/// Integrates the driven, parametrically coupled oscillators with fixed-step
/// RK4 over `[0, t_span]`. `dt = None` uses [`ClassicalOscParams::default_dt`].
pub fn classical_oscillators(p: &ClassicalOscParams, t_span: f64, dt: Option<f64>) -> Result<OscTrajectory> {
    p.validate()?;
    let f_max = p.max_frequency();
    let dt = dt.unwrap_or_else(|| p.default_dt());
    let limit = 1.0 / (20.0 * f_max);
    if !(dt > 0.0) || dt >= limit {
        return Err(CouplingError::StepTooLarge { dt, f_max, limit });
    }
    let steps = (t_span / dt).round() as usize;
    let mut s = p.initial;
    let mut traj = OscTrajectory {
        times: Vec::with_capacity(steps + 1),
        x1: Vec::with_capacity(steps + 1),
        x2: Vec::with_capacity(steps + 1),
        v1: Vec::with_capacity(steps + 1),
        v2: Vec::with_capacity(steps + 1),
        freqs: Vec::new(),
        spectrum1: Vec::new(),
        spectrum2: Vec::new(),
    };
    let axpy = |a: &[f64; 4], h: f64, b: &[f64; 4]| -> [f64; 4] { std::array::from_fn(|i| a[i] + h * b[i]) };
    for n in 0..=steps {
        let t = n as f64 * dt;
        traj.times.push(t);
        traj.x1.push(s[0]);
        traj.v1.push(s[1]);
        traj.x2.push(s[2]);
        traj.v2.push(s[3]);
        if n == steps {
            break;
        }
        let k1 = p.derivative(t, &s);
        let k2 = p.derivative(t + 0.5 * dt, &axpy(&s, 0.5 * dt, &k1));
        let k3 = p.derivative(t + 0.5 * dt, &axpy(&s, 0.5 * dt, &k2));
        let k4 = p.derivative(t + dt, &axpy(&s, dt, &k3));
        s = std::array::from_fn(|i| s[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]));
        if s.iter().any(|v| !v.is_finite()) {
            return Err(CouplingError::Diverged(t + dt));
        }
    }
    let (freqs, spec1) = magnitude_spectrum(&traj.x1, dt);
    let (_, spec2) = magnitude_spectrum(&traj.x2, dt);
    traj.freqs = freqs;
    traj.spectrum1 = spec1;
    traj.spectrum2 = spec2;
    Ok(traj)
}

/// One-sided DFT magnitude `|X_k| / N` of a uniformly sampled series.
pub fn magnitude_spectrum(series: &[f64], dt: f64) -> (Vec<f64>, Vec<f64>) {
    let n = series.len();
    if n == 0 {
        return (Vec::new(), Vec::new());
    }
    let mut buf: Vec<Complex<f64>> = series.iter().map(|&x| Complex::new(x, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let half = n / 2 + 1;
    let freqs = (0..half).map(|k| k as f64 / (n as f64 * dt)).collect();
    let mags = buf[..half].iter().map(|z| z.norm() / n as f64).collect();
    (freqs, mags)
}

/// Running peak of `|x|` over consecutive windows of `window` samples,
/// returned as (window centre time, peak).
pub fn peak_envelope(times: &[f64], series: &[f64], window: usize) -> Vec<(f64, f64)> {
    let window = window.max(1);
    times
        .chunks(window)
        .zip(series.chunks(window))
        .filter(|(t, _)| t.len() == window)
        .map(|(t, x)| (0.5 * (t[0] + t[t.len() - 1]), x.iter().fold(0.0_f64, |m, v| m.max(v.abs()))))
        .collect()
}

/// Indices of the `count` largest local maxima of `spectrum`, sorted by index.
pub fn spectral_peaks(spectrum: &[f64], count: usize) -> Vec<usize> {
    let mut peaks: Vec<usize> = (1..spectrum.len().saturating_sub(1))
        .filter(|&k| spectrum[k] > spectrum[k - 1] && spectrum[k] >= spectrum[k + 1])
        .collect();
    peaks.sort_by(|&a, &b| spectrum[b].total_cmp(&spectrum[a]));
    peaks.truncate(count);
    peaks.sort_unstable();
    peaks
}
