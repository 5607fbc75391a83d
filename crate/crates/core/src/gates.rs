//! Gate constructions: driven single-qubit rotations, exchange-type
//! two-qubit gates (iSWAP, bSWAP, CZ), cross resonance, and gate fidelity.
//!
//! Two-qubit matrices use the basis |q1 q2> with qubit 1 most significant.
//! Couplings and drive strengths are given in GHz and converted with `2 pi`.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coupling::{CouplingError, JCParams, TwoQubitParams, DISPERSIVE_RATIO};
use crate::dynamics::{DynamicsError, TimeDependentH};
use crate::ghz_to_angular;
use crate::qcore::{
    annihilation, creation, cz, eigh, ket_bra, matrix_exp, number, pauli_x, pauli_y, pauli_z, propagator,
    rotation_operator, tensor, Axis, CMatrix, Operator, QcoreError, I, ONE,
};

/// Allowed deviation of the accumulated conditional phase from `pi`.
pub const CZ_PHASE_TOL: f64 = 0.01;
/// Largest instantaneous leakage population accepted as adiabatic.
pub const ADIABATIC_LEAKAGE: f64 = 1e-3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GateError {
    #[error("dimension mismatch: {0} vs {1}")]
    Dimension(usize, usize),
    #[error("not in the dispersive limit: |detuning| = {detuning} GHz < {DISPERSIVE_RATIO} x coupling {coupling} GHz")]
    NotDispersive { detuning: f64, coupling: f64 },
    #[error("Delta_qq + alpha_1 = {0} GHz is too close to zero")]
    Pole(f64),
    #[error("accumulated conditional phase {phase} rad misses pi by more than {CZ_PHASE_TOL}")]
    Calibration { phase: f64 },
    #[error("invalid gate parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Coupling(#[from] CouplingError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Linear(#[from] QcoreError),
}

pub type Result<T> = std::result::Result<T, GateError>;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GateReport {
    #[serde(skip)]
    pub propagator: Operator,
    #[serde(skip)]
    pub target: Operator,
    pub infidelity: f64,
}

impl GateReport {
    pub fn new(propagator: Operator, target: Operator) -> Result<Self> {
        let infidelity = gate_infidelity(&propagator, &target)?;
        Ok(Self { propagator, target, infidelity })
    }
}

/// `1 - |tr(U_target^dag U)|^2 / d^2`.
pub fn gate_infidelity(u: &Operator, target: &Operator) -> Result<f64> {
    if u.dim() != target.dim() {
        return Err(GateError::Dimension(u.dim(), target.dim()));
    }
    let d = u.dim() as f64;
    let overlap = (target.dagger() * u.clone()).trace();
    Ok(1.0 - overlap.norm_sqr() / (d * d))
}

/// Rotation `exp(-i Omega_R tau sigma_axis / 2)` with `Omega_R` in GHz.
pub fn rabi_gate(omega_r: f64, tau: f64, axis: Axis) -> Operator {
    rotation_operator(axis, ghz_to_angular(omega_r) * tau)
}

/// Rotation by `theta` about the equatorial axis at azimuth `phase`.
pub fn drive_rotation(theta: f64, phase: f64) -> Operator {
    let axis = &pauli_x().scale_real(phase.cos()) + &pauli_y().scale_real(phase.sin());
    let (s, co) = (theta / 2.0).sin_cos();
    &Operator::identity(2).scale_real(co) - &axis.scale(Complex64::new(0.0, s))
}

/// A resonant pulse: rotation angle and drive phase.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseRotation {
    pub theta: f64,
    pub phase: f64,
}

/// Virtual Z: shifts every subsequent drive phase by `shift` instead of
/// applying a physical z rotation.
pub fn virtual_z(sequence: &[PulseRotation], shift: f64) -> Vec<PulseRotation> {
    sequence.iter().map(|p| PulseRotation { theta: p.theta, phase: p.phase + shift }).collect()
}

/// Product of the pulses, first pulse rightmost.
pub fn sequence_propagator(sequence: &[PulseRotation]) -> Operator {
    sequence.iter().fold(Operator::identity(2), |u, p| &drive_rotation(p.theta, p.phase) * &u)
}

/// Drive on the readout resonator of a dispersive qubit-resonator system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriveParams {
    /// Drive amplitude in GHz.
    pub amplitude: f64,
    /// Drive frequency in GHz.
    pub frequency: f64,
    pub phase: f64,
    /// Pulse duration in ns.
    pub duration: f64,
}

impl DriveParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.duration > 0.0) {
            return Err(GateError::InvalidParams("drive duration must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct DrivenFrame {
    /// Rotating-frame generator on qubit (x) resonator, rad/ns.
    pub generator: Operator,
    /// Rabi frequency `-4 eps g / Delta` in GHz.
    pub omega_rabi: f64,
    /// Drive frequency that cancels the qubit detuning at zero photons.
    pub resonant_frequency: f64,
}

/// `-4 eps g / Delta_qr`, all in GHz.
pub fn rabi_frequency(amplitude: f64, g: f64, delta_qr: f64) -> f64 {
    -4.0 * amplitude * g / delta_qr
}

/// Rotating-frame Hamiltonian of a qubit driven through its readout resonator
/// in the dispersive limit:
/// `(w_r - w_d) a^dag a + eps (a + a^dag) + [w_q - chi (1 + 2 a^dag a) - w_d] s_z / 2
///  + Omega_R (cos phi s_x + sin phi s_y) / 2`, where `s_z = |e><e| - |g><g|`.
pub fn driven_qubit_frame(p: &JCParams, d: &DriveParams) -> Result<DrivenFrame> {
    p.validate()?;
    d.validate()?;
    if !p.is_dispersive() {
        return Err(GateError::NotDispersive { detuning: p.detuning().abs(), coupling: p.g });
    }
    let delta = p.detuning();
    let chi = p.g * p.g / delta;
    let omega_rabi = rabi_frequency(d.amplitude, p.g, delta);
    let levels = p.n_max + 1;
    let iq = Operator::identity(2);
    let ir = Operator::identity(levels);
    let n = number(levels);
    let a = annihilation(levels);
    let ad = creation(levels);
    let sz = pauli_z().scale_real(-1.0);
    let w = ghz_to_angular;
    let resonator = tensor(&[&iq, &n])?.scale_real(w(p.omega_r - d.frequency));
    let phase = Complex64::from_polar(1.0, d.phase);
    let res_drive =
        (tensor(&[&iq, &a])?.scale(phase) + tensor(&[&iq, &ad])?.scale(phase.conj())).scale_real(w(d.amplitude));
    let shifted = &ir.scale_real(p.omega_q - chi - d.frequency) - &n.scale_real(2.0 * chi);
    let qubit = tensor(&[&sz, &shifted])?.scale_real(w(1.0) / 2.0);
    let axis = &pauli_x().scale_real(d.phase.cos()) + &pauli_y().scale_real(d.phase.sin());
    let rabi = tensor(&[&axis, &ir])?.scale_real(w(omega_rabi) / 2.0);
    Ok(DrivenFrame { generator: resonator + res_drive + qubit + rabi, omega_rabi, resonant_frequency: p.omega_q - chi })
}

/// Exchange operator `sigma_+ sigma_- + sigma_- sigma_+` on two qubits.
fn exchange_2q() -> Operator {
    tensor(&[&creation(2), &annihilation(2)]).expect("nonempty")
        + tensor(&[&annihilation(2), &creation(2)]).expect("nonempty")
}

/// Coherent-exchange propagator with coupling `J` (GHz) over `tau` (ns).
pub fn iswap(j: f64, tau: f64) -> Operator {
    let (s, co) = (ghz_to_angular(j) * tau).sin_cos();
    let mut m = Operator::identity(4).into_matrix();
    m[(1, 1)] = Complex64::new(co, 0.0);
    m[(2, 2)] = Complex64::new(co, 0.0);
    m[(1, 2)] = Complex64::new(0.0, -s);
    m[(2, 1)] = Complex64::new(0.0, -s);
    Operator::new(m).expect("square")
}

/// The same propagator from the exponential of `J (s+ s- + s- s+)`.
pub fn iswap_numeric(j: f64, tau: f64) -> Result<Operator> {
    Ok(propagator(&exchange_2q().scale_real(ghz_to_angular(j)), tau)?)
}

/// The ideal iSWAP matrix.
pub fn iswap_target() -> Operator {
    iswap(0.25, 1.0)
}

/// Parametric iSWAP: modulation amplitude `J_m` acts as `J_m / 2`.
pub fn parametric_iswap(j_m: f64, tau: f64) -> Operator {
    iswap(0.5 * j_m, tau)
}

/// bSWAP propagator for modulation amplitude `J_m` (GHz) at `w_q1 + w_q2`.
pub fn bswap(j_m: f64, tau: f64) -> Operator {
    let (s, co) = (0.5 * ghz_to_angular(j_m) * tau).sin_cos();
    let mut m = Operator::identity(4).into_matrix();
    m[(0, 0)] = Complex64::new(co, 0.0);
    m[(3, 3)] = Complex64::new(co, 0.0);
    m[(0, 3)] = Complex64::new(0.0, -s);
    m[(3, 0)] = Complex64::new(0.0, -s);
    Operator::new(m).expect("square")
}

pub fn bswap_numeric(j_m: f64, tau: f64) -> Result<Operator> {
    let pair = tensor(&[&creation(2), &creation(2)])? + tensor(&[&annihilation(2), &annihilation(2)])?;
    Ok(propagator(&pair.scale_real(0.5 * ghz_to_angular(j_m)), tau)?)
}

/// Exchange coupling `b1^dag b2 + b1 b2^dag` for two oscillators with
/// `levels` levels each; `|n1, n2 - 1> <-> |n1 - 1, n2>` has weight
/// `sqrt(n1 n2)`.
pub fn exchange_coupling(levels: usize) -> Result<Operator> {
    let (b, bd) = (annihilation(levels), creation(levels));
    Ok(tensor(&[&bd, &b])? + tensor(&[&b, &bd])?)
}

/// Labels of the coherent-exchange CZ basis, in matrix order.
pub const CZ_EXCHANGE_BASIS: [&str; 6] = ["00", "01", "10", "11", "02", "20"];

/// Six-level coherent exchange between |11> and |02> with coupling
/// `sqrt(2) J`.
pub fn cz_coherent_exchange(j: f64, tau: f64) -> Operator {
    let (s, co) = (2.0_f64.sqrt() * ghz_to_angular(j) * tau).sin_cos();
    let mut m = Operator::identity(6).into_matrix();
    m[(3, 3)] = Complex64::new(co, 0.0);
    m[(4, 4)] = Complex64::new(co, 0.0);
    m[(3, 4)] = Complex64::new(0.0, -s);
    m[(4, 3)] = Complex64::new(0.0, -s);
    Operator::new(m).expect("square")
}

/// Parametric CZ through the |11>-|02> transition, with the modulation
/// amplitude acting as `J_m / 2` as for the parametric iSWAP.
pub fn parametric_cz(j_m: f64, tau: f64) -> Operator {
    cz_coherent_exchange(0.5 * j_m, tau)
}

/// Computational 4x4 block of a six-level exchange propagator.
pub fn computational_block(u6: &Operator) -> Operator {
    Operator::from_fn(4, |r, c| u6.get(r, c))
}

/// Phase-accumulation CZ from a ZZ-rate schedule `zeta(t)` in GHz: integrates
/// `theta = 2 pi int_0^tau zeta dt` with `steps` Simpson panels.
pub fn cz_adiabatic(zeta: impl Fn(f64) -> f64, tau: f64, steps: usize) -> Result<GateReport> {
    if !(tau > 0.0) || steps == 0 {
        return Err(GateError::InvalidParams("tau and steps must be positive".into()));
    }
    let n = 2 * steps;
    let h = tau / n as f64;
    let sum: f64 = (0..=n)
        .map(|k| {
            let w = if k == 0 || k == n {
                1.0
            } else if k % 2 == 1 {
                4.0
            } else {
                2.0
            };
            w * zeta(k as f64 * h)
        })
        .sum();
    let theta = TAU * sum * h / 3.0;
    let wrapped = (theta - PI).rem_euclid(TAU);
    let miss = wrapped.min(TAU - wrapped);
    if miss > CZ_PHASE_TOL {
        return Err(GateError::Calibration { phase: theta });
    }
    let u = Operator::diagonal(&[ONE, ONE, ONE, Complex64::from_polar(1.0, theta)]);
    GateReport::new(u, cz())
}

/// Removes single-qubit z phases from a (near) diagonal two-qubit block so
/// that only the conditional phase remains on |11>.
pub fn strip_local_phases(u: &Operator) -> Operator {
    let ph = |k: usize| u.get(k, k).arg();
    let (p00, p01, p10) = (ph(0), ph(1), ph(2));
    let corr = [p00, p01, p10, p01 + p10 - p00];
    Operator::from_fn(4, |r, c| u.get(r, c) * Complex64::from_polar(1.0, -corr[r]))
}

/// Conditional phase `phi_11 - phi_10 - phi_01 + phi_00` of a diagonal block,
/// wrapped to `(-pi, pi]`.
pub fn conditional_phase(u: &Operator) -> f64 {
    let z = u.get(3, 3) * u.get(0, 0) * (u.get(1, 1) * u.get(2, 2)).conj();
    z.arg()
}

/// Two transmons with qubit 2 flux tunable, three levels each.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoTransmonModel {
    pub omega1: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    pub j: f64,
    /// Idle frequency of qubit 2, GHz.
    pub omega2_idle: f64,
}

/// Index of `|n1 n2>` in the nine-level space.
pub fn transmon_index(n1: usize, n2: usize) -> usize {
    3 * n1 + n2
}

impl TwoTransmonModel {
    pub fn hamiltonian(&self, omega2: f64) -> Result<Operator> {
        let p = TwoQubitParams::transmons(self.omega1, omega2, self.j, self.alpha1, self.alpha2);
        Ok(crate::coupling::two_qubit_hamiltonian(&p, true)?)
    }

    /// Qubit-2 frequency at which |11> and |02> are degenerate.
    pub fn anticrossing_11_02(&self) -> f64 {
        self.omega1 - self.alpha2
    }

    /// Sorted-eigenvalue index of each bare state at the idle point.
    /// Between the idle point and the |11>-|02> anticrossing no other level
    /// crossings occur, so these indices follow the adiabatic branches.
    pub fn branch_indices(&self) -> Result<[usize; 9]> {
        let (_, vecs) = eigh(&self.hamiltonian(self.omega2_idle)?);
        let mut out = [0; 9];
        for (bare, slot) in out.iter_mut().enumerate() {
            *slot = (0..9)
                .max_by(|&a, &b| vecs[(bare, a)].norm_sqr().total_cmp(&vecs[(bare, b)].norm_sqr()))
                .expect("nine columns");
        }
        Ok(out)
    }

    /// `zeta = w_10 + w_01 - w_11` (GHz) at qubit-2 frequency `omega2`.
    pub fn zz_rate(&self, omega2: f64) -> Result<f64> {
        let idx = self.branch_indices()?;
        let (vals, _) = eigh(&self.hamiltonian(omega2)?);
        let e = |n1, n2| vals[idx[transmon_index(n1, n2)]] / TAU;
        Ok(e(1, 0) + e(0, 1) - e(1, 1) - e(0, 0))
    }
}

impl TwoTransmonModel {
    /// Mixing angle `atan(sqrt(2) J / delta)` of the |11>-|02> pair, with
    /// `delta` the bare detuning of |02> above |11>.
    pub fn mixing_angle(&self, omega2: f64) -> f64 {
        let delta = omega2 - self.anticrossing_11_02();
        (2.0_f64.sqrt() * self.j).atan2(delta)
    }

    /// Inverse of `mixing_angle` on `(0, pi)`.
    pub fn omega2_at_angle(&self, theta: f64) -> f64 {
        self.anticrossing_11_02() + 2.0_f64.sqrt() * self.j / theta.tan()
    }
}

/// Excursion profile for an adiabatic CZ. The trajectory is set in terms of
/// the |11>-|02> mixing angle, which sweeps slowly where the gap is small.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RampShape {
    /// Sudden jump to the interaction point and back.
    Square,
    /// Hann window in the mixing angle, a one-term Slepian-type trajectory.
    Slepian,
}

impl RampShape {
    /// Fraction of the angle excursion reached at `t` for a gate of length `tau`.
    pub fn profile(self, t: f64, tau: f64) -> f64 {
        if !(0.0..=tau).contains(&t) {
            return 0.0;
        }
        match self {
            Self::Square => 1.0,
            Self::Slepian => 0.5 * (1.0 - (TAU * t / tau).cos()),
        }
    }
}

#[derive(Debug, Clone)]
pub struct CzSchedule {
    pub model: TwoTransmonModel,
    pub shape: RampShape,
    pub tau: f64,
    /// Mixing angle at the peak of the excursion.
    pub theta_peak: f64,
}

impl CzSchedule {
    pub fn omega2(&self, t: f64) -> f64 {
        let m = &self.model;
        let theta0 = m.mixing_angle(m.omega2_idle);
        m.omega2_at_angle(theta0 + (self.theta_peak - theta0) * self.shape.profile(t, self.tau))
    }

    /// Qubit-2 frequency at the peak, GHz.
    pub fn omega2_peak(&self) -> f64 {
        self.model.omega2_at_angle(self.theta_peak)
    }

    /// `2 pi int zeta dt` along the schedule, Simpson rule.
    pub fn conditional_phase(&self, panels: usize) -> Result<f64> {
        let n = 2 * panels.max(1);
        let h = self.tau / n as f64;
        let mut sum = 0.0;
        for k in 0..=n {
            let w = if k == 0 || k == n {
                1.0
            } else if k % 2 == 1 {
                4.0
            } else {
                2.0
            };
            sum += w * self.model.zz_rate(self.omega2(k as f64 * h))?;
        }
        Ok(TAU * sum * h / 3.0)
    }

    /// Finds the peak mixing angle giving a conditional phase of `pi`. The
    /// idle point must sit above the anticrossing and the search stops short
    /// of `theta = pi / 2`.
    pub fn calibrate(model: TwoTransmonModel, shape: RampShape, tau: f64) -> Result<Self> {
        if !(tau > 0.0) {
            return Err(GateError::InvalidParams("tau must be positive".into()));
        }
        if model.omega2_idle <= model.anticrossing_11_02() {
            return Err(GateError::InvalidParams("idle point must lie above the |11>-|02> anticrossing".into()));
        }
        let mut lo = model.mixing_angle(model.omega2_idle);
        let mut hi = 0.5 * PI * (1.0 - 1e-4);
        let phase_at = |theta: f64| CzSchedule { model, shape, tau, theta_peak: theta }.conditional_phase(200);
        if phase_at(hi)? < PI {
            return Err(GateError::InvalidParams(format!("tau = {tau} ns is too short to reach a pi phase")));
        }
        for _ in 0..50 {
            let mid = 0.5 * (lo + hi);
            if phase_at(mid)? > PI {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(CzSchedule { model, shape, tau, theta_peak: 0.5 * (lo + hi) })
    }

    pub fn time_dependent_h(&self) -> Result<TimeDependentH> {
        let base = self.model.hamiltonian(self.model.omega2_idle)?;
        let n2 = tensor(&[&Operator::identity(3), &number(3)])?;
        let sched = self.clone();
        let idle = self.model.omega2_idle;
        Ok(TimeDependentH::constant(base).with_drive(n2, move |t| ghz_to_angular(sched.omega2(t) - idle))?)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CzSimulation {
    pub report: GateReport,
    pub conditional_phase: f64,
    /// Largest population of the |02> branch seen while starting from |11>.
    pub max_leakage: f64,
    /// Population outside the computational branches at the end.
    pub final_leakage: f64,
    pub adiabatic: bool,
}

/// Simulates the nine-level two-transmon system along `schedule` with
/// slice propagators of length `dt`, tracking the |02> branch.
pub fn simulate_cz(schedule: &CzSchedule, dt: f64) -> Result<CzSimulation> {
    let h = schedule.time_dependent_h()?;
    let idx = schedule.model.branch_indices()?;
    let (_, idle_vecs) = eigh(&schedule.model.hamiltonian(schedule.model.omega2_idle)?);
    let steps = (schedule.tau / dt).ceil().max(1.0) as usize;
    let step = schedule.tau / steps as f64;
    let comp = [transmon_index(0, 0), transmon_index(0, 1), transmon_index(1, 0), transmon_index(1, 1)];
    let mut u = Operator::identity(9);
    let start11 = idle_vecs.column(idx[transmon_index(1, 1)]).into_owned();
    let mut max_leakage: f64 = 0.0;
    for s in 0..steps {
        let mid = (s as f64 + 0.5) * step;
        let hm = h.at(mid);
        u = &propagator(&hm, step)? * &u;
        let (_, vecs) = eigh(&hm);
        let branch02 = vecs.column(idx[transmon_index(0, 2)]);
        let psi = u.matrix() * &start11;
        max_leakage = max_leakage.max(branch02.dotc(&psi).norm_sqr());
    }
    let block = CMatrix::from_fn(4, 4, |r, c| {
        let vr = idle_vecs.column(idx[comp[r]]);
        let vc = idle_vecs.column(idx[comp[c]]);
        vr.dotc(&(u.matrix() * vc))
    });
    let block = Operator::new(block)?;
    let final_leakage =
        (0..4).map(|c| 1.0 - (0..4).map(|r| block.get(r, c).norm_sqr()).sum::<f64>()).fold(0.0_f64, f64::max);
    let phase = conditional_phase(&block);
    let stripped = strip_local_phases(&block);
    let report = GateReport::new(stripped, cz())?;
    Ok(CzSimulation {
        report,
        conditional_phase: phase,
        max_leakage,
        final_leakage,
        adiabatic: max_leakage < ADIABATIC_LEAKAGE,
    })
}

/// Cross-resonance drive on qubit 1 of a coupled pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CRParams {
    pub qubits: TwoQubitParams,
    /// Drive amplitude on the control qubit, GHz.
    pub epsilon_q: f64,
}

impl CRParams {
    pub fn validate(&self) -> Result<()> {
        self.qubits.validate()?;
        let delta = self.qubits.detuning();
        if delta.abs() < DISPERSIVE_RATIO * self.qubits.j {
            return Err(GateError::NotDispersive { detuning: delta.abs(), coupling: self.qubits.j });
        }
        Ok(())
    }

    /// `Omega_CR = eps_q J / Delta_qq`, GHz.
    pub fn omega_cr(&self) -> f64 {
        self.epsilon_q * self.qubits.j / self.qubits.detuning()
    }
}

/// `CR(theta) = exp(-i theta Z (x) X / 2)`: target rotated by `+theta` about
/// x for control |0> and `-theta` for control |1>.
pub fn cr_matrix(theta: f64) -> Operator {
    let (s, co) = (theta / 2.0).sin_cos();
    let mut m = CMatrix::zeros(4, 4);
    for (block, sign) in [(0usize, 1.0), (2, -1.0)] {
        m[(block, block)] = Complex64::new(co, 0.0);
        m[(block + 1, block + 1)] = Complex64::new(co, 0.0);
        m[(block, block + 1)] = Complex64::new(0.0, -sign * s);
        m[(block + 1, block)] = Complex64::new(0.0, -sign * s);
    }
    Operator::new(m).expect("square")
}

/// Effective cross-resonance coefficients in GHz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrCoefficients {
    pub ix: f64,
    pub zx: f64,
}

/// Drive terms with the control's second level included:
/// `IX = eps J / (Delta + alpha_1)`, `ZX = alpha_1 Omega_CR / (Delta + alpha_1)`.
pub fn cr_effective_3level(p: &CRParams) -> Result<CrCoefficients> {
    p.validate()?;
    let alpha = p.qubits.alpha1.ok_or_else(|| GateError::InvalidParams("alpha_1 is required".into()))?;
    let delta = p.qubits.detuning();
    let denom = delta + alpha;
    if denom.abs() < 1e-9 * (1.0 + delta.abs() + alpha.abs()) {
        return Err(GateError::Pole(denom));
    }
    Ok(CrCoefficients { ix: p.epsilon_q * p.qubits.j / denom, zx: alpha * p.omega_cr() / denom })
}

/// Cross-resonance gate over `tau` ns. The ideal rotation angle is
/// `theta = Omega_CR tau` (angular), so `Omega_CR tau = pi / 2` is CR(pi/2).
/// With `alpha1` set, the propagator uses the three-level coefficients and
/// the report measures the error against the ideal ZX rotation.
pub fn cr_gate(p: &CRParams, tau: f64) -> Result<GateReport> {
    p.validate()?;
    let w = ghz_to_angular;
    let coeffs = match p.qubits.alpha1 {
        Some(_) => cr_effective_3level(p)?,
        None => CrCoefficients { ix: 0.0, zx: p.omega_cr() },
    };
    let zx = tensor(&[&pauli_z(), &pauli_x()])?;
    let ix = tensor(&[&Operator::identity(2), &pauli_x()])?;
    let h = &zx.scale_real(w(coeffs.zx) / 2.0) + &ix.scale_real(w(coeffs.ix) / 2.0);
    let u = matrix_exp(&h.scale(-I * tau))?;
    GateReport::new(u, cr_matrix(w(p.omega_cr()) * tau))
}

/// `(R_z(-pi/2) (x) R_x(-pi/2)) CR(pi/2)`, equal to CNOT up to a global phase.
pub fn cnot_from_cr() -> Operator {
    let local =
        tensor(&[&rotation_operator(Axis::Z, -PI / 2.0), &rotation_operator(Axis::X, -PI / 2.0)]).expect("nonempty");
    &local * &cr_matrix(PI / 2.0)
}

/// `(I (x) H) CZ (I (x) H)`.
pub fn cnot_from_cz() -> Operator {
    let ih = tensor(&[&Operator::identity(2), &crate::qcore::hadamard()]).expect("nonempty");
    &(&ih * &cz()) * &ih
}

/// Projector onto the computational states of two three-level systems.
pub fn computational_projector_9() -> Operator {
    [(0, 0), (0, 1), (1, 0), (1, 1)].iter().fold(Operator::zeros(9), |acc, &(a, b)| {
        let k = transmon_index(a, b);
        &acc + &ket_bra(9, k, k)
    })
}
