//! Closed- and open-system time evolution: Lindblad integration with
//! time-dependent Hamiltonians, piecewise-constant propagators, the rotating
//! frame and standard collapse operators.
//!
//! Hamiltonians are in rad/ns, times in ns, collapse operators in 1/sqrt(ns).

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::qcore::{
    annihilation, eigh, embed, ket_bra, pauli_z, propagator, CMatrix, DensityMatrix, Operator, QcoreError, StateVector,
};

/// Trace drift above which an integration is rejected.
pub const TRACE_FAILURE: f64 = 1e-4;
/// Unitarity drift above which a propagator product is rejected.
pub const UNITARITY_FAILURE: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("operator dimension {got} does not match the system dimension {expected}")]
    Dimension { expected: usize, got: usize },
    #[error("output times must be finite and non-decreasing")]
    BadTimes,
    #[error("time step must be positive and finite, got {0}")]
    BadStep(f64),
    #[error("collapse operator has non-finite entries")]
    NonFiniteCollapse,
    #[error("integration failed at t = {t} ns: trace drift {drift:e}; retry with dt <= {suggested_dt}")]
    TraceDrift { t: f64, drift: f64, suggested_dt: f64 },
    #[error("integration failed at t = {t} ns: state is no longer finite; retry with dt <= {suggested_dt}")]
    Diverged { t: f64, suggested_dt: f64 },
    #[error("propagator lost unitarity ({0:e})")]
    Unitarity(f64),
    #[error(transparent)]
    Linear(#[from] QcoreError),
}

pub type Result<T> = std::result::Result<T, DynamicsError>;

/// A Lindblad operator; its normalization carries the rate.
#[derive(Debug, Clone, PartialEq)]
pub struct CollapseOp(Operator);

impl CollapseOp {
    pub fn new(op: Operator) -> Result<Self> {
        if !op.is_finite() {
            return Err(DynamicsError::NonFiniteCollapse);
        }
        Ok(Self(op))
    }

    /// `sqrt(gamma) |0><1|` for a qubit of `levels` levels (1/ns).
    /// With more than two levels the ladder `sqrt(gamma) b` is used instead.
    pub fn relaxation(gamma: f64, levels: usize) -> Result<Self> {
        let op = if levels == 2 { ket_bra(2, 0, 1) } else { annihilation(levels) };
        Self::new(op.scale_real(gamma.sqrt()))
    }

    /// `sqrt(gamma_phi / 2) sigma_z`, giving coherence decay at `gamma_phi`.
    pub fn dephasing(gamma_phi: f64) -> Result<Self> {
        Self::new(pauli_z().scale_real((0.5 * gamma_phi).sqrt()))
    }

    /// Resonator loss written as `sqrt(kappa / 2 pi) a`, taking `kappa` exactly
    /// as it appears in that expression. The photon number then decays at
    /// `kappa / 2 pi` per ns; see [`printed_kappa`] for converting a linewidth.
    pub fn resonator_decay(kappa: f64, levels: usize) -> Result<Self> {
        Self::new(annihilation(levels).scale_real((kappa / TAU).sqrt()))
    }

    /// Resonator loss for a linewidth in GHz: photon decay rate `2 pi kappa`.
    pub fn resonator_linewidth(kappa_ghz: f64, levels: usize) -> Result<Self> {
        Self::resonator_decay(printed_kappa(kappa_ghz), levels)
    }

    /// Places the operator on `site` of a product space.
    pub fn embedded(&self, site: usize, dims: &[usize]) -> Result<Self> {
        Ok(Self(embed(&self.0, site, dims)?))
    }

    pub fn op(&self) -> &Operator {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }
}

/// Value of `kappa` to feed into `sqrt(kappa / 2 pi) a` so that photons decay
/// at the angular linewidth `2 pi kappa_ghz` per ns.
pub fn printed_kappa(kappa_ghz: f64) -> f64 {
    TAU * TAU * kappa_ghz
}

pub type Envelope = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub struct DriveTerm {
    pub op: Operator,
    pub envelope: Envelope,
}

impl fmt::Debug for DriveTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DriveTerm").field("op", &self.op).finish_non_exhaustive()
    }
}

/// `H(t) = H_0 + sum_k u_k(t) H_k`.
#[derive(Debug, Clone)]
pub struct TimeDependentH {
    static_part: Operator,
    drives: Vec<DriveTerm>,
}

impl TimeDependentH {
    pub fn constant(h: Operator) -> Self {
        Self { static_part: h, drives: Vec::new() }
    }

    pub fn with_drive(mut self, op: Operator, envelope: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Result<Self> {
        if op.dim() != self.dim() {
            return Err(DynamicsError::Dimension { expected: self.dim(), got: op.dim() });
        }
        self.drives.push(DriveTerm { op, envelope: Arc::new(envelope) });
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.static_part.dim()
    }

    pub fn static_part(&self) -> &Operator {
        &self.static_part
    }

    pub fn drives(&self) -> &[DriveTerm] {
        &self.drives
    }

    pub fn is_static(&self) -> bool {
        self.drives.is_empty()
    }

    pub fn at(&self, t: f64) -> Operator {
        let mut m = self.static_part.matrix().clone();
        for d in &self.drives {
            let u = (d.envelope)(t);
            if u != 0.0 {
                m += d.op.matrix() * Complex64::new(u, 0.0);
            }
        }
        Operator::new(m).expect("square by construction")
    }
}

impl From<Operator> for TimeDependentH {
    fn from(h: Operator) -> Self {
        Self::constant(h)
    }
}

/// Named observable recorded along a trajectory.
#[derive(Debug, Clone)]
pub struct Observable {
    pub name: String,
    pub op: Operator,
}

impl Observable {
    pub fn new(name: impl Into<String>, op: Operator) -> Self {
        Self { name: name.into(), op }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EvolveResult {
    pub times: Vec<f64>,
    #[serde(skip)]
    pub states: Vec<DensityMatrix>,
    pub expectations: BTreeMap<String, Vec<f64>>,
    /// Largest `|tr rho - 1|` seen at the output times.
    pub max_trace_drift: f64,
    /// Smallest eigenvalue seen at the output times.
    pub min_eigenvalue: f64,
}

impl EvolveResult {
    fn new(observables: &[Observable]) -> Self {
        Self {
            times: Vec::new(),
            states: Vec::new(),
            expectations: observables.iter().map(|o| (o.name.clone(), Vec::new())).collect(),
            max_trace_drift: 0.0,
            min_eigenvalue: f64::INFINITY,
        }
    }

    fn record(&mut self, t: f64, rho: CMatrix, observables: &[Observable]) {
        let state = DensityMatrix::new_unchecked(rho);
        self.max_trace_drift = self.max_trace_drift.max((state.trace() - 1.0).norm());
        self.min_eigenvalue = self.min_eigenvalue.min(state.min_eigenvalue());
        for o in observables {
            self.expectations.get_mut(&o.name).expect("observable registered").push(state.expect(&o.op));
        }
        self.times.push(t);
        self.states.push(state);
    }

    pub fn series(&self, name: &str) -> Option<&[f64]> {
        self.expectations.get(name).map(Vec::as_slice)
    }

    pub fn last(&self) -> Option<&DensityMatrix> {
        self.states.last()
    }
}

fn check_times(times: &[f64], dt: f64) -> Result<()> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(DynamicsError::BadStep(dt));
    }
    if times.iter().any(|t| !t.is_finite()) || times.windows(2).any(|w| w[1] < w[0]) {
        return Err(DynamicsError::BadTimes);
    }
    Ok(())
}

/// Equal sub-steps covering `[t0, t1]` with none longer than `dt`.
fn substeps(t0: f64, t1: f64, dt: f64) -> (usize, f64) {
    let span = t1 - t0;
    if span <= 0.0 {
        return (0, 0.0);
    }
    let n = (span / dt - 1e-9).ceil().max(1.0) as usize;
    (n, span / n as f64)
}

struct Lindbladian {
    h: TimeDependentH,
    jumps: Vec<CMatrix>,
    jumps_dag: Vec<CMatrix>,
    /// `sum_k L_k^dag L_k / 2`.
    half_rate: CMatrix,
}

impl Lindbladian {
    fn new(h: &TimeDependentH, collapse: &[CollapseOp]) -> Result<Self> {
        let n = h.dim();
        let mut half_rate = CMatrix::zeros(n, n);
        let mut jumps = Vec::with_capacity(collapse.len());
        let mut jumps_dag = Vec::with_capacity(collapse.len());
        for c in collapse {
            if c.dim() != n {
                return Err(DynamicsError::Dimension { expected: n, got: c.dim() });
            }
            let l = c.op().matrix().clone();
            let ld = l.adjoint();
            half_rate += &ld * &l * Complex64::new(0.5, 0.0);
            jumps.push(l);
            jumps_dag.push(ld);
        }
        Ok(Self { h: h.clone(), jumps, jumps_dag, half_rate })
    }

    /// `d rho / dt = -i (H_eff rho - rho H_eff^dag) + sum_k L rho L^dag`
    /// with `H_eff = H - i sum L^dag L / 2`.
    fn rhs(&self, t: f64, rho: &CMatrix) -> CMatrix {
        let h = self.h.at(t);
        let minus_i = Complex64::new(0.0, -1.0);
        let heff = h.matrix() * minus_i - &self.half_rate;
        let left = &heff * rho;
        let mut out = &left + left.adjoint();
        for (l, ld) in self.jumps.iter().zip(&self.jumps_dag) {
            out += l * rho * ld;
        }
        out
    }

    fn step(&self, t: f64, h: f64, rho: &CMatrix) -> CMatrix {
        let half = Complex64::new(0.5 * h, 0.0);
        let full = Complex64::new(h, 0.0);
        let k1 = self.rhs(t, rho);
        let k2 = self.rhs(t + 0.5 * h, &(rho + &k1 * half));
        let k3 = self.rhs(t + 0.5 * h, &(rho + &k2 * half));
        let k4 = self.rhs(t + h, &(rho + &k3 * full));
        let mut next = rho + (k1 + (k2 + k3) * Complex64::new(2.0, 0.0) + k4) * Complex64::new(h / 6.0, 0.0);
        // Remove the anti-Hermitian rounding residue.
        next = (&next + next.adjoint()) * Complex64::new(0.5, 0.0);
        next
    }
}

/// Integrates the Lindblad master equation with fixed-step RK4, recording the
/// state at each of `times` (the first entry is the initial time).
pub fn lindblad_evolve(
    h: &TimeDependentH,
    rho0: &DensityMatrix,
    collapse: &[CollapseOp],
    times: &[f64],
    dt: f64,
    observables: &[Observable],
) -> Result<EvolveResult> {
    check_times(times, dt)?;
    let n = h.dim();
    if rho0.dim() != n {
        return Err(DynamicsError::Dimension { expected: n, got: rho0.dim() });
    }
    for o in observables {
        if o.op.dim() != n {
            return Err(DynamicsError::Dimension { expected: n, got: o.op.dim() });
        }
    }
    let lind = Lindbladian::new(h, collapse)?;
    let mut out = EvolveResult::new(observables);
    let Some(&t_start) = times.first() else {
        return Ok(out);
    };
    let mut rho = rho0.matrix().clone();
    out.record(t_start, rho.clone(), observables);
    for w in times.windows(2) {
        let (steps, step) = substeps(w[0], w[1], dt);
        for s in 0..steps {
            rho = lind.step(w[0] + s as f64 * step, step, &rho);
        }
        if rho.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(DynamicsError::Diverged { t: w[1], suggested_dt: 0.5 * dt });
        }
        let drift = (rho.trace() - Complex64::new(1.0, 0.0)).norm();
        if drift > TRACE_FAILURE {
            return Err(DynamicsError::TraceDrift { t: w[1], drift, suggested_dt: 0.5 * dt });
        }
        out.record(w[1], rho.clone(), observables);
    }
    Ok(out)
}

/// Initial condition for closed-system evolution.
#[derive(Debug, Clone)]
pub enum InitialState {
    Pure(StateVector),
    Mixed(DensityMatrix),
}

impl InitialState {
    fn dim(&self) -> usize {
        match self {
            Self::Pure(s) => s.dim(),
            Self::Mixed(r) => r.dim(),
        }
    }
}

impl From<StateVector> for InitialState {
    fn from(s: StateVector) -> Self {
        Self::Pure(s)
    }
}

impl From<DensityMatrix> for InitialState {
    fn from(r: DensityMatrix) -> Self {
        Self::Mixed(r)
    }
}

/// Time-ordered product of midpoint-sampled slice propagators over
/// `[t0, t1]`, with no slice longer than `dt`.
pub fn time_ordered_propagator(h: &TimeDependentH, t0: f64, t1: f64, dt: f64) -> Result<Operator> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(DynamicsError::BadStep(dt));
    }
    let (steps, step) = substeps(t0, t1, dt);
    let mut u = Operator::identity(h.dim());
    if h.is_static() && steps > 0 {
        let slice = propagator(h.static_part(), step)?;
        for _ in 0..steps {
            u = &slice * &u;
        }
    } else {
        for s in 0..steps {
            let mid = t0 + (s as f64 + 0.5) * step;
            u = &propagator(&h.at(mid), step)? * &u;
        }
    }
    let dev = u.unitary_deviation();
    if dev > UNITARITY_FAILURE {
        return Err(DynamicsError::Unitarity(dev));
    }
    Ok(u)
}

/// Closed-system evolution by a product of slice propagators.
pub fn unitary_evolve(
    h: &TimeDependentH,
    initial: impl Into<InitialState>,
    times: &[f64],
    dt: f64,
    observables: &[Observable],
) -> Result<EvolveResult> {
    check_times(times, dt)?;
    let initial = initial.into();
    let n = h.dim();
    if initial.dim() != n {
        return Err(DynamicsError::Dimension { expected: n, got: initial.dim() });
    }
    let mut out = EvolveResult::new(observables);
    let Some(&t_start) = times.first() else {
        return Ok(out);
    };
    let rho_of = |u: &Operator| -> CMatrix {
        match &initial {
            InitialState::Pure(s) => {
                let v = u.apply(s.amplitudes());
                &v * v.adjoint()
            }
            InitialState::Mixed(r) => u.matrix() * r.matrix() * u.matrix().adjoint(),
        }
    };
    let mut u = Operator::identity(n);
    out.record(t_start, rho_of(&u), observables);
    for w in times.windows(2) {
        u = &time_ordered_propagator(h, w[0], w[1], dt)? * &u;
        let dev = u.unitary_deviation();
        if dev > UNITARITY_FAILURE {
            return Err(DynamicsError::Unitarity(dev));
        }
        out.record(w[1], rho_of(&u), observables);
    }
    Ok(out)
}

/// `e^{i H0 t} (H - H0) e^{-i H0 t}`.
pub fn rotating_frame(h: &Operator, h0: &Operator, t: f64) -> Result<Operator> {
    rotating_frame_filtered(h, h0, t, f64::INFINITY)
}

/// Rotating-frame generator keeping only terms whose oscillation frequency
/// (rad/ns, in the eigenbasis of `h0`) is at most `cutoff`.
pub fn rotating_frame_filtered(h: &Operator, h0: &Operator, t: f64, cutoff: f64) -> Result<Operator> {
    if h.dim() != h0.dim() {
        return Err(DynamicsError::Dimension { expected: h0.dim(), got: h.dim() });
    }
    let (energies, v) = eigh(h0);
    let diff = (h - h0).into_matrix();
    let mut m = v.adjoint() * diff * &v;
    let n = energies.len();
    for j in 0..n {
        for k in 0..n {
            let w = energies[j] - energies[k];
            m[(j, k)] =
                if w.abs() > cutoff { Complex64::new(0.0, 0.0) } else { m[(j, k)] * Complex64::from_polar(1.0, w * t) };
        }
    }
    Ok(Operator::new(&v * m * v.adjoint())?)
}

/// Rotating-frame generator of a time-dependent Hamiltonian at time `t`.
pub fn rotating_frame_td(h: &TimeDependentH, h0: &Operator, t: f64, cutoff: f64) -> Result<Operator> {
    rotating_frame_filtered(&h.at(t), h0, t, cutoff)
}

/// Evenly spaced sample times `0, dt, ..., t_end`.
pub fn linspace(t_end: f64, samples: usize) -> Vec<f64> {
    match samples {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..samples).map(|k| t_end * k as f64 / (samples - 1) as f64).collect(),
    }
}
