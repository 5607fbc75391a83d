//! Pulse engineering: envelopes and their spectra, DRAG, transfer-function
//! pre-distortion, GRAPE, and refocusing sequences with filter functions.
//!
//! Drive quadratures and anharmonicities here are angular (rad/ns), so a
//! pi pulse has `int Omega_x dt = pi`. CSV files store `Omega / 2 pi` in GHz.

use std::f64::consts::{PI, TAU};
use std::io::{Read, Write};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::qcore::{eigh, embed, pauli, rotation_operator, Axis, CMatrix, Operator, QcoreError, ONE, ZERO};

/// Points in the `phi_2` scan of the free level phase.
pub const PHASE_GRID: usize = 64;
/// Iterations without improvement before GRAPE reports stagnation.
pub const STAGNATION_WINDOW: usize = 50;
/// Maximum backtracking halvings per GRAPE iteration.
const MAX_HALVINGS: usize = 40;

#[derive(Debug, Error)]
pub enum ControlError {
    #[error("invalid pulse: {0}")]
    InvalidPulse(String),
    #[error("anharmonicity must be nonzero")]
    ZeroAnharmonicity,
    #[error("sample spacing {dt} ns exceeds tau_rc / 2 = {limit} ns")]
    Sampling { dt: f64, limit: f64 },
    #[error("propagator changed by {change} on halving dt = {dt} ns")]
    NotConverged { dt: f64, change: f64 },
    #[error("invalid GRAPE problem: {0}")]
    InvalidProblem(String),
    #[error("invalid sequence: {0}")]
    InvalidSequence(String),
    #[error("pulse CSV: {0}")]
    Csv(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Linear(#[from] QcoreError),
}

impl From<csv::Error> for ControlError {
    fn from(e: csv::Error) -> Self {
        Self::Csv(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, ControlError>;

/// Envelope shape. Amplitudes are applied separately.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum EnvelopeKind {
    Square,
    /// Gaussian centred in the window, truncated at `+-window * sigma` from
    /// the centre with the endpoint value subtracted.
    Gaussian {
        sigma: f64,
        window: f64,
    },
    /// `(1 - cos(2 pi t / tau)) / 2`.
    Cosine,
    /// Equal-width slices, `(Omega_x, Omega_y)` per slice in rad/ns.
    Piecewise {
        slices: Vec<(f64, f64)>,
    },
}

impl EnvelopeKind {
    /// Gaussian truncated at `+-2 sigma`, filling the pulse with `sigma = tau / 4`.
    pub fn gaussian_for(duration: f64) -> Self {
        Self::Gaussian { sigma: duration / 4.0, window: 2.0 }
    }

    fn shape(&self, t: f64, duration: f64) -> (f64, f64) {
        match self {
            Self::Square => (1.0, 0.0),
            Self::Gaussian { sigma, window } => {
                let x = t - 0.5 * duration;
                let edge = (-0.5 * window * window).exp();
                if x.abs() > window * sigma {
                    (0.0, 0.0)
                } else {
                    ((-0.5 * (x / sigma).powi(2)).exp() - edge, 0.0)
                }
            }
            Self::Cosine => (0.5 * (1.0 - (TAU * t / duration).cos()), 0.0),
            Self::Piecewise { slices } => {
                let n = slices.len();
                let k = ((t / duration * n as f64).floor() as usize).min(n - 1);
                slices[k]
            }
        }
    }
}

/// Sampled two-quadrature envelope, values at slice midpoints `(k + 1/2) dt`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseEnvelope {
    pub kind: EnvelopeKind,
    pub duration: f64,
    /// Peak scale applied to the shape, rad/ns.
    pub amplitude: f64,
    pub dt: f64,
    /// Set when `omega_y` is the DRAG quadrature for this anharmonicity.
    pub drag_alpha: Option<f64>,
    pub omega_x: Vec<f64>,
    pub omega_y: Vec<f64>,
}

/// Samples `kind` over `duration` ns with spacing close to `dt`.
pub fn make_envelope(kind: EnvelopeKind, duration: f64, amplitude: f64, dt: f64) -> Result<PulseEnvelope> {
    if !(duration > 0.0) || !(dt > 0.0) || dt > duration {
        return Err(ControlError::InvalidPulse(format!("duration {duration} ns, dt {dt} ns")));
    }
    match &kind {
        EnvelopeKind::Gaussian { sigma, window } if !(*sigma > 0.0 && *window > 0.0) => {
            return Err(ControlError::InvalidPulse("gaussian needs sigma > 0 and window > 0".into()));
        }
        EnvelopeKind::Piecewise { slices } if slices.is_empty() => {
            return Err(ControlError::InvalidPulse("piecewise envelope without slices".into()));
        }
        _ => {}
    }
    let mut n = (duration / dt).round().max(1.0) as usize;
    if let EnvelopeKind::Piecewise { slices } = &kind {
        // Keep slice boundaries on sample boundaries.
        let per = (n as f64 / slices.len() as f64).ceil().max(1.0) as usize;
        n = per * slices.len();
    }
    let dt = duration / n as f64;
    let (mut ox, mut oy) = (Vec::with_capacity(n), Vec::with_capacity(n));
    for k in 0..n {
        let (x, y) = kind.shape((k as f64 + 0.5) * dt, duration);
        ox.push(amplitude * x);
        oy.push(amplitude * y);
    }
    Ok(PulseEnvelope { kind, duration, amplitude, dt, drag_alpha: None, omega_x: ox, omega_y: oy })
}

/// Envelope scaled so that `sum Omega_x dt = theta`.
pub fn rotation_pulse(kind: EnvelopeKind, duration: f64, theta: f64, dt: f64) -> Result<PulseEnvelope> {
    let unit = make_envelope(kind.clone(), duration, 1.0, dt)?;
    let area = unit.area_x();
    if area.abs() < 1e-15 {
        return Err(ControlError::InvalidPulse("envelope has zero area".into()));
    }
    let mut p = make_envelope(kind, duration, theta / area, dt)?;
    p.amplitude = theta / area;
    Ok(p)
}

pub fn pi_pulse(kind: EnvelopeKind, duration: f64, dt: f64) -> Result<PulseEnvelope> {
    rotation_pulse(kind, duration, PI, dt)
}

impl PulseEnvelope {
    pub fn len(&self) -> usize {
        self.omega_x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omega_x.is_empty()
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.len()).map(|k| (k as f64 + 0.5) * self.dt).collect()
    }

    pub fn area_x(&self) -> f64 {
        self.omega_x.iter().sum::<f64>() * self.dt
    }

    pub fn max_abs_y(&self) -> f64 {
        self.omega_y.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_abs_x(&self) -> f64 {
        self.omega_x.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Same envelope sampled at a new spacing.
    pub fn resampled(&self, dt: f64) -> Result<Self> {
        let mut p = make_envelope(self.kind.clone(), self.duration, self.amplitude, dt)?;
        if let Some(alpha) = self.drag_alpha {
            p = drag_envelope(&p, alpha)?;
        }
        Ok(p)
    }

    /// Complex baseband `Omega_x - i Omega_y`.
    pub fn baseband(&self) -> Vec<Complex64> {
        self.omega_x.iter().zip(&self.omega_y).map(|(&x, &y)| Complex64::new(x, -y)).collect()
    }
}

/// Sampled derivative with central differences, one-sided at the ends.
pub fn sampled_derivative(values: &[f64], dt: f64) -> Vec<f64> {
    let n = values.len();
    if n < 2 {
        return vec![0.0; n];
    }
    (0..n)
        .map(|k| match k {
            0 => (values[1] - values[0]) / dt,
            k if k == n - 1 => (values[n - 1] - values[n - 2]) / dt,
            k => (values[k + 1] - values[k - 1]) / (2.0 * dt),
        })
        .collect()
}

/// DRAG: `Omega_y = -dOmega_x/dt / alpha` with `alpha` in rad/ns.
pub fn drag_envelope(base: &PulseEnvelope, alpha: f64) -> Result<PulseEnvelope> {
    if alpha == 0.0 || !alpha.is_finite() {
        return Err(ControlError::ZeroAnharmonicity);
    }
    if base.drag_alpha.is_none() && base.omega_y.iter().any(|&y| y != 0.0) {
        return Err(ControlError::InvalidPulse("DRAG base must have Omega_y = 0".into()));
    }
    let mut p = base.clone();
    p.omega_y = sampled_derivative(&base.omega_x, base.dt).into_iter().map(|d| -d / alpha).collect();
    p.drag_alpha = Some(alpha);
    Ok(p)
}

/// Baseband magnitude spectrum. `freqs` are in GHz, ascending.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Spectrum {
    pub freqs: Vec<f64>,
    pub magnitude: Vec<f64>,
}

impl Spectrum {
    /// Full width where the magnitude stays above `peak / sqrt 2`.
    pub fn width_3db(&self) -> f64 {
        let peak = self.magnitude.iter().cloned().fold(0.0, f64::max);
        let level = peak / 2.0_f64.sqrt();
        let above: Vec<f64> =
            self.freqs.iter().zip(&self.magnitude).filter(|(_, &m)| m >= level).map(|(&f, _)| f).collect();
        match (above.first(), above.last()) {
            (Some(a), Some(b)) => b - a,
            _ => 0.0,
        }
    }

    pub fn at(&self, f: f64) -> f64 {
        let k = self
            .freqs
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - f).abs().total_cmp(&(b.1 - f).abs()))
            .map(|(k, _)| k)
            .unwrap_or(0);
        self.magnitude[k]
    }
}

/// Zero-padded FFT of `Omega_x - i Omega_y` with `npoints` bins, scaled by `dt`
/// so it approximates the continuous transform.
pub fn spectrum_of(p: &PulseEnvelope, npoints: usize) -> Spectrum {
    let n = npoints.max(p.len());
    let mut buf = p.baseband();
    buf.resize(n, ZERO);
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let df = 1.0 / (n as f64 * p.dt);
    let half = n / 2;
    let mut freqs = Vec::with_capacity(n);
    let mut magnitude = Vec::with_capacity(n);
    for i in 0..n {
        let k = (i + n - half) % n;
        let f = if k >= n - half { k as f64 - n as f64 } else { k as f64 };
        freqs.push(f * df);
        magnitude.push(buf[k].norm() * p.dt);
    }
    Spectrum { freqs, magnitude }
}

/// Baseband transform `dt sum z_k exp(-2 pi i f t_k)` at one frequency (GHz).
pub fn magnitude_at(p: &PulseEnvelope, f: f64) -> f64 {
    let w = TAU * f;
    p.baseband().iter().zip(p.times()).map(|(z, t)| z * Complex64::from_polar(1.0, -w * t)).sum::<Complex64>().norm()
        * p.dt
}

/// Three-level drive operators `(X_3, Y_3)` with `lambda` weighting the 1-2
/// transition, each carrying the factor `1/2`.
pub fn three_level_drives(lambda: f64) -> (Operator, Operator) {
    let h = |v: f64| Complex64::new(v / 2.0, 0.0);
    let i = |v: f64| Complex64::new(0.0, v / 2.0);
    let x = Operator::from_complex(3, &[ZERO, h(1.0), ZERO, h(1.0), ZERO, h(lambda), ZERO, h(lambda), ZERO]);
    let y = Operator::from_complex(3, &[ZERO, i(-1.0), ZERO, i(1.0), ZERO, i(-lambda), ZERO, i(lambda), ZERO]);
    (x, y)
}

/// `diag(0, 0, alpha)` in the frame rotating at the qubit frequency.
pub fn transmon_drift(alpha: f64) -> Operator {
    Operator::diagonal_real(&[0.0, 0.0, alpha])
}

#[derive(Debug, Clone)]
pub struct LeakageReport {
    pub propagator: Operator,
    /// `max_k |<2|U|k>|^2` over computational `k`.
    pub leakage: f64,
}

fn slice_product(h0: &Operator, controls: &[Operator], amps: &[Vec<f64>], dt: f64) -> Result<Operator> {
    let n = amps.first().map_or(0, Vec::len);
    let mut u = Operator::identity(h0.dim());
    for j in 0..n {
        let mut h = h0.matrix().clone();
        for (op, a) in controls.iter().zip(amps) {
            h += op.matrix() * Complex64::new(a[j], 0.0);
        }
        u = &crate::qcore::propagator(&Operator::new(h)?, dt)? * &u;
    }
    Ok(u)
}

fn leakage_once(p: &PulseEnvelope, alpha: f64, lambda: f64) -> Result<LeakageReport> {
    let (x, y) = three_level_drives(lambda);
    let u = slice_product(&transmon_drift(alpha), &[x, y], &[p.omega_x.clone(), p.omega_y.clone()], p.dt)?;
    let leakage = u.get(2, 0).norm_sqr().max(u.get(2, 1).norm_sqr());
    Ok(LeakageReport { propagator: u, leakage })
}

/// Time-ordered evolution of a three-level transmon under `p`. The result is
/// checked against the same envelope at half the sample spacing.
pub fn leakage_simulate(p: &PulseEnvelope, alpha: f64, lambda: f64) -> Result<LeakageReport> {
    let coarse = leakage_once(p, alpha, lambda)?;
    let fine = leakage_once(&p.resampled(0.5 * p.dt)?, alpha, lambda)?;
    let change = coarse.propagator.max_diff(&fine.propagator);
    if change > 1e-3 && !matches!(p.kind, EnvelopeKind::Piecewise { .. }) {
        return Err(ControlError::NotConverged { dt: p.dt, change });
    }
    Ok(fine)
}

/// First-order low-pass response, exact for piecewise-constant input:
/// `y_k = y_{k-1} + (x_k - y_{k-1}) (1 - exp(-dt / tau_rc))`, sampled at the
/// end of each slice.
pub fn apply_distortion(p: &PulseEnvelope, tau_rc: f64) -> Result<PulseEnvelope> {
    let a = filter_gain(p.dt, tau_rc)?;
    let run = |x: &[f64]| {
        let mut y = 0.0;
        x.iter()
            .map(|&v| {
                y += (v - y) * a;
                y
            })
            .collect::<Vec<_>>()
    };
    let mut out = p.clone();
    out.omega_x = run(&p.omega_x);
    out.omega_y = run(&p.omega_y);
    Ok(out)
}

/// Inverse of `apply_distortion`: overshoot at rising edges, undershoot at
/// falling ones.
pub fn predistort(p: &PulseEnvelope, tau_rc: f64) -> Result<PulseEnvelope> {
    let a = filter_gain(p.dt, tau_rc)?;
    let inv = |y: &[f64]| {
        let mut prev = 0.0;
        y.iter()
            .map(|&v| {
                let x = prev + (v - prev) / a;
                prev = v;
                x
            })
            .collect::<Vec<_>>()
    };
    let mut out = p.clone();
    out.omega_x = inv(&p.omega_x);
    out.omega_y = inv(&p.omega_y);
    Ok(out)
}

fn filter_gain(dt: f64, tau_rc: f64) -> Result<f64> {
    if !(tau_rc > 0.0) {
        return Err(ControlError::InvalidPulse("tau_rc must be positive".into()));
    }
    if dt > 0.5 * tau_rc {
        return Err(ControlError::Sampling { dt, limit: 0.5 * tau_rc });
    }
    Ok(1.0 - (-dt / tau_rc).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Convergence {
    pub target_infidelity: f64,
    pub max_iterations: usize,
    /// Base gradient step.
    pub step: f64,
}

impl Default for Convergence {
    fn default() -> Self {
        Self { target_infidelity: 1e-5, max_iterations: 3000, step: 0.5 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GradientMode {
    /// Exact derivative of each slice exponential.
    Exact,
    /// `dU_j / du ~ -i dt H_k U_j`, valid for small `dt`.
    FirstOrder,
}

#[derive(Debug, Clone)]
pub struct GrapeProblem {
    pub h0: Operator,
    pub controls: Vec<Operator>,
    pub n_slices: usize,
    pub dt: f64,
    /// Symmetric amplitude bound `|u_k(j)| <= b`.
    pub bound: Option<f64>,
    pub target: Operator,
    /// Level whose target phase is free and scanned over `PHASE_GRID` points.
    pub free_phase_level: Option<usize>,
    /// Initial amplitudes, one row per control.
    pub initial: Vec<Vec<f64>>,
    pub convergence: Convergence,
    pub gradient: GradientMode,
}

impl GrapeProblem {
    pub fn validate(&self) -> Result<()> {
        let d = self.h0.dim();
        let bad = |m: &str| Err(ControlError::InvalidProblem(m.into()));
        if self.n_slices == 0 || !(self.dt > 0.0) {
            return bad("need N >= 1 and dt > 0");
        }
        if self.controls.is_empty() || self.controls.iter().any(|c| c.dim() != d) || self.target.dim() != d {
            return bad("operator dimensions disagree");
        }
        if self.initial.len() != self.controls.len() || self.initial.iter().any(|r| r.len() != self.n_slices) {
            return bad("initial amplitudes must be K x N");
        }
        if let Some(b) = self.bound {
            if !(b > 0.0) {
                return bad("amplitude bound must be positive");
            }
        }
        if self.free_phase_level.is_some_and(|l| l >= d) {
            return bad("free phase level outside the space");
        }
        Ok(())
    }

    pub fn total_time(&self) -> f64 {
        self.n_slices as f64 * self.dt
    }

    fn clip(&self, u: f64) -> f64 {
        match self.bound {
            Some(b) => u.clamp(-b, b),
            None => u,
        }
    }
}

/// Three-level transmon X-gate problem: drift `diag(0, 0, alpha)`, controls
/// `Omega_x X_3`, `Omega_y Y_3`, free `|2>` phase, Gaussian-like initial X
/// quadrature of area `pi` and zero Y quadrature.
pub fn transmon_x_problem(alpha: f64, lambda: f64, n_slices: usize, dt: f64, bound: Option<f64>) -> GrapeProblem {
    let (x, y) = three_level_drives(lambda);
    let target = Operator::from_complex(3, &[ZERO, ONE, ZERO, ONE, ZERO, ZERO, ZERO, ZERO, ONE]);
    let n = n_slices.max(1);
    let total = n as f64 * dt;
    let shape: Vec<f64> = (0..n)
        .map(|j| {
            let t = (j as f64 + 0.5) * dt - 0.5 * total;
            (-0.5 * (t / (0.25 * total)).powi(2)).exp()
        })
        .collect();
    let area: f64 = shape.iter().sum::<f64>() * dt;
    let mut gx: Vec<f64> = shape.iter().map(|s| s * PI / area).collect();
    if let Some(b) = bound {
        gx.iter_mut().for_each(|v| *v = v.clamp(-b, b));
    }
    GrapeProblem {
        h0: transmon_drift(alpha),
        controls: vec![x, y],
        n_slices: n,
        dt,
        bound,
        target,
        free_phase_level: Some(2),
        initial: vec![gx, vec![0.0; n]],
        convergence: Convergence::default(),
        gradient: GradientMode::Exact,
    }
}

struct SliceData {
    u: CMatrix,
    vecs: CMatrix,
    vals: Vec<f64>,
}

fn slice_data(p: &GrapeProblem, amps: &[Vec<f64>], j: usize) -> Result<SliceData> {
    let mut h = p.h0.matrix().clone();
    for (op, a) in p.controls.iter().zip(amps) {
        h += op.matrix() * Complex64::new(a[j], 0.0);
    }
    let h = Operator::new(h)?;
    let (vals, vecs) = eigh(&h);
    let phases = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        vals.len(),
        vals.iter().map(|&l| Complex64::from_polar(1.0, -l * p.dt)),
    ));
    let u = &vecs * phases * vecs.adjoint();
    Ok(SliceData { u, vecs, vals })
}

/// Derivative of `exp(-i dt H)` along `dir`.
fn exp_derivative(s: &SliceData, dir: &Operator, dt: f64) -> CMatrix {
    let n = s.vals.len();
    let local = s.vecs.adjoint() * dir.matrix() * &s.vecs;
    let g = CMatrix::from_fn(n, n, |a, b| {
        let (la, lb) = (s.vals[a], s.vals[b]);
        let ea = Complex64::from_polar(1.0, -la * dt);
        if (la - lb).abs() * dt < 1e-8 {
            Complex64::new(0.0, -dt) * ea
        } else {
            (ea - Complex64::from_polar(1.0, -lb * dt)) / (la - lb)
        }
    });
    &s.vecs * local.component_mul(&g) * s.vecs.adjoint()
}

fn target_with_phase(t: &Operator, level: Option<usize>, phi: f64) -> Operator {
    match level {
        None => t.clone(),
        Some(l) => {
            let ph = Complex64::from_polar(1.0, phi);
            Operator::from_fn(t.dim(), |r, c| if c == l { t.get(r, c) * ph } else { t.get(r, c) })
        }
    }
}

/// Fidelity `|tr(T^dag U)|^2 / d^2`, maximized over the `phi_2` grid when
/// the problem has a free level. Returns the fidelity and the chosen phase.
pub fn grid_fidelity(p: &GrapeProblem, u: &Operator) -> (f64, f64) {
    let d = u.dim() as f64;
    let Some(l) = p.free_phase_level else {
        let g = (p.target.dagger() * u.clone()).trace();
        return (g.norm_sqr() / (d * d), 0.0);
    };
    let (mut a, mut b) = (ZERO, ZERO);
    for r in 0..u.dim() {
        for c in 0..u.dim() {
            let term = p.target.get(r, c).conj() * u.get(r, c);
            if c == l {
                b += term;
            } else {
                a += term;
            }
        }
    }
    (0..PHASE_GRID)
        .map(|k| {
            let phi = TAU * k as f64 / PHASE_GRID as f64;
            ((a + Complex64::from_polar(1.0, -phi) * b).norm_sqr() / (d * d), phi)
        })
        .fold((f64::NEG_INFINITY, 0.0), |best, x| if x.0 > best.0 { x } else { best })
}

/// Fidelity and its gradient against the target at fixed `phi`.
pub fn fidelity_gradient(p: &GrapeProblem, amps: &[Vec<f64>], phi: f64) -> Result<(f64, Vec<Vec<f64>>)> {
    let n = p.n_slices;
    let d = p.h0.dim();
    let target = target_with_phase(&p.target, p.free_phase_level, phi);
    let slices: Vec<SliceData> = (0..n).map(|j| slice_data(p, amps, j)).collect::<Result<_>>()?;
    // forward[j] = U_j ... U_1 (forward[0] = I), backward[j] = T^dag U_N ... U_{j+1}.
    let mut forward = Vec::with_capacity(n + 1);
    forward.push(CMatrix::identity(d, d));
    for s in &slices {
        let next = &s.u * forward.last().expect("seeded");
        forward.push(next);
    }
    let mut backward = vec![CMatrix::zeros(d, d); n];
    let mut acc = target.matrix().adjoint();
    for j in (0..n).rev() {
        backward[j] = acc.clone();
        acc = &acc * &slices[j].u;
    }
    let overlap = (target.matrix().adjoint() * &forward[n]).trace();
    let norm = (d * d) as f64;
    let fid = overlap.norm_sqr() / norm;
    let mut grad = vec![vec![0.0; n]; p.controls.len()];
    for j in 0..n {
        for (k, op) in p.controls.iter().enumerate() {
            let du = match p.gradient {
                GradientMode::Exact => exp_derivative(&slices[j], op, p.dt),
                GradientMode::FirstOrder => op.matrix() * &slices[j].u * Complex64::new(0.0, -p.dt),
            };
            let dg = (&backward[j] * du * &forward[j]).trace();
            grad[k][j] = 2.0 * (overlap.conj() * dg).re / norm;
        }
    }
    Ok((fid, grad))
}

pub fn grape_propagator(p: &GrapeProblem, amps: &[Vec<f64>]) -> Result<Operator> {
    slice_product(&p.h0, &p.controls, amps, p.dt)
}

#[derive(Debug, Clone, Serialize)]
pub struct GrapeResult {
    /// Optimal amplitudes, one row per control.
    pub amplitudes: Vec<Vec<f64>>,
    /// Infidelity after each accepted iteration, starting with the initial guess.
    pub infidelity_trace: Vec<f64>,
    pub infidelity: f64,
    pub phi2: f64,
    pub iterations: usize,
    pub converged: bool,
    pub stagnated: bool,
}

/// Gradient ascent with a fixed base step and backtracking halving, so the
/// grid fidelity never decreases between accepted iterations.
pub fn grape_optimize(p: &GrapeProblem) -> Result<GrapeResult> {
    p.validate()?;
    let conv = p.convergence;
    let mut amps: Vec<Vec<f64>> = p.initial.iter().map(|r| r.iter().map(|&u| p.clip(u)).collect()).collect();
    let (mut fid, mut phi) = grid_fidelity(p, &grape_propagator(p, &amps)?);
    let mut trace = vec![1.0 - fid];
    let mut best = fid;
    let mut since_best = 0;
    let mut stagnated = false;
    let mut iterations = 0;
    while iterations < conv.max_iterations && 1.0 - fid > conv.target_infidelity {
        iterations += 1;
        let (_, grad) = fidelity_gradient(p, &amps, phi)?;
        let mut eps = conv.step;
        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            let trial: Vec<Vec<f64>> = amps
                .iter()
                .zip(&grad)
                .map(|(row, g)| row.iter().zip(g).map(|(&u, &dg)| p.clip(u + eps * dg)).collect())
                .collect();
            let (f, ph) = grid_fidelity(p, &grape_propagator(p, &trial)?);
            if f >= fid {
                accepted = Some((trial, f, ph));
                break;
            }
            eps *= 0.5;
        }
        let Some((trial, f, ph)) = accepted else {
            stagnated = true;
            break;
        };
        amps = trial;
        fid = f;
        phi = ph;
        trace.push(1.0 - fid);
        if fid > best + 1e-14 {
            best = fid;
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= STAGNATION_WINDOW {
                stagnated = true;
                break;
            }
        }
    }
    let infidelity = 1.0 - fid;
    Ok(GrapeResult {
        amplitudes: amps,
        infidelity_trace: trace,
        infidelity,
        phi2: phi,
        iterations,
        converged: infidelity <= conv.target_infidelity,
        stagnated,
    })
}

/// Runs `restarts` optimizations in parallel from perturbed copies of the
/// initial guess and keeps the best. Restart `k` draws from a ChaCha8 stream
/// seeded with `seed + k`, so equal seeds give equal results.
pub fn grape_multistart(p: &GrapeProblem, restarts: usize, seed: u64, perturbation: f64) -> Result<GrapeResult> {
    p.validate()?;
    let runs: Vec<Result<GrapeResult>> = (0..restarts.max(1) as u64)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(k));
            let scale = p.initial.iter().flatten().fold(0.0_f64, |m, v| m.max(v.abs())).max(1e-3);
            let mut local = p.clone();
            if k > 0 {
                for row in &mut local.initial {
                    for v in row.iter_mut() {
                        *v += perturbation * scale * rng.random_range(-1.0..1.0);
                    }
                }
            }
            grape_optimize(&local)
        })
        .collect();
    let mut best: Option<GrapeResult> = None;
    for r in runs {
        let r = r?;
        if best.as_ref().is_none_or(|b| r.infidelity < b.infidelity) {
            best = Some(r);
        }
    }
    Ok(best.expect("at least one restart"))
}

/// Instantaneous rotation on one qubit of a register.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseEvent {
    pub time: f64,
    pub qubit: usize,
    pub axis: Axis,
    pub angle: f64,
}

/// Ideal (delta) pulses separated by free evolution over `[0, total]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefocusSequence {
    pub total: f64,
    pub events: Vec<PulseEvent>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RefocusKind {
    /// No pulses.
    Free,
    /// `tau/2 - pi_x - tau/2 - pi_x`.
    Hahn,
    /// `n` pi_y pulses at `tau (k - 1/2) / n`.
    Cpmg(usize),
    /// `tau/4 - X - tau/4 - Y - tau/4 - X - tau/4 - Y`.
    Xy4,
}

impl RefocusSequence {
    pub fn new(total: f64, mut events: Vec<PulseEvent>) -> Result<Self> {
        if !(total > 0.0) {
            return Err(ControlError::InvalidSequence("total time must be positive".into()));
        }
        events.sort_by(|a, b| a.time.total_cmp(&b.time));
        if events.iter().any(|e| !(0.0..=total).contains(&e.time)) {
            return Err(ControlError::InvalidSequence("pulse outside [0, total]".into()));
        }
        for (i, e) in events.iter().enumerate() {
            if events[..i].iter().any(|o| o.qubit == e.qubit && o.time == e.time) {
                return Err(ControlError::InvalidSequence(format!(
                    "two pulses on qubit {} at t = {}",
                    e.qubit, e.time
                )));
            }
        }
        Ok(Self { total, events })
    }

    pub fn qubits(&self) -> usize {
        self.events.iter().map(|e| e.qubit + 1).max().unwrap_or(1)
    }

    /// `+-1` toggling sign of qubit `q` on each interval between pulse times,
    /// with the interval boundaries. A pi pulse about x or y flips the sign.
    pub fn toggling(&self, q: usize) -> (Vec<f64>, Vec<f64>) {
        let mut bounds = vec![0.0];
        let mut signs = Vec::new();
        let mut s = 1.0;
        for e in self.events.iter().filter(|e| e.qubit == q && e.axis != Axis::Z) {
            if e.time > *bounds.last().expect("seeded") {
                signs.push(s);
                bounds.push(e.time);
            }
            if ((e.angle / PI).round() as i64).rem_euclid(2) == 1 {
                s = -s;
            }
        }
        if self.total > *bounds.last().expect("seeded") {
            signs.push(s);
            bounds.push(self.total);
        }
        (bounds, signs)
    }
}

pub fn refocus_sequence(kind: RefocusKind, tau: f64) -> Result<RefocusSequence> {
    let pulse = |time: f64, axis: Axis| PulseEvent { time, qubit: 0, axis, angle: PI };
    let events = match kind {
        RefocusKind::Free => Vec::new(),
        RefocusKind::Hahn => vec![pulse(0.5 * tau, Axis::X), pulse(tau, Axis::X)],
        RefocusKind::Cpmg(n) => {
            if n == 0 {
                return Err(ControlError::InvalidSequence("CPMG needs at least one pulse".into()));
            }
            (1..=n).map(|k| pulse(tau * (k as f64 - 0.5) / n as f64, Axis::Y)).collect()
        }
        RefocusKind::Xy4 => {
            vec![pulse(0.25 * tau, Axis::X), pulse(0.5 * tau, Axis::Y), pulse(0.75 * tau, Axis::X), pulse(tau, Axis::Y)]
        }
    };
    RefocusSequence::new(tau, events)
}

/// Four-qubit ZZ pattern over four equal slices: qubits 1 and 2 share the
/// toggling pattern `++--`, qubit 3 has `+--+` and qubit 4 `+-+-`. Every
/// pair product except (1, 2) has zero net area. Qubits are indexed from 0.
pub fn zz_engineering_sequence(tau: f64) -> Result<RefocusSequence> {
    let q = tau / 4.0;
    let pulse = |time: f64, qubit: usize| PulseEvent { time, qubit, axis: Axis::X, angle: PI };
    let mut events = Vec::new();
    for qubit in [0, 1] {
        events.push(pulse(2.0 * q, qubit));
        events.push(pulse(tau, qubit));
    }
    events.push(pulse(q, 2));
    events.push(pulse(3.0 * q, 2));
    for k in 1..=4 {
        events.push(pulse(k as f64 * q, 3));
    }
    RefocusSequence::new(tau, events)
}

/// Propagator of `seq` under the static Hamiltonian `h` (rad/ns) acting on
/// `qubits` leading qubit factors times an environment. Pulses are ideal.
pub fn sequence_propagator(seq: &RefocusSequence, h: &Operator) -> Result<Operator> {
    let nq = seq.qubits();
    let stride = 1usize << nq;
    if h.dim() % stride != 0 {
        return Err(ControlError::InvalidSequence(format!("dimension {} cannot hold {nq} qubits", h.dim())));
    }
    let mut dims = vec![2; nq];
    let env = h.dim() / stride;
    if env > 1 {
        dims.push(env);
    }
    let mut u = Operator::identity(h.dim());
    let mut t = 0.0;
    for e in &seq.events {
        if e.time > t {
            u = &crate::qcore::propagator(h, e.time - t)? * &u;
            t = e.time;
        }
        let r = embed(&rotation_operator(e.axis, e.angle), e.qubit, &dims)?;
        u = &r * &u;
    }
    if seq.total > t {
        u = &crate::qcore::propagator(h, seq.total - t)? * &u;
    }
    Ok(u)
}

/// Single-qubit coupling `J sigma_a (x) A` on qubit (x) environment, rad/ns.
pub fn qubit_env_coupling(j: f64, axis: Axis, env: &Operator) -> Result<Operator> {
    Ok(crate::qcore::tensor(&[&pauli(axis), env])?.scale_real(j))
}

/// `|Y(w)|^2` of the toggling function of qubit 0, with `Y` its exact
/// Fourier transform, normalized to unit sum times grid step. `omegas` in rad/ns.
pub fn filter_function(seq: &RefocusSequence, omegas: &[f64]) -> Vec<f64> {
    let (bounds, signs) = seq.toggling(0);
    let raw: Vec<f64> = omegas
        .iter()
        .map(|&w| {
            let y: Complex64 = signs
                .iter()
                .enumerate()
                .map(|(k, &s)| {
                    let (a, b) = (bounds[k], bounds[k + 1]);
                    let piece = if w.abs() < 1e-12 {
                        Complex64::new(b - a, 0.0)
                    } else {
                        (Complex64::from_polar(1.0, w * b) - Complex64::from_polar(1.0, w * a)) / Complex64::new(0.0, w)
                    };
                    piece * s
                })
                .sum();
            y.norm_sqr()
        })
        .collect();
    let step = if omegas.len() > 1 { (omegas[omegas.len() - 1] - omegas[0]) / (omegas.len() - 1) as f64 } else { 1.0 };
    let total: f64 = raw.iter().sum::<f64>() * step;
    if total > 0.0 {
        raw.iter().map(|v| v / total).collect()
    } else {
        raw
    }
}

/// Grid frequency with the largest filter value.
pub fn filter_peak(omegas: &[f64], filter: &[f64]) -> f64 {
    omegas.iter().zip(filter).fold((f64::NAN, f64::NEG_INFINITY), |b, (&w, &f)| if f > b.1 { (w, f) } else { b }).0
}

#[derive(Debug, Serialize, Deserialize)]
struct PulseRow {
    t_ns: f64,
    #[serde(rename = "omega_x_GHz")]
    omega_x_ghz: f64,
    #[serde(rename = "omega_y_GHz")]
    omega_y_ghz: f64,
}

/// Writes `t_ns, omega_x_GHz, omega_y_GHz` rows at the sample midpoints.
pub fn write_pulse_csv(p: &PulseEnvelope, out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for (k, t) in p.times().into_iter().enumerate() {
        w.serialize(PulseRow { t_ns: t, omega_x_ghz: p.omega_x[k] / TAU, omega_y_ghz: p.omega_y[k] / TAU })?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a pulse written by `write_pulse_csv` (or any uniform sampling) as a
/// piecewise envelope.
pub fn read_pulse_csv(input: impl Read) -> Result<PulseEnvelope> {
    let mut r = csv::Reader::from_reader(input);
    let headers = r.headers()?.clone();
    for want in ["t_ns", "omega_x_GHz", "omega_y_GHz"] {
        if !headers.iter().any(|h| h == want) {
            return Err(ControlError::Csv(format!("missing column {want}")));
        }
    }
    let rows: Vec<PulseRow> = r.deserialize().collect::<std::result::Result<_, _>>()?;
    if rows.len() < 2 {
        return Err(ControlError::Csv("need at least two samples".into()));
    }
    let dt = rows[1].t_ns - rows[0].t_ns;
    if !(dt > 0.0) || rows.windows(2).any(|w| ((w[1].t_ns - w[0].t_ns) - dt).abs() > 1e-9 * (1.0 + dt)) {
        return Err(ControlError::Csv("samples must be uniformly spaced".into()));
    }
    let slices = rows.iter().map(|r| (r.omega_x_ghz * TAU, r.omega_y_ghz * TAU)).collect();
    make_envelope(EnvelopeKind::Piecewise { slices }, dt * rows.len() as f64, 1.0, dt)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivative_of_line_is_exact() {
        let v: Vec<f64> = (0..5).map(|k| 3.0 * k as f64).collect();
        assert!(sampled_derivative(&v, 1.0).iter().all(|d| (d - 3.0).abs() < 1e-12));
    }

    #[test]
    fn gaussian_endpoints_vanish() {
        let p = make_envelope(EnvelopeKind::gaussian_for(8.0), 8.0, 1.0, 0.001).unwrap();
        assert!(p.omega_x[0].abs() < 1e-3 && p.omega_x[p.len() - 1].abs() < 1e-3);
    }
}
