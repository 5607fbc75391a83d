use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use scq_core::coupling::JCParams;
use scq_core::experiments::{
    fit_lorentzian, fit_rabi, fit_ramsey, fit_ramsey_gaussian, fit_t1, resonator_response, run_rabi, run_ramsey,
    run_t1, state_separation, two_tone_scan, DataSeries, PiPulse, QubitState, QubitSystem, RabiDrive, ReadoutModel,
};

use super::{grid, Ctx};
use crate::config::{at_least, positive};
use crate::output::{to_json, Outputs};
use crate::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Rabi,
    T1,
    Ramsey,
    TwoTone,
    Resonator,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QubitSection {
    pub omega_q_ghz: f64,
    pub gamma1_per_ns: f64,
    pub gamma_phi_per_ns: f64,
    pub chi_ghz: f64,
    pub quasi_static_sigma_ghz: f64,
}

impl Default for QubitSection {
    fn default() -> Self {
        Self {
            omega_q_ghz: 5.0,
            gamma1_per_ns: 0.01,
            gamma_phi_per_ns: 0.005,
            chi_ghz: 0.0,
            quasi_static_sigma_ghz: 0.0,
        }
    }
}

/// Assignment errors: `e01` reads 1 from |0>, `e10` reads 0 from |1>.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReadoutSection {
    pub e01: f64,
    pub e10: f64,
}

impl ReadoutSection {
    pub fn model(&self) -> ReadoutModel {
        ReadoutModel { e01: self.e01, e10: self.e10 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ResonatorSection {
    pub omega_r_ghz: f64,
    pub g_ghz: f64,
    pub kappa_ghz: f64,
}

impl Default for ResonatorSection {
    fn default() -> Self {
        Self { omega_r_ghz: 7.0, g_ghz: 0.05, kappa_ghz: 0.002 }
    }
}

/// Sweep axis: delays in ns for time-domain kinds, probe frequency in GHz
/// for spectroscopy. Omitted bounds fall back to a range set by the qubit or
/// resonator parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    pub start_ns: Option<f64>,
    pub stop_ns: Option<f64>,
    pub start_ghz: Option<f64>,
    pub stop_ghz: Option<f64>,
    pub points: usize,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self { start_ns: None, stop_ns: None, start_ghz: None, stop_ghz: None, points: 101 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub qubit: QubitSection,
    pub readout: ReadoutSection,
    pub resonator: ResonatorSection,
    /// Rabi rate of the qubit drive; also sets the calibrated pi pulse.
    pub rabi_rad_per_ns: f64,
    /// Drive detuning for Rabi and Ramsey.
    pub detuning_ghz: f64,
    /// Spectroscopy drive for two-tone.
    pub probe_rad_per_ns: f64,
    pub dt_ns: f64,
    pub sweep: SweepSection,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            kind: ExperimentKind::Rabi,
            qubit: QubitSection::default(),
            readout: ReadoutSection::default(),
            resonator: ResonatorSection::default(),
            rabi_rad_per_ns: 0.2,
            detuning_ghz: 0.0,
            probe_rad_per_ns: 1e-3,
            dt_ns: 0.01,
            sweep: SweepSection::default(),
        }
    }
}

fn time_sweep(s: &SweepSection, default_stop: f64) -> Result<Vec<f64>> {
    if s.start_ghz.is_some() || s.stop_ghz.is_some() {
        return Err(CliError::Config("time-domain experiments sweep start_ns/stop_ns, not GHz".into()));
    }
    let (a, b) = (s.start_ns.unwrap_or(0.0), s.stop_ns.unwrap_or(default_stop));
    positive("sweep.stop_ns", b - a.max(0.0))?;
    Ok(grid(a, b, s.points))
}

fn freq_sweep(s: &SweepSection, centre: f64, half_span: f64) -> Result<Vec<f64>> {
    if s.start_ns.is_some() || s.stop_ns.is_some() {
        return Err(CliError::Config("spectroscopy sweeps start_ghz/stop_ghz, not ns".into()));
    }
    let (a, b) = (s.start_ghz.unwrap_or(centre - half_span), s.stop_ghz.unwrap_or(centre + half_span));
    positive("sweep.stop_ghz - sweep.start_ghz", b - a)?;
    Ok(grid(a, b, s.points))
}

fn signal(out: &mut Outputs, data: &DataSeries, x_name: &str) -> Result<()> {
    out.numeric_csv("data.csv", &[x_name, "p_read_1"], &[&data.x, &data.y])
}

pub fn run(cfg: &ExperimentConfig, ctx: &Ctx, out: &mut Outputs) -> Result<Value> {
    at_least("sweep.points", cfg.sweep.points, 8)?;
    positive("dt_ns", cfg.dt_ns)?;
    let q = &cfg.qubit;
    let sys = QubitSystem {
        omega_q: q.omega_q_ghz,
        gamma1: q.gamma1_per_ns,
        gamma_phi: q.gamma_phi_per_ns,
        chi: q.chi_ghz,
        quasi_static_sigma: q.quasi_static_sigma_ghz,
    };
    let readout = cfg.readout.model();
    ctx.log(|| format!("{:?} on {sys:?}", cfg.kind));
    let report = match cfg.kind {
        ExperimentKind::Rabi => {
            let drive = RabiDrive { rabi_rate: cfg.rabi_rad_per_ns, detuning: cfg.detuning_ghz };
            positive("rabi_rad_per_ns", drive.rabi_rate)?;
            let x = time_sweep(&cfg.sweep, 10.0 * std::f64::consts::TAU / drive.oscillation_rate())?;
            let data = run_rabi(&sys, &drive, &x, &readout, cfg.dt_ns)?;
            signal(out, &data, "duration_ns")?;
            let fit = fit_rabi(&data)?;
            let pi = PiPulse::from_rabi_fit(&fit).ok();
            json!({ "fit": to_json(&fit)?, "pi_pulse_ns": pi.map(|p| p.duration) })
        }
        ExperimentKind::T1 => {
            let pi = PiPulse::new(cfg.rabi_rad_per_ns)?;
            let x = time_sweep(&cfg.sweep, 5.0 * sys.t1())?;
            let data = run_t1(&sys, &pi, &x, &readout, cfg.dt_ns)?;
            signal(out, &data, "delay_ns")?;
            let fit = fit_t1(&data)?;
            json!({ "fit": to_json(&fit)?, "t1_ns": fit.get("t1"), "expected_t1_ns": sys.t1() })
        }
        ExperimentKind::Ramsey => {
            let pi = PiPulse::new(cfg.rabi_rad_per_ns)?;
            let gaussian = sys.quasi_static_sigma > 0.0;
            let span = if gaussian { 3.0 * sys.gaussian_t2() } else { 3.0 * sys.t2() };
            let x = time_sweep(&cfg.sweep, span)?;
            let data = run_ramsey(&sys, &pi, cfg.detuning_ghz, &x, &readout, cfg.dt_ns)?;
            signal(out, &data, "delay_ns")?;
            let fit = if gaussian { fit_ramsey_gaussian(&data, sys.t1())? } else { fit_ramsey(&data)? };
            json!({
                "fit": to_json(&fit)?,
                "expected_t2_ns": sys.t2(),
                "expected_gaussian_t2_ns": if gaussian { Some(sys.gaussian_t2()) } else { None },
            })
        }
        ExperimentKind::TwoTone => {
            positive("qubit.gamma1_per_ns", sys.gamma1)?;
            let width = 1.0 / (std::f64::consts::PI * sys.t2());
            let x = freq_sweep(&cfg.sweep, sys.apparent_frequency(), 10.0 * width)?;
            let scan = two_tone_scan(&sys, cfg.probe_rad_per_ns, &x)?;
            out.numeric_csv("data.csv", &["frequency_GHz", "p_excited"], &[&scan.freqs, &scan.excited])?;
            let fit = fit_lorentzian(&scan.freqs, &scan.excited)?;
            json!({
                "fit": to_json(&fit)?,
                "saturation": scan.saturation,
                "weak_probe": scan.weak_probe,
                "expected_center_ghz": sys.apparent_frequency(),
                "expected_fwhm_ghz": width,
            })
        }
        ExperimentKind::Resonator => {
            let r = &cfg.resonator;
            let p = JCParams { kappa: r.kappa_ghz, ..JCParams::new(q.omega_q_ghz, r.omega_r_ghz, r.g_ghz) };
            let chi = p.g * p.g / p.detuning();
            let x = freq_sweep(&cfg.sweep, p.omega_r, 3.0 * chi.abs() + 3.0 * p.kappa)?;
            let g = resonator_response(&p, QubitState::Ground, &x)?;
            let e = resonator_response(&p, QubitState::Excited, &x)?;
            out.numeric_csv(
                "data.csv",
                &["frequency_GHz", "magnitude_g", "phase_g_rad", "magnitude_e", "phase_e_rad"],
                &[&x, &g.magnitude(), &g.phase(), &e.magnitude(), &e.phase()],
            )?;
            json!({
                "center_ground_ghz": g.center,
                "center_excited_ghz": e.center,
                "peak_ground_ghz": g.peak_frequency(),
                "peak_excited_ghz": e.peak_frequency(),
                "separation_at_omega_r": state_separation(&p, p.omega_r)?,
            })
        }
    };
    Ok(report)
}
