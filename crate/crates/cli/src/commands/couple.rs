use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use scq_core::coupling::{
    classical_oscillators, dispersive_shift, dressed_chi, qubit_resonator_hamiltonian, spectral_peaks,
    ClassicalOscParams, JCParams, DEFAULT_NMAX,
};
use scq_core::qcore::eigh;

use super::Ctx;
use crate::config::{at_least, non_negative, positive};
use crate::output::{num, Outputs};
use crate::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct JcSection {
    pub omega_q_ghz: f64,
    pub omega_r_ghz: f64,
    pub g_ghz: f64,
    pub kappa_ghz: f64,
    /// Photon-number cutoff.
    pub n_max: usize,
    /// Drop the counter-rotating terms.
    pub rwa: bool,
}

impl Default for JcSection {
    fn default() -> Self {
        Self { omega_q_ghz: 6.0, omega_r_ghz: 6.0, g_ghz: 0.05, kappa_ghz: 0.0, n_max: DEFAULT_NMAX, rwa: true }
    }
}

/// Dimensionless classical oscillator model; see [`ClassicalOscParams`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OscSection {
    pub m1: f64,
    pub m2: f64,
    pub k1: f64,
    pub k2: f64,
    pub kappa0: f64,
    pub kappa_m: f64,
    pub f_m: f64,
    pub a_d: f64,
    pub f_d: f64,
    pub initial: [f64; 4],
    pub t_span: f64,
    /// Integration step; `None` uses the model default.
    pub dt: Option<f64>,
}

impl Default for OscSection {
    fn default() -> Self {
        let p = ClassicalOscParams::default();
        Self {
            m1: p.m1,
            m2: p.m2,
            k1: p.k1,
            k2: p.k2,
            kappa0: p.kappa0,
            kappa_m: p.kappa_m,
            f_m: p.f_m,
            a_d: p.a_d,
            f_d: p.f_d,
            initial: p.initial,
            t_span: 200.0,
            dt: None,
        }
    }
}

impl OscSection {
    pub fn params(&self) -> ClassicalOscParams {
        ClassicalOscParams {
            m1: self.m1,
            m2: self.m2,
            k1: self.k1,
            k2: self.k2,
            kappa0: self.kappa0,
            kappa_m: self.kappa_m,
            f_m: self.f_m,
            a_d: self.a_d,
            f_d: self.f_d,
            initial: self.initial,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CoupleConfig {
    pub jc: Option<JcSection>,
    pub oscillators: Option<OscSection>,
}

impl Default for CoupleConfig {
    fn default() -> Self {
        Self { jc: Some(JcSection::default()), oscillators: None }
    }
}

fn run_jc(s: &JcSection, out: &mut Outputs) -> Result<Value> {
    positive("jc.omega_q_ghz", s.omega_q_ghz)?;
    positive("jc.omega_r_ghz", s.omega_r_ghz)?;
    non_negative("jc.g_ghz", s.g_ghz)?;
    non_negative("jc.kappa_ghz", s.kappa_ghz)?;
    at_least("jc.n_max", s.n_max, 2)?;
    let p = JCParams { kappa: s.kappa_ghz, n_max: s.n_max, ..JCParams::new(s.omega_q_ghz, s.omega_r_ghz, s.g_ghz) };
    let energies: Vec<f64> = eigh(&qubit_resonator_hamiltonian(&p, s.rwa)?).0.iter().map(|e| e / TAU).collect();
    out.csv(
        "dressed_levels.csv",
        &["index", "energy_GHz"],
        energies.iter().enumerate().map(|(k, e)| vec![k.to_string(), num(*e)]),
    )?;
    let mut report = json!({
        "detuning_ghz": p.detuning(),
        "lowest_splitting_ghz": energies[2] - energies[1],
        "dispersive": p.is_dispersive(),
    });
    if p.is_dispersive() {
        let d = dispersive_shift(&p)?;
        report["chi_ghz"] = json!(d.chi);
        report["dressed_chi_ghz"] = json!(dressed_chi(&p, s.rwa)?);
        report["n_crit"] = json!(d.n_crit);
        report["snr_optimal"] = json!(d.snr_optimal);
        report["resonator_ground_ghz"] = json!(d.resonator_ground);
        report["resonator_excited_ghz"] = json!(d.resonator_excited);
    }
    Ok(report)
}

fn run_oscillators(s: &OscSection, out: &mut Outputs) -> Result<Value> {
    positive("oscillators.t_span", s.t_span)?;
    let p = s.params();
    let traj = classical_oscillators(&p, s.t_span, s.dt)?;
    out.numeric_csv("oscillators.csv", &["t", "x1", "x2"], &[&traj.times, &traj.x1, &traj.x2])?;
    out.numeric_csv(
        "oscillator_spectrum.csv",
        &["f", "magnitude1", "magnitude2"],
        &[&traj.freqs, &traj.spectrum1, &traj.spectrum2],
    )?;
    let peaks: Vec<f64> = spectral_peaks(&traj.spectrum1, 2).into_iter().map(|k| traj.freqs[k]).collect();
    let (f1, f2) = p.natural_frequencies();
    let (lo, hi) = p.normal_mode_frequencies();
    Ok(json!({
        "natural_frequencies": [f1, f2],
        "normal_modes": [lo, hi],
        "spectral_peaks_x1": peaks,
        "frequency_resolution": traj.freqs.get(1).copied().unwrap_or(0.0),
    }))
}

pub fn run(cfg: &CoupleConfig, _ctx: &Ctx, out: &mut Outputs) -> Result<Value> {
    let mut report = json!({});
    if let Some(jc) = &cfg.jc {
        report["jc"] = run_jc(jc, out)?;
    }
    if let Some(osc) = &cfg.oscillators {
        report["oscillators"] = run_oscillators(osc, out)?;
    }
    Ok(report)
}
