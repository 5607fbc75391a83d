use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use scq_core::circuits::{
    charge_dispersion, diagonalize, qubit_frequency, CircuitBasis, CircuitParams, PhaseGrid, DEFAULT_GRID_POINTS,
    DEFAULT_GRID_TURNS, DEFAULT_NCUT,
};

use super::Ctx;
use crate::config::{at_least, non_negative, positive};
use crate::output::{num, Outputs};
use crate::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CircuitSection {
    pub ej_ghz: f64,
    pub ec_ghz: f64,
    /// Zero selects the island (charge-basis) Hamiltonian.
    pub el_ghz: f64,
    /// Offset charge in Cooper pairs (island only).
    pub n_ext: f64,
    /// External flux phase (loop only).
    pub phi_ext_rad: f64,
}

impl Default for CircuitSection {
    fn default() -> Self {
        Self { ej_ghz: 20.0, ec_ghz: 0.4, el_ghz: 0.0, n_ext: 0.0, phi_ext_rad: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectrumConfig {
    pub circuit: CircuitSection,
    pub levels: usize,
    /// Charge cutoff `|n| <= ncut` for island circuits.
    pub ncut: usize,
    /// Phase grid for loop circuits.
    pub grid_points: usize,
    pub grid_turns: f64,
    /// `E_J / E_C` ratios for a charge-dispersion sweep at the configured
    /// `E_C`; empty skips the sweep.
    pub dispersion_ej_over_ec: Vec<f64>,
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        Self {
            circuit: CircuitSection::default(),
            levels: 6,
            ncut: DEFAULT_NCUT,
            grid_points: DEFAULT_GRID_POINTS,
            grid_turns: DEFAULT_GRID_TURNS,
            dispersion_ej_over_ec: Vec::new(),
        }
    }
}

pub fn run(cfg: &SpectrumConfig, ctx: &Ctx, out: &mut Outputs) -> Result<Value> {
    let c = &cfg.circuit;
    positive("circuit.ec_ghz", c.ec_ghz)?;
    non_negative("circuit.ej_ghz", c.ej_ghz)?;
    non_negative("circuit.el_ghz", c.el_ghz)?;
    at_least("levels", cfg.levels, 3)?;
    let params = CircuitParams { ej: c.ej_ghz, ec: c.ec_ghz, el: c.el_ghz, n_ext: c.n_ext, phi_ext: c.phi_ext_rad };
    let basis = if params.is_island() {
        CircuitBasis::Charge { ncut: cfg.ncut }
    } else {
        CircuitBasis::Phase(PhaseGrid { turns: cfg.grid_turns, npoints: cfg.grid_points })
    };
    ctx.log(|| format!("diagonalizing {params:?} in {basis:?}"));
    let d = diagonalize(&params, basis, cfg.levels)?;
    let s = &d.spectrum;
    out.csv(
        "levels.csv",
        &["level", "energy_GHz"],
        s.levels.iter().enumerate().map(|(k, e)| vec![k.to_string(), num(*e)]),
    )?;
    let mut report = json!({
        "model": if params.is_island() { "island" } else { "loop" },
        "omega_q_ghz": s.omega_q,
        "alpha_ghz": s.alpha,
        "levels_ghz": s.levels,
    });
    if params.is_island() {
        report["transmon_estimate_ghz"] = json!((8.0 * c.ej_ghz * c.ec_ghz).sqrt() - c.ec_ghz);
        report["charge_dispersion_ghz"] = json!(charge_dispersion(&params, cfg.ncut)?);
        if !cfg.dispersion_ej_over_ec.is_empty() {
            let mut omega = Vec::new();
            let mut disp = Vec::new();
            for &r in &cfg.dispersion_ej_over_ec {
                positive("dispersion_ej_over_ec", r)?;
                let p = CircuitParams::island(r * c.ec_ghz, c.ec_ghz, 0.0);
                omega.push(qubit_frequency(&p, CircuitBasis::Charge { ncut: cfg.ncut })?);
                disp.push(charge_dispersion(&p, cfg.ncut)?.abs());
            }
            let rel: Vec<f64> = disp.iter().zip(&omega).map(|(d, w)| d / w).collect();
            out.numeric_csv(
                "charge_dispersion.csv",
                &["ej_over_ec", "omega_q_GHz", "abs_dispersion_GHz", "relative_dispersion"],
                &[&cfg.dispersion_ej_over_ec, &omega, &disp, &rel],
            )?;
            report["dispersion"] = json!({
                "ej_over_ec": cfg.dispersion_ej_over_ec,
                "abs_dispersion_ghz": disp,
                "relative": rel,
            });
        }
    }
    Ok(report)
}
