use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use scq_core::dynamics::{lindblad_evolve, linspace, CollapseOp, TimeDependentH};
use scq_core::ghz_to_angular;
use scq_core::qcore::{ket_bra, pauli_x, CVector, ONE};
use scq_core::{DensityMatrix, StateVector};

use super::Ctx;
use crate::config::{at_least, non_negative, positive};
use crate::output::Outputs;
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Initial {
    Ground,
    Excited,
    Plus,
}

/// Single qubit in the frame of the drive:
/// `H = -2 pi detuning |1><1| + (rabi / 2) X`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvolveConfig {
    pub initial: Initial,
    pub detuning_ghz: f64,
    pub rabi_rad_per_ns: f64,
    pub gamma1_per_ns: f64,
    pub gamma_phi_per_ns: f64,
    pub t_max_ns: f64,
    pub points: usize,
    pub dt_ns: f64,
}

impl Default for EvolveConfig {
    fn default() -> Self {
        Self {
            initial: Initial::Excited,
            detuning_ghz: 0.0,
            rabi_rad_per_ns: 0.0,
            gamma1_per_ns: 0.1,
            gamma_phi_per_ns: 0.0,
            t_max_ns: 50.0,
            points: 101,
            dt_ns: 0.01,
        }
    }
}

pub fn run(cfg: &EvolveConfig, _ctx: &Ctx, out: &mut Outputs) -> Result<Value> {
    non_negative("gamma1_per_ns", cfg.gamma1_per_ns)?;
    non_negative("gamma_phi_per_ns", cfg.gamma_phi_per_ns)?;
    positive("t_max_ns", cfg.t_max_ns)?;
    positive("dt_ns", cfg.dt_ns)?;
    at_least("points", cfg.points, 2)?;
    let h = &ket_bra(2, 1, 1).scale_real(-ghz_to_angular(cfg.detuning_ghz))
        + &pauli_x().scale_real(0.5 * cfg.rabi_rad_per_ns);
    let mut collapse = Vec::new();
    if cfg.gamma1_per_ns > 0.0 {
        collapse.push(CollapseOp::relaxation(cfg.gamma1_per_ns, 2)?);
    }
    if cfg.gamma_phi_per_ns > 0.0 {
        collapse.push(CollapseOp::dephasing(cfg.gamma_phi_per_ns)?);
    }
    let rho0 = match cfg.initial {
        Initial::Ground => DensityMatrix::basis(2, 0),
        Initial::Excited => DensityMatrix::basis(2, 1),
        Initial::Plus => StateVector::normalized(CVector::from_vec(vec![ONE, ONE]))?.to_density(),
    };
    let times = linspace(cfg.t_max_ns, cfg.points);
    let res = lindblad_evolve(&TimeDependentH::constant(h), &rho0, &collapse, &times, cfg.dt_ns, &[])?;
    let p1: Vec<f64> = res.states.iter().map(|r| r.population(1)).collect();
    let re: Vec<f64> = res.states.iter().map(|r| r.get(0, 1).re).collect();
    let im: Vec<f64> = res.states.iter().map(|r| r.get(0, 1).im).collect();
    out.numeric_csv("trajectory.csv", &["t_ns", "p1", "rho01_re", "rho01_im"], &[&times, &p1, &re, &im])?;
    let rates = cfg.gamma1_per_ns / 2.0 + cfg.gamma_phi_per_ns;
    Ok(json!({
        "final_p1": p1.last(),
        "final_coherence": re.last().zip(im.last()).map(|(a, b)| a.hypot(*b)),
        "t1_ns": if cfg.gamma1_per_ns > 0.0 { Some(1.0 / cfg.gamma1_per_ns) } else { None },
        "t2_ns": if rates > 0.0 { Some(1.0 / rates) } else { None },
        "max_trace_drift": res.max_trace_drift,
        "min_eigenvalue": res.min_eigenvalue,
    }))
}
