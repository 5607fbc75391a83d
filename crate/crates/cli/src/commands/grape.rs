use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use scq_core::control::{grape_multistart, transmon_x_problem};

use super::Ctx;
use crate::config::{at_least, non_negative, positive};
use crate::output::Outputs;
use crate::Result;

/// X gate on a three-level transmon with piecewise-constant `Omega_x`,
/// `Omega_y` controls (rad/ns).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GrapeConfig {
    pub alpha_ghz: f64,
    /// `|1> <-> |2>` matrix element relative to `|0> <-> |1>`.
    pub lambda: f64,
    pub slices: usize,
    pub dt_ns: f64,
    pub bound_rad_per_ns: Option<f64>,
    pub restarts: usize,
    /// Spread of the random restart amplitudes (rad/ns).
    pub perturbation: f64,
}

impl Default for GrapeConfig {
    fn default() -> Self {
        Self {
            alpha_ghz: -0.2,
            lambda: 2.0_f64.sqrt(),
            slices: 4,
            dt_ns: 1.6,
            bound_rad_per_ns: None,
            restarts: 8,
            perturbation: 0.3,
        }
    }
}

pub fn run(cfg: &GrapeConfig, ctx: &Ctx, out: &mut Outputs) -> Result<Value> {
    positive("dt_ns", cfg.dt_ns)?;
    at_least("slices", cfg.slices, 1)?;
    at_least("restarts", cfg.restarts, 1)?;
    non_negative("perturbation", cfg.perturbation)?;
    if let Some(b) = cfg.bound_rad_per_ns {
        positive("bound_rad_per_ns", b)?;
    }
    let p = transmon_x_problem(TAU * cfg.alpha_ghz, cfg.lambda, cfg.slices, cfg.dt_ns, cfg.bound_rad_per_ns);
    let r = grape_multistart(&p, cfg.restarts, ctx.seed, cfg.perturbation)?;
    let starts: Vec<f64> = (0..cfg.slices).map(|k| k as f64 * cfg.dt_ns).collect();
    out.numeric_csv(
        "amplitudes.csv",
        &["t_start_ns", "omega_x_rad_per_ns", "omega_y_rad_per_ns"],
        &[&starts, &r.amplitudes[0], &r.amplitudes[1]],
    )?;
    let iterations: Vec<f64> = (0..r.infidelity_trace.len()).map(|k| k as f64).collect();
    out.numeric_csv("trace.csv", &["iteration", "infidelity"], &[&iterations, &r.infidelity_trace])?;
    Ok(json!({
        "fidelity": 1.0 - r.infidelity,
        "infidelity": r.infidelity,
        "phi2_rad": r.phi2,
        "iterations": r.iterations,
        "converged": r.converged,
        "stagnated": r.stagnated,
        "total_time_ns": p.total_time(),
    }))
}
