use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use scq_qec::memory::shot_rng;
use scq_qec::{logical_error_rate, run_memory, NoiseModel, SurfaceLattice};

use super::Ctx;
use crate::config::at_least;
use crate::output::{to_json, Outputs};
use crate::{CliError, QecArgs, Result};

/// Memory experiment with independent X and Z flips of probability `p` per
/// data qubit per cycle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QecConfig {
    pub d: usize,
    pub p: f64,
    pub cycles: usize,
    pub shots: usize,
}

impl Default for QecConfig {
    fn default() -> Self {
        Self { d: 3, p: 1e-3, cycles: 3, shots: 1000 }
    }
}

impl QecConfig {
    pub fn apply(&mut self, args: &QecArgs) {
        self.d = args.d.unwrap_or(self.d);
        self.p = args.p.unwrap_or(self.p);
        self.shots = args.shots.unwrap_or(self.shots);
        self.cycles = args.cycles.unwrap_or(self.cycles);
    }
}

pub fn run(cfg: &QecConfig, ctx: &Ctx, out: &mut Outputs) -> Result<Value> {
    at_least("d", cfg.d, 2)?;
    at_least("cycles", cfg.cycles, 1)?;
    if !(0.0..=1.0).contains(&cfg.p) {
        return Err(CliError::Config(format!("p must lie in [0, 1], got {}", cfg.p)));
    }
    let est = logical_error_rate(cfg.d, cfg.p, cfg.cycles, cfg.shots, ctx.seed)?;
    // Syndrome record of the first shot, for plotting.
    let lattice = SurfaceLattice::new(cfg.d)?;
    let sample = run_memory(&lattice, &NoiseModel::depolarizing_like(cfg.p), cfg.cycles, &mut shot_rng(ctx.seed, 0))?;
    let mut buf = Vec::new();
    sample.history.write_csv(&mut buf)?;
    out.add("syndromes.csv", buf);
    let mut report = to_json(&est)?;
    report["sample_logical_failure"] = json!(sample.logical_failure);
    Ok(report)
}
