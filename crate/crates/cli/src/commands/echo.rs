use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use scq_core::control::{
    filter_function, filter_peak, qubit_env_coupling, refocus_sequence, sequence_propagator, RefocusKind,
};
use scq_core::qcore::{pauli, Axis};
use scq_core::Operator;

use super::{grid, Ctx};
use crate::config::{at_least, non_negative, positive};
use crate::output::{num, Outputs};
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SequenceKind {
    Free,
    Hahn,
    Cpmg,
    Xy4,
}

/// Environment operator on the single ancilla qubit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnvOp {
    I,
    X,
    Y,
    Z,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EchoConfig {
    pub sequence: SequenceKind,
    /// Pulse count for CPMG.
    pub pulses: usize,
    pub tau_ns: f64,
    /// Static coupling `J sigma_axis (x) env`.
    pub coupling_rad_per_ns: f64,
    pub axis: Axis,
    pub env: EnvOp,
    pub omega_max_rad_per_ns: f64,
    pub omega_points: usize,
}

impl Default for EchoConfig {
    fn default() -> Self {
        Self {
            sequence: SequenceKind::Hahn,
            pulses: 4,
            tau_ns: 40.0,
            coupling_rad_per_ns: 0.03,
            axis: Axis::Z,
            env: EnvOp::Z,
            omega_max_rad_per_ns: 2.0,
            omega_points: 2001,
        }
    }
}

pub fn run(cfg: &EchoConfig, _ctx: &Ctx, out: &mut Outputs) -> Result<Value> {
    positive("tau_ns", cfg.tau_ns)?;
    positive("omega_max_rad_per_ns", cfg.omega_max_rad_per_ns)?;
    non_negative("coupling_rad_per_ns", cfg.coupling_rad_per_ns.abs())?;
    at_least("omega_points", cfg.omega_points, 2)?;
    let kind = match cfg.sequence {
        SequenceKind::Free => RefocusKind::Free,
        SequenceKind::Hahn => RefocusKind::Hahn,
        SequenceKind::Cpmg => RefocusKind::Cpmg(cfg.pulses),
        SequenceKind::Xy4 => RefocusKind::Xy4,
    };
    let seq = refocus_sequence(kind, cfg.tau_ns)?;
    let env = match cfg.env {
        EnvOp::I => Operator::identity(2),
        EnvOp::X => pauli(Axis::X),
        EnvOp::Y => pauli(Axis::Y),
        EnvOp::Z => pauli(Axis::Z),
    };
    let h = qubit_env_coupling(cfg.coupling_rad_per_ns, cfg.axis, &env)?;
    let u = sequence_propagator(&seq, &h)?;
    let omegas = grid(0.0, cfg.omega_max_rad_per_ns, cfg.omega_points);
    let filter = filter_function(&seq, &omegas);
    out.numeric_csv("filter.csv", &["omega_rad_per_ns", "filter"], &[&omegas, &filter])?;
    out.csv(
        "pulses.csv",
        &["time_ns", "qubit", "axis", "angle_rad"],
        seq.events
            .iter()
            .map(|e| vec![num(e.time), e.qubit.to_string(), format!("{:?}", e.axis).to_lowercase(), num(e.angle)]),
    )?;
    Ok(json!({
        "pulses": seq.events.len(),
        "identity_distance": u.phase_distance(&Operator::identity(4)),
        "filter_peak_rad_per_ns": filter_peak(&omegas, &filter),
    }))
}
