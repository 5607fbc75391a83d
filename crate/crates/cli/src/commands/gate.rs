use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use scq_core::coupling::TwoQubitParams;
use scq_core::gates::{
    bswap, cnot_from_cr, cnot_from_cz, computational_block, cr_gate, cz_coherent_exchange, gate_infidelity, iswap,
    iswap_target, CRParams,
};
use scq_core::ghz_to_angular;
use scq_core::qcore::{cnot, cz};
use scq_core::Operator;

use super::Ctx;
use crate::config::positive;
use crate::output::{num, Outputs};
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GateKind {
    Iswap,
    Bswap,
    /// Coherent `|11> <-> |02>` exchange, reported on the computational block.
    Cz,
    Cr,
    CnotCz,
    CnotCr,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CrSection {
    pub omega_q1_ghz: f64,
    pub omega_q2_ghz: f64,
    pub j_ghz: f64,
    /// Control anharmonicity; omitted means a two-level control qubit.
    pub alpha1_ghz: Option<f64>,
    pub epsilon_ghz: f64,
}

impl Default for CrSection {
    fn default() -> Self {
        Self { omega_q1_ghz: 5.0, omega_q2_ghz: 5.2, j_ghz: 0.005, alpha1_ghz: None, epsilon_ghz: 0.05 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GateConfig {
    pub kind: GateKind,
    /// Exchange or modulation coupling for iswap, bswap and cz.
    pub j_ghz: f64,
    /// Gate time; omitted uses the ideal time for the kind.
    pub tau_ns: Option<f64>,
    pub cr: CrSection,
}

impl Default for GateConfig {
    fn default() -> Self {
        Self { kind: GateKind::Iswap, j_ghz: 0.02, tau_ns: None, cr: CrSection::default() }
    }
}

fn cr_params(s: &CrSection) -> CRParams {
    let mut q = TwoQubitParams::qubits(s.omega_q1_ghz, s.omega_q2_ghz, s.j_ghz);
    q.alpha1 = s.alpha1_ghz;
    CRParams { qubits: q, epsilon_q: s.epsilon_ghz }
}

pub fn run(cfg: &GateConfig, _ctx: &Ctx, out: &mut Outputs) -> Result<Value> {
    let w = ghz_to_angular(cfg.j_ghz);
    let ideal_tau = match cfg.kind {
        GateKind::Iswap => Some(PI / 2.0 / w),
        GateKind::Bswap => Some(PI / w),
        GateKind::Cz => Some(PI / (2.0_f64.sqrt() * w)),
        GateKind::Cr => Some(PI / 2.0 / ghz_to_angular(cr_params(&cfg.cr).omega_cr()).abs()),
        GateKind::CnotCz | GateKind::CnotCr => None,
    };
    if matches!(cfg.kind, GateKind::Iswap | GateKind::Bswap | GateKind::Cz) {
        positive("j_ghz", cfg.j_ghz)?;
    }
    let tau = cfg.tau_ns.or(ideal_tau);
    if let Some(t) = tau {
        positive("tau_ns", t)?;
    }
    let t = tau.unwrap_or(0.0);
    let (u, target): (Operator, Operator) = match cfg.kind {
        GateKind::Iswap => (iswap(cfg.j_ghz, t), iswap_target()),
        GateKind::Bswap => (bswap(cfg.j_ghz, t), bswap(cfg.j_ghz, PI / w)),
        GateKind::Cz => (computational_block(&cz_coherent_exchange(cfg.j_ghz, t)), cz()),
        GateKind::Cr => {
            let r = cr_gate(&cr_params(&cfg.cr), t)?;
            (r.propagator, r.target)
        }
        GateKind::CnotCz => (cnot_from_cz(), cnot()),
        GateKind::CnotCr => (cnot_from_cr(), cnot()),
    };
    let n = u.dim();
    let rows = (0..n).flat_map(|r| (0..n).map(move |c| (r, c))).map(|(r, c)| {
        let z = u.get(r, c);
        vec![r.to_string(), c.to_string(), num(z.re), num(z.im)]
    });
    out.csv("unitary.csv", &["row", "col", "re", "im"], rows)?;
    Ok(json!({
        "kind": cfg.kind,
        "tau_ns": tau,
        "infidelity": gate_infidelity(&u, &target)?,
        "max_deviation": u.max_diff(&target),
        "phase_distance": u.phase_distance(&target),
        "unitary": u.is_unitary(1e-9),
    }))
}
