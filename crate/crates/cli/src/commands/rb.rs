use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use scq_core::experiments::{
    rb_interleaved, rb_standard, ErrorChannel, InterleavedGate, NamedGate, RBConfig, RbCurve, ReadoutModel, Spam,
};
use scq_core::qcore::Axis;

use super::Ctx;
use crate::output::{to_json, Outputs};
use crate::Result;

/// Error channel after each gate, with unit-suffixed keys.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ErrorSpec {
    None,
    Depolarizing { r: f64 },
    Relaxation { gamma1_per_ns: f64, gamma_phi_per_ns: f64, gate_time_ns: f64 },
    Coherent { axis: Axis, angle_rad: f64 },
}

impl Default for ErrorSpec {
    fn default() -> Self {
        Self::Depolarizing { r: 0.01 }
    }
}

impl ErrorSpec {
    fn channel(self) -> ErrorChannel {
        match self {
            Self::None => ErrorChannel::None,
            Self::Depolarizing { r } => ErrorChannel::Depolarizing { r },
            Self::Relaxation { gamma1_per_ns, gamma_phi_per_ns, gate_time_ns } => {
                ErrorChannel::Relaxation { gamma1: gamma1_per_ns, gamma_phi: gamma_phi_per_ns, gate_time: gate_time_ns }
            }
            Self::Coherent { axis, angle_rad } => ErrorChannel::Coherent { axis, angle: angle_rad },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpamSection {
    /// Probability of starting in `|1>`.
    pub prep_error: f64,
    pub e01: f64,
    pub e10: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InterleavedSection {
    pub gate: NamedGate,
    #[serde(default = "no_error")]
    pub error: ErrorSpec,
}

fn no_error() -> ErrorSpec {
    ErrorSpec::None
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RbCliConfig {
    pub lengths: Vec<usize>,
    pub sequences: usize,
    /// Shots per sequence; zero uses exact probabilities.
    pub shots: usize,
    pub error: ErrorSpec,
    pub spam: SpamSection,
    /// Present for interleaved RB.
    pub interleaved: Option<InterleavedSection>,
}

impl Default for RbCliConfig {
    fn default() -> Self {
        Self {
            lengths: vec![1, 5, 10, 20, 40, 60, 80, 100, 150, 200],
            sequences: 1000,
            shots: 100,
            error: ErrorSpec::default(),
            spam: SpamSection::default(),
            interleaved: None,
        }
    }
}

impl RbCliConfig {
    pub fn to_rb(&self, seed: u64) -> RBConfig {
        RBConfig {
            lengths: self.lengths.clone(),
            sequences: self.sequences,
            shots: self.shots,
            error: self.error.channel(),
            spam: Spam {
                prep_error: self.spam.prep_error,
                readout: ReadoutModel { e01: self.spam.e01, e10: self.spam.e10 },
            },
            interleaved: self.interleaved.map(|g| InterleavedGate { gate: g.gate, error: g.error.channel() }),
            seed,
        }
    }
}

fn lengths_f64(c: &RbCurve) -> Vec<f64> {
    c.lengths.iter().map(|&m| m as f64).collect()
}

pub fn run(cfg: &RbCliConfig, ctx: &Ctx, out: &mut Outputs) -> Result<Value> {
    let rb = cfg.to_rb(ctx.seed);
    if rb.interleaved.is_none() {
        let r = rb_standard(&rb)?;
        let c = &r.curve;
        out.numeric_csv("survival.csv", &["length", "survival", "stderr"], &[&lengths_f64(c), &c.survival, &c.stderr])?;
        return Ok(json!({ "mode": "standard", "r": r.r, "sigma_r": r.sigma_r, "fit": to_json(&c.fit)? }));
    }
    let r = rb_interleaved(&rb)?;
    let (a, b) = (&r.reference.curve, &r.interleaved);
    out.numeric_csv(
        "survival.csv",
        &["length", "reference", "reference_stderr", "interleaved", "interleaved_stderr"],
        &[&lengths_f64(a), &a.survival, &a.stderr, &b.survival, &b.stderr],
    )?;
    Ok(json!({
        "mode": "interleaved",
        "r": r.reference.r,
        "sigma_r": r.reference.sigma_r,
        "p_c": r.p_c,
        "r_c": r.r_c,
        "sigma_r_c": r.sigma_r_c,
        "r_c_bounds": [r.bounds.0, r.bounds.1],
        "reference_fit": to_json(&a.fit)?,
        "interleaved_fit": to_json(&b.fit)?,
    }))
}
