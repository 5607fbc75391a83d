//! One module per subcommand. Each has a config struct (defaults for every
//! key, unknown keys rejected) and a `run` that fills an [`Outputs`] and
//! returns the JSON report.

mod couple;
mod echo;
mod evolve;
mod experiment;
mod gate;
mod grape;
mod qec;
mod rb;
mod spectrum;

pub use couple::CoupleConfig;
pub use echo::EchoConfig;
pub use evolve::EvolveConfig;
pub use experiment::ExperimentConfig;
pub use gate::GateConfig;
pub use grape::GrapeConfig;
pub use qec::QecConfig;
pub use rb::RbCliConfig;
pub use spectrum::SpectrumConfig;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;

use crate::config::load;
use crate::output::{to_json, Outputs};
use crate::{CliError, Command, Result, RunConfig};

/// Per-run context handed to every subcommand.
#[derive(Debug, Clone, Copy)]
pub struct Ctx {
    pub seed: u64,
    pub verbosity: u8,
}

impl Ctx {
    pub fn log(&self, msg: impl FnOnce() -> String) {
        if self.verbosity > 1 {
            eprintln!("{}", msg());
        }
    }
}

pub struct Produced {
    pub outputs: Outputs,
    pub report: Value,
    pub raw_config: Vec<u8>,
    pub effective: Value,
}

fn go<T, F>(rc: &RunConfig, tweak: impl FnOnce(&mut T), body: F) -> Result<Produced>
where
    T: DeserializeOwned + Default + Serialize,
    F: FnOnce(&T, &Ctx, &mut Outputs) -> Result<Value>,
{
    let mut loaded = load::<T>(rc.config.as_deref())?;
    tweak(&mut loaded.value);
    let ctx = Ctx { seed: rc.seed, verbosity: rc.verbosity };
    let mut outputs = Outputs::new();
    let mut report = body(&loaded.value, &ctx, &mut outputs)?;
    crate::output::round_json(&mut report);
    outputs.json("report.json", &report);
    Ok(Produced { outputs, report, raw_config: loaded.raw, effective: to_json(&loaded.value)? })
}

pub fn dispatch(rc: &RunConfig) -> Result<Produced> {
    match &rc.command {
        Command::Spectrum => go(rc, |_| {}, spectrum::run),
        Command::Couple => go(rc, |_| {}, couple::run),
        Command::Evolve => go(rc, |_| {}, evolve::run),
        Command::Gate => go(rc, |_| {}, gate::run),
        Command::Grape => go(rc, |_| {}, grape::run),
        Command::Echo => go(rc, |_| {}, echo::run),
        Command::Qec(args) => go(rc, |c: &mut QecConfig| c.apply(args), qec::run),
        Command::Experiment => go(rc, |_| {}, experiment::run),
        Command::Rb => go(rc, |_| {}, rb::run),
    }
}

/// Library errors split into bad input (exit 2) and numerical failure (exit 3).
macro_rules! classify {
    ($ty:ty, $($config:pat),+ $(,)?) => {
        impl From<$ty> for CliError {
            fn from(e: $ty) -> Self {
                match e {
                    $($config)|+ => CliError::Config(e.to_string()),
                    _ => CliError::Numeric(e.to_string()),
                }
            }
        }
    };
}

use scq_core::circuits::CircuitError;
use scq_core::control::ControlError;
use scq_core::coupling::CouplingError;
use scq_core::dynamics::DynamicsError;
use scq_core::experiments::ExperimentError;
use scq_core::gates::GateError;
use scq_core::qcore::QcoreError;
use scq_qec::QecError;

classify!(
    CircuitError,
    CircuitError::InvalidParams(_),
    CircuitError::CutoffTooSmall(_),
    CircuitError::GridTooCoarse(_),
    CircuitError::TooManyLevels { .. },
    CircuitError::TooFewLevels,
    CircuitError::NotIsland,
    CircuitError::NotLoop,
);
classify!(
    CouplingError,
    CouplingError::InvalidParams(_),
    CouplingError::TruncationTooSmall(_),
    CouplingError::NotDispersive { .. },
    CouplingError::StepTooLarge { .. },
);
classify!(DynamicsError, DynamicsError::BadTimes, DynamicsError::BadStep(_), DynamicsError::Dimension { .. });
classify!(GateError, GateError::InvalidParams(_), GateError::NotDispersive { .. }, GateError::Dimension(..));
classify!(
    ControlError,
    ControlError::InvalidPulse(_),
    ControlError::ZeroAnharmonicity,
    ControlError::InvalidProblem(_),
    ControlError::InvalidSequence(_),
);
classify!(
    ExperimentError,
    ExperimentError::InvalidConfig(_),
    ExperimentError::InvalidSystem(_),
    ExperimentError::TooFewPoints(_),
);
classify!(QcoreError, QcoreError::InvalidBloch(_), QcoreError::InvalidDensity(_));
classify!(QecError, QecError::Distance(_), QecError::Noise(_));

/// `n` evenly spaced points over `[a, b]`.
pub fn grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![a],
        _ => (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect(),
    }
}
