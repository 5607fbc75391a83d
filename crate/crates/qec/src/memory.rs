//! Memory experiments: initialize `|0>_L`, run noisy cycles, decode, and
//! check the residual error against the logical operators.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::decoder::{mwpm_decode, PauliFrame};
use crate::lattice::SurfaceLattice;
use crate::syndrome::{extract_syndrome, lattice_tableau, syndrome_cycle, NoiseModel, SyndromeHistory};
use crate::QecError;

/// Two-sided normal quantile for the 95% Wilson interval.
const Z95: f64 = 1.959963984540054;

#[derive(Debug, Clone, Serialize)]
pub struct MemoryRun {
    pub history: SyndromeHistory,
    /// Product of all injected errors.
    pub errors: PauliFrame,
    /// `None` when the defect count exceeded the decoder limit.
    pub correction: Option<PauliFrame>,
    pub logical_failure: bool,
}

/// Residual anticommutes with `Z_L` or `X_L`.
pub fn is_logical_error(lattice: &SurfaceLattice, residual: &PauliFrame) -> bool {
    let r = residual.to_pauli();
    !r.commutes_with(&lattice.logical_z()) || !r.commutes_with(&lattice.logical_x())
}

/// One shot. Prepares `|0...0>`, takes a noiseless reference cycle (which
/// projects into `|0>_L`), then `cycles` noisy cycles.
pub fn run_memory<R: Rng + ?Sized>(
    lattice: &SurfaceLattice,
    noise: &NoiseModel,
    cycles: usize,
    rng: &mut R,
) -> Result<MemoryRun, QecError> {
    let mut tableau = lattice_tableau(lattice);
    let reference = extract_syndrome(lattice, &mut tableau, 0, rng)?;
    let mut history = SyndromeHistory::new(reference);
    let mut errors = PauliFrame::new(lattice.n_data());
    for t in 1..=cycles {
        let (s, e) = syndrome_cycle(lattice, &mut tableau, noise, t, rng)?;
        errors = errors.combine(&e);
        history.cycles.push(s);
    }
    let (correction, logical_failure) = match mwpm_decode(&history, lattice) {
        Ok(c) => {
            let failed = is_logical_error(lattice, &errors.combine(&c));
            (Some(c), failed)
        }
        Err(QecError::DecoderCapacity { .. }) => (None, true),
        Err(e) => return Err(e),
    };
    Ok(MemoryRun { history, errors, correction, logical_failure })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LogicalErrorEstimate {
    pub distance: usize,
    pub p: f64,
    pub cycles: usize,
    pub shots: usize,
    pub failures: usize,
    /// Shots whose defects exceeded the decoder limit; counted as failures.
    pub capacity_overflows: usize,
    pub rate: f64,
    /// 95% Wilson score interval.
    pub ci_low: f64,
    pub ci_high: f64,
}

pub fn wilson_interval(failures: usize, shots: usize) -> (f64, f64) {
    if shots == 0 {
        return (0.0, 1.0);
    }
    let n = shots as f64;
    let phat = failures as f64 / n;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / n;
    let centre = (phat + z2 / (2.0 * n)) / denom;
    let half = Z95 * (phat * (1.0 - phat) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    // The bounds are exact at the ends; cancellation would leave ~1e-19 there.
    let low = if failures == 0 { 0.0 } else { (centre - half).max(0.0) };
    let high = if failures == shots { 1.0 } else { (centre + half).min(1.0) };
    (low, high)
}

/// Per-shot generator: ChaCha8 keyed by `seed` on stream `shot`.
pub fn shot_rng(seed: u64, shot: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(shot);
    rng
}

/// Monte Carlo logical error rate with `p_x = p_z = p` per data qubit per
/// cycle.
pub fn logical_error_rate(
    distance: usize,
    p: f64,
    cycles: usize,
    shots: usize,
    seed: u64,
) -> Result<LogicalErrorEstimate, QecError> {
    let lattice = SurfaceLattice::new(distance)?;
    let noise = NoiseModel::depolarizing_like(p);
    noise.validate()?;
    let outcomes: Vec<(bool, bool)> = (0..shots as u64)
        .into_par_iter()
        .map(|shot| {
            let mut rng = shot_rng(seed, shot);
            run_memory(&lattice, &noise, cycles, &mut rng).map(|r| (r.logical_failure, r.correction.is_none()))
        })
        .collect::<Result<_, _>>()?;
    let failures = outcomes.iter().filter(|o| o.0).count();
    let capacity_overflows = outcomes.iter().filter(|o| o.1).count();
    let (ci_low, ci_high) = wilson_interval(failures, shots);
    Ok(LogicalErrorEstimate {
        distance,
        p,
        cycles,
        shots,
        failures,
        capacity_overflows,
        rate: if shots == 0 { 0.0 } else { failures as f64 / shots as f64 },
        ci_low,
        ci_high,
    })
}
