//! Syndrome extraction circuits and phenomenological noise.
//!
//! Tableau qubits are ordered data (row-major), X-check ancillas, Z-check
//! ancillas. A Z check is four CNOTs from its data qubits onto a `|0>`
//! ancilla; an X check wraps CNOTs from the ancilla onto the data in H gates.

use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::decoder::PauliFrame;
use crate::lattice::SurfaceLattice;
use crate::tableau::StabilizerTableau;
use crate::QecError;

/// Raw check outcomes of one cycle; `true` is eigenvalue -1.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Syndrome {
    pub cycle: usize,
    pub x_checks: Vec<bool>,
    pub z_checks: Vec<bool>,
}

impl Syndrome {
    pub fn is_trivial(&self) -> bool {
        !self.x_checks.iter().chain(&self.z_checks).any(|b| *b)
    }

    pub fn flips(&self, reference: &Syndrome) -> Syndrome {
        let xor = |a: &[bool], b: &[bool]| a.iter().zip(b).map(|(x, y)| x ^ y).collect();
        Syndrome {
            cycle: self.cycle,
            x_checks: xor(&self.x_checks, &reference.x_checks),
            z_checks: xor(&self.z_checks, &reference.z_checks),
        }
    }

    pub fn defect_count(&self) -> usize {
        self.x_checks.iter().chain(&self.z_checks).filter(|b| **b).count()
    }
}

/// Reference cycle taken right after initialization, then the noisy cycles.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SyndromeHistory {
    pub reference: Syndrome,
    pub cycles: Vec<Syndrome>,
}

impl SyndromeHistory {
    pub fn new(reference: Syndrome) -> Self {
        Self { reference, cycles: Vec::new() }
    }

    /// Last cycle relative to the reference (trivial when no cycles ran).
    pub fn net_flips(&self) -> Syndrome {
        self.cycles.last().unwrap_or(&self.reference).flips(&self.reference)
    }

    /// Detection events of cycle `t` relative to the previous one.
    pub fn detection_events(&self, t: usize) -> Syndrome {
        let prev = if t == 0 { &self.reference } else { &self.cycles[t - 1] };
        self.cycles[t].flips(prev)
    }

    /// One CSV row per cycle, reference first: `cycle`, X-check bits
    /// row-major, then Z-check bits row-major.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), QecError> {
        let mut w = csv::Writer::from_writer(out);
        let nx = self.reference.x_checks.len();
        let nz = self.reference.z_checks.len();
        let mut header = vec!["cycle".to_string()];
        header.extend((0..nx).map(|i| format!("x{i}")));
        header.extend((0..nz).map(|i| format!("z{i}")));
        w.write_record(&header)?;
        for s in std::iter::once(&self.reference).chain(&self.cycles) {
            let mut row = vec![s.cycle.to_string()];
            row.extend(s.x_checks.iter().chain(&s.z_checks).map(|b| (*b as u8).to_string()));
            w.write_record(&row)?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

/// Independent X and Z flips on every data qubit each cycle.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct NoiseModel {
    pub p_x: f64,
    pub p_z: f64,
}

impl NoiseModel {
    pub fn depolarizing_like(p: f64) -> Self {
        Self { p_x: p, p_z: p }
    }

    pub fn validate(&self) -> Result<(), QecError> {
        if !(0.0..=1.0).contains(&self.p_x) || !(0.0..=1.0).contains(&self.p_z) {
            return Err(QecError::Noise(format!("probabilities must lie in [0, 1], got {self:?}")));
        }
        Ok(())
    }
}

pub fn x_ancilla(lattice: &SurfaceLattice, k: usize) -> usize {
    lattice.n_data() + k
}

pub fn z_ancilla(lattice: &SurfaceLattice, k: usize) -> usize {
    lattice.n_data() + lattice.x_checks().len() + k
}

/// Fresh tableau with every qubit in `|0>`.
pub fn lattice_tableau(lattice: &SurfaceLattice) -> StabilizerTableau {
    StabilizerTableau::new(lattice.n_qubits())
}

/// Runs all X-check circuits, then all Z-check circuits, measuring and
/// resetting each ancilla.
pub fn extract_syndrome<R: Rng + ?Sized>(
    lattice: &SurfaceLattice,
    tableau: &mut StabilizerTableau,
    cycle: usize,
    rng: &mut R,
) -> Result<Syndrome, QecError> {
    if tableau.n_qubits() != lattice.n_qubits() {
        return Err(QecError::Length { expected: lattice.n_qubits(), got: tableau.n_qubits() });
    }
    let mut x_checks = Vec::with_capacity(lattice.x_checks().len());
    for (k, check) in lattice.x_checks().iter().enumerate() {
        let a = x_ancilla(lattice, k);
        tableau.h(a)?;
        for &q in &check.data {
            tableau.cnot(a, q)?;
        }
        tableau.h(a)?;
        x_checks.push(tableau.measure_reset(a, rng)?);
    }
    let mut z_checks = Vec::with_capacity(lattice.z_checks().len());
    for (k, check) in lattice.z_checks().iter().enumerate() {
        let a = z_ancilla(lattice, k);
        for &q in &check.data {
            tableau.cnot(q, a)?;
        }
        z_checks.push(tableau.measure_reset(a, rng)?);
    }
    Ok(Syndrome { cycle, x_checks, z_checks })
}

/// Draws one cycle of data-qubit errors.
pub fn sample_errors<R: Rng + ?Sized>(n_data: usize, noise: &NoiseModel, rng: &mut R) -> PauliFrame {
    let mut e = PauliFrame::new(n_data);
    for q in 0..n_data {
        if noise.p_x > 0.0 && rng.random::<f64>() < noise.p_x {
            e.flip_x(q);
        }
        if noise.p_z > 0.0 && rng.random::<f64>() < noise.p_z {
            e.flip_z(q);
        }
    }
    e
}

/// Applies a Pauli frame to the data qubits of the tableau.
pub fn apply_frame(tableau: &mut StabilizerTableau, frame: &PauliFrame) -> Result<(), QecError> {
    for q in 0..frame.len() {
        if frame.x[q] {
            tableau.x_gate(q)?;
        }
        if frame.z[q] {
            tableau.z_gate(q)?;
        }
    }
    Ok(())
}

/// One noisy cycle: inject errors, then extract. Returns the syndrome and
/// the injected errors.
pub fn syndrome_cycle<R: Rng + ?Sized>(
    lattice: &SurfaceLattice,
    tableau: &mut StabilizerTableau,
    noise: &NoiseModel,
    cycle: usize,
    rng: &mut R,
) -> Result<(Syndrome, PauliFrame), QecError> {
    noise.validate()?;
    let errors = sample_errors(lattice.n_data(), noise, rng);
    apply_frame(tableau, &errors)?;
    let s = extract_syndrome(lattice, tableau, cycle, rng)?;
    Ok((s, errors))
}
