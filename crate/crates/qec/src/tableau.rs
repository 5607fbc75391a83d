//! Stabilizer tableau simulation of Clifford circuits (CHP algorithm).
//!
//! Rows `0..n` are destabilizers, `n..2n` stabilizers and row `2n` is
//! scratch. Each row stores packed `x` and `z` bits and a sign bit.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::pauli::{phase_exponent, PauliString};
use crate::QecError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "gate", rename_all = "lowercase")]
pub enum Gate {
    H {
        q: usize,
    },
    S {
        q: usize,
    },
    Sdg {
        q: usize,
    },
    X {
        q: usize,
    },
    Y {
        q: usize,
    },
    Z {
        q: usize,
    },
    Cnot {
        control: usize,
        target: usize,
    },
    Cz {
        a: usize,
        b: usize,
    },
    /// Not Clifford; always rejected.
    T {
        q: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StabilizerTableau {
    n: usize,
    words: usize,
    x: Vec<u64>,
    z: Vec<u64>,
    r: Vec<bool>,
}

/// Result of a Pauli measurement.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Measurement {
    /// `false` for eigenvalue +1, `true` for -1.
    pub outcome: bool,
    pub deterministic: bool,
}

impl StabilizerTableau {
    /// `|0...0>` on `n` qubits.
    pub fn new(n: usize) -> Self {
        let words = n.div_ceil(64).max(1);
        let rows = 2 * n + 1;
        let mut t = Self { n, words, x: vec![0; rows * words], z: vec![0; rows * words], r: vec![false; rows] };
        for q in 0..n {
            t.set_x(q, q, true);
            t.set_z(n + q, q, true);
        }
        t
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    #[inline]
    fn idx(&self, row: usize, q: usize) -> (usize, u64) {
        (row * self.words + q / 64, 1u64 << (q % 64))
    }

    #[inline]
    fn get_x(&self, row: usize, q: usize) -> bool {
        let (i, m) = self.idx(row, q);
        self.x[i] & m != 0
    }

    #[inline]
    fn get_z(&self, row: usize, q: usize) -> bool {
        let (i, m) = self.idx(row, q);
        self.z[i] & m != 0
    }

    #[inline]
    fn set_x(&mut self, row: usize, q: usize, v: bool) {
        let (i, m) = self.idx(row, q);
        if v {
            self.x[i] |= m
        } else {
            self.x[i] &= !m
        }
    }

    #[inline]
    fn set_z(&mut self, row: usize, q: usize, v: bool) {
        let (i, m) = self.idx(row, q);
        if v {
            self.z[i] |= m
        } else {
            self.z[i] &= !m
        }
    }

    fn check_qubit(&self, q: usize) -> Result<(), QecError> {
        if q < self.n {
            Ok(())
        } else {
            Err(QecError::Qubit { q, n: self.n })
        }
    }

    pub fn apply(&mut self, gate: Gate) -> Result<(), QecError> {
        match gate {
            Gate::H { q } => self.h(q),
            Gate::S { q } => self.s(q),
            Gate::Sdg { q } => {
                self.z_gate(q)?;
                self.s(q)
            }
            Gate::X { q } => self.x_gate(q),
            Gate::Y { q } => {
                self.x_gate(q)?;
                self.z_gate(q)
            }
            Gate::Z { q } => self.z_gate(q),
            Gate::Cnot { control, target } => self.cnot(control, target),
            Gate::Cz { a, b } => {
                self.h(b)?;
                self.cnot(a, b)?;
                self.h(b)
            }
            Gate::T { .. } => Err(QecError::UnsupportedGate("T".into())),
        }
    }

    pub fn h(&mut self, q: usize) -> Result<(), QecError> {
        self.check_qubit(q)?;
        for row in 0..2 * self.n {
            let (x, z) = (self.get_x(row, q), self.get_z(row, q));
            self.r[row] ^= x & z;
            self.set_x(row, q, z);
            self.set_z(row, q, x);
        }
        Ok(())
    }

    pub fn s(&mut self, q: usize) -> Result<(), QecError> {
        self.check_qubit(q)?;
        for row in 0..2 * self.n {
            let (x, z) = (self.get_x(row, q), self.get_z(row, q));
            self.r[row] ^= x & z;
            self.set_z(row, q, z ^ x);
        }
        Ok(())
    }

    pub fn x_gate(&mut self, q: usize) -> Result<(), QecError> {
        self.check_qubit(q)?;
        for row in 0..2 * self.n {
            self.r[row] ^= self.get_z(row, q);
        }
        Ok(())
    }

    pub fn z_gate(&mut self, q: usize) -> Result<(), QecError> {
        self.check_qubit(q)?;
        for row in 0..2 * self.n {
            self.r[row] ^= self.get_x(row, q);
        }
        Ok(())
    }

    pub fn cnot(&mut self, a: usize, b: usize) -> Result<(), QecError> {
        self.check_qubit(a)?;
        self.check_qubit(b)?;
        if a == b {
            return Err(QecError::UnsupportedGate("CNOT with control equal to target".into()));
        }
        for row in 0..2 * self.n {
            let (xa, za, xb, zb) = (self.get_x(row, a), self.get_z(row, a), self.get_x(row, b), self.get_z(row, b));
            self.r[row] ^= xa & zb & !(xb ^ za);
            self.set_x(row, b, xb ^ xa);
            self.set_z(row, a, za ^ zb);
        }
        Ok(())
    }

    /// Multiplies row `i` into row `h`, tracking the sign.
    fn rowsum(&mut self, h: usize, i: usize) {
        let mut k = 2 * (self.r[h] as i32) + 2 * (self.r[i] as i32);
        for q in 0..self.n {
            k += phase_exponent(self.get_x(i, q), self.get_z(i, q), self.get_x(h, q), self.get_z(h, q));
        }
        self.r[h] = k.rem_euclid(4) == 2;
        for w in 0..self.words {
            self.x[h * self.words + w] ^= self.x[i * self.words + w];
            self.z[h * self.words + w] ^= self.z[i * self.words + w];
        }
    }

    fn anticommutes(&self, row: usize, p: &PauliString) -> bool {
        let mut parity = false;
        for q in 0..self.n {
            parity ^= (self.get_x(row, q) & p.z_bits()[q]) ^ (self.get_z(row, q) & p.x_bits()[q]);
        }
        parity
    }

    fn check_pauli(&self, p: &PauliString) -> Result<(), QecError> {
        if p.len() != self.n {
            return Err(QecError::Length { expected: self.n, got: p.len() });
        }
        if !p.is_hermitian() {
            return Err(QecError::NotHermitian(p.to_string()));
        }
        Ok(())
    }

    /// Outcome of measuring `p` if it is determined, without collapsing.
    pub fn peek(&mut self, p: &PauliString) -> Result<Option<bool>, QecError> {
        self.check_pauli(p)?;
        if (self.n..2 * self.n).any(|row| self.anticommutes(row, p)) {
            return Ok(None);
        }
        Ok(Some(self.deterministic_outcome(p)))
    }

    fn deterministic_outcome(&mut self, p: &PauliString) -> bool {
        let scratch = 2 * self.n;
        for w in 0..self.words {
            self.x[scratch * self.words + w] = 0;
            self.z[scratch * self.words + w] = 0;
        }
        self.r[scratch] = false;
        for i in 0..self.n {
            if self.anticommutes(i, p) {
                self.rowsum(scratch, i + self.n);
            }
        }
        // The scratch row now equals the letters of `p` with the sign of the
        // stabilizer product.
        self.r[scratch] ^ (p.phase() == 2)
    }

    /// Projective measurement of a Hermitian Pauli string.
    pub fn measure_pauli<R: Rng + ?Sized>(&mut self, p: &PauliString, rng: &mut R) -> Result<Measurement, QecError> {
        self.check_pauli(p)?;
        let Some(pivot) = (self.n..2 * self.n).find(|&row| self.anticommutes(row, p)) else {
            return Ok(Measurement { outcome: self.deterministic_outcome(p), deterministic: true });
        };
        for row in 0..2 * self.n {
            if row != pivot && self.anticommutes(row, p) {
                self.rowsum(row, pivot);
            }
        }
        let d = pivot - self.n;
        for w in 0..self.words {
            self.x[d * self.words + w] = self.x[pivot * self.words + w];
            self.z[d * self.words + w] = self.z[pivot * self.words + w];
        }
        self.r[d] = self.r[pivot];
        let outcome: bool = rng.random();
        for q in 0..self.n {
            self.set_x(pivot, q, p.x_bits()[q]);
            self.set_z(pivot, q, p.z_bits()[q]);
        }
        self.r[pivot] = outcome ^ (p.phase() == 2);
        Ok(Measurement { outcome, deterministic: false })
    }

    /// Computational-basis measurement: outcome `true` means `|1>`.
    pub fn measure_z<R: Rng + ?Sized>(&mut self, q: usize, rng: &mut R) -> Result<Measurement, QecError> {
        self.check_qubit(q)?;
        let p = PauliString::single(self.n, q, crate::pauli::Letter::Z);
        self.measure_pauli(&p, rng)
    }

    /// Measures in Z and flips back to `|0>`.
    pub fn measure_reset<R: Rng + ?Sized>(&mut self, q: usize, rng: &mut R) -> Result<bool, QecError> {
        let m = self.measure_z(q, rng)?;
        if m.outcome {
            self.x_gate(q)?;
        }
        Ok(m.outcome)
    }

    /// Current stabilizer generators with their signs.
    pub fn stabilizers(&self) -> Vec<PauliString> {
        (self.n..2 * self.n)
            .map(|row| {
                let x = (0..self.n).map(|q| self.get_x(row, q)).collect();
                let z = (0..self.n).map(|q| self.get_z(row, q)).collect();
                PauliString::from_bits(x, z, if self.r[row] { 2 } else { 0 }).expect("equal lengths")
            })
            .collect()
    }
}
