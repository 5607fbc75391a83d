//! State-vector path for small codes, used for the `d = 2` worked example and
//! to cross-check the tableau. Qubit 0 is the most significant bit.

use num_complex::Complex64;
use rand::Rng;
use scq_core::qcore::CVector;
use scq_core::StateVector;

use crate::pauli::{Letter, PauliString};
use crate::QecError;

const D2_QUBITS: usize = 5;

fn mask(n: usize, q: usize) -> usize {
    1 << (n - 1 - q)
}

/// `P |psi>` for a Pauli string `P`.
pub fn apply_pauli(p: &PauliString, psi: &StateVector) -> Result<StateVector, QecError> {
    let n = p.len();
    if psi.dim() != 1 << n {
        return Err(QecError::Length { expected: 1 << n, got: psi.dim() });
    }
    let mut flip = 0usize;
    for q in 0..n {
        if p.x_bits()[q] {
            flip |= mask(n, q);
        }
    }
    let global = Complex64::i().powi(p.phase() as i32);
    let amps = psi.amplitudes();
    let mut out = CVector::zeros(psi.dim());
    for (k, a) in amps.iter().enumerate() {
        let mut f = global;
        for q in 0..n {
            let bit = k & mask(n, q) != 0;
            f *= match p.letter(q) {
                Letter::I | Letter::X => Complex64::new(1.0, 0.0),
                Letter::Z if bit => Complex64::new(-1.0, 0.0),
                Letter::Z => Complex64::new(1.0, 0.0),
                // Y|0> = i|1>, Y|1> = -i|0>.
                Letter::Y if bit => Complex64::new(0.0, -1.0),
                Letter::Y => Complex64::new(0.0, 1.0),
            };
        }
        out[k ^ flip] += f * a;
    }
    Ok(StateVector::new(out)?)
}

/// `<psi| P |psi>`, real for Hermitian `P`.
pub fn expectation(p: &PauliString, psi: &StateVector) -> Result<f64, QecError> {
    let q = apply_pauli(p, psi)?;
    Ok(psi.inner(&q).re)
}

/// Projective measurement of a Hermitian Pauli string. Returns `true` for
/// eigenvalue -1 together with the post-measurement state.
pub fn measure_stabilizer<R: Rng + ?Sized>(
    psi: &StateVector,
    s: &PauliString,
    rng: &mut R,
) -> Result<(bool, StateVector), QecError> {
    if !s.is_hermitian() {
        return Err(QecError::NotHermitian(s.to_string()));
    }
    let sp = apply_pauli(s, psi)?;
    let p_plus = (0.5 * (1.0 + psi.inner(&sp).re)).clamp(0.0, 1.0);
    let minus = rng.random::<f64>() >= p_plus;
    let sign = if minus { -1.0 } else { 1.0 };
    let projected = (psi.amplitudes() + sp.amplitudes() * Complex64::new(sign, 0.0)) * Complex64::new(0.5, 0.0);
    Ok((minus, StateVector::normalized(projected)?))
}

fn ket(bits: &str) -> usize {
    usize::from_str_radix(bits, 2).expect("binary label")
}

fn superposition(labels: &[&str]) -> StateVector {
    let mut v = CVector::zeros(1 << D2_QUBITS);
    let amp = Complex64::new(1.0 / (labels.len() as f64).sqrt(), 0.0);
    for l in labels {
        v[ket(l)] = amp;
    }
    StateVector::new(v).expect("normalized codeword")
}

/// The two `d = 2` codewords on data qubits `|D0 D1 D2 D3 D4>`.
pub fn d2_codewords() -> (StateVector, StateVector) {
    (superposition(&["00000", "00111", "11011", "11100"]), superposition(&["10010", "10101", "01001", "01110"]))
}

/// The four `d = 2` stabilizers: two X checks then two Z checks.
pub fn d2_stabilizers() -> [PauliString; 4] {
    ["XXXII", "IIXXX", "ZIZZI", "IZZIZ"].map(|s| s.parse().expect("valid Pauli string"))
}

/// Relabelling applied after transversal H: qubit `from` moves to `to`.
pub const D2_ROTATION: [(usize, usize); 5] = [(0, 1), (1, 4), (2, 2), (3, 0), (4, 3)];

/// Logical Hadamard on the `d = 2` code: H on every data qubit followed by
/// the lattice rotation `D0 -> D1, D1 -> D4, D3 -> D0, D4 -> D3`.
pub fn logical_h_d2(psi: &StateVector) -> Result<StateVector, QecError> {
    let n = D2_QUBITS;
    if psi.dim() != 1 << n {
        return Err(QecError::Length { expected: 1 << n, got: psi.dim() });
    }
    let h = scq_core::qcore::hadamard();
    let refs: Vec<_> = (0..n).map(|_| &h).collect();
    let hn = scq_core::qcore::tensor(&refs)?;
    let rotated = psi.evolve(&hn)?;
    let mut out = CVector::zeros(1 << n);
    for (k, a) in rotated.amplitudes().iter().enumerate() {
        let mut target = 0usize;
        for &(from, to) in &D2_ROTATION {
            if k & mask(n, from) != 0 {
                target |= mask(n, to);
            }
        }
        out[target] = *a;
    }
    Ok(StateVector::new(out)?)
}
