//! Exact minimum-weight matching of syndrome defects with boundary nodes.

use serde::{Deserialize, Serialize};

use crate::lattice::{CheckKind, SurfaceLattice};
use crate::syndrome::SyndromeHistory;
use crate::QecError;

/// Largest defect set the exhaustive matcher accepts per check type.
pub const MAX_DEFECTS: usize = 14;

/// Accumulated X and Z corrections on the data qubits.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PauliFrame {
    pub x: Vec<bool>,
    pub z: Vec<bool>,
}

impl PauliFrame {
    pub fn new(n: usize) -> Self {
        Self { x: vec![false; n], z: vec![false; n] }
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn flip_x(&mut self, q: usize) {
        self.x[q] ^= true;
    }

    pub fn flip_z(&mut self, q: usize) {
        self.z[q] ^= true;
    }

    /// Elementwise product, ignoring phase.
    pub fn combine(&self, other: &PauliFrame) -> PauliFrame {
        PauliFrame {
            x: self.x.iter().zip(&other.x).map(|(a, b)| a ^ b).collect(),
            z: self.z.iter().zip(&other.z).map(|(a, b)| a ^ b).collect(),
        }
    }

    pub fn is_identity(&self) -> bool {
        !self.x.iter().chain(&self.z).any(|b| *b)
    }

    pub fn weight(&self) -> usize {
        self.x.iter().zip(&self.z).filter(|(x, z)| **x || **z).count()
    }

    pub fn to_pauli(&self) -> crate::pauli::PauliString {
        crate::pauli::PauliString::from_bits(self.x.clone(), self.z.clone(), 0).expect("equal lengths")
    }
}

/// A perfect matching where every defect pairs with another or with the
/// boundary.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Matching {
    pub pairs: Vec<(usize, usize)>,
    pub boundary: Vec<usize>,
    pub weight: usize,
}

/// Minimum-weight matching by dynamic programming over defect subsets. The
/// lowest unmatched defect is paired first, trying the boundary and then
/// partners in index order; only strict improvements replace the incumbent,
/// so ties resolve lexicographically.
pub fn minimum_weight_matching(pair: &[Vec<usize>], boundary: &[usize], limit: usize) -> Result<Matching, QecError> {
    let n = boundary.len();
    if n > limit {
        return Err(QecError::DecoderCapacity { defects: n, limit });
    }
    let full = (1usize << n) - 1;
    // best[mask] = (weight, choice) for the defects in `mask` still unmatched.
    let mut best: Vec<(usize, usize)> = vec![(usize::MAX, 0); 1 << n];
    best[0] = (0, 0);
    for mask in 1..=full {
        let i = mask.trailing_zeros() as usize;
        let rest = mask & !(1 << i);
        let mut incumbent = (best[rest].0.saturating_add(boundary[i]), i);
        let mut others = rest;
        while others != 0 {
            let j = others.trailing_zeros() as usize;
            others &= others - 1;
            let w = best[rest & !(1 << j)].0.saturating_add(pair[i][j]);
            if w < incumbent.0 {
                incumbent = (w, j);
            }
        }
        best[mask] = incumbent;
    }
    let mut pairs = Vec::new();
    let mut to_boundary = Vec::new();
    let mut mask = full;
    while mask != 0 {
        let i = mask.trailing_zeros() as usize;
        let j = best[mask].1;
        if j == i {
            to_boundary.push(i);
            mask &= !(1 << i);
        } else {
            pairs.push((i, j));
            mask &= !(1 << i) & !(1 << j);
        }
    }
    Ok(Matching { pairs, boundary: to_boundary, weight: best[full].0 })
}

/// Indices of flipped checks of one kind between the reference and the last
/// cycle.
fn defects(history: &SyndromeHistory, kind: CheckKind) -> Vec<usize> {
    let net = history.net_flips();
    let bits = match kind {
        CheckKind::X => &net.x_checks,
        CheckKind::Z => &net.z_checks,
    };
    bits.iter().enumerate().filter(|(_, b)| **b).map(|(i, _)| i).collect()
}

fn decode_kind(
    lattice: &SurfaceLattice,
    kind: CheckKind,
    found: &[usize],
    frame: &mut PauliFrame,
    limit: usize,
) -> Result<(), QecError> {
    let checks = lattice.checks(kind);
    let pair: Vec<Vec<usize>> =
        found.iter().map(|&a| found.iter().map(|&b| lattice.pair_distance(&checks[a], &checks[b])).collect()).collect();
    let boundary: Vec<usize> = found.iter().map(|&a| lattice.boundary_distance(&checks[a])).collect();
    let m = minimum_weight_matching(&pair, &boundary, limit)?;
    let mut flip = |q: usize| match kind {
        // X checks see Z errors and are corrected with Z.
        CheckKind::X => frame.flip_z(q),
        CheckKind::Z => frame.flip_x(q),
    };
    for (i, j) in m.pairs {
        for q in lattice.path_between(&checks[found[i]], &checks[found[j]]) {
            flip(q);
        }
    }
    for i in m.boundary {
        for q in lattice.path_to_boundary(&checks[found[i]]) {
            flip(q);
        }
    }
    Ok(())
}

/// Matching decoder. Extraction is noiseless, so the net flips between the
/// reference and the last cycle carry all the information; the correction is
/// returned as a Pauli frame rather than applied to the state.
pub fn mwpm_decode(history: &SyndromeHistory, lattice: &SurfaceLattice) -> Result<PauliFrame, QecError> {
    mwpm_decode_with_limit(history, lattice, MAX_DEFECTS)
}

pub fn mwpm_decode_with_limit(
    history: &SyndromeHistory,
    lattice: &SurfaceLattice,
    limit: usize,
) -> Result<PauliFrame, QecError> {
    let mut frame = PauliFrame::new(lattice.n_data());
    for kind in [CheckKind::X, CheckKind::Z] {
        let found = defects(history, kind);
        decode_kind(lattice, kind, &found, &mut frame, limit)?;
    }
    Ok(frame)
}
