//! Qubit layout of a distance-`d` surface code.
//!
//! The lattice is a `(2d-1) x (2d-1)` grid addressed by `(row, col)` from the
//! top-left corner. Sites with `row + col` even hold data qubits. Odd sites
//! hold syndrome qubits: X checks on even rows, Z checks on odd rows. For
//! `d = 2` this gives
//!
//! ```text
//!   D0  Xa  D1
//!   Za  D2  Zb
//!   D3  Xb  D4
//! ```
//!
//! with data, X checks and Z checks each numbered row-major. X-check defects
//! terminate on the left and right edges, Z-check defects on the top and
//! bottom edges. `Z_L` runs along the top row of data qubits and `X_L` down
//! the left column.

use serde::Serialize;

use crate::pauli::{Letter, PauliString};
use crate::QecError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Role {
    Data,
    XCheck,
    ZCheck,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CheckKind {
    X,
    Z,
}

/// One stabilizer measurement: its site and the data qubits it touches, in
/// CNOT order (north, west, east, south).
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Check {
    pub kind: CheckKind,
    pub site: (usize, usize),
    pub data: Vec<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SurfaceLattice {
    distance: usize,
    roles: Vec<Vec<Role>>,
    data_sites: Vec<(usize, usize)>,
    x_checks: Vec<Check>,
    z_checks: Vec<Check>,
}

impl SurfaceLattice {
    pub fn new(distance: usize) -> Result<Self, QecError> {
        if distance < 2 {
            return Err(QecError::Distance(distance));
        }
        let size = 2 * distance - 1;
        let role = |r: usize, c: usize| match ((r + c) % 2, r % 2) {
            (0, _) => Role::Data,
            (_, 0) => Role::XCheck,
            _ => Role::ZCheck,
        };
        let roles: Vec<Vec<Role>> = (0..size).map(|r| (0..size).map(|c| role(r, c)).collect()).collect();
        let data_sites: Vec<(usize, usize)> = (0..size)
            .flat_map(|r| (0..size).map(move |c| (r, c)))
            .filter(|&(r, c)| roles[r][c] == Role::Data)
            .collect();
        let data_index = |r: usize, c: usize| data_sites.iter().position(|&s| s == (r, c));
        let mut x_checks = Vec::new();
        let mut z_checks = Vec::new();
        for r in 0..size {
            for c in 0..size {
                let kind = match roles[r][c] {
                    Role::Data => continue,
                    Role::XCheck => CheckKind::X,
                    Role::ZCheck => CheckKind::Z,
                };
                let mut data = Vec::with_capacity(4);
                let neighbours = [
                    r.checked_sub(1).map(|rr| (rr, c)),
                    c.checked_sub(1).map(|cc| (r, cc)),
                    (c + 1 < size).then_some((r, c + 1)),
                    (r + 1 < size).then_some((r + 1, c)),
                ];
                for (rr, cc) in neighbours.into_iter().flatten() {
                    data.push(data_index(rr, cc).expect("neighbours of a check are data"));
                }
                let check = Check { kind, site: (r, c), data };
                match kind {
                    CheckKind::X => x_checks.push(check),
                    CheckKind::Z => z_checks.push(check),
                }
            }
        }
        Ok(Self { distance, roles, data_sites, x_checks, z_checks })
    }

    pub fn distance(&self) -> usize {
        self.distance
    }

    /// Grid side length `2d - 1`.
    pub fn size(&self) -> usize {
        2 * self.distance - 1
    }

    pub fn role(&self, r: usize, c: usize) -> Role {
        self.roles[r][c]
    }

    pub fn n_data(&self) -> usize {
        self.data_sites.len()
    }

    pub fn n_qubits(&self) -> usize {
        self.size() * self.size()
    }

    pub fn data_site(&self, q: usize) -> (usize, usize) {
        self.data_sites[q]
    }

    pub fn data_index(&self, site: (usize, usize)) -> Option<usize> {
        self.data_sites.iter().position(|&s| s == site)
    }

    pub fn x_checks(&self) -> &[Check] {
        &self.x_checks
    }

    pub fn z_checks(&self) -> &[Check] {
        &self.z_checks
    }

    pub fn checks(&self, kind: CheckKind) -> &[Check] {
        match kind {
            CheckKind::X => &self.x_checks,
            CheckKind::Z => &self.z_checks,
        }
    }

    /// Stabilizer of a check on the data qubits.
    pub fn stabilizer(&self, check: &Check) -> PauliString {
        let letter = match check.kind {
            CheckKind::X => Letter::X,
            CheckKind::Z => Letter::Z,
        };
        PauliString::on(self.n_data(), &check.data, letter)
    }

    /// All X stabilizers then all Z stabilizers.
    pub fn stabilizers(&self) -> Vec<PauliString> {
        self.x_checks.iter().chain(&self.z_checks).map(|c| self.stabilizer(c)).collect()
    }

    /// `Z` on every data qubit of the top row.
    pub fn logical_z(&self) -> PauliString {
        let row: Vec<usize> = (0..self.n_data()).filter(|&q| self.data_sites[q].0 == 0).collect();
        PauliString::on(self.n_data(), &row, Letter::Z)
    }

    /// `X` on every data qubit of the left column.
    pub fn logical_x(&self) -> PauliString {
        let col: Vec<usize> = (0..self.n_data()).filter(|&q| self.data_sites[q].1 == 0).collect();
        PauliString::on(self.n_data(), &col, Letter::X)
    }

    /// Position of a check on its matching graph, in check-grid units.
    pub(crate) fn graph_position(&self, check: &Check) -> (usize, usize) {
        (check.site.0 / 2, check.site.1 / 2)
    }

    /// Data qubits along the shortest path between two checks of the same
    /// kind: along the boundary-parallel direction first, then across.
    pub(crate) fn path_between(&self, a: &Check, b: &Check) -> Vec<usize> {
        debug_assert_eq!(a.kind, b.kind);
        let (r1, c1) = a.site;
        let (r2, c2) = b.site;
        let mut out = Vec::new();
        // Data between horizontally adjacent checks sit on the same row at
        // the column in between; likewise vertically.
        let (lo, hi) = (c1.min(c2), c1.max(c2));
        let mut c = lo + 1;
        while c < hi {
            out.push(self.data_index((r1, c)).expect("data between checks"));
            c += 2;
        }
        let (lo, hi) = (r1.min(r2), r1.max(r2));
        let mut r = lo + 1;
        while r < hi {
            out.push(self.data_index((r, c2)).expect("data between checks"));
            r += 2;
        }
        out
    }

    /// Shortest chain from a check to its nearest boundary, with ties going
    /// to the left or top edge.
    pub(crate) fn path_to_boundary(&self, a: &Check) -> Vec<usize> {
        let (r, c) = a.site;
        let last = self.size() - 1;
        let mut out = Vec::new();
        match a.kind {
            CheckKind::X => {
                if c <= last - c {
                    let mut cc = c as isize - 1;
                    while cc >= 0 {
                        out.push(self.data_index((r, cc as usize)).expect("data on row"));
                        cc -= 2;
                    }
                } else {
                    let mut cc = c + 1;
                    while cc <= last {
                        out.push(self.data_index((r, cc)).expect("data on row"));
                        cc += 2;
                    }
                }
            }
            CheckKind::Z => {
                if r <= last - r {
                    let mut rr = r as isize - 1;
                    while rr >= 0 {
                        out.push(self.data_index((rr as usize, c)).expect("data on column"));
                        rr -= 2;
                    }
                } else {
                    let mut rr = r + 1;
                    while rr <= last {
                        out.push(self.data_index((rr, c)).expect("data on column"));
                        rr += 2;
                    }
                }
            }
        }
        out
    }

    pub(crate) fn boundary_distance(&self, a: &Check) -> usize {
        self.path_to_boundary(a).len()
    }

    pub(crate) fn pair_distance(&self, a: &Check, b: &Check) -> usize {
        let (r1, c1) = self.graph_position(a);
        let (r2, c2) = self.graph_position(b);
        r1.abs_diff(r2) + c1.abs_diff(c2)
    }
}
