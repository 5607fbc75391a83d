//! Real symmetric tridiagonal eigenproblems: Sturm-sequence bisection for
//! the lowest eigenvalues and inverse iteration for their eigenvectors.

/// Symmetric tridiagonal matrix with `diag[i]` on the diagonal and
/// `off[i]` coupling rows `i` and `i + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymTridiagonal {
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
}

impl SymTridiagonal {
    pub fn new(diag: Vec<f64>, off: Vec<f64>) -> Self {
        assert!(diag.is_empty() || off.len() + 1 == diag.len());
        Self { diag, off }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    fn gershgorin(&self) -> (f64, f64) {
        let n = self.len();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let left = if i > 0 { self.off[i - 1].abs() } else { 0.0 };
            let right = if i + 1 < n { self.off[i].abs() } else { 0.0 };
            lo = lo.min(self.diag[i] - left - right);
            hi = hi.max(self.diag[i] + left + right);
        }
        (lo, hi)
    }

    /// Number of eigenvalues strictly below `x`.
    pub fn count_below(&self, x: f64) -> usize {
        let mut count = 0;
        let mut q = 1.0;
        for i in 0..self.len() {
            let e2 = if i > 0 { self.off[i - 1] * self.off[i - 1] } else { 0.0 };
            q = self.diag[i] - x - if i > 0 { e2 / q } else { 0.0 };
            if q == 0.0 {
                q = -f64::EPSILON * (self.diag[i].abs() + x.abs() + 1.0);
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// The `k` smallest eigenvalues in ascending order.
    pub fn lowest_eigenvalues(&self, k: usize) -> Vec<f64> {
        let (lo0, hi0) = self.gershgorin();
        let span = (hi0 - lo0).abs().max(1.0);
        (0..k.min(self.len()))
            .map(|j| {
                let (mut lo, mut hi) = (lo0 - 1e-9 * span, hi0 + 1e-9 * span);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if mid <= lo || mid >= hi {
                        break;
                    }
                    if self.count_below(mid) > j {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                0.5 * (lo + hi)
            })
            .collect()
    }

    /// Unit eigenvector for eigenvalue `lambda`, orthogonalized against
    /// `previous` to separate close pairs.
    pub fn eigenvector(&self, lambda: f64, previous: &[Vec<f64>]) -> Vec<f64> {
        let n = self.len();
        let scale = self.diag.iter().fold(1.0_f64, |m, d| m.max(d.abs()));
        let shift = lambda + 1e-13 * scale;
        let mut x: Vec<f64> = (0..n).map(|i| 1.0 + 0.01 * ((i * 7919) % 101) as f64).collect();
        for _ in 0..4 {
            for p in previous {
                let dot: f64 = x.iter().zip(p).map(|(a, b)| a * b).sum();
                x.iter_mut().zip(p).for_each(|(a, b)| *a -= dot * b);
            }
            x = self.solve_shifted(shift, &x);
            let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            x.iter_mut().for_each(|v| *v /= norm);
        }
        for p in previous {
            let dot: f64 = x.iter().zip(p).map(|(a, b)| a * b).sum();
            x.iter_mut().zip(p).for_each(|(a, b)| *a -= dot * b);
        }
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        x.iter_mut().for_each(|v| *v /= norm);
        // Fix the sign so the largest component is positive.
        let big = x.iter().fold(0.0_f64, |m, &v| if v.abs() > m.abs() { v } else { m });
        if big < 0.0 {
            x.iter_mut().for_each(|v| *v = -*v);
        }
        x
    }

    /// Solves `(T - shift I) y = b` by Gaussian elimination with partial
    /// pivoting on the band.
    fn solve_shifted(&self, shift: f64, b: &[f64]) -> Vec<f64> {
        let n = self.len();
        if n == 1 {
            let d = self.diag[0] - shift;
            return vec![b[0] / if d == 0.0 { f64::EPSILON } else { d }];
        }
        let mut main: Vec<f64> = self.diag.iter().map(|d| d - shift).collect();
        let mut sup1: Vec<f64> = self.off.clone();
        sup1.push(0.0);
        let mut sup2 = vec![0.0; n];
        let sub = &self.off;
        let mut rhs = b.to_vec();
        let tiny = f64::EPSILON * self.diag.iter().fold(1.0_f64, |m, d| m.max(d.abs()));
        for i in 0..n - 1 {
            if main[i].abs() >= sub[i].abs() {
                if main[i].abs() < tiny {
                    main[i] = tiny;
                }
                let factor = sub[i] / main[i];
                main[i + 1] -= factor * sup1[i];
                rhs[i + 1] -= factor * rhs[i];
            } else {
                // Row swap: the sub-diagonal entry becomes the pivot.
                let factor = main[i] / sub[i];
                let (d_next, du_i, du_next) = (main[i + 1], sup1[i], sup1[i + 1]);
                main[i] = sub[i];
                sup1[i] = d_next;
                sup2[i] = du_next;
                main[i + 1] = du_i - factor * d_next;
                sup1[i + 1] = -factor * du_next;
                let (b_i, b_next) = (rhs[i], rhs[i + 1]);
                rhs[i] = b_next;
                rhs[i + 1] = b_i - factor * b_next;
            }
        }
        if main[n - 1].abs() < tiny {
            main[n - 1] = tiny;
        }
        let mut y = vec![0.0; n];
        for i in (0..n).rev() {
            let mut acc = rhs[i];
            if i + 1 < n {
                acc -= sup1[i] * y[i + 1];
            }
            if i + 2 < n {
                acc -= sup2[i] * y[i + 2];
            }
            y[i] = acc / main[i];
        }
        y
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let n = self.len();
        nalgebra::DMatrix::from_fn(n, n, |r, c| {
            if r == c {
                self.diag[r]
            } else if r + 1 == c {
                self.off[r]
            } else if c + 1 == r {
                self.off[c]
            } else {
                0.0
            }
        })
    }
}
