//! Banded matrices and a band LU solver with partial pivoting.

use crate::error::{Error, Result};

/// Pivots smaller than this multiple of the largest matrix entry are treated
/// as zero.
pub const PIVOT_RTOL: f64 = 1e-14;

/// Square matrix with `bandwidth` sub- and super-diagonals.
///
/// Row `i` stores columns `i - bandwidth ..= i + bandwidth`.
#[derive(Debug, Clone, PartialEq)]
pub struct BandedMatrix {
    dim: usize,
    bandwidth: usize,
    data: Vec<f64>,
}

impl BandedMatrix {
    pub fn zeros(dim: usize, bandwidth: usize) -> Self {
        Self {
            dim,
            bandwidth,
            data: vec![0.0; dim * (2 * bandwidth + 1)],
        }
    }

    pub fn identity(dim: usize, bandwidth: usize) -> Self {
        let mut m = Self::zeros(dim, bandwidth);
        for i in 0..dim {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn bandwidth(&self) -> usize {
        self.bandwidth
    }

    fn in_band(&self, i: usize, j: usize) -> bool {
        i < self.dim && j < self.dim && i.abs_diff(j) <= self.bandwidth
    }

    fn offset(&self, i: usize, j: usize) -> usize {
        i * (2 * self.bandwidth + 1) + (j + self.bandwidth - i)
    }

    /// Entry `(i, j)`; zero outside the band.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        if self.in_band(i, j) {
            self.data[self.offset(i, j)]
        } else {
            0.0
        }
    }

    /// # Panics
    /// If `(i, j)` lies outside the band.
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        assert!(self.in_band(i, j), "({i}, {j}) outside band");
        let k = self.offset(i, j);
        self.data[k] = value;
    }

    /// # Panics
    /// If `(i, j)` lies outside the band.
    pub fn add(&mut self, i: usize, j: usize, value: f64) {
        assert!(self.in_band(i, j), "({i}, {j}) outside band");
        let k = self.offset(i, j);
        self.data[k] += value;
    }

    /// Adds `value` to every diagonal entry `i` scaled by `diag[i]`.
    pub fn add_diagonal(&mut self, diag: &[f64], value: f64) {
        for (i, d) in diag.iter().enumerate() {
            self.add(i, i, value * d);
        }
    }

    pub fn scale(&mut self, factor: f64) {
        self.data.iter_mut().for_each(|v| *v *= factor);
    }

    /// `self + other` for matrices of equal dimension and bandwidth.
    pub fn plus(&self, other: &BandedMatrix) -> Result<BandedMatrix> {
        if self.dim != other.dim || self.bandwidth != other.bandwidth {
            return Err(Error::LengthMismatch {
                expected: self.dim,
                found: other.dim,
            });
        }
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        Ok(BandedMatrix {
            dim: self.dim,
            bandwidth: self.bandwidth,
            data,
        })
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let b = self.bandwidth;
        (0..self.dim)
            .map(|i| {
                let lo = i.saturating_sub(b);
                let hi = (i + b).min(self.dim - 1);
                (lo..=hi).map(|j| self.data[self.offset(i, j)] * x[j]).sum()
            })
            .collect()
    }
}

/// A banded matrix together with its right-hand side.
#[derive(Debug, Clone, PartialEq)]
pub struct BandedSystem {
    pub matrix: BandedMatrix,
    pub rhs: Vec<f64>,
}

impl BandedSystem {
    pub fn new(matrix: BandedMatrix, rhs: Vec<f64>) -> Result<Self> {
        if matrix.bandwidth == 0 {
            return Err(Error::InvalidParameter("bandwidth must be >= 1".into()));
        }
        if rhs.len() != matrix.dim {
            return Err(Error::LengthMismatch {
                expected: matrix.dim,
                found: rhs.len(),
            });
        }
        Ok(Self { matrix, rhs })
    }

    /// `A x - b`.
    pub fn residual(&self, x: &[f64]) -> Vec<f64> {
        self.matrix
            .mul_vec(x)
            .iter()
            .zip(&self.rhs)
            .map(|(ax, b)| ax - b)
            .collect()
    }
}

/// Solves `A x = b` by band Gaussian elimination with row pivoting.
///
/// Row interchanges widen the upper band from `bw` to `2 bw`, so the
/// factorisation works on a copy with that extra fill space.
pub fn solve_banded(system: &BandedSystem) -> Result<Vec<f64>> {
    let a = &system.matrix;
    let n = a.dim;
    let bw = a.bandwidth;
    let threshold = PIVOT_RTOL * a.max_abs();

    // Row i holds columns i - bw ..= i + 2 bw.
    let width = 3 * bw + 1;
    let idx = |i: usize, j: usize| i * width + (j + bw - i);
    let mut lu = vec![0.0; n * width];
    for i in 0..n {
        let lo = i.saturating_sub(bw);
        let hi = (i + bw).min(n.saturating_sub(1));
        for j in lo..=hi {
            lu[idx(i, j)] = a.get(i, j);
        }
    }
    let mut x = system.rhs.clone();

    for k in 0..n {
        let last_row = (k + bw).min(n - 1);
        let pivot_row = (k..=last_row)
            .max_by(|&p, &q| lu[idx(p, k)].abs().total_cmp(&lu[idx(q, k)].abs()))
            .unwrap_or(k);
        let pivot = lu[idx(pivot_row, k)];
        if pivot.abs() <= threshold || pivot == 0.0 {
            return Err(Error::Singular { column: k, pivot });
        }
        let last_col = (k + 2 * bw).min(n - 1);
        if pivot_row != k {
            for j in k..=last_col {
                lu.swap(idx(k, j), idx(pivot_row, j));
            }
            x.swap(k, pivot_row);
        }
        for i in k + 1..=last_row {
            let factor = lu[idx(i, k)] / pivot;
            if factor == 0.0 {
                continue;
            }
            lu[idx(i, k)] = 0.0;
            for j in k + 1..=last_col {
                lu[idx(i, j)] -= factor * lu[idx(k, j)];
            }
            x[i] -= factor * x[k];
        }
    }

    for i in (0..n).rev() {
        let last_col = (i + 2 * bw).min(n - 1);
        let mut s = x[i];
        for j in i + 1..=last_col {
            s -= lu[idx(i, j)] * x[j];
        }
        x[i] = s / lu[idx(i, i)];
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    /// Dense Gaussian elimination with full-column partial pivoting.
    #[allow(clippy::needless_range_loop)]
    fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
        let n = b.len();
        for k in 0..n {
            let p = (k..n)
                .max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs()))
                .unwrap();
            a.swap(k, p);
            b.swap(k, p);
            for i in k + 1..n {
                let f = a[i][k] / a[k][k];
                for j in k..n {
                    a[i][j] -= f * a[k][j];
                }
                b[i] -= f * b[k];
            }
        }
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let s: f64 = (i + 1..n).map(|j| a[i][j] * x[j]).sum();
            x[i] = (b[i] - s) / a[i][i];
        }
        x
    }

    #[test]
    fn identity_returns_rhs() {
        let rhs = vec![1.0, -2.0, 3.5, 0.25];
        let sys = BandedSystem::new(BandedMatrix::identity(4, 1), rhs.clone()).unwrap();
        assert_eq!(solve_banded(&sys).unwrap(), rhs);
    }

    #[test]
    fn two_by_two() {
        let mut m = BandedMatrix::zeros(2, 1);
        m.set(0, 0, 2.0);
        m.set(0, 1, 1.0);
        m.set(1, 0, 1.0);
        m.set(1, 1, 2.0);
        let sys = BandedSystem::new(m, vec![3.0, 3.0]).unwrap();
        let x = solve_banded(&sys).unwrap();
        assert_abs_diff_eq!(x[0], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(x[1], 1.0, epsilon = 1e-15);
    }

    #[test]
    fn zero_matrix_is_singular() {
        let sys = BandedSystem::new(BandedMatrix::zeros(3, 1), vec![1.0; 3]).unwrap();
        assert!(matches!(solve_banded(&sys), Err(Error::Singular { .. })));
    }

    #[test]
    fn needs_pivoting() {
        // Zero leading entry forces a row swap.
        let mut m = BandedMatrix::zeros(3, 1);
        m.set(0, 0, 0.0);
        m.set(0, 1, 1.0);
        m.set(1, 0, 1.0);
        m.set(1, 1, 1.0);
        m.set(1, 2, 1.0);
        m.set(2, 1, 1.0);
        m.set(2, 2, 3.0);
        let sys = BandedSystem::new(m, vec![2.0, 6.0, 11.0]).unwrap();
        let x = solve_banded(&sys).unwrap();
        for (xi, e) in x.iter().zip([1.0, 2.0, 3.0]) {
            assert_abs_diff_eq!(*xi, e, epsilon = 1e-14);
        }
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(BandedSystem::new(BandedMatrix::zeros(3, 0), vec![0.0; 3]).is_err());
        assert!(BandedSystem::new(BandedMatrix::zeros(3, 1), vec![0.0; 2]).is_err());
    }

    fn banded_case() -> impl Strategy<Value = (usize, usize, Vec<f64>, Vec<f64>)> {
        (1usize..=50, 1usize..=3).prop_flat_map(|(n, bw)| {
            (
                Just(n),
                Just(bw),
                proptest::collection::vec(-1.0f64..1.0, n * (2 * bw + 1)),
                proptest::collection::vec(-10.0f64..10.0, n),
            )
        })
    }

    proptest! {
        #[test]
        fn agrees_with_dense_solve((n, bw, entries, rhs) in banded_case()) {
            let mut m = BandedMatrix::zeros(n, bw);
            let mut dense = vec![vec![0.0; n]; n];
            for i in 0..n {
                for (o, j) in (i.saturating_sub(bw)..=(i + bw).min(n - 1)).enumerate() {
                    let mut v = entries[i * (2 * bw + 1) + o];
                    if i == j {
                        // Keep the system well conditioned.
                        v += 2.0 * (bw as f64 + 1.0) * v.signum().max(0.5);
                    }
                    m.set(i, j, v);
                    dense[i][j] = v;
                }
            }
            let sys = BandedSystem::new(m, rhs.clone()).unwrap();
            let x = solve_banded(&sys).unwrap();
            let y = dense_solve(dense, rhs.clone());
            let norm = y.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            for (a, b) in x.iter().zip(&y) {
                prop_assert!((a - b).abs() <= 1e-10 * norm.max(1.0));
            }
            let res = sys.residual(&x).iter().fold(0.0f64, |a, v| a.max(v.abs()));
            let rhs_norm = rhs.iter().map(|v| v * v).sum::<f64>().sqrt();
            prop_assert!(res <= 1e-12 * (1.0 + rhs_norm));
        }
    }
}
