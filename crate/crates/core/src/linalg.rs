//! Small dense matrices and a banded LU solver.
//!
//! Local (I+1)×(I+1) blocks use [`DenseMatrix`]; the per-step global systems are
//! banded once unknowns are ordered cell-major, so [`BandedMatrix`] factors them
//! with partial pivoting in O(N·kl·(kl+ku)).

use std::ops::{Index, IndexMut};

use serde::Serialize;

use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum LinalgError {
    #[error("matrix is singular at pivot {pivot}")]
    Singular { pivot: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("matrix is not positive definite (failed at row {row})")]
    NotPositiveDefinite { row: usize },
}

/// Row-major square or rectangular matrix.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DenseMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Real> DenseMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut m = Self::zeros(r, c);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), c, "ragged rows");
            m.data[i * c..(i + 1) * c].copy_from_slice(row);
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "matmul shape");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == T::zero() {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        assert_eq!(self.cols, x.len(), "mul_vec shape");
        (0..self.rows).map(|i| self.row(i).iter().zip(x).map(|(&a, &b)| a * b).sum()).collect()
    }

    /// ζᵀ A ζ.
    pub fn quadratic_form(&self, z: &[T]) -> T {
        self.mul_vec(z).iter().zip(z).map(|(&a, &b)| a * b).sum()
    }

    pub fn scaled(&self, s: T) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&v| v * s).collect() }
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.data.iter().zip(&other.data).fold(T::zero(), |m, (&a, &b)| m.max((a - b).abs()))
    }

    pub fn is_symmetric(&self) -> bool {
        self.rows == self.cols && (0..self.rows).all(|i| (0..i).all(|j| self[(i, j)] == self[(j, i)]))
    }

    /// Lower Cholesky factor; fails unless the matrix is symmetric positive definite.
    pub fn cholesky(&self) -> Result<Self, LinalgError> {
        let n = self.rows;
        let mut l = Self::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let mut s = self[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                if i == j {
                    if !(s > T::zero()) {
                        return Err(LinalgError::NotPositiveDefinite { row: i });
                    }
                    l[(i, i)] = s.sqrt();
                } else {
                    l[(i, j)] = s / l[(j, j)];
                }
            }
        }
        Ok(l)
    }

    /// Solves `A x = b` by Gaussian elimination with partial pivoting.
    pub fn solve(&self, b: &[T]) -> Result<Vec<T>, LinalgError> {
        let n = self.rows;
        if self.cols != n || b.len() != n {
            return Err(LinalgError::Dimension { expected: n, got: b.len() });
        }
        let mut a = self.data.clone();
        let mut x = b.to_vec();
        for k in 0..n {
            let p = (k..n).max_by(|&i, &j| a[i * n + k].abs().partial_cmp(&a[j * n + k].abs()).unwrap()).unwrap();
            if a[p * n + k] == T::zero() || !a[p * n + k].is_finite() {
                return Err(LinalgError::Singular { pivot: k });
            }
            if p != k {
                for j in 0..n {
                    a.swap(k * n + j, p * n + j);
                }
                x.swap(k, p);
            }
            for i in k + 1..n {
                let m = a[i * n + k] / a[k * n + k];
                if m == T::zero() {
                    continue;
                }
                for j in k..n {
                    let v = a[k * n + j];
                    a[i * n + j] -= m * v;
                }
                let v = x[k];
                x[i] -= m * v;
            }
        }
        for k in (0..n).rev() {
            let mut s = x[k];
            for j in k + 1..n {
                s -= a[k * n + j] * x[j];
            }
            x[k] = s / a[k * n + k];
        }
        Ok(x)
    }

    pub fn inverse(&self) -> Result<Self, LinalgError> {
        let n = self.rows;
        let mut inv = Self::zeros(n, n);
        for j in 0..n {
            let mut e = vec![T::zero(); n];
            e[j] = T::one();
            let col = self.solve(&e)?;
            for i in 0..n {
                inv[(i, j)] = col[i];
            }
        }
        Ok(inv)
    }
}

impl<T> Index<(usize, usize)> for DenseMatrix<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for DenseMatrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

/// Square banded matrix with `kl` sub- and `ku` super-diagonals.
///
/// Each row keeps `2·kl + ku + 1` slots so that the fill-in created by row
/// interchanges during factorization stays inside the band.
#[derive(Debug, Clone)]
pub struct BandedMatrix<T> {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<T>,
}

impl<T: Real> BandedMatrix<T> {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        Self { n, kl, ku, width, data: vec![T::zero(); n * width] }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    fn slot(&self, i: usize, j: usize) -> Option<usize> {
        if j + self.kl < i || j > i + self.kl + self.ku {
            return None;
        }
        Some(i * self.width + j + self.kl - i)
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        match self.slot(i, j) {
            Some(s) if j + self.kl >= i && j <= i + self.ku => self.data[s],
            _ => T::zero(),
        }
    }

    /// Adds `v` at `(i, j)`; panics if the entry lies outside the declared band.
    pub fn add(&mut self, i: usize, j: usize, v: T) {
        assert!(j + self.kl >= i && j <= i + self.ku, "entry ({i},{j}) outside band kl={} ku={}", self.kl, self.ku);
        let s = self.slot(i, j).expect("in band");
        self.data[s] += v;
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        let mut y = vec![T::zero(); self.n];
        for (i, yi) in y.iter_mut().enumerate() {
            let lo = i.saturating_sub(self.kl);
            let hi = (i + self.ku).min(self.n - 1);
            for j in lo..=hi {
                *yi += self.data[i * self.width + j + self.kl - i] * x[j];
            }
        }
        y
    }

    pub fn to_dense(&self) -> DenseMatrix<T> {
        let mut d = DenseMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            let lo = i.saturating_sub(self.kl);
            let hi = (i + self.ku).min(self.n - 1);
            for j in lo..=hi {
                d[(i, j)] = self.get(i, j);
            }
        }
        d
    }

    /// Solves `A x = b` by banded LU with partial pivoting. `self` is consumed
    /// as workspace.
    pub fn solve(mut self, b: &[T]) -> Result<Vec<T>, LinalgError> {
        let n = self.n;
        if b.len() != n {
            return Err(LinalgError::Dimension { expected: n, got: b.len() });
        }
        let (kl, w) = (self.kl, self.width);
        let uw = kl + self.ku; // upper bandwidth of U after pivoting
        let at = |i: usize, j: usize| i * w + j + kl - i;
        let mut x = b.to_vec();
        for k in 0..n {
            let last = (k + kl).min(n - 1);
            let mut p = k;
            let mut best = self.data[at(k, k)].abs();
            for i in k + 1..=last {
                let v = self.data[at(i, k)].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best == T::zero() || !best.is_finite() {
                return Err(LinalgError::Singular { pivot: k });
            }
            let right = (k + uw).min(n - 1);
            if p != k {
                for j in k..=right {
                    self.data.swap(at(k, j), at(p, j));
                }
                x.swap(k, p);
            }
            let piv = self.data[at(k, k)];
            for i in k + 1..=last {
                let m = self.data[at(i, k)] / piv;
                if m == T::zero() {
                    continue;
                }
                self.data[at(i, k)] = T::zero();
                for j in k + 1..=right {
                    let v = self.data[at(k, j)];
                    self.data[at(i, j)] -= m * v;
                }
                let v = x[k];
                x[i] -= m * v;
            }
        }
        for k in (0..n).rev() {
            let right = (k + uw).min(n - 1);
            let mut s = x[k];
            for j in k + 1..=right {
                s -= self.data[at(k, j)] * x[j];
            }
            x[k] = s / self.data[at(k, k)];
        }
        Ok(x)
    }
}

pub fn norm2<T: Real>(x: &[T]) -> T {
    x.iter().map(|&v| v * v).sum::<T>().sqrt()
}

pub fn max_abs<T: Real>(x: &[T]) -> T {
    x.iter().fold(T::zero(), |m, &v| m.max(v.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dense_solve_matches_known_solution() {
        let a = DenseMatrix::from_rows(&[vec![0.0, 2.0, 1.0], vec![1.0, 1.0, 0.0], vec![3.0, 0.0, 1.0]]);
        let x = [1.0_f64, -2.0, 0.5];
        let b = a.mul_vec(&x);
        let got = a.solve(&b).unwrap();
        for (g, e) in got.iter().zip(x) {
            assert!((g - e).abs() < 1e-14);
        }
    }

    #[test]
    fn banded_matches_dense() {
        let n = 9;
        let (kl, ku) = (2, 3);
        let mut band = BandedMatrix::<f64>::zeros(n, kl, ku);
        let mut seed = 7u64;
        let mut next = || {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((seed >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        for i in 0..n {
            for j in i.saturating_sub(kl)..=(i + ku).min(n - 1) {
                // small diagonal forces pivoting
                let v = if i == j { 0.01 * next() } else { next() };
                band.add(i, j, v);
            }
        }
        let dense = band.to_dense();
        let x: Vec<f64> = (0..n).map(|i| i as f64 - 3.0).collect();
        let b = dense.mul_vec(&x);
        assert_eq!(band.mul_vec(&x), b);
        let got = band.solve(&b).unwrap();
        for (g, e) in got.iter().zip(&x) {
            assert!((g - e).abs() < 1e-10, "{g} vs {e}");
        }
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let a = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]);
        assert!(a.cholesky().is_err());
        assert!(DenseMatrix::<f64>::identity(3).cholesky().is_ok());
    }
}
