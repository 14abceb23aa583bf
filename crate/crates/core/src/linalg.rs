//! Small dense linear algebra: a row-major matrix, an LDLᵀ solver for the
//! symmetric positive definite systems produced by least squares, and a
//! pivoting Gaussian elimination for the small square systems used when
//! enumerating hyperplanes.

#![allow(clippy::needless_range_loop)]

use crate::scalar::{dot, Scalar};

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    /// Builds a matrix from a flat row-major buffer.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<T>) -> Self {
        assert_eq!(
            data.len(),
            rows * cols,
            "buffer length does not match {rows}x{cols}"
        );
        Self { rows, cols, data }
    }

    /// Builds a matrix from rows of equal length. An empty slice gives a 0×`cols` matrix.
    pub fn from_rows(rows: &[Vec<T>], cols: usize) -> Self {
        let mut data = Vec::with_capacity(rows.len() * cols);
        for row in rows {
            assert_eq!(row.len(), cols, "ragged rows");
            data.extend_from_slice(row);
        }
        Self {
            rows: rows.len(),
            cols,
            data,
        }
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

    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: T) {
        self.data[i * self.cols + j] = value;
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[T]> + '_ {
        (0..self.rows).map(move |i| self.row(i))
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    /// Concatenates the columns of `self` and `other` side by side.
    pub fn hstack(&self, other: &Matrix<T>) -> Matrix<T> {
        assert_eq!(self.rows, other.rows, "row counts differ");
        let cols = self.cols + other.cols;
        let mut data = Vec::with_capacity(self.rows * cols);
        for i in 0..self.rows {
            data.extend_from_slice(self.row(i));
            data.extend_from_slice(other.row(i));
        }
        Matrix {
            rows: self.rows,
            cols,
            data,
        }
    }

    /// Keeps the listed rows, in the given order.
    pub fn select_rows(&self, indices: &[usize]) -> Matrix<T> {
        let mut data = Vec::with_capacity(indices.len() * self.cols);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        Matrix {
            rows: indices.len(),
            cols: self.cols,
            data,
        }
    }

    pub fn mul_vec(&self, v: &[T]) -> Vec<T> {
        self.iter_rows().map(|r| dot(r, v)).collect()
    }
}

/// Square-root-free Cholesky factorization `A = L D Lᵀ` of a symmetric
/// positive definite matrix.
#[derive(Debug, Clone)]
pub struct LdlFactor<T> {
    l: Matrix<T>,
    d: Vec<T>,
}

impl<T: Scalar> LdlFactor<T> {
    /// Returns `None` when a pivot is not strictly positive.
    pub fn new(a: &Matrix<T>) -> Option<Self> {
        let n = a.rows();
        assert_eq!(a.cols(), n);
        // Unit lower triangle stored below the diagonal, D on the diagonal.
        let mut l = Matrix::zeros(n, n);
        let mut d = vec![T::zero(); n];
        for j in 0..n {
            let mut dj = a.get(j, j);
            for k in 0..j {
                let ljk = l.get(j, k);
                dj = dj - ljk * ljk * d[k];
            }
            if dj <= T::zero() {
                return None;
            }
            d[j] = dj;
            l.set(j, j, T::one());
            for i in j + 1..n {
                let mut v = a.get(i, j);
                for k in 0..j {
                    v = v - l.get(i, k) * l.get(j, k) * d[k];
                }
                l.set(i, j, v / dj);
            }
        }
        Some(Self { l, d })
    }

    pub fn dim(&self) -> usize {
        self.d.len()
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let n = self.dim();
        assert_eq!(b.len(), n);
        let mut z = b.to_vec();
        for i in 0..n {
            let row = self.l.row(i);
            for k in 0..i {
                z[i] = z[i] - row[k] * z[k];
            }
        }
        for i in 0..n {
            z[i] = z[i] / self.d[i];
        }
        for i in (0..n).rev() {
            for k in i + 1..n {
                z[i] = z[i] - self.l.get(k, i) * z[k];
            }
        }
        z
    }
}

/// Solves `a x = b` for symmetric positive definite `a`.
pub fn solve_spd<T: Scalar>(a: &Matrix<T>, b: &[T]) -> Option<Vec<T>> {
    LdlFactor::new(a).map(|f| f.solve(b))
}

/// Solves a general square system with partial pivoting. Returns `None` when
/// the matrix is singular (an exactly zero pivot).
pub fn solve_square<T: Scalar>(a: &Matrix<T>, b: &[T]) -> Option<Vec<T>> {
    let n = a.rows();
    assert_eq!(a.cols(), n);
    assert_eq!(b.len(), n);
    let mut m = a.clone();
    let mut rhs = b.to_vec();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&x, &y| {
                m.get(x, col)
                    .abs()
                    .partial_cmp(&m.get(y, col).abs())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .expect("non-empty range");
        if m.get(pivot, col).is_zero() {
            return None;
        }
        if pivot != col {
            for j in 0..n {
                let tmp = m.get(col, j);
                m.set(col, j, m.get(pivot, j));
                m.set(pivot, j, tmp);
            }
            rhs.swap(col, pivot);
        }
        let p = m.get(col, col);
        for r in col + 1..n {
            let factor = m.get(r, col) / p;
            if factor.is_zero() {
                continue;
            }
            for j in col..n {
                m.set(r, j, m.get(r, j) - factor * m.get(col, j));
            }
            rhs[r] = rhs[r] - factor * rhs[col];
        }
    }
    let mut x = vec![T::zero(); n];
    for i in (0..n).rev() {
        let mut v = rhs[i];
        for j in i + 1..n {
            v = v - m.get(i, j) * x[j];
        }
        x[i] = v / m.get(i, i);
    }
    Some(x)
}

/// A nonzero vector spanning the null space of a `k × (k+1)` matrix of full
/// row rank, or `None` if the rows are linearly dependent.
pub fn null_vector<T: Scalar>(m: &Matrix<T>) -> Option<Vec<T>> {
    let k = m.rows();
    assert_eq!(m.cols(), k + 1);
    // Fix one coordinate to 1 and solve for the rest; try the last column first.
    for free in (0..=k).rev() {
        let kept: Vec<usize> = (0..=k).filter(|&j| j != free).collect();
        let mut sub = Matrix::zeros(k, k);
        let mut rhs = vec![T::zero(); k];
        for i in 0..k {
            for (jj, &j) in kept.iter().enumerate() {
                sub.set(i, jj, m.get(i, j));
            }
            rhs[i] = -m.get(i, free);
        }
        if let Some(sol) = solve_square(&sub, &rhs) {
            let mut v = vec![T::zero(); k + 1];
            v[free] = T::one();
            for (jj, &j) in kept.iter().enumerate() {
                v[j] = sol[jj];
            }
            return Some(v);
        }
    }
    None
}
