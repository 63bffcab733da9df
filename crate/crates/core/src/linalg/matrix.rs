//! Row-major dense matrix used for factor matrices and all R×R workspaces.

use crate::scalar::Real;

use super::KernelError;

/// Row-major dense matrix.
///
/// Rank-sized (R×R) products in this crate are plain loops over this type;
/// with R ≤ 64 there is nothing to gain from blocking.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Real> DenseMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, T::one());
        }
        m
    }

    /// Builds from a row-major slice; length must equal `rows * cols`.
    pub fn from_rows(rows: usize, cols: usize, data: Vec<T>) -> Result<Self, KernelError> {
        if data.len() != rows * cols {
            return Err(KernelError::ShapeMismatch {
                expected: rows * cols,
                got: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> T {
        debug_assert!(r < self.rows && c < self.cols);
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: T) {
        debug_assert!(r < self.rows && c < self.cols);
        self.data[r * self.cols + c] = v;
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[T] {
        debug_assert!(r < self.rows);
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [T] {
        debug_assert!(r < self.rows);
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// `self * other`, plain triple loop.
    pub fn matmul(&self, other: &DenseMatrix<T>) -> DenseMatrix<T> {
        assert_eq!(self.cols, other.rows, "matmul shape mismatch");
        let mut out = DenseMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == T::zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let v = out.get(i, j) + a * other.get(k, j);
                    out.set(i, j, v);
                }
            }
        }
        out
    }

    /// `selfᵀ * self`, the Gram matrix of the column space.
    pub fn gram(&self) -> DenseMatrix<T> {
        let mut out = DenseMatrix::zeros(self.cols, self.cols);
        for r in 0..self.rows {
            let row = self.row(r);
            for i in 0..self.cols {
                for j in i..self.cols {
                    let v = out.get(i, j) + row[i] * row[j];
                    out.set(i, j, v);
                }
            }
        }
        for i in 0..self.cols {
            for j in 0..i {
                out.set(i, j, out.get(j, i));
            }
        }
        out
    }

    /// `selfᵀ * other` for equal row counts.
    pub fn transpose_mul(&self, other: &DenseMatrix<T>) -> DenseMatrix<T> {
        assert_eq!(self.rows, other.rows, "transpose_mul shape mismatch");
        let mut out = DenseMatrix::zeros(self.cols, other.cols);
        for r in 0..self.rows {
            let a = self.row(r);
            let b = other.row(r);
            for i in 0..self.cols {
                for j in 0..other.cols {
                    let v = out.get(i, j) + a[i] * b[j];
                    out.set(i, j, v);
                }
            }
        }
        out
    }

    /// Frobenius distance to `other`.
    pub fn frobenius_distance(&self, other: &DenseMatrix<T>) -> T {
        assert_eq!(self.rows, other.rows);
        assert_eq!(self.cols, other.cols);
        let mut acc = T::zero();
        for (a, b) in self.data.iter().zip(other.data.iter()) {
            let d = *a - *b;
            acc += d * d;
        }
        acc.sqrt()
    }

    /// Largest absolute off-diagonal asymmetry, for Gram audits.
    pub fn asymmetry(&self) -> T {
        let mut worst = T::zero();
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                let d = (self.get(i, j) - self.get(j, i)).abs();
                if d > worst {
                    worst = d;
                }
            }
        }
        worst
    }
}

/// row-vector × matrix -> row-vector.
pub fn vec_mat<T: Real>(v: &[T], m: &DenseMatrix<T>) -> Vec<T> {
    assert_eq!(v.len(), m.rows(), "vec_mat shape mismatch");
    let mut out = vec![T::zero(); m.cols()];
    for (k, &vk) in v.iter().enumerate() {
        if vk == T::zero() {
            continue;
        }
        let row = m.row(k);
        for (o, &mkj) in out.iter_mut().zip(row.iter()) {
            *o += vk * mkj;
        }
    }
    out
}
