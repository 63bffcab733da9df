//! Symmetric eigendecomposition and the PSD pseudoinverse built on it.

use crate::scalar::Real;

use super::matrix::DenseMatrix;
use super::KernelError;

/// Relative eigenvalue cutoff below which the pseudoinverse treats a
/// direction as null. Normal-equation matrices here are PSD by construction
/// and go rank-deficient whenever a factor column is all-zero.
pub const PINV_RELATIVE_CUTOFF: f64 = 1e-10;

/// Cyclic Jacobi eigendecomposition of a symmetric matrix.
///
/// Returns `(eigenvalues, eigenvectors)` with eigenvectors stored as columns.
/// Plenty for the R×R (R ≤ 64) systems this crate solves.
pub fn sym_eigen<T: Real>(m: &DenseMatrix<T>) -> Result<(Vec<T>, DenseMatrix<T>), KernelError> {
    let n = m.rows();
    if n != m.cols() {
        return Err(KernelError::ShapeMismatch {
            expected: n,
            got: m.cols(),
        });
    }
    if !m.is_finite() {
        return Err(KernelError::NonFinite);
    }

    let mut a = m.clone();
    let mut v = DenseMatrix::<T>::identity(n);
    if n <= 1 {
        return Ok((
            (0..n).map(|i| a.get(i, i)).collect(),
            v,
        ));
    }

    let eps = T::epsilon();
    let max_sweeps = 64;
    for _ in 0..max_sweeps {
        let mut off = T::zero();
        for i in 0..n {
            for j in (i + 1)..n {
                off += a.get(i, j) * a.get(i, j);
            }
        }
        let mut diag = T::zero();
        for i in 0..n {
            diag += a.get(i, i) * a.get(i, i);
        }
        if off <= eps * eps * (diag + T::one()) {
            break;
        }

        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a.get(p, q);
                if apq == T::zero() {
                    continue;
                }
                let app = a.get(p, p);
                let aqq = a.get(q, q);
                let tau = (aqq - app) / (T::from_f64_lossy(2.0) * apq);
                let t = {
                    let sign = if tau >= T::zero() { T::one() } else { -T::one() };
                    sign / (tau.abs() + (T::one() + tau * tau).sqrt())
                };
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = t * c;

                for k in 0..n {
                    let akp = a.get(k, p);
                    let akq = a.get(k, q);
                    a.set(k, p, c * akp - s * akq);
                    a.set(k, q, s * akp + c * akq);
                }
                for k in 0..n {
                    let apk = a.get(p, k);
                    let aqk = a.get(q, k);
                    a.set(p, k, c * apk - s * aqk);
                    a.set(q, k, s * apk + c * aqk);
                }
                for k in 0..n {
                    let vkp = v.get(k, p);
                    let vkq = v.get(k, q);
                    v.set(k, p, c * vkp - s * vkq);
                    v.set(k, q, s * vkp + c * vkq);
                }
            }
        }
    }

    let eigenvalues = (0..n).map(|i| a.get(i, i)).collect();
    Ok((eigenvalues, v))
}

/// Moore–Penrose pseudoinverse of a symmetric PSD matrix.
///
/// Eigenvalues below `PINV_RELATIVE_CUTOFF` times the largest magnitude are
/// treated as exactly zero, so rank-deficient normal equations yield the
/// minimum-norm solution instead of blowing up.
pub fn pinv_psd<T: Real>(h: &DenseMatrix<T>) -> Result<DenseMatrix<T>, KernelError> {
    let (eigenvalues, vectors) = sym_eigen(h)?;
    let n = h.rows();

    let mut max_abs = T::zero();
    for &l in &eigenvalues {
        if l.abs() > max_abs {
            max_abs = l.abs();
        }
    }
    let cutoff = T::from_f64_lossy(PINV_RELATIVE_CUTOFF) * max_abs;

    let mut out = DenseMatrix::zeros(n, n);
    for (k, &l) in eigenvalues.iter().enumerate() {
        if l.abs() <= cutoff || l == T::zero() {
            continue;
        }
        let inv = T::one() / l;
        for i in 0..n {
            let vik = vectors.get(i, k);
            if vik == T::zero() {
                continue;
            }
            for j in 0..n {
                let v = out.get(i, j) + inv * vik * vectors.get(j, k);
                out.set(i, j, v);
            }
        }
    }
    Ok(out)
}
