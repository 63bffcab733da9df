//! Sparse-tensor kernels: Khatri-Rao row products, MTTKRP, the Hadamard Gram
//! identity, and CP entry reconstruction.

use crate::cpd::{FactorSet, GramSet};
use crate::scalar::Real;
use crate::stream::{Coordinate, DeltaChange, SparseWindow};

use super::matrix::DenseMatrix;
use super::KernelError;

/// Writes the row of `⊙_{n≠skip_mode} A^(n)` addressed by `coord` into `out`
/// without materializing the product: the elementwise product across modes of
/// the factor rows the coordinate selects.
pub(crate) fn kr_row_into<T: Real>(
    factors: &FactorSet<T>,
    skip_mode: usize,
    coord: &Coordinate,
    out: &mut [T],
) -> Result<(), KernelError> {
    debug_assert_eq!(out.len(), factors.rank());
    out.fill(T::one());
    for (mode, &index) in coord.0.iter().enumerate() {
        if mode == skip_mode {
            continue;
        }
        let len = factors.factor(mode).rows();
        if index == 0 || index > len {
            return Err(KernelError::IndexOutOfRange { mode, index, len });
        }
        let row = factors.index_row(mode, index);
        for (o, &a) in out.iter_mut().zip(row.iter()) {
            *o *= a;
        }
    }
    Ok(())
}

/// Row of the Khatri-Rao product of all factors except `skip_mode`.
pub fn kr_row<T: Real>(
    factors: &FactorSet<T>,
    skip_mode: usize,
    coord: &Coordinate,
) -> Result<Vec<T>, KernelError> {
    let mut out = vec![T::zero(); factors.rank()];
    kr_row_into(factors, skip_mode, coord, &mut out)?;
    Ok(out)
}

/// Matricized tensor times Khatri-Rao product over the non-zeros only:
/// `(X + ΔX)_(mode) · K^(mode)` at `O(M R)` per non-zero.
///
/// The window already holds whatever changes were applied to it; `delta`
/// adds further (unapplied) changes on top, which MTTKRP's linearity allows.
pub fn mttkrp<T: Real>(
    window: &SparseWindow<T>,
    delta: Option<&DeltaChange<T>>,
    factors: &FactorSet<T>,
    mode: usize,
) -> Result<DenseMatrix<T>, KernelError> {
    let lengths = factors.mode_lengths();
    if lengths != window.mode_lengths() {
        return Err(KernelError::ShapeMismatch {
            expected: window.mode_lengths().len(),
            got: lengths.len(),
        });
    }
    let rank = factors.rank();
    let mut out = DenseMatrix::zeros(lengths[mode], rank);
    let mut buf = vec![T::zero(); rank];

    for (coord, x) in window.entries() {
        kr_row_into(factors, mode, coord, &mut buf)?;
        let row = out.row_mut(coord.0[mode] - 1);
        for (o, &k) in row.iter_mut().zip(buf.iter()) {
            *o += x * k;
        }
    }
    if let Some(delta) = delta {
        for (coord, dv) in &delta.changes {
            kr_row_into(factors, mode, coord, &mut buf)?;
            let row = out.row_mut(coord.0[mode] - 1);
            for (o, &k) in row.iter_mut().zip(buf.iter()) {
                *o += *dv * k;
            }
        }
    }
    Ok(out)
}

/// Hadamard product of matrices, skipping one mode.
pub(crate) fn hadamard_skip<T: Real>(
    mats: &[DenseMatrix<T>],
    skip_mode: usize,
) -> Result<DenseMatrix<T>, KernelError> {
    let rank = mats
        .first()
        .map(|m| m.cols())
        .ok_or(KernelError::ShapeMismatch {
            expected: 1,
            got: 0,
        })?;
    let mut out = DenseMatrix::zeros(rank, rank);
    out.data_mut().fill(T::one());
    for (mode, m) in mats.iter().enumerate() {
        if mode == skip_mode {
            continue;
        }
        if m.rows() != rank || m.cols() != rank {
            return Err(KernelError::ShapeMismatch {
                expected: rank,
                got: m.rows(),
            });
        }
        for (o, &v) in out.data_mut().iter_mut().zip(m.data().iter()) {
            *o *= v;
        }
    }
    Ok(out)
}

/// `H^(mode) = ∗_{n≠mode} A^(n)ᵀA^(n)`.
///
/// Equals `K^(mode)ᵀ K^(mode)` with the Khatri-Rao product materialized, which
/// is what makes the row updates cheap.
pub fn gram_hadamard<T: Real>(
    grams: &GramSet<T>,
    skip_mode: usize,
) -> Result<DenseMatrix<T>, KernelError> {
    hadamard_skip(grams.grams(), skip_mode)
}

/// `x̂ = Σ_r λ_r Π_m A^(m)(i_m, r)`; `weights = None` means unit weights.
pub fn reconstruct_entry<T: Real>(
    factors: &FactorSet<T>,
    weights: Option<&[T]>,
    coord: &Coordinate,
) -> Result<T, KernelError> {
    let rank = factors.rank();
    let mut buf = vec![T::one(); rank];
    for (mode, &index) in coord.0.iter().enumerate() {
        let len = factors.factor(mode).rows();
        if index == 0 || index > len {
            return Err(KernelError::IndexOutOfRange { mode, index, len });
        }
        let row = factors.index_row(mode, index);
        for (o, &a) in buf.iter_mut().zip(row.iter()) {
            *o *= a;
        }
    }
    let mut acc = T::zero();
    match weights {
        Some(w) => {
            for (r, &v) in buf.iter().enumerate() {
                acc += w[r] * v;
            }
        }
        None => {
            for &v in &buf {
                acc += v;
            }
        }
    }
    Ok(acc)
}
