//! Whole-row update rules used by the `vec` and `rnd` variants.

use crate::cpd::FactorModel;
use crate::linalg::{
    gram_hadamard, hadamard_skip, kr_row_into, pinv_psd, reconstruct_entry, vec_mat,
};
use crate::scalar::Real;
use crate::stream::{Coordinate, DeltaChange, SparseWindow};

use super::{gram_delta, prev_gram_delta, UpdateError};

fn write_row<T: Real>(
    model: &mut FactorModel<T>,
    mode: usize,
    index: usize,
    new_row: Vec<T>,
    maintain_prev: bool,
) -> Result<(), UpdateError> {
    if new_row.iter().any(|v| !v.is_finite()) {
        return Err(UpdateError::NonFinite { mode, index });
    }
    let old_row = model.factors.index_row(mode, index).to_vec();
    model
        .factors
        .index_row_mut(mode, index)
        .copy_from_slice(&new_row);
    gram_delta(model.grams.gram_mut(mode), &old_row, &new_row);
    if maintain_prev {
        // The row still held its event-start value, so the old row doubles
        // as the previous-factor row.
        prev_gram_delta(model.prev_grams.gram_mut(mode), &old_row, &new_row);
    }
    Ok(())
}

/// Additive time-mode rule: the touched row gains
/// `ΔX_(M)(row, :) · K^(M) · (H^(M))†`.
///
/// The change has at most two non-zeros, so this costs `O(MR + MR² + R³)`
/// regardless of how dense the tensor units are.
pub fn time_row_update<T: Real>(
    delta: &DeltaChange<T>,
    model: &mut FactorModel<T>,
    index: usize,
    maintain_prev: bool,
) -> Result<(), UpdateError> {
    let time_mode = model.factors.order() - 1;
    let rank = model.factors.rank();

    let mut g = vec![T::zero(); rank];
    let mut buf = vec![T::zero(); rank];
    let mut touched = false;
    for (coord, dv) in &delta.changes {
        if coord.time_index() != index {
            continue;
        }
        kr_row_into(&model.factors, time_mode, coord, &mut buf)?;
        for (gi, &b) in g.iter_mut().zip(buf.iter()) {
            *gi += *dv * b;
        }
        touched = true;
    }
    if !touched {
        return Ok(());
    }

    let h = gram_hadamard(&model.grams, time_mode)?;
    let h_pinv = pinv_psd(&h)?;
    let step = vec_mat(&g, &h_pinv);
    let new_row: Vec<T> = model
        .factors
        .index_row(time_mode, index)
        .iter()
        .zip(step.iter())
        .map(|(&a, &s)| a + s)
        .collect();
    write_row(model, time_mode, index, new_row, maintain_prev)
}

/// Exact categorical-row rule: the row is replaced by the least-squares
/// solution restricted to it,
/// `A^(m)(i_m, :) ← (X + ΔX)_(m)(i_m, :) · K^(m) · (H^(m))†`,
/// visiting only the non-zeros incident to the row. A row with no incident
/// non-zeros collapses to zero.
pub fn row_least_squares_update<T: Real>(
    window: &SparseWindow<T>,
    model: &mut FactorModel<T>,
    mode: usize,
    index: usize,
    maintain_prev: bool,
) -> Result<(), UpdateError> {
    let rank = model.factors.rank();
    let mut u = vec![T::zero(); rank];
    let mut buf = vec![T::zero(); rank];
    for coord in window.registry_iter(mode, index) {
        let x = window.value(coord);
        kr_row_into(&model.factors, mode, coord, &mut buf)?;
        for (ui, &b) in u.iter_mut().zip(buf.iter()) {
            *ui += x * b;
        }
    }
    let h = gram_hadamard(&model.grams, mode)?;
    let h_pinv = pinv_psd(&h)?;
    let new_row = vec_mat(&u, &h_pinv);
    write_row(model, mode, index, new_row, maintain_prev)
}

/// Sampled categorical-row rule:
/// `A^(m)(i_m, :) ← A^(m)(i_m, :) · H_prev^(m) · (H^(m))† + (X̄ + ΔX)_(m) · K^(m) · (H^(m))†`
/// where `X̄` holds the residuals `x_J − x̂_J` at the sampled coordinates.
/// The caller draws the sample (excluding the event's own coordinates) and
/// guarantees `degree > theta`.
pub fn row_sampled_update<T: Real>(
    delta: &DeltaChange<T>,
    window: &SparseWindow<T>,
    model: &mut FactorModel<T>,
    mode: usize,
    index: usize,
    sample: &[Coordinate],
) -> Result<(), UpdateError> {
    let rank = model.factors.rank();
    let mut u = vec![T::zero(); rank];
    let mut buf = vec![T::zero(); rank];
    for coord in sample {
        let residual = window.value(coord) - reconstruct_entry(&model.factors, None, coord)?;
        kr_row_into(&model.factors, mode, coord, &mut buf)?;
        for (ui, &b) in u.iter_mut().zip(buf.iter()) {
            *ui += residual * b;
        }
    }
    for (coord, dv) in &delta.changes {
        debug_assert_eq!(coord.0[mode], index, "event changes share the row index");
        kr_row_into(&model.factors, mode, coord, &mut buf)?;
        for (ui, &b) in u.iter_mut().zip(buf.iter()) {
            *ui += *dv * b;
        }
    }

    let h = gram_hadamard(&model.grams, mode)?;
    let h_pinv = pinv_psd(&h)?;
    let h_prev = hadamard_skip(model.prev_grams.grams(), mode)?;
    let p = model.factors.index_row(mode, index).to_vec();
    let carried = vec_mat(&p, &h_prev);
    let combined: Vec<T> = carried.iter().zip(u.iter()).map(|(&c, &v)| c + v).collect();
    let new_row = vec_mat(&combined, &h_pinv);
    write_row(model, mode, index, new_row, true)
}
