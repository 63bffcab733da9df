//! Clipped coordinate descent: the entrywise update rules of the stable
//! variants.
//!
//! One row visit updates its `R` entries in order. Each entry gets the
//! closed-form single-variable least-squares solution and is then clipped to
//! `[-eta, eta]`; on the exact path the solve-then-clip step can never
//! increase the objective restricted to the row. Gram entries are refreshed
//! immediately so later entries of the same visit see current values.

use crate::cpd::FactorModel;
use crate::linalg::{gram_hadamard, hadamard_skip, kr_row_into, reconstruct_entry, DenseMatrix};
use crate::scalar::Real;
use crate::stream::{Coordinate, DeltaChange, SparseWindow};

use super::{UpdateError, UpdateStats};

/// Which data the numerator of the entry solve draws on.
#[derive(Debug, Clone, Copy)]
pub enum DescentSource<'a> {
    /// All non-zeros incident to the row, values taken from the (already
    /// changed) window. The exact categorical-row path.
    Support,
    /// Only the event's own changes plus the carried reconstruction term.
    /// The time-mode path: a tensor unit can hold arbitrarily many
    /// non-zeros, but the change touches at most two.
    DeltaOnly,
    /// Sampled residuals plus the event's changes plus the carried term,
    /// with the carry taken against the event-start factors.
    Sampled(&'a [Coordinate]),
}

struct RowContext<T> {
    /// `H = ∗_{n≠m} Q^(n)`: `c_k` on its diagonal, `d_k` from its columns.
    h: DenseMatrix<T>,
    /// Matrix backing the carried term `e_k`; `None` reuses `h`.
    e_mat: Option<DenseMatrix<T>>,
    use_e: bool,
    /// Row snapshot before the entry loop; the previous-factor row.
    b_row: Vec<T>,
    /// Contribution weights `w_J` and their Khatri-Rao rows, rank-strided,
    /// forming `Σ_J w_J · kr_J[k]`.
    weights: Vec<T>,
    krs: Vec<T>,
}

fn build_context<T: Real>(
    delta: &DeltaChange<T>,
    window: &SparseWindow<T>,
    model: &FactorModel<T>,
    mode: usize,
    index: usize,
    source: DescentSource<'_>,
) -> Result<RowContext<T>, UpdateError> {
    let rank = model.factors.rank();
    let h = gram_hadamard(&model.grams, mode)?;
    let mut weights = Vec::new();
    let mut krs: Vec<T> = Vec::new();
    let push_contrib = |w: T,
                            coord: &crate::stream::Coordinate,
                            krs: &mut Vec<T>,
                            weights: &mut Vec<T>|
     -> Result<(), UpdateError> {
        let start = krs.len();
        krs.resize(start + rank, T::zero());
        kr_row_into(&model.factors, mode, coord, &mut krs[start..])?;
        weights.push(w);
        Ok(())
    };

    let (use_e, e_mat) = match source {
        DescentSource::Support => {
            for coord in window.registry_iter(mode, index) {
                push_contrib(window.value(coord), coord, &mut krs, &mut weights)?;
            }
            (false, None)
        }
        DescentSource::DeltaOnly => {
            for (coord, dv) in &delta.changes {
                if coord.0[mode] != index {
                    continue;
                }
                push_contrib(*dv, coord, &mut krs, &mut weights)?;
            }
            // Time rows run before any categorical row of the event, so the
            // previous-factor products of the other modes still equal the
            // current Grams; the carry can reuse H directly.
            (true, None)
        }
        DescentSource::Sampled(sample) => {
            for coord in sample {
                let residual =
                    window.value(coord) - reconstruct_entry(&model.factors, None, coord)?;
                push_contrib(residual, coord, &mut krs, &mut weights)?;
            }
            for (coord, dv) in &delta.changes {
                debug_assert_eq!(coord.0[mode], index);
                push_contrib(*dv, coord, &mut krs, &mut weights)?;
            }
            (true, Some(hadamard_skip(model.prev_grams.grams(), mode)?))
        }
    };

    Ok(RowContext {
        h,
        e_mat,
        use_e,
        b_row: model.factors.index_row(mode, index).to_vec(),
        weights,
        krs,
    })
}

/// Solves, clips and stores entry `k` of the row, then patches the Gram
/// (and, when asked, previous-Gram) entries it invalidated.
#[allow(clippy::too_many_arguments)]
fn solve_entry<T: Real>(
    ctx: &RowContext<T>,
    model: &mut FactorModel<T>,
    mode: usize,
    index: usize,
    k: usize,
    eta: T,
    maintain_prev: bool,
    stats: &mut UpdateStats,
) {
    let rank = model.factors.rank();
    let c = ctx.h.get(k, k);
    if c == T::zero() {
        // Dead column: some other mode's column k is identically zero. The
        // entry has no influence on the objective; leave it.
        stats.dead_column_skips += 1;
        return;
    }

    let row = model.factors.index_row(mode, index);
    let mut d = T::zero();
    for r in 0..rank {
        if r != k {
            d += row[r] * ctx.h.get(r, k);
        }
    }
    let mut numerator = T::zero();
    for (j, &w) in ctx.weights.iter().enumerate() {
        numerator += w * ctx.krs[j * rank + k];
    }
    if ctx.use_e {
        let e_mat = ctx.e_mat.as_ref().unwrap_or(&ctx.h);
        let mut e = T::zero();
        for r in 0..rank {
            e += ctx.b_row[r] * e_mat.get(r, k);
        }
        numerator += e;
    }

    let mut a_new = (numerator - d) / c;
    if a_new.is_nan() {
        stats.non_finite_skips += 1;
        return;
    }
    if a_new > eta {
        a_new = eta;
    } else if a_new < -eta {
        a_new = -eta;
    }

    let a_old = row[k];
    {
        let q = model.grams.gram_mut(mode);
        let v = q.get(k, k) + a_new * a_new - a_old * a_old;
        q.set(k, k, v);
    }
    for r in 0..rank {
        if r == k {
            continue;
        }
        let a_r = model.factors.index_row(mode, index)[r];
        let dq = a_r * (a_new - a_old);
        let q = model.grams.gram_mut(mode);
        q.set(r, k, q.get(r, k) + dq);
        q.set(k, r, q.get(k, r) + dq);
    }
    if maintain_prev {
        let u = model.prev_grams.gram_mut(mode);
        for r in 0..rank {
            let v = u.get(r, k) + ctx.b_row[r] * (a_new - a_old);
            u.set(r, k, v);
        }
    }
    model.factors.index_row_mut(mode, index)[k] = a_new;
    stats.entry_updates += 1;
}

/// Runs the entry loop `k = 1..R` over one row.
#[allow(clippy::too_many_arguments)]
pub fn descent_row<T: Real>(
    delta: &DeltaChange<T>,
    window: &SparseWindow<T>,
    model: &mut FactorModel<T>,
    mode: usize,
    index: usize,
    eta: T,
    maintain_prev: bool,
    source: DescentSource<'_>,
    stats: &mut UpdateStats,
) -> Result<(), UpdateError> {
    let ctx = build_context(delta, window, model, mode, index, source)?;
    for k in 0..model.factors.rank() {
        solve_entry(&ctx, model, mode, index, k, eta, maintain_prev, stats);
    }
    Ok(())
}

/// Updates a single entry. Context (including the previous-row snapshot) is
/// rebuilt at call time, so driving all `R` entries through this matches
/// [`descent_row`] exactly on the `Support` path; the event path is the row
/// driver.
#[allow(clippy::too_many_arguments)]
pub fn descent_entry<T: Real>(
    delta: &DeltaChange<T>,
    window: &SparseWindow<T>,
    model: &mut FactorModel<T>,
    mode: usize,
    index: usize,
    k: usize,
    eta: T,
    maintain_prev: bool,
    source: DescentSource<'_>,
    stats: &mut UpdateStats,
) -> Result<(), UpdateError> {
    let ctx = build_context(delta, window, model, mode, index, source)?;
    solve_entry(&ctx, model, mode, index, k, eta, maintain_prev, stats);
    Ok(())
}
