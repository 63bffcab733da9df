//! The naive per-event variant: one full normalizing ALS sweep.

use crate::cpd::FactorModel;
use crate::linalg::{gram_hadamard, mttkrp, pinv_psd};
use crate::scalar::Real;
use crate::stream::SparseWindow;

use super::UpdateError;

/// One ALS-style sweep over every mode of the changed window, with column
/// normalization: each solved factor is rescaled to unit column norms and
/// the norms land in the model's weight vector. The current factors are a
/// strong warm start, so a single sweep per event suffices.
pub fn full_sweep_step<T: Real>(
    window: &SparseWindow<T>,
    model: &mut FactorModel<T>,
) -> Result<(), UpdateError> {
    let rank = model.factors.rank();
    let mut weights = vec![T::one(); rank];

    for mode in 0..model.factors.order() {
        let u = mttkrp(window, None, &model.factors, mode)?;
        let h = gram_hadamard(&model.grams, mode)?;
        let h_pinv = pinv_psd(&h)?;
        let mut a = u.matmul(&h_pinv);
        if !a.is_finite() {
            return Err(UpdateError::NonFinite { mode, index: 0 });
        }

        for r in 0..rank {
            let mut norm_sq = T::zero();
            for i in 0..a.rows() {
                let v = a.get(i, r);
                norm_sq += v * v;
            }
            let norm = norm_sq.sqrt();
            weights[r] = norm;
            if norm > T::zero() {
                for i in 0..a.rows() {
                    let v = a.get(i, r) / norm;
                    a.set(i, r, v);
                }
            }
        }

        model.grams.set(mode, a.gram());
        *model.factors.factor_mut(mode) = a;
    }

    // Earlier modes' scales were re-absorbed by later solves; the norms of
    // the last mode carry the overall scale.
    model.weights = Some(weights);
    Ok(())
}
