//! Offline alternating least squares and the fitness metrics.
//!
//! ALS serves two roles here: it initializes the factors on the warm-up
//! window, and a fresh run of it on the current window is the denominator of
//! relative fitness.

use crate::linalg::{gram_hadamard, mttkrp, pinv_psd, reconstruct_entry, KernelError};
use crate::scalar::{KahanSum, Real};
use crate::stream::SparseWindow;

use super::model::FactorModel;
use super::{CpdError, FactorSet};

/// Fitness value plus the degenerate-input flag.
///
/// Fitness is `1 - ‖X̂ - X‖_F / ‖X‖_F`; on an all-zero window it is defined
/// as 0 with `zero_norm` set, since windows can transiently empty mid-stream.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitnessValue<T> {
    pub value: T,
    pub zero_norm: bool,
}

/// `‖X̂ - X‖²_F` evaluated sparsely: the residual over stored non-zeros plus
/// the reconstruction mass off the support, the latter via the Gram identity
/// `‖X̂‖²_F = Σ_{r,s} λ_r λ_s Π_m Q^(m)(r,s)` so no dense enumeration happens.
fn reconstruction_error_sq<T: Real>(
    window: &SparseWindow<T>,
    factors: &FactorSet<T>,
    weights: Option<&[T]>,
) -> Result<T, KernelError> {
    let rank = factors.rank();
    let grams: Vec<_> = factors.factors().iter().map(|m| m.gram()).collect();

    let mut model_sq = KahanSum::new();
    for r in 0..rank {
        for s in 0..rank {
            let mut prod = T::one();
            for g in &grams {
                prod *= g.get(r, s);
            }
            if let Some(w) = weights {
                prod *= w[r] * w[s];
            }
            model_sq.add(prod);
        }
    }

    let mut resid_sq = KahanSum::new();
    let mut recon_on_support_sq = KahanSum::new();
    for (coord, x) in window.entries() {
        let xhat = reconstruct_entry(factors, weights, coord)?;
        let d = x - xhat;
        resid_sq.add(d * d);
        recon_on_support_sq.add(xhat * xhat);
    }

    let off_support = (model_sq.value() - recon_on_support_sq.value()).max(T::zero());
    Ok(resid_sq.value() + off_support)
}

/// `‖X - X̂‖_F`, the objective the sweeps minimize.
pub fn residual_norm<T: Real>(
    window: &SparseWindow<T>,
    factors: &FactorSet<T>,
    weights: Option<&[T]>,
) -> Result<T, CpdError> {
    Ok(reconstruction_error_sq(window, factors, weights)?.sqrt())
}

/// Fitness of the decomposition against the window.
pub fn fitness<T: Real>(
    window: &SparseWindow<T>,
    factors: &FactorSet<T>,
    weights: Option<&[T]>,
) -> Result<FitnessValue<T>, CpdError> {
    let norm_x_sq = window.frobenius_sq();
    if norm_x_sq == T::zero() {
        return Ok(FitnessValue {
            value: T::zero(),
            zero_norm: true,
        });
    }
    let err_sq = reconstruction_error_sq(window, factors, weights)?;
    Ok(FitnessValue {
        value: T::one() - (err_sq.sqrt() / norm_x_sq.sqrt()),
        zero_norm: false,
    })
}

/// Fitness of the target algorithm relative to the ALS oracle on the same
/// window. `None` when the denominator is zero (undefined).
pub fn relative_fitness<T: Real>(target: T, als: T) -> Option<T> {
    if als == T::zero() {
        None
    } else {
        Some(target / als)
    }
}

/// One full ALS sweep: for each mode in order, solve the normal equations
/// `A^(m) ← X_(m) K^(m) (H^(m))†` and refresh that mode's Gram. Returns the
/// fitness after the sweep. Clears any column weights; the sweep works on
/// unnormalized factors.
pub fn als_sweep<T: Real>(
    window: &SparseWindow<T>,
    model: &mut FactorModel<T>,
) -> Result<FitnessValue<T>, CpdError> {
    model.weights = None;
    for mode in 0..model.factors.order() {
        let u = mttkrp(window, None, &model.factors, mode)?;
        let h = gram_hadamard(&model.grams, mode)?;
        let h_pinv = pinv_psd(&h)?;
        let a_new = u.matmul(&h_pinv);
        if !a_new.is_finite() {
            return Err(CpdError::NonFinite { mode });
        }
        model.grams.set(mode, a_new.gram());
        *model.factors.factor_mut(mode) = a_new;
    }
    Ok(fitness(window, &model.factors, None)?)
}

/// Runs sweeps until the fitness change drops below `tolerance` or
/// `max_sweeps` is reached, whichever comes first. Returns the final fitness
/// and the number of sweeps executed.
pub fn als_until<T: Real>(
    window: &SparseWindow<T>,
    model: &mut FactorModel<T>,
    max_sweeps: usize,
    tolerance: T,
) -> Result<(FitnessValue<T>, usize), CpdError> {
    let mut last = fitness(window, &model.factors, model.weights_slice())?;
    if last.zero_norm {
        return Ok((last, 0));
    }
    for sweep in 1..=max_sweeps {
        let next = als_sweep(window, model)?;
        let done = (next.value - last.value).abs() < tolerance;
        last = next;
        if done {
            return Ok((last, sweep));
        }
    }
    Ok((last, max_sweeps))
}
