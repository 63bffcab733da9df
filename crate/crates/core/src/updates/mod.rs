//! Per-event factor updates behind a single dispatch.
//!
//! Five variants share one outline: when an event changes the window, update
//! the touched time-mode row(s) of the time factor, then the row of every
//! categorical factor addressed by the event's indices.
//!
//! - `mat` ignores the outline and reruns a full normalizing sweep on the
//!   whole window (accurate, slow).
//! - `vec` solves each touched row exactly: additive on the time mode, row
//!   least squares on the categorical modes.
//! - `rnd` caps the work per categorical row at `theta` sampled residuals.
//! - `vec_plus` / `rnd_plus` replace the row solves with entrywise
//!   coordinate descent clipped to `[-eta, eta]`, which keeps the factors
//!   bounded where the unclipped variants can blow up on unseen indices.

mod entrywise;
mod full_sweep;
mod rowwise;
mod sampling;

pub use entrywise::{descent_entry, descent_row, DescentSource};
pub use full_sweep::full_sweep_step;
pub use rowwise::{row_least_squares_update, row_sampled_update, time_row_update};
pub use sampling::sample_residual_coords;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cpd::FactorModel;
use crate::linalg::{DenseMatrix, KernelError};
use crate::scalar::Real;
use crate::stream::{DeltaChange, SparseWindow, StreamError};

/// Which per-event update rule the engine runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    /// Full normalizing ALS sweep per event.
    Mat,
    /// Exact row updates.
    Vec,
    /// Row updates with sampled residuals above the degree threshold.
    Rnd,
    /// Clipped coordinate descent, exact support.
    VecPlus,
    /// Clipped coordinate descent with sampled residuals.
    #[default]
    RndPlus,
}

impl Algorithm {
    pub const ALL: [Algorithm; 5] = [
        Algorithm::Mat,
        Algorithm::Vec,
        Algorithm::Rnd,
        Algorithm::VecPlus,
        Algorithm::RndPlus,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Algorithm::Mat => "mat",
            Algorithm::Vec => "vec",
            Algorithm::Rnd => "rnd",
            Algorithm::VecPlus => "vec_plus",
            Algorithm::RndPlus => "rnd_plus",
        }
    }

    pub fn parse(s: &str) -> Option<Algorithm> {
        match s {
            "mat" => Some(Algorithm::Mat),
            "vec" => Some(Algorithm::Vec),
            "rnd" => Some(Algorithm::Rnd),
            "vec_plus" => Some(Algorithm::VecPlus),
            "rnd_plus" => Some(Algorithm::RndPlus),
            _ => None,
        }
    }

    /// Sampling variants maintain the previous-factor Gram products.
    pub fn uses_prev_grams(&self) -> bool {
        matches!(self, Algorithm::Rnd | Algorithm::RndPlus)
    }

    pub fn clips(&self) -> bool {
        matches!(self, Algorithm::VecPlus | Algorithm::RndPlus)
    }
}

/// Per-event update configuration.
#[derive(Debug, Clone, Copy)]
pub struct UpdateParams<T> {
    pub algorithm: Algorithm,
    /// Sampling threshold θ: rows with more incident non-zeros than this get
    /// the sampled rule in the `rnd` variants.
    pub theta: usize,
    /// Clipping bound η for the `plus` variants.
    pub eta: T,
}

impl<T: Real> UpdateParams<T> {
    pub fn new(algorithm: Algorithm, theta: usize, eta: T) -> Result<Self, UpdateError> {
        if theta < 1 {
            return Err(UpdateError::InvalidParameter("theta must be >= 1".into()));
        }
        if !(eta > T::zero()) {
            return Err(UpdateError::InvalidParameter("eta must be > 0".into()));
        }
        Ok(Self {
            algorithm,
            theta,
            eta,
        })
    }
}

/// Counters worth surfacing in reports.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct UpdateStats {
    pub row_updates: u64,
    pub entry_updates: u64,
    pub sampled_rows: u64,
    /// Entry updates skipped because the denominator column was dead.
    pub dead_column_skips: u64,
    /// Entry updates skipped because the solution came out NaN.
    pub non_finite_skips: u64,
}

#[derive(Debug, Error)]
pub enum UpdateError {
    #[error("non-finite factor row produced at mode {mode}, index {index}")]
    NonFinite { mode: usize, index: usize },
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Stream(#[from] StreamError),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// Incremental Gram maintenance after a row update:
/// `Q ← Q − pᵀp + aᵀa` with `p` the row value before the update.
pub fn gram_delta<T: Real>(gram: &mut DenseMatrix<T>, old_row: &[T], new_row: &[T]) {
    let rank = old_row.len();
    debug_assert_eq!(new_row.len(), rank);
    debug_assert_eq!(gram.rows(), rank);
    for i in 0..rank {
        for j in 0..rank {
            let v = gram.get(i, j) - old_row[i] * old_row[j] + new_row[i] * new_row[j];
            gram.set(i, j, v);
        }
    }
}

/// Previous-factor analogue: `U ← U − pᵀp + pᵀa` where `p` is the row of the
/// event-start snapshot. Exact as long as each row is updated at most once
/// per event, which the dispatch outline guarantees.
pub fn prev_gram_delta<T: Real>(gram: &mut DenseMatrix<T>, prev_row: &[T], new_row: &[T]) {
    let rank = prev_row.len();
    for i in 0..rank {
        for j in 0..rank {
            let v = gram.get(i, j) + prev_row[i] * (new_row[j] - prev_row[j]);
            gram.set(i, j, v);
        }
    }
}

/// Routes one window change through the configured variant:
/// time-mode rows first (`W-w+1`, then `W-w` when present), then the row of
/// each categorical mode in ascending mode order.
pub fn dispatch_event<T: Real>(
    delta: &DeltaChange<T>,
    window: &SparseWindow<T>,
    model: &mut FactorModel<T>,
    params: &UpdateParams<T>,
    rng: &mut ChaCha8Rng,
    stats: &mut UpdateStats,
) -> Result<(), UpdateError> {
    if params.algorithm == Algorithm::Mat {
        return full_sweep_step(window, model);
    }

    let time_len = window.time_len();
    let time_mode = window.order() - 1;
    if params.algorithm.uses_prev_grams() {
        model.prev_grams.reset_from(&model.grams);
    }

    let w = delta.step(time_len);
    if w > 0 {
        update_row(delta, window, model, params, rng, stats, time_mode, time_len - w + 1)?;
    }
    if w < time_len {
        update_row(delta, window, model, params, rng, stats, time_mode, time_len - w)?;
    }
    let non_time: std::vec::Vec<usize> = delta.non_time_indices().to_vec();
    for (mode, index) in non_time.into_iter().enumerate() {
        update_row(delta, window, model, params, rng, stats, mode, index)?;
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn update_row<T: Real>(
    delta: &DeltaChange<T>,
    window: &SparseWindow<T>,
    model: &mut FactorModel<T>,
    params: &UpdateParams<T>,
    rng: &mut ChaCha8Rng,
    stats: &mut UpdateStats,
    mode: usize,
    index: usize,
) -> Result<(), UpdateError> {
    let time_mode = window.order() - 1;
    let maintain_prev = params.algorithm.uses_prev_grams();
    stats.row_updates += 1;

    if mode == time_mode {
        // Both row families route their time rows through the cheap additive
        // rules: the change has at most two non-zeros, so there is nothing to
        // gain from sampling there.
        return match params.algorithm {
            Algorithm::Vec | Algorithm::Rnd => {
                time_row_update(delta, model, index, maintain_prev)
            }
            Algorithm::VecPlus | Algorithm::RndPlus => descent_row(
                delta,
                window,
                model,
                mode,
                index,
                params.eta,
                maintain_prev,
                DescentSource::DeltaOnly,
                stats,
            ),
            Algorithm::Mat => unreachable!("mat handled by dispatch"),
        };
    }

    match params.algorithm {
        Algorithm::Vec => row_least_squares_update(window, model, mode, index, maintain_prev),
        Algorithm::Rnd => {
            if window.degree(mode, index)? <= params.theta {
                row_least_squares_update(window, model, mode, index, maintain_prev)
            } else {
                stats.sampled_rows += 1;
                let sample =
                    sample_residual_coords(window, mode, index, params.theta, &delta.changes, rng);
                row_sampled_update(delta, window, model, mode, index, &sample)
            }
        }
        Algorithm::VecPlus => descent_row(
            delta,
            window,
            model,
            mode,
            index,
            params.eta,
            maintain_prev,
            DescentSource::Support,
            stats,
        ),
        Algorithm::RndPlus => {
            if window.degree(mode, index)? <= params.theta {
                descent_row(
                    delta,
                    window,
                    model,
                    mode,
                    index,
                    params.eta,
                    maintain_prev,
                    DescentSource::Support,
                    stats,
                )
            } else {
                stats.sampled_rows += 1;
                let sample =
                    sample_residual_coords(window, mode, index, params.theta, &delta.changes, rng);
                descent_row(
                    delta,
                    window,
                    model,
                    mode,
                    index,
                    params.eta,
                    maintain_prev,
                    DescentSource::Sampled(&sample),
                    stats,
                )
            }
        }
        Algorithm::Mat => unreachable!("mat handled by dispatch"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stream::{Coordinate, EventKind};
    use rand::SeedableRng;

    /// Which factor rows an event touches: for a shift of depth w, time rows
    /// W-w+1 and W-w plus one row per categorical mode; arrivals touch time
    /// row W only; expiries only time row 1.
    #[test]
    fn dispatch_touches_exactly_the_outlined_rows() {
        let lengths = vec![4usize, 5, 3];
        let v = 2.5f64;
        let window = SparseWindow::from_entries(
            lengths.clone(),
            &[
                (vec![2, 3, 3], v),
                (vec![2, 3, 2], 1.0),
                (vec![1, 1, 1], 4.0),
            ],
        )
        .unwrap();
        let cases = [
            (
                DeltaChange {
                    kind: EventKind::Arrival,
                    changes: vec![(Coordinate(vec![2, 3, 3]), v)],
                },
                vec![(2usize, 3usize), (0, 2), (1, 3)],
            ),
            (
                DeltaChange {
                    kind: EventKind::Shift { step: 1 },
                    changes: vec![
                        (Coordinate(vec![2, 3, 3]), -v),
                        (Coordinate(vec![2, 3, 2]), v),
                    ],
                },
                vec![(2, 3), (2, 2), (0, 2), (1, 3)],
            ),
            (
                DeltaChange {
                    kind: EventKind::Expiry,
                    changes: vec![(Coordinate(vec![2, 3, 1]), -v)],
                },
                vec![(2, 1), (0, 2), (1, 3)],
            ),
        ];
        for (delta, expected_touched) in cases {
            let mut model = crate::cpd::FactorModel::<f64>::init(&lengths, 2, 3);
            let before = model.factors.clone();
            let params = UpdateParams::new(Algorithm::Vec, 10, 1000.0).unwrap();
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
            let mut stats = UpdateStats::default();
            dispatch_event(&delta, &window, &mut model, &params, &mut rng, &mut stats)
                .unwrap();
            for mode in 0..3 {
                for index in 1..=lengths[mode] {
                    let changed = before.index_row(mode, index)
                        != model.factors.index_row(mode, index);
                    let expected = expected_touched.contains(&(mode, index));
                    assert_eq!(
                        changed, expected,
                        "{:?}: mode {mode} row {index}",
                        delta.kind
                    );
                }
            }
        }
    }

    #[test]
    fn algorithm_names_round_trip() {
        for alg in Algorithm::ALL {
            assert_eq!(Algorithm::parse(alg.as_str()), Some(alg));
        }
        assert_eq!(Algorithm::parse("nope"), None);
    }

    #[test]
    fn gram_delta_identity_row_is_noop_modulo_roundoff() {
        let mut g = DenseMatrix::from_rows(2, 2, vec![5.0, 1.0, 1.0, 2.0]).unwrap();
        let before = g.clone();
        gram_delta(&mut g, &[1.0, 2.0], &[1.0, 2.0]);
        assert_eq!(g, before);
    }

    #[test]
    fn gram_delta_from_zero_builds_outer_product() {
        let mut g = DenseMatrix::<f64>::zeros(2, 2);
        gram_delta(&mut g, &[0.0, 0.0], &[3.0, 4.0]);
        assert_eq!(g.data(), &[9.0, 12.0, 12.0, 16.0]);
    }

    #[test]
    fn params_validate_ranges() {
        assert!(UpdateParams::new(Algorithm::Rnd, 0, 1.0).is_err());
        assert!(UpdateParams::new(Algorithm::Rnd, 1, 0.0).is_err());
        assert!(UpdateParams::new(Algorithm::Rnd, 1, 1.0).is_ok());
    }
}
