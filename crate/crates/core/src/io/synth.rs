//! Seeded synthetic streams: desk-scale stand-ins for the public datasets.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::scalar::Real;
use crate::stream::TimestampedTuple;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case", deny_unknown_fields)]
pub enum SynthKind {
    /// Independent events: geometric inter-arrival times, per-mode index
    /// draws (uniform, or power-law when `index_skew > 0`), positive values
    /// uniform on `(0, value_max]` (integers `1..=value_max` when asked).
    Random {
        #[serde(default = "default_interarrival")]
        mean_interarrival: f64,
        #[serde(default)]
        index_skew: f64,
        #[serde(default = "default_value_max")]
        value_max: f64,
        #[serde(default)]
        integer_values: bool,
    },
    /// Low-rank latent structure: every categorical cell emits one event per
    /// period whose value is the planted CP reconstruction times
    /// `1 + noise·u`, `u ~ U(-1, 1)`. Any period-length slice of the stream
    /// then aggregates to exactly the planted tensor (plus noise), so
    /// fitness targets are meaningful.
    Planted {
        rank: usize,
        #[serde(default)]
        noise: f64,
        period: i64,
    },
}

fn default_interarrival() -> f64 {
    2.0
}

fn default_value_max() -> f64 {
    1.0
}

// No deny_unknown_fields here: serde cannot combine it with a flattened
// tagged enum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthParams {
    /// Categorical mode lengths (`M-1` of them).
    pub mode_lengths: Vec<usize>,
    pub num_events: u64,
    #[serde(flatten)]
    pub kind: SynthKind,
}

/// Deterministic per seed; identical calls produce identical streams.
pub fn synth_events<T: Real>(params: &SynthParams, seed: u64) -> Vec<TimestampedTuple<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match &params.kind {
        SynthKind::Random {
            mean_interarrival,
            index_skew,
            value_max,
            integer_values,
        } => random_stream(
            &params.mode_lengths,
            params.num_events,
            *mean_interarrival,
            *index_skew,
            *value_max,
            *integer_values,
            &mut rng,
        ),
        SynthKind::Planted {
            rank,
            noise,
            period,
        } => planted_stream(
            &params.mode_lengths,
            params.num_events,
            *rank,
            *noise,
            *period,
            &mut rng,
        ),
    }
}

#[allow(clippy::too_many_arguments)]
fn random_stream<T: Real>(
    mode_lengths: &[usize],
    num_events: u64,
    mean_interarrival: f64,
    index_skew: f64,
    value_max: f64,
    integer_values: bool,
    rng: &mut ChaCha8Rng,
) -> Vec<TimestampedTuple<T>> {
    // Power-law index draws via inverse CDF over precomputed weights.
    let cumulative: Vec<Vec<f64>> = mode_lengths
        .iter()
        .map(|&n| {
            let mut acc = 0.0;
            (1..=n)
                .map(|i| {
                    acc += if index_skew > 0.0 {
                        (i as f64).powf(-index_skew)
                    } else {
                        1.0
                    };
                    acc
                })
                .collect()
        })
        .collect();

    let p = (1.0 / mean_interarrival.max(1.0)).clamp(1e-9, 1.0);
    let mut t: i64 = 1;
    let mut events = Vec::with_capacity(num_events as usize);
    for _ in 0..num_events {
        if p < 1.0 {
            let u: f64 = rng.gen_range(f64::EPSILON..1.0);
            t += (u.ln() / (1.0 - p).ln()).floor() as i64;
        } else {
            t += 1;
        }
        let indices = cumulative
            .iter()
            .map(|cum| {
                let total = *cum.last().expect("non-empty mode");
                let target = rng.gen::<f64>() * total;
                cum.partition_point(|&c| c <= target) + 1
            })
            .collect();
        let value = if integer_values {
            (rng.gen::<f64>() * value_max).floor() + 1.0
        } else {
            (1.0 - rng.gen::<f64>()) * value_max
        };
        events.push(TimestampedTuple::new(indices, T::from_f64_lossy(value), t));
    }
    events
}

fn planted_stream<T: Real>(
    mode_lengths: &[usize],
    num_events: u64,
    rank: usize,
    noise: f64,
    period: i64,
    rng: &mut ChaCha8Rng,
) -> Vec<TimestampedTuple<T>> {
    let latent: Vec<Vec<f64>> = mode_lengths
        .iter()
        .map(|&n| (0..n * rank).map(|_| rng.gen::<f64>()).collect())
        .collect();
    let cells: usize = mode_lengths.iter().product();

    let mut events = Vec::with_capacity(num_events as usize);
    let mut indices = vec![1usize; mode_lengths.len()];
    'outer: for p in 0.. {
        indices.fill(1);
        for cell in 0..cells {
            if events.len() as u64 >= num_events {
                break 'outer;
            }
            let mut value = 0.0;
            for r in 0..rank {
                let mut prod = 1.0;
                for (m, &i) in indices.iter().enumerate() {
                    prod *= latent[m][(i - 1) * rank + r];
                }
                value += prod;
            }
            if noise > 0.0 {
                value *= 1.0 + noise * (rng.gen::<f64>() * 2.0 - 1.0);
            }
            // Spread the cells through (p·T, (p+1)·T].
            let offset = 1 + (cell as i64) * (period - 1) / (cells as i64);
            let t = p * period + offset;
            events.push(TimestampedTuple::new(
                indices.clone(),
                T::from_f64_lossy(value),
                t,
            ));
            // Advance the cell counter, last mode fastest.
            for m in (0..indices.len()).rev() {
                indices[m] += 1;
                if indices[m] <= mode_lengths[m] {
                    break;
                }
                indices[m] = 1;
            }
        }
    }
    events
}
