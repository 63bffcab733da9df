//! Shared test oracles: dense brute-force counterparts of the sparse
//! kernels, a plain Gaussian-elimination solver, and stream generators.
//! Everything here enumerates full index spaces; nothing reuses the sparse
//! code paths it checks.

#![allow(dead_code)]

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use evcp_core::cpd::FactorSet;
use evcp_core::stream::{SparseWindow, TimestampedTuple};

/// Row-major dense tensor with 1-based index accessors.
#[derive(Debug, Clone)]
pub struct DenseTensor {
    pub dims: Vec<usize>,
    pub data: Vec<f64>,
}

impl DenseTensor {
    pub fn zeros(dims: Vec<usize>) -> Self {
        let n = dims.iter().product();
        Self {
            dims,
            data: vec![0.0; n],
        }
    }

    pub fn from_window(window: &SparseWindow<f64>) -> Self {
        let mut t = Self::zeros(window.mode_lengths().to_vec());
        for (coord, v) in window.entries() {
            t.add(&coord.0, v);
        }
        t
    }

    fn offset(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.dims.len());
        let mut off = 0;
        for (i, (&ix, &n)) in idx.iter().zip(self.dims.iter()).enumerate() {
            debug_assert!(ix >= 1 && ix <= n, "index {ix} out of 1..={n} at mode {i}");
            off = off * n + (ix - 1);
        }
        off
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.data[self.offset(idx)]
    }

    pub fn add(&mut self, idx: &[usize], v: f64) {
        let off = self.offset(idx);
        self.data[off] += v;
    }
}

/// Every 1-based coordinate of `dims`, last mode varying fastest.
pub fn enumerate_coords(dims: &[usize]) -> Vec<Vec<usize>> {
    let mut out = Vec::with_capacity(dims.iter().product());
    let mut cur = vec![1usize; dims.len()];
    loop {
        out.push(cur.clone());
        let mut m = dims.len();
        loop {
            if m == 0 {
                return out;
            }
            m -= 1;
            cur[m] += 1;
            if cur[m] <= dims[m] {
                break;
            }
            cur[m] = 1;
        }
    }
}

fn factor_entry(factors: &FactorSet<f64>, mode: usize, index: usize, r: usize) -> f64 {
    factors.factor(mode).get(index - 1, r)
}

/// Dense MTTKRP: iterate every cell of the tensor, multiply by the product
/// of factor entries over the other modes.
pub fn dense_mttkrp(t: &DenseTensor, factors: &FactorSet<f64>, mode: usize) -> Vec<Vec<f64>> {
    let rank = factors.rank();
    let mut out = vec![vec![0.0; rank]; t.dims[mode]];
    for coord in enumerate_coords(&t.dims) {
        let x = t.get(&coord);
        if x == 0.0 {
            continue;
        }
        for r in 0..rank {
            let mut prod = 1.0;
            for (m, &i) in coord.iter().enumerate() {
                if m != mode {
                    prod *= factor_entry(factors, m, i, r);
                }
            }
            out[coord[mode] - 1][r] += x * prod;
        }
    }
    out
}

/// Materialized Khatri-Rao product skipping one mode. Row `j` corresponds to
/// `enumerate_coords(dims without mode)[j]`.
pub fn materialized_kr(
    factors: &FactorSet<f64>,
    skip_mode: usize,
    dims: &[usize],
) -> Vec<Vec<f64>> {
    let rank = factors.rank();
    let other_dims: Vec<usize> = dims
        .iter()
        .enumerate()
        .filter(|(m, _)| *m != skip_mode)
        .map(|(_, &n)| n)
        .collect();
    let other_modes: Vec<usize> = (0..dims.len()).filter(|&m| m != skip_mode).collect();
    enumerate_coords(&other_dims)
        .into_iter()
        .map(|partial| {
            (0..rank)
                .map(|r| {
                    partial
                        .iter()
                        .zip(other_modes.iter())
                        .map(|(&i, &m)| factor_entry(factors, m, i, r))
                        .product()
                })
                .collect()
        })
        .collect()
}

/// The mode-`m` matricized row of the tensor, columns aligned with
/// [`materialized_kr`].
pub fn matricized_row(t: &DenseTensor, mode: usize, index: usize) -> Vec<f64> {
    let other_dims: Vec<usize> = t
        .dims
        .iter()
        .enumerate()
        .filter(|(m, _)| *m != mode)
        .map(|(_, &n)| n)
        .collect();
    enumerate_coords(&other_dims)
        .into_iter()
        .map(|partial| {
            let mut full = Vec::with_capacity(t.dims.len());
            let mut it = partial.iter();
            for m in 0..t.dims.len() {
                if m == mode {
                    full.push(index);
                } else {
                    full.push(*it.next().unwrap());
                }
            }
            t.get(&full)
        })
        .collect()
}

/// Dense CP reconstruction of one entry.
pub fn dense_reconstruct(
    factors: &FactorSet<f64>,
    weights: Option<&[f64]>,
    coord: &[usize],
) -> f64 {
    let rank = factors.rank();
    (0..rank)
        .map(|r| {
            let w = weights.map_or(1.0, |w| w[r]);
            let prod: f64 = coord
                .iter()
                .enumerate()
                .map(|(m, &i)| factor_entry(factors, m, i, r))
                .product();
            w * prod
        })
        .sum()
}

/// Dense fitness by full enumeration.
pub fn dense_fitness(t: &DenseTensor, factors: &FactorSet<f64>, weights: Option<&[f64]>) -> f64 {
    let mut err_sq = 0.0;
    let mut norm_sq = 0.0;
    for coord in enumerate_coords(&t.dims) {
        let x = t.get(&coord);
        let xhat = dense_reconstruct(factors, weights, &coord);
        err_sq += (x - xhat) * (x - xhat);
        norm_sq += x * x;
    }
    1.0 - err_sq.sqrt() / norm_sq.sqrt()
}

/// `‖X - X̂‖_F` by full enumeration.
pub fn dense_residual_norm(
    t: &DenseTensor,
    factors: &FactorSet<f64>,
    weights: Option<&[f64]>,
) -> f64 {
    let mut err_sq = 0.0;
    for coord in enumerate_coords(&t.dims) {
        let d = t.get(&coord) - dense_reconstruct(factors, weights, &coord);
        err_sq += d * d;
    }
    err_sq.sqrt()
}

/// Gaussian elimination with partial pivoting; `None` on (near-)singular
/// systems. Independent of the crate's eigen-based pseudoinverse.
pub fn solve_linear(a: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let n = b.len();
    let mut m: Vec<Vec<f64>> = a
        .iter()
        .zip(b.iter())
        .map(|(row, &rhs)| {
            let mut r = row.clone();
            r.push(rhs);
            r
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| m[i][col].abs().partial_cmp(&m[j][col].abs()).unwrap())
            .unwrap();
        if m[pivot][col].abs() < 1e-12 {
            return None;
        }
        m.swap(col, pivot);
        for row in 0..n {
            if row == col {
                continue;
            }
            let f = m[row][col] / m[col][col];
            for k in col..=n {
                m[row][k] -= f * m[col][k];
            }
        }
    }
    Some((0..n).map(|i| m[i][n] / m[i][i]).collect())
}

/// Brute-force window per the unit/window definitions: for a stopping time
/// `t`, each tuple with `0 <= t - t_n < W·T` lands in time index
/// `W - (t - t_n) / T`.
pub fn brute_force_window(
    events: &[TimestampedTuple<f64>],
    mode_lengths: &[usize],
    period: i64,
    clock: i64,
) -> HashMap<Vec<usize>, f64> {
    let w = *mode_lengths.last().unwrap() as i64;
    let mut out: HashMap<Vec<usize>, f64> = HashMap::new();
    for e in events {
        if e.timestamp > clock {
            continue;
        }
        let age = clock - e.timestamp;
        if age >= w * period {
            continue;
        }
        let time_index = (w - age / period) as usize;
        let mut coord = e.indices.clone();
        coord.push(time_index);
        *out.entry(coord).or_insert(0.0) += e.value;
    }
    out.retain(|_, v| *v != 0.0);
    out
}

/// Random chronological stream with integer values (so float aggregation is
/// exact and replay comparisons can demand bit equality).
pub fn random_integer_stream(
    rng: &mut ChaCha8Rng,
    mode_lengths: &[usize],
    num_events: usize,
    max_gap: i64,
    max_value: u32,
) -> Vec<TimestampedTuple<f64>> {
    let mut t = 0i64;
    (0..num_events)
        .map(|_| {
            t += rng.gen_range(0..=max_gap);
            let indices = mode_lengths.iter().map(|&n| rng.gen_range(1..=n)).collect();
            let value = rng.gen_range(1..=max_value) as f64;
            TimestampedTuple::new(indices, value, t)
        })
        .collect()
}

/// Random dense-ish window with continuous values, for kernel oracles.
pub fn random_window(
    rng: &mut ChaCha8Rng,
    mode_lengths: &[usize],
    fill: f64,
) -> SparseWindow<f64> {
    let mut entries = Vec::new();
    for coord in enumerate_coords(mode_lengths) {
        if rng.gen::<f64>() < fill {
            entries.push((coord, rng.gen_range(-2.0..2.0)));
        }
    }
    SparseWindow::from_entries(mode_lengths.to_vec(), &entries).unwrap()
}

pub fn random_factors(rng: &mut ChaCha8Rng, mode_lengths: &[usize], rank: usize) -> FactorSet<f64> {
    FactorSet::init_random(mode_lengths, rank, rng.gen())
}

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn assert_close(a: f64, b: f64, tol: f64, what: &str) {
    let scale = 1.0f64.max(a.abs()).max(b.abs());
    assert!(
        (a - b).abs() <= tol * scale,
        "{what}: {a} vs {b} (tol {tol})"
    );
}
