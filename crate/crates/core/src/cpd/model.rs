//! Factor matrices, cached Gram matrices, and column weights.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::linalg::DenseMatrix;
use crate::scalar::Real;

/// The `M` factor matrices of a rank-`R` decomposition. The `m`-th matrix is
/// `N_m × R`; the last one covers the time mode.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorSet<T> {
    mats: Vec<DenseMatrix<T>>,
    rank: usize,
}

impl<T: Real> FactorSet<T> {
    pub fn new(mats: Vec<DenseMatrix<T>>) -> Self {
        assert!(!mats.is_empty(), "factor set needs at least one mode");
        let rank = mats[0].cols();
        assert!(
            mats.iter().all(|m| m.cols() == rank),
            "all factor matrices share the rank"
        );
        Self { mats, rank }
    }

    /// Seeded uniform-[0,1) initialization, the starting point handed to ALS.
    pub fn init_random(mode_lengths: &[usize], rank: usize, seed: u64) -> Self {
        assert!(rank >= 1, "rank must be at least 1");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mats = mode_lengths
            .iter()
            .map(|&n| {
                let mut m = DenseMatrix::zeros(n, rank);
                for v in m.data_mut() {
                    *v = T::from_f64_lossy(rng.gen::<f64>());
                }
                m
            })
            .collect();
        Self::new(mats)
    }

    pub fn order(&self) -> usize {
        self.mats.len()
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn mode_lengths(&self) -> Vec<usize> {
        self.mats.iter().map(|m| m.rows()).collect()
    }

    pub fn factor(&self, mode: usize) -> &DenseMatrix<T> {
        &self.mats[mode]
    }

    pub fn factor_mut(&mut self, mode: usize) -> &mut DenseMatrix<T> {
        &mut self.mats[mode]
    }

    pub fn factors(&self) -> &[DenseMatrix<T>] {
        &self.mats
    }

    /// Row of the `mode`-th factor addressed by a 1-based categorical index.
    #[inline]
    pub fn index_row(&self, mode: usize, index: usize) -> &[T] {
        self.mats[mode].row(index - 1)
    }

    #[inline]
    pub fn index_row_mut(&mut self, mode: usize, index: usize) -> &mut [T] {
        self.mats[mode].row_mut(index - 1)
    }

    pub fn is_finite(&self) -> bool {
        self.mats.iter().all(|m| m.is_finite())
    }

    /// Largest absolute entry over all modes.
    pub fn max_abs_entry(&self) -> T {
        let mut worst = T::zero();
        for m in &self.mats {
            for &v in m.data() {
                if v.abs() > worst || v.is_nan() {
                    worst = v.abs();
                }
            }
        }
        worst
    }
}

/// Per-mode Gram matrices `Q^(m) = A^(m)ᵀ A^(m)`, maintained incrementally
/// between rebuilds.
#[derive(Debug, Clone, PartialEq)]
pub struct GramSet<T> {
    mats: Vec<DenseMatrix<T>>,
}

impl<T: Real> GramSet<T> {
    pub fn from_factors(factors: &FactorSet<T>) -> Self {
        Self {
            mats: factors.factors().iter().map(|m| m.gram()).collect(),
        }
    }

    pub fn gram(&self, mode: usize) -> &DenseMatrix<T> {
        &self.mats[mode]
    }

    pub fn gram_mut(&mut self, mode: usize) -> &mut DenseMatrix<T> {
        &mut self.mats[mode]
    }

    pub fn grams(&self) -> &[DenseMatrix<T>] {
        &self.mats
    }

    pub fn set(&mut self, mode: usize, gram: DenseMatrix<T>) {
        self.mats[mode] = gram;
    }
}

/// Per-mode `U^(m) = A_prev^(m)ᵀ A^(m)` where `A_prev` is the factor state
/// at the start of the current event. Only the sampling variants read it;
/// unlike the Grams it is not symmetric.
#[derive(Debug, Clone, PartialEq)]
pub struct PrevGramSet<T> {
    mats: Vec<DenseMatrix<T>>,
}

impl<T: Real> PrevGramSet<T> {
    pub fn from_grams(grams: &GramSet<T>) -> Self {
        Self {
            mats: grams.grams().to_vec(),
        }
    }

    /// Re-snapshots `A_prev := A`, i.e. copies the current Grams.
    pub fn reset_from(&mut self, grams: &GramSet<T>) {
        for (dst, src) in self.mats.iter_mut().zip(grams.grams()) {
            dst.data_mut().copy_from_slice(src.data());
        }
    }

    pub fn gram(&self, mode: usize) -> &DenseMatrix<T> {
        &self.mats[mode]
    }

    pub fn gram_mut(&mut self, mode: usize) -> &mut DenseMatrix<T> {
        &mut self.mats[mode]
    }

    pub fn grams(&self) -> &[DenseMatrix<T>] {
        &self.mats
    }
}

/// The full decomposition state owned by one engine instance.
///
/// `weights` holds the column norms peeled off by the normalizing full-sweep
/// variant; the row- and entry-wise variants keep unnormalized factors with
/// implicit unit weights.
#[derive(Debug, Clone)]
pub struct FactorModel<T> {
    pub factors: FactorSet<T>,
    pub grams: GramSet<T>,
    pub prev_grams: PrevGramSet<T>,
    pub weights: Option<Vec<T>>,
}

impl<T: Real> FactorModel<T> {
    pub fn init(mode_lengths: &[usize], rank: usize, seed: u64) -> Self {
        let factors = FactorSet::init_random(mode_lengths, rank, seed);
        Self::from_factors(factors)
    }

    pub fn from_factors(factors: FactorSet<T>) -> Self {
        let grams = GramSet::from_factors(&factors);
        let prev_grams = PrevGramSet::from_grams(&grams);
        Self {
            factors,
            grams,
            prev_grams,
            weights: None,
        }
    }

    /// Drift repair: recomputes every Gram from scratch and re-snapshots the
    /// previous-factor products.
    pub fn rebuild_grams(&mut self) {
        self.grams = GramSet::from_factors(&self.factors);
        self.prev_grams = PrevGramSet::from_grams(&self.grams);
    }

    /// Worst Frobenius distance between the maintained Grams and a fresh
    /// recomputation, for drift audits.
    pub fn gram_drift(&self) -> T {
        let fresh = GramSet::from_factors(&self.factors);
        self.grams
            .grams()
            .iter()
            .zip(fresh.grams())
            .map(|(kept, exact)| kept.frobenius_distance(exact))
            .fold(T::zero(), |a, b| if b > a { b } else { a })
    }

    pub fn weights_slice(&self) -> Option<&[T]> {
        self.weights.as_deref()
    }
}
