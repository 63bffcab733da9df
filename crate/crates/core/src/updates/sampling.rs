//! Uniform without-replacement sampling from a row's non-zero registry.

use std::collections::HashMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::scalar::Real;
use crate::stream::{Coordinate, SparseWindow};

/// Draws up to `theta` coordinates uniformly without replacement from the
/// non-zeros whose `mode`-th index is `index`, skipping the coordinates of
/// the event's own changes.
///
/// Runs a partial Fisher–Yates over registry positions with a sparse swap
/// map, so the cost is `O(theta)` rather than the row degree. Excluded
/// positions are remapped past the eligible range first, which keeps the
/// draw uniform over the eligible set.
pub fn sample_residual_coords<T: Real>(
    window: &SparseWindow<T>,
    mode: usize,
    index: usize,
    theta: usize,
    exclude: &[(Coordinate, T)],
    rng: &mut ChaCha8Rng,
) -> Vec<Coordinate> {
    let degree = window.degree(mode, index).unwrap_or(0);
    if degree == 0 {
        return Vec::new();
    }

    let mut excluded: Vec<usize> = exclude
        .iter()
        .filter_map(|(coord, _)| window.registry_position(mode, index, coord))
        .collect();
    excluded.sort_unstable();
    excluded.dedup();

    let eligible = degree - excluded.len();
    let take = theta.min(eligible);
    if take == 0 {
        return Vec::new();
    }

    // Pair excluded positions inside [0, eligible) with spare non-excluded
    // positions in the tail [eligible, degree).
    let mut spares = (eligible..degree).filter(|p| !excluded.contains(p));
    let mut remap: HashMap<usize, usize> = HashMap::new();
    for &x in excluded.iter().filter(|&&x| x < eligible) {
        remap.insert(x, spares.next().expect("tail holds one spare per exclusion"));
    }

    let mut swaps: HashMap<usize, usize> = HashMap::new();
    let mut out = Vec::with_capacity(take);
    for i in 0..take {
        let j = rng.gen_range(i..eligible);
        let vj = *swaps.get(&j).unwrap_or(&j);
        let vi = *swaps.get(&i).unwrap_or(&i);
        swaps.insert(j, vi);
        let pos = *remap.get(&vj).unwrap_or(&vj);
        out.push(
            window
                .registry_get(mode, index, pos)
                .expect("registry position in range")
                .clone(),
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use std::collections::HashSet;

    fn window_with_row(n: usize) -> SparseWindow<f64> {
        let entries: Vec<(Vec<usize>, f64)> =
            (1..=n).map(|j| (vec![1, j, 1], j as f64)).collect();
        SparseWindow::from_entries(vec![2, n, 2], &entries).unwrap()
    }

    #[test]
    fn sample_is_distinct_and_within_row() {
        let w = window_with_row(50);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = sample_residual_coords(&w, 0, 1, 10, &[], &mut rng);
        assert_eq!(s.len(), 10);
        let set: HashSet<_> = s.iter().collect();
        assert_eq!(set.len(), 10);
        for c in &s {
            assert_eq!(c.0[0], 1);
        }
    }

    #[test]
    fn sample_excludes_event_coordinates() {
        let w = window_with_row(6);
        let excluded = vec![
            (Coordinate(vec![1, 2, 1]), 0.0),
            (Coordinate(vec![1, 5, 1]), 0.0),
        ];
        for seed in 0..50 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let s = sample_residual_coords(&w, 0, 1, 4, &excluded, &mut rng);
            assert_eq!(s.len(), 4);
            assert!(s.iter().all(|c| c.0[1] != 2 && c.0[1] != 5));
        }
    }

    #[test]
    fn sample_caps_at_eligible_count() {
        let w = window_with_row(3);
        let excluded = vec![(Coordinate(vec![1, 1, 1]), 0.0)];
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let s = sample_residual_coords(&w, 0, 1, 10, &excluded, &mut rng);
        assert_eq!(s.len(), 2);
    }

    #[test]
    fn sample_is_deterministic_per_seed() {
        let w = window_with_row(30);
        let a = sample_residual_coords(&w, 0, 1, 7, &[], &mut ChaCha8Rng::seed_from_u64(9));
        let b = sample_residual_coords(&w, 0, 1, 7, &[], &mut ChaCha8Rng::seed_from_u64(9));
        assert_eq!(a, b);
    }

    #[test]
    fn sample_covers_the_row_uniformly_enough() {
        // Every eligible coordinate should appear across many seeds.
        let w = window_with_row(8);
        let mut seen = HashSet::new();
        for seed in 0..200 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for c in sample_residual_coords(&w, 0, 1, 3, &[], &mut rng) {
                seen.insert(c.0[1]);
            }
        }
        assert_eq!(seen.len(), 8);
    }
}
