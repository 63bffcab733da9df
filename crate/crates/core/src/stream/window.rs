//! Sparse window storage with per-(mode, index) non-zero registries.

use indexmap::{IndexMap, IndexSet};
use std::collections::HashMap;

use crate::scalar::{KahanSum, Real};

use super::{Coordinate, StreamError};

#[derive(Debug, Clone, Copy)]
struct Slot<T> {
    value: T,
    /// Live tuples currently aggregated at this coordinate. When the last one
    /// leaves, the slot is dropped outright, so float residue from cancelled
    /// additions cannot linger as a ghost entry.
    tuples: u32,
}

/// The current tensor window: a sparse map from M-dimensional coordinates to
/// values plus, for each mode, an index from categorical index to the set of
/// non-zero coordinates carrying it.
///
/// Invariants kept by every mutation (see [`SparseWindow::audit`]):
/// - no explicit zeros: an entry whose value lands exactly on zero leaves the
///   registries and the non-zero count;
/// - every non-zero coordinate appears in exactly one registry set per mode;
/// - registry sizes per mode sum to `nnz`.
///
/// Iteration order of entries and registries is insertion-determined, so
/// replaying the same event sequence reproduces identical float reductions.
#[derive(Debug, Clone)]
pub struct SparseWindow<T> {
    mode_lengths: Vec<usize>,
    slots: IndexMap<Coordinate, Slot<T>>,
    registries: Vec<HashMap<usize, IndexSet<Coordinate>>>,
    nnz: usize,
}

impl<T: Real> SparseWindow<T> {
    /// `mode_lengths` holds `N_1..N_{M-1}` followed by the time-mode length `W`.
    pub fn new(mode_lengths: Vec<usize>) -> Result<Self, StreamError> {
        if mode_lengths.len() < 2 {
            return Err(StreamError::InvalidParameter(
                "window needs at least one categorical mode and the time mode".into(),
            ));
        }
        if let Some((mode, _)) = mode_lengths.iter().enumerate().find(|(_, &n)| n == 0) {
            return Err(StreamError::InvalidParameter(format!(
                "mode {mode} has zero length"
            )));
        }
        let order = mode_lengths.len();
        Ok(Self {
            mode_lengths,
            slots: IndexMap::new(),
            registries: vec![HashMap::new(); order],
            nnz: 0,
        })
    }

    /// Number of modes `M`, including time.
    pub fn order(&self) -> usize {
        self.mode_lengths.len()
    }

    /// Time-mode length `W`.
    pub fn time_len(&self) -> usize {
        *self.mode_lengths.last().expect("at least two modes")
    }

    pub fn mode_lengths(&self) -> &[usize] {
        &self.mode_lengths
    }

    pub fn nnz(&self) -> usize {
        self.nnz
    }

    /// Number of coordinates currently backed by at least one live tuple.
    pub fn stored_slots(&self) -> usize {
        self.slots.len()
    }

    pub fn value(&self, coord: &Coordinate) -> T {
        self.slots
            .get(coord)
            .map(|s| s.value)
            .unwrap_or_else(T::zero)
    }

    /// Iterates the non-zero entries in a deterministic order.
    pub fn entries(&self) -> impl Iterator<Item = (&Coordinate, T)> {
        self.slots
            .iter()
            .filter(|(_, s)| s.value != T::zero())
            .map(|(c, s)| (c, s.value))
    }

    /// `Σ x²` over the stored entries, compensated.
    pub fn frobenius_sq(&self) -> T {
        let mut acc = KahanSum::new();
        for (_, v) in self.entries() {
            acc.add(v * v);
        }
        acc.value()
    }

    pub fn check_coord(&self, coord: &Coordinate) -> Result<(), StreamError> {
        if coord.order() != self.order() {
            return Err(StreamError::InvalidParameter(format!(
                "coordinate has {} components, window has {} modes",
                coord.order(),
                self.order()
            )));
        }
        for (mode, (&index, &len)) in coord.0.iter().zip(self.mode_lengths.iter()).enumerate() {
            if index == 0 || index > len {
                return Err(StreamError::IndexOutOfRange { mode, index, len });
            }
        }
        Ok(())
    }

    /// Number of non-zeros whose `mode`-th index equals `index`.
    pub fn degree(&self, mode: usize, index: usize) -> Result<usize, StreamError> {
        let len = *self
            .mode_lengths
            .get(mode)
            .ok_or_else(|| StreamError::InvalidParameter(format!("no mode {mode}")))?;
        if index == 0 || index > len {
            return Err(StreamError::IndexOutOfRange { mode, index, len });
        }
        Ok(self.registries[mode].get(&index).map_or(0, |s| s.len()))
    }

    /// Deterministic iteration over the non-zeros with `mode`-th index `index`.
    pub fn registry_iter(&self, mode: usize, index: usize) -> impl Iterator<Item = &Coordinate> {
        self.registries[mode]
            .get(&index)
            .into_iter()
            .flat_map(|s| s.iter())
    }

    /// Positional access into a registry set, used by the samplers.
    pub fn registry_get(&self, mode: usize, index: usize, pos: usize) -> Option<&Coordinate> {
        self.registries[mode].get(&index).and_then(|s| s.get_index(pos))
    }

    /// Position of `coord` within its registry set for `mode`, if non-zero.
    pub fn registry_position(&self, mode: usize, index: usize, coord: &Coordinate) -> Option<usize> {
        self.registries[mode]
            .get(&index)
            .and_then(|s| s.get_index_of(coord))
    }

    /// Applies a signed value change plus a live-tuple count change.
    ///
    /// `tuple_delta` is +1 when a tuple starts residing at `coord` (arrival,
    /// shift destination), -1 when it leaves (shift source, expiry), and 0 for
    /// pure value edits.
    pub(crate) fn apply_change(&mut self, coord: &Coordinate, delta: T, tuple_delta: i32) {
        let (old_value, old_tuples) = match self.slots.get(coord) {
            Some(s) => (s.value, s.tuples),
            None => (T::zero(), 0),
        };
        let was_nonzero = old_value != T::zero();
        let new_tuples = (old_tuples as i64 + tuple_delta as i64).max(0) as u32;
        let new_value = if new_tuples == 0 {
            T::zero()
        } else {
            old_value + delta
        };
        let is_nonzero = new_value != T::zero();

        match (was_nonzero, is_nonzero) {
            (false, true) => {
                self.register(coord);
                self.nnz += 1;
            }
            (true, false) => {
                self.unregister(coord);
                self.nnz -= 1;
            }
            _ => {}
        }

        if new_tuples == 0 {
            self.slots.swap_remove(coord);
        } else {
            self.slots.insert(
                coord.clone(),
                Slot {
                    value: new_value,
                    tuples: new_tuples,
                },
            );
        }
    }

    fn register(&mut self, coord: &Coordinate) {
        for (mode, &index) in coord.0.iter().enumerate() {
            self.registries[mode]
                .entry(index)
                .or_default()
                .insert(coord.clone());
        }
    }

    fn unregister(&mut self, coord: &Coordinate) {
        for (mode, &index) in coord.0.iter().enumerate() {
            if let Some(set) = self.registries[mode].get_mut(&index) {
                set.swap_remove(coord);
                if set.is_empty() {
                    self.registries[mode].remove(&index);
                }
            }
        }
    }

    /// Test/loader constructor: populates a static window, one synthetic
    /// tuple per entry.
    pub fn from_entries(
        mode_lengths: Vec<usize>,
        entries: &[(Vec<usize>, T)],
    ) -> Result<Self, StreamError> {
        let mut w = Self::new(mode_lengths)?;
        for (indices, value) in entries {
            let coord = Coordinate(indices.clone());
            w.check_coord(&coord)?;
            w.apply_change(&coord, *value, 1);
        }
        Ok(w)
    }

    /// Verifies registry coherence and the non-zero count against a rebuild
    /// from the slot map. Meant for debug audits in tests.
    pub fn audit(&self) -> Result<(), String> {
        let mut expected_nnz = 0usize;
        for (coord, slot) in &self.slots {
            if slot.tuples == 0 {
                return Err(format!("slot {coord:?} kept with zero live tuples"));
            }
            let nonzero = slot.value != T::zero();
            if nonzero {
                expected_nnz += 1;
            }
            for (mode, &index) in coord.0.iter().enumerate() {
                let present = self.registries[mode]
                    .get(&index)
                    .is_some_and(|s| s.contains(coord));
                if present != nonzero {
                    return Err(format!(
                        "registry mismatch for {coord:?} in mode {mode}: present={present}, nonzero={nonzero}"
                    ));
                }
            }
        }
        if expected_nnz != self.nnz {
            return Err(format!(
                "nnz counter {} != recount {}",
                self.nnz, expected_nnz
            ));
        }
        for (mode, registry) in self.registries.iter().enumerate() {
            let mut total = 0usize;
            for (index, set) in registry {
                for coord in set {
                    if coord.0[mode] != *index {
                        return Err(format!(
                            "stale coordinate {coord:?} filed under mode {mode} index {index}"
                        ));
                    }
                    if self.slots.get(coord).map_or(true, |s| s.value == T::zero()) {
                        return Err(format!("registry holds zero entry {coord:?}"));
                    }
                }
                total += set.len();
            }
            if total != self.nnz {
                return Err(format!(
                    "mode {mode} registry size {total} != nnz {}",
                    self.nnz
                ));
            }
        }
        Ok(())
    }
}
