//! Continuously sliding tensor window over a timestamped event stream.
//!
//! A stream of `(i_1, .., i_{M-1}, v, t)` tuples is aggregated into a sparse
//! M-mode window whose last mode holds `W` period-sized units ending at the
//! current clock. Every tuple triggers `W + 1` events over its lifetime: one
//! arrival, `W - 1` shifts that move its value one time index toward 1, and a
//! final expiry. Each event changes at most two window entries, and that
//! change (the [`DeltaChange`]) is what the factor-update rules consume.

mod scheduler;
mod window;

pub use scheduler::{EventCounts, StreamWindow};
pub use window::SparseWindow;

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum StreamError {
    #[error("index out of range: mode {mode} index {index} exceeds length {len}")]
    IndexOutOfRange { mode: usize, index: usize, len: usize },
    #[error("time regression: timestamp {timestamp} is earlier than clock {clock}")]
    TimeRegression { timestamp: i64, clock: i64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// One stream event: `(M-1)` categorical indices, a value, and a timestamp
/// in the stream's smallest time unit. Indices are 1-based.
#[derive(Debug, Clone, PartialEq)]
pub struct TimestampedTuple<T> {
    pub indices: Vec<usize>,
    pub value: T,
    pub timestamp: i64,
}

impl<T> TimestampedTuple<T> {
    pub fn new(indices: Vec<usize>, value: T, timestamp: i64) -> Self {
        Self {
            indices,
            value,
            timestamp,
        }
    }
}

/// Full window coordinate: `(M-1)` categorical indices followed by the time
/// index `w ∈ 1..=W`. All components are 1-based; factor-matrix rows are
/// addressed by `index - 1`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Coordinate(pub Vec<usize>);

impl Coordinate {
    pub fn from_parts(non_time: &[usize], time_index: usize) -> Self {
        let mut v = Vec::with_capacity(non_time.len() + 1);
        v.extend_from_slice(non_time);
        v.push(time_index);
        Coordinate(v)
    }

    pub fn order(&self) -> usize {
        self.0.len()
    }

    /// The time-mode index (last component).
    pub fn time_index(&self) -> usize {
        *self.0.last().expect("coordinate is never empty")
    }

    pub fn non_time(&self) -> &[usize] {
        &self.0[..self.0.len() - 1]
    }
}

/// What kind of window change a single event caused.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    /// A new tuple landed at time index `W`.
    Arrival,
    /// The `w`-th scheduled update, `1 <= w < W`: the value moved one time
    /// index toward 1.
    Shift { step: usize },
    /// The `W`-th scheduled update: the value left the window.
    Expiry,
}

/// The (at most two) changed window entries caused by one event.
///
/// Deltas are reported after the window has been mutated, so the window seen
/// by callbacks already equals `X + ΔX`.
#[derive(Debug, Clone, PartialEq)]
pub struct DeltaChange<T> {
    pub kind: EventKind,
    pub changes: Vec<(Coordinate, T)>,
}

impl<T> DeltaChange<T> {
    /// The shift depth `w` of this event: 0 for arrivals, `W` for expiries.
    pub fn step(&self, time_len: usize) -> usize {
        match self.kind {
            EventKind::Arrival => 0,
            EventKind::Shift { step } => step,
            EventKind::Expiry => time_len,
        }
    }

    /// The non-time indices shared by every change of this event.
    pub fn non_time_indices(&self) -> &[usize] {
        self.changes
            .first()
            .expect("delta always carries at least one change")
            .0
            .non_time()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coordinate_accessors() {
        let c = Coordinate::from_parts(&[1, 2], 3);
        assert_eq!(c.0, vec![1, 2, 3]);
        assert_eq!(c.time_index(), 3);
        assert_eq!(c.non_time(), &[1, 2]);
        assert_eq!(c.order(), 3);
    }

    #[test]
    fn delta_step_covers_all_kinds() {
        let coord = Coordinate::from_parts(&[1], 3);
        let mk = |kind| DeltaChange {
            kind,
            changes: vec![(coord.clone(), 1.0f64)],
        };
        assert_eq!(mk(EventKind::Arrival).step(3), 0);
        assert_eq!(mk(EventKind::Shift { step: 2 }).step(3), 2);
        assert_eq!(mk(EventKind::Expiry).step(3), 3);
    }
}
