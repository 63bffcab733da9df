//! Event-driven scheduling that keeps the window aligned with the clock.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::scalar::Real;

use super::window::SparseWindow;
use super::{Coordinate, DeltaChange, EventKind, StreamError, TimestampedTuple};

/// One pending scheduled update for a live tuple. Ordered so that the
/// `BinaryHeap` pops the earliest due time first, ties broken FIFO by
/// enqueue sequence.
#[derive(Debug, Clone)]
struct Pending<T> {
    due: i64,
    seq: u64,
    step: usize,
    indices: Vec<usize>,
    value: T,
}

impl<T> PartialEq for Pending<T> {
    fn eq(&self, other: &Self) -> bool {
        self.due == other.due && self.seq == other.seq
    }
}
impl<T> Eq for Pending<T> {}
impl<T> PartialOrd for Pending<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<T> Ord for Pending<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .due
            .cmp(&self.due)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

/// Event totals since construction. A fully drained tuple contributes
/// exactly `W + 1` events: one arrival, `W - 1` shifts, one expiry.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EventCounts {
    pub arrivals: u64,
    pub shifts: u64,
    pub expiries: u64,
}

impl EventCounts {
    pub fn total(&self) -> u64 {
        self.arrivals + self.shifts + self.expiries
    }
}

/// The continuously sliding tensor window.
///
/// Owns the sparse storage, the schedule of pending updates, and the clock.
/// Updates are applied in due-time order; at equal times, scheduled updates
/// run before an arriving tuple carrying that timestamp, and among scheduled
/// updates enqueue order wins. Callbacks observe each [`DeltaChange`] after
/// the window has been mutated, so the window they see is `X + ΔX`.
#[derive(Debug, Clone)]
pub struct StreamWindow<T> {
    window: SparseWindow<T>,
    heap: BinaryHeap<Pending<T>>,
    period: i64,
    clock: i64,
    seq: u64,
    counts: EventCounts,
}

impl<T: Real> StreamWindow<T> {
    /// `mode_lengths` holds the categorical lengths followed by `W`;
    /// `period` is the unit length `T` in native time units.
    pub fn new(mode_lengths: Vec<usize>, period: i64) -> Result<Self, StreamError> {
        if period < 1 {
            return Err(StreamError::InvalidParameter(format!(
                "period must be >= 1, got {period}"
            )));
        }
        Ok(Self {
            window: SparseWindow::new(mode_lengths)?,
            heap: BinaryHeap::new(),
            period,
            clock: 0,
            seq: 0,
            counts: EventCounts::default(),
        })
    }

    pub fn window(&self) -> &SparseWindow<T> {
        &self.window
    }

    pub fn clock(&self) -> i64 {
        self.clock
    }

    pub fn period(&self) -> i64 {
        self.period
    }

    pub fn counts(&self) -> EventCounts {
        self.counts
    }

    /// Tuples that still have a scheduled update pending, i.e. the live
    /// tuples of the window.
    pub fn live_tuples(&self) -> usize {
        self.heap.len()
    }

    /// Ingests one tuple. The clock first advances to the tuple's timestamp,
    /// draining every scheduled update due on the way (each reported through
    /// `on_event`), then the arrival is applied and returned.
    pub fn ingest(
        &mut self,
        tuple: &TimestampedTuple<T>,
        mut on_event: impl FnMut(&DeltaChange<T>, &SparseWindow<T>),
    ) -> Result<DeltaChange<T>, StreamError> {
        let expected = self.window.order() - 1;
        if tuple.indices.len() != expected {
            return Err(StreamError::InvalidParameter(format!(
                "tuple has {} indices, window has {} categorical modes",
                tuple.indices.len(),
                expected
            )));
        }
        for (mode, (&index, &len)) in tuple
            .indices
            .iter()
            .zip(self.window.mode_lengths().iter())
            .enumerate()
        {
            if index == 0 || index > len {
                return Err(StreamError::IndexOutOfRange { mode, index, len });
            }
        }
        if tuple.timestamp < self.clock {
            return Err(StreamError::TimeRegression {
                timestamp: tuple.timestamp,
                clock: self.clock,
            });
        }

        self.drain_due(tuple.timestamp, &mut on_event);
        self.clock = tuple.timestamp;

        let time_len = self.window.time_len();
        let coord = Coordinate::from_parts(&tuple.indices, time_len);
        self.window.apply_change(&coord, tuple.value, 1);
        self.seq += 1;
        self.heap.push(Pending {
            due: tuple.timestamp + self.period,
            seq: self.seq,
            step: 1,
            indices: tuple.indices.clone(),
            value: tuple.value,
        });
        self.counts.arrivals += 1;

        Ok(DeltaChange {
            kind: EventKind::Arrival,
            changes: vec![(coord, tuple.value)],
        })
    }

    /// Advances the clock to `to`, applying every scheduled update due on the
    /// way. Returns the number of events processed.
    pub fn advance_clock(
        &mut self,
        to: i64,
        mut on_event: impl FnMut(&DeltaChange<T>, &SparseWindow<T>),
    ) -> Result<usize, StreamError> {
        if to < self.clock {
            return Err(StreamError::TimeRegression {
                timestamp: to,
                clock: self.clock,
            });
        }
        let n = self.drain_due(to, &mut on_event);
        self.clock = to;
        Ok(n)
    }

    fn drain_due(
        &mut self,
        to: i64,
        on_event: &mut impl FnMut(&DeltaChange<T>, &SparseWindow<T>),
    ) -> usize {
        let time_len = self.window.time_len();
        let mut processed = 0usize;
        while self
            .heap
            .peek()
            .is_some_and(|p| p.due <= to)
        {
            let p = self.heap.pop().expect("peeked");
            let w = p.step;
            let src = Coordinate::from_parts(&p.indices, time_len - w + 1);
            self.window.apply_change(&src, -p.value, -1);

            let delta = if w < time_len {
                let dst = Coordinate::from_parts(&p.indices, time_len - w);
                self.window.apply_change(&dst, p.value, 1);
                self.seq += 1;
                self.heap.push(Pending {
                    due: p.due + self.period,
                    seq: self.seq,
                    step: w + 1,
                    indices: p.indices,
                    value: p.value,
                });
                self.counts.shifts += 1;
                DeltaChange {
                    kind: EventKind::Shift { step: w },
                    changes: vec![(src, -p.value), (dst, p.value)],
                }
            } else {
                self.counts.expiries += 1;
                DeltaChange {
                    kind: EventKind::Expiry,
                    changes: vec![(src, -p.value)],
                }
            };

            self.clock = p.due;
            processed += 1;
            on_event(&delta, &self.window);
        }
        processed
    }
}
