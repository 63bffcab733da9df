//! Stream-window behavior against brute-force recomputation.

mod common;

use std::collections::HashMap;

use proptest::prelude::*;
use rand::Rng;

use common::{brute_force_window, random_integer_stream, seeded, DenseTensor};
use evcp_core::stream::{StreamWindow, TimestampedTuple};

fn replay_to(
    events: &[TimestampedTuple<f64>],
    lengths: &[usize],
    period: i64,
    clock: i64,
) -> StreamWindow<f64> {
    let mut sw = StreamWindow::new(lengths.to_vec(), period).unwrap();
    for e in events {
        if e.timestamp > clock {
            break;
        }
        sw.ingest(e, |_, _| {}).unwrap();
    }
    sw.advance_clock(clock, |_, _| {}).unwrap();
    sw
}

fn window_as_map(sw: &StreamWindow<f64>) -> HashMap<Vec<usize>, f64> {
    sw.window()
        .entries()
        .map(|(c, v)| (c.0.clone(), v))
        .collect()
}

#[test]
fn replay_equals_brute_force_at_random_stopping_times() {
    let mut rng = seeded(0xD1CE);
    for case in 0..40 {
        let m = if case % 2 == 0 { 3 } else { 4 };
        let mut lengths: Vec<usize> = (0..m - 1).map(|_| rng.gen_range(2..6)).collect();
        let w = rng.gen_range(2..5);
        lengths.push(w);
        let period = rng.gen_range(1..20);
        let events = random_integer_stream(&mut rng, &lengths[..m - 1], 800, 3, 9);
        let t_max = events.last().unwrap().timestamp + w as i64 * period + 1;
        for _ in 0..6 {
            let clock = rng.gen_range(0..=t_max);
            let sw = replay_to(&events, &lengths, period, clock);
            let expected = brute_force_window(&events, &lengths, period, clock);
            assert_eq!(window_as_map(&sw), expected, "case {case} clock {clock}");
            sw.window().audit().unwrap();
        }
    }
}

#[test]
fn fully_drained_tuples_emit_w_plus_one_events_each() {
    let mut rng = seeded(7);
    for _ in 0..10 {
        let w = rng.gen_range(1..6);
        let lengths = vec![4usize, 4, w];
        let period = rng.gen_range(1..10);
        let k = rng.gen_range(1..400);
        let events = random_integer_stream(&mut rng, &lengths[..2], k, 2, 5);
        let mut sw = StreamWindow::new(lengths, period).unwrap();
        for e in &events {
            sw.ingest(e, |_, _| {}).unwrap();
        }
        let horizon = events.last().unwrap().timestamp + (w as i64 + 1) * period;
        sw.advance_clock(horizon, |_, _| {}).unwrap();
        assert_eq!(sw.counts().total(), (k as u64) * (w as u64 + 1));
        assert_eq!(sw.window().nnz(), 0);
        assert_eq!(sw.live_tuples(), 0);
    }
}

#[test]
fn stored_entries_bounded_by_live_tuples() {
    let mut rng = seeded(99);
    let lengths = vec![5usize, 5, 4];
    let events = random_integer_stream(&mut rng, &lengths[..2], 2000, 2, 5);
    let mut sw = StreamWindow::new(lengths, 7).unwrap();
    for e in &events {
        sw.ingest(e, |_, _| {}).unwrap();
        assert!(sw.window().stored_slots() <= sw.live_tuples());
    }
}

#[test]
fn shift_deltas_conserve_mass_and_registries_stay_coherent() {
    let mut rng = seeded(123);
    let lengths = vec![4usize, 3, 3];
    let events = random_integer_stream(&mut rng, &lengths[..2], 500, 4, 7);
    let mut sw = StreamWindow::new(lengths, 5).unwrap();
    let mut audits = 0;
    for e in &events {
        sw.ingest(e, |delta, window| {
            if let evcp_core::stream::EventKind::Shift { .. } = delta.kind {
                let sum: f64 = delta.changes.iter().map(|(_, d)| *d).sum();
                assert_eq!(sum, 0.0, "shift deltas must cancel");
            }
            window.audit().unwrap();
        })
        .unwrap();
        audits += 1;
    }
    assert!(audits > 0);
    sw.advance_clock(events.last().unwrap().timestamp + 100, |d, w| {
        let _ = d;
        w.audit().unwrap();
    })
    .unwrap();
}

#[test]
fn degree_matches_dense_matricization_row_count() {
    let mut rng = seeded(321);
    let lengths = vec![4usize, 5, 3];
    let events = random_integer_stream(&mut rng, &lengths[..2], 300, 3, 6);
    let sw = replay_to(&events, &lengths, 4, events.last().unwrap().timestamp);
    let dense = DenseTensor::from_window(sw.window());
    for mode in 0..3 {
        for index in 1..=lengths[mode] {
            let expected = common::matricized_row(&dense, mode, index)
                .iter()
                .filter(|&&v| v != 0.0)
                .count();
            assert_eq!(
                sw.window().degree(mode, index).unwrap(),
                expected,
                "mode {mode} index {index}"
            );
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// Replay equivalence as a property: any integer-valued stream, any
    /// stopping time.
    #[test]
    fn prop_replay_equivalence(
        seed in any::<u64>(),
        w in 1usize..5,
        period in 1i64..12,
        n_events in 1usize..300,
        clock_frac in 0.0f64..1.2,
    ) {
        let mut rng = seeded(seed);
        let lengths = vec![3usize, 4, w];
        let events = random_integer_stream(&mut rng, &lengths[..2], n_events, 3, 9);
        let t_last = events.last().unwrap().timestamp;
        let horizon = t_last + w as i64 * period;
        let clock = (horizon as f64 * clock_frac) as i64;
        let sw = replay_to(&events, &lengths, period, clock);
        let expected = brute_force_window(&events, &lengths, period, clock);
        prop_assert_eq!(window_as_map(&sw), expected);
        sw.window().audit().unwrap();
    }
}
