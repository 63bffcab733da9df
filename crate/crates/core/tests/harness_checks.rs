//! End-to-end harness behavior on synthetic streams.

mod common;

use evcp_core::cpd::{als_until, FactorModel};
use evcp_core::harness::{
    emit_report, inject_and_detect, run_experiment, theta_sweep, HarnessError, ReportFormat,
};
use evcp_core::io::{synth_events, RunConfig, SynthKind, SynthParams};
use evcp_core::stream::StreamWindow;
use evcp_core::updates::Algorithm;

fn planted_config(rank: usize, algorithm: Algorithm) -> RunConfig {
    let mut config = RunConfig::default();
    config.rank = rank;
    config.window = 4;
    config.period = Some(50);
    config.theta = 20;
    config.eta = 1000.0;
    config.algorithm = algorithm;
    config.seed = 9;
    config.run_duration = 3.0;
    config.synth = Some(SynthParams {
        mode_lengths: vec![6, 6],
        num_events: 20_000,
        kind: SynthKind::Planted {
            rank: 5,
            noise: 0.1,
            period: 50,
        },
    });
    config
}

#[test]
fn planted_rank_is_recovered_by_als_on_the_assembled_window() {
    // Zero noise, matching rank: the window is exactly low-rank.
    let params = SynthParams {
        mode_lengths: vec![6, 6],
        num_events: 5_000,
        kind: SynthKind::Planted {
            rank: 5,
            noise: 0.0,
            period: 50,
        },
    };
    let events = synth_events::<f64>(&params, 4);
    let lengths = vec![6usize, 6, 4];
    let mut stream = StreamWindow::new(lengths.clone(), 50).unwrap();
    let warm_end = events[0].timestamp + 4 * 50;
    for e in events.iter().take_while(|e| e.timestamp <= warm_end) {
        stream.ingest(e, |_, _| {}).unwrap();
    }
    let mut model = FactorModel::init(&lengths, 5, 1);
    let (fit, _) = als_until(stream.window(), &mut model, 200, 1e-7).unwrap();
    assert!(fit.value >= 0.99, "planted recovery reached {}", fit.value);
}

#[test]
fn run_experiment_produces_a_coherent_report() {
    let config = planted_config(5, Algorithm::VecPlus);
    let events = synth_events::<f64>(config.synth.as_ref().unwrap(), config.seed);
    let report = run_experiment(&events, &config).unwrap();

    assert_eq!(report.schema_version, 1);
    assert!(!report.series.is_empty());
    let mut last_clock = i64::MIN;
    for p in &report.series {
        assert!(p.clock > last_clock, "series clocks strictly increasing");
        last_clock = p.clock;
        assert!(p.fitness.is_finite());
        if let Some(r) = p.relative_fitness {
            assert!(r.is_finite() && r > 0.0);
        }
    }
    assert!(report.summary.warmup_fitness > 0.5);
    assert!(report.summary.final_fitness > 0.5);
    assert!(report.summary.p50_update_ns <= report.summary.p95_update_ns);
    assert!(report.summary.avg_relative_fitness.is_some());
    // Every fully processed tuple contributes W+1 events eventually; at
    // minimum the totals add up.
    let s = &report.summary;
    assert_eq!(s.events_total, s.arrivals + s.shifts + s.expiries);
}

#[test]
fn zero_event_replay_keeps_warmup_fitness_only() {
    let mut config = planted_config(3, Algorithm::RndPlus);
    // Stream ends exactly at the warm-up boundary.
    let all = synth_events::<f64>(config.synth.as_ref().unwrap(), config.seed);
    let warm_end = all[0].timestamp + (config.window as i64) * 50;
    let truncated: Vec<_> = all
        .into_iter()
        .take_while(|e| e.timestamp <= warm_end)
        .collect();
    config.oracle = false;
    let report = run_experiment(&truncated, &config).unwrap();
    assert!(report.series.len() <= 1, "no replay data, no series growth");
    assert!(report.summary.warmup_fitness.is_finite());
}

#[test]
fn empty_stream_is_insufficient_warmup() {
    let config = planted_config(3, Algorithm::RndPlus);
    match run_experiment(&[], &config) {
        Err(HarnessError::InsufficientWarmup) => {}
        other => panic!("expected InsufficientWarmup, got {other:?}"),
    }
}

#[test]
fn reports_are_deterministic_modulo_timing() {
    let config = planted_config(4, Algorithm::RndPlus);
    let events = synth_events::<f64>(config.synth.as_ref().unwrap(), config.seed);
    let mut a = run_experiment(&events, &config).unwrap();
    let mut b = run_experiment(&events, &config).unwrap();
    // Zero the wall-clock-dependent fields, then demand byte equality.
    for r in [&mut a, &mut b] {
        r.summary.mean_update_ns = 0.0;
        r.summary.p50_update_ns = 0;
        r.summary.p95_update_ns = 0;
        r.summary.total_update_ns = 0;
        r.summary.total_replay_ns = 0;
        for p in &mut r.series {
            p.elapsed_ns_mean = 0.0;
        }
    }
    let ja = serde_json::to_string(&a).unwrap();
    let jb = serde_json::to_string(&b).unwrap();
    assert_eq!(ja, jb);
}

#[test]
fn emitted_reports_round_trip() {
    let config = planted_config(3, Algorithm::VecPlus);
    let events = synth_events::<f64>(config.synth.as_ref().unwrap(), config.seed);
    let report = run_experiment(&events, &config).unwrap();

    let dir = std::env::temp_dir().join(format!("evcp-harness-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();

    let files = emit_report(&report, &dir, ReportFormat::Json).unwrap();
    assert_eq!(files.len(), 1);
    let text = std::fs::read_to_string(&files[0]).unwrap();
    let back: evcp_core::harness::ExperimentReport = serde_json::from_str(&text).unwrap();
    assert_eq!(back.summary, report.summary);
    assert_eq!(back.series, report.series);

    let files = emit_report(&report, &dir, ReportFormat::Csv).unwrap();
    assert_eq!(files.len(), 2);
    let series_text = std::fs::read_to_string(&files[0]).unwrap();
    assert_eq!(series_text.lines().count(), report.series.len() + 1);
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn theta_sweep_reduces_to_exact_at_huge_theta() {
    let mut config = planted_config(4, Algorithm::RndPlus);
    config.oracle = false;
    let events = synth_events::<f64>(config.synth.as_ref().unwrap(), config.seed);

    let sweep = theta_sweep(&events, &config, &[5, 10_000]).unwrap();
    assert_eq!(sweep.rows.len(), 2);

    // At theta >= every degree the sampled variant IS the exact variant.
    let mut exact_config = config.clone();
    exact_config.algorithm = Algorithm::VecPlus;
    let exact = run_experiment(&events, &exact_config).unwrap();
    let huge = &sweep.rows[1];
    assert!(
        (huge.final_fitness - exact.summary.final_fitness).abs() <= 1e-9,
        "{} vs {}",
        huge.final_fitness,
        exact.summary.final_fitness
    );
}

#[test]
fn anomaly_injection_is_detected_within_the_same_event() {
    let mut config = planted_config(5, Algorithm::RndPlus);
    config.run_duration = 4.0;
    let events = synth_events::<f64>(config.synth.as_ref().unwrap(), config.seed);
    let record = inject_and_detect(&events, &config, 10, 5.0).unwrap();
    assert_eq!(record.injected.len(), 10);
    assert_eq!(record.detections.len(), 10);
    assert!(
        record.precision_at_k >= 0.7,
        "precision {}",
        record.precision_at_k
    );
    if let Some(latency) = record.mean_detection_latency {
        assert!(latency < 50.0, "latency {latency} time units");
    }
}

#[test]
fn zero_injections_detect_nothing() {
    let config = planted_config(3, Algorithm::RndPlus);
    let events = synth_events::<f64>(config.synth.as_ref().unwrap(), config.seed);
    let record = inject_and_detect(&events, &config, 0, 5.0).unwrap();
    assert!(record.injected.is_empty());
    assert!(record.detections.is_empty());
    assert_eq!(record.precision_at_k, 0.0);
}
