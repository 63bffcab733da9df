//! Experiment drivers: warm-up, timed replay, relative-fitness oracles,
//! scalability and θ sweeps, and the anomaly-detection task.
//!
//! Everything here is pinned to `f64`; the math underneath stays generic.

mod replay;
mod report;
mod stats;

pub use replay::Replay;
pub use report::{
    emit_report, write_json, write_series_csv, AnomalyRecord, Detection, ExperimentReport,
    InjectedAnomaly, ReportFormat, ScaleReport, ScaleRow, SeriesPoint, Summary, ThetaReport,
    ThetaRow, REPORT_SCHEMA_VERSION,
};
pub use stats::{linear_fit, loglog_slope, percentile, RollingStats};

use std::collections::HashSet;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::cpd::{als_until, relative_fitness, CpdError, FactorModel};
use crate::io::{synth_events, IoError, RunConfig};
use crate::linalg::reconstruct_entry;
use crate::stream::{EventKind, StreamError, StreamWindow, TimestampedTuple};
use crate::updates::{UpdateError, UpdateParams};

/// Residuals kept by the anomaly scorer.
const RESIDUAL_HISTORY: usize = 10_000;
/// Scores are suppressed until this many residuals have been seen.
const MIN_RESIDUAL_HISTORY: usize = 30;
/// Salt separating the update-sampling RNG stream from factor init.
const UPDATE_RNG_SALT: u64 = 0x9E37_79B9_7F4A_7C15;
/// Salt for injection positions and coordinates.
const INJECT_RNG_SALT: u64 = 0xA5A5_5A5A_C3C3_3C3C;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("stream too short to fill the warm-up window")]
    InsufficientWarmup,
    #[error(transparent)]
    Config(#[from] IoError),
    #[error(transparent)]
    Stream(#[from] StreamError),
    #[error(transparent)]
    Update(#[from] UpdateError),
    #[error(transparent)]
    Cpd(#[from] CpdError),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl From<std::io::Error> for HarnessError {
    fn from(e: std::io::Error) -> Self {
        HarnessError::Config(IoError::Io(e))
    }
}

struct Prepared {
    replay: Replay,
    warmup_events: u64,
    warmup_sweeps: usize,
    warmup_fitness: f64,
    warm_end: i64,
    horizon: i64,
    consumed: usize,
    max_warmup_change: f64,
}

/// Assembles the initial window from the leading `warmup_windows · W · T`
/// time units and initializes the factors with ALS on it.
fn prepare(events: &[TimestampedTuple<f64>], config: &RunConfig) -> Result<Prepared, HarnessError> {
    config.validate()?;
    let period = config.period()?;
    let categorical = config.mode_lengths()?;
    let mut lengths = categorical;
    lengths.push(config.window);

    let first = events.first().ok_or(HarnessError::InsufficientWarmup)?;
    let span = config.window as i64 * period;
    let warm_end = first.timestamp + config.warmup_windows as i64 * span;
    let horizon = warm_end + (config.run_duration * span as f64).ceil() as i64;

    let mut stream = StreamWindow::new(lengths.clone(), period)?;
    let mut consumed = 0usize;
    let mut max_change = 0.0f64;
    while consumed < events.len() && events[consumed].timestamp <= warm_end {
        let e = &events[consumed];
        stream.ingest(e, |_, _| {})?;
        max_change = max_change.max(e.value.abs());
        consumed += 1;
    }
    let warmup_events = consumed as u64;
    if stream.window().nnz() == 0 {
        return Err(HarnessError::InsufficientWarmup);
    }

    let mut model = FactorModel::init(&lengths, config.rank, config.seed);
    let (warm_fit, warmup_sweeps) = als_until(
        stream.window(),
        &mut model,
        config.init_sweeps,
        config.init_tolerance,
    )?;

    let params = UpdateParams::new(config.algorithm, config.theta, config.eta)?;
    let replay = Replay::new(stream, model, params, config.seed ^ UPDATE_RNG_SALT);
    Ok(Prepared {
        replay,
        warmup_events,
        warmup_sweeps,
        warmup_fitness: warm_fit.value,
        warm_end,
        horizon,
        consumed,
        max_warmup_change: max_change,
    })
}

/// Fresh ALS from scratch on the current window: the relative-fitness
/// denominator. Seeded per sample point for determinism.
fn oracle_fitness(
    replay: &Replay,
    config: &RunConfig,
    sample_index: usize,
) -> Result<f64, HarnessError> {
    let lengths = replay.stream.window().mode_lengths().to_vec();
    let mut model = FactorModel::init(
        &lengths,
        config.rank,
        config.seed.wrapping_add(1_000_003 + sample_index as u64),
    );
    let (fit, _) = als_until(
        replay.stream.window(),
        &mut model,
        config.oracle_sweeps,
        config.oracle_tolerance,
    )?;
    Ok(fit.value)
}

/// Warm-up, ALS init, and full replay without metric sampling. Returns the
/// finished session — factors, counters, stream — for checkpointing.
pub fn replay_to_end(
    events: &[TimestampedTuple<f64>],
    config: &RunConfig,
) -> Result<Replay, HarnessError> {
    let mut prep = prepare(events, config)?;
    for e in &events[prep.consumed..] {
        if e.timestamp > prep.horizon {
            break;
        }
        prep.replay.ingest(e)?;
    }
    prep.replay.advance(prep.horizon)?;
    Ok(prep.replay)
}

/// Replays the stream for `run_duration · W · T` time units after warm-up,
/// routing every window change through the configured update rule, timing
/// each update, and sampling fitness every `report_interval` time units.
/// Fitness evaluation and the oracle run outside the timed sections.
pub fn run_experiment(
    events: &[TimestampedTuple<f64>],
    config: &RunConfig,
) -> Result<ExperimentReport, HarnessError> {
    let mut prep = prepare(events, config)?;
    let interval = config.report_interval()?;
    let mut next_sample = prep.warm_end + interval;
    let mut series = Vec::new();
    let mut latency_cursor = 0usize;

    let replay_started = Instant::now();
    let sample =
        |replay: &Replay, series: &mut Vec<SeriesPoint>, cursor: &mut usize| -> Result<(), HarnessError> {
            let fit = replay.fitness()?;
            let rel = if config.oracle {
                let als = oracle_fitness(replay, config, series.len())?;
                relative_fitness(fit, als)
            } else {
                None
            };
            let new = &replay.latencies_ns[*cursor..];
            let mean_ns = if new.is_empty() {
                0.0
            } else {
                new.iter().sum::<u64>() as f64 / new.len() as f64
            };
            *cursor = replay.latencies_ns.len();
            series.push(SeriesPoint {
                clock: replay.stream.clock(),
                fitness: fit,
                relative_fitness: rel,
                cumulative_events: replay.stream.counts().total(),
                elapsed_ns_mean: mean_ns,
            });
            Ok(())
        };

    for e in &events[prep.consumed..] {
        if e.timestamp > prep.horizon {
            break;
        }
        prep.replay.ingest(e)?;
        if prep.replay.stream.clock() >= next_sample {
            sample(&prep.replay, &mut series, &mut latency_cursor)?;
            while next_sample <= prep.replay.stream.clock() {
                next_sample += interval;
            }
        }
    }
    prep.replay.advance(prep.horizon)?;
    if prep.replay.stream.clock() >= next_sample {
        sample(&prep.replay, &mut series, &mut latency_cursor)?;
    }
    let total_replay_ns = replay_started.elapsed().as_nanos() as u64;

    let final_fitness = prep.replay.fitness()?;
    let mut sorted = prep.replay.latencies_ns.clone();
    sorted.sort_unstable();
    let total_update_ns: u64 = sorted.iter().sum();
    let mean_update_ns = if sorted.is_empty() {
        0.0
    } else {
        total_update_ns as f64 / sorted.len() as f64
    };
    let rels: Vec<f64> = series.iter().filter_map(|p| p.relative_fitness).collect();
    let counts = prep.replay.stream.counts();

    Ok(ExperimentReport {
        schema_version: REPORT_SCHEMA_VERSION,
        seed: config.seed,
        config: config.clone(),
        summary: Summary {
            algorithm: config.algorithm.as_str().to_string(),
            warmup_events: prep.warmup_events,
            warmup_sweeps: prep.warmup_sweeps,
            warmup_fitness: prep.warmup_fitness,
            events_total: counts.total(),
            arrivals: counts.arrivals,
            shifts: counts.shifts,
            expiries: counts.expiries,
            final_fitness,
            avg_relative_fitness: if rels.is_empty() {
                None
            } else {
                Some(rels.iter().sum::<f64>() / rels.len() as f64)
            },
            mean_update_ns,
            p50_update_ns: percentile(&sorted, 50.0),
            p95_update_ns: percentile(&sorted, 95.0),
            total_update_ns,
            total_replay_ns,
            window_nnz_final: prep.replay.stream.window().nnz(),
            dead_column_skips: prep.replay.stats.dead_column_skips,
            sampled_rows: prep.replay.stats.sampled_rows,
        },
        series,
    })
}

/// Replays synthetic streams of increasing size and fits the log-log slope
/// of total runtime against event count. Requires a `synth` config section.
pub fn scalability_sweep(config: &RunConfig, sizes: &[u64]) -> Result<ScaleReport, HarnessError> {
    let synth = config
        .synth
        .clone()
        .ok_or_else(|| IoError::MissingRequiredKey("synth".into()))?;
    let mut rows = Vec::with_capacity(sizes.len());
    for &size in sizes {
        let mut params = synth.clone();
        params.num_events = size;
        let events = synth_events::<f64>(&params, config.seed);
        let mut cfg = config.clone();
        cfg.oracle = false;
        // Cover the whole generated stream: the point is runtime versus
        // event count, so no events may fall past the replay horizon.
        if let (Some(first), Some(last)) = (events.first(), events.last()) {
            let span = cfg.window as i64 * cfg.period()?;
            let warm_end = first.timestamp + cfg.warmup_windows as i64 * span;
            let needed = ((last.timestamp - warm_end).max(0) as f64 / span as f64) + 1.0;
            cfg.run_duration = cfg.run_duration.max(needed);
        }
        cfg.synth = Some(params);
        let report = run_experiment(&events, &cfg)?;
        rows.push(ScaleRow {
            num_events: size,
            events_processed: report.summary.events_total,
            total_update_ns: report.summary.total_update_ns,
            total_replay_ns: report.summary.total_replay_ns,
        });
    }
    let xs: Vec<f64> = rows.iter().map(|r| r.num_events as f64).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.total_replay_ns as f64).collect();
    Ok(ScaleReport {
        schema_version: REPORT_SCHEMA_VERSION,
        seed: config.seed,
        rows,
        loglog_slope: loglog_slope(&xs, &ys),
    })
}

/// One θ point of a sweep.
pub fn theta_point(
    events: &[TimestampedTuple<f64>],
    config: &RunConfig,
    theta: usize,
) -> Result<ThetaRow, HarnessError> {
    let mut cfg = config.clone();
    cfg.theta = theta;
    let report = run_experiment(events, &cfg)?;
    Ok(ThetaRow {
        theta,
        avg_relative_fitness: report.summary.avg_relative_fitness,
        final_fitness: report.summary.final_fitness,
        mean_update_ns: report.summary.mean_update_ns,
    })
}

/// Assembles sweep rows into a report with the latency-vs-θ fit.
pub fn theta_report(seed: u64, rows: Vec<ThetaRow>) -> ThetaReport {
    let xs: Vec<f64> = rows.iter().map(|r| r.theta as f64).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.mean_update_ns).collect();
    ThetaReport {
        schema_version: REPORT_SCHEMA_VERSION,
        seed,
        rows,
        latency_fit_r2: linear_fit(&xs, &ys).map(|(_, _, r2)| r2),
    }
}

/// Reruns the experiment per θ and fits mean update latency against θ.
pub fn theta_sweep(
    events: &[TimestampedTuple<f64>],
    config: &RunConfig,
    thetas: &[usize],
) -> Result<ThetaReport, HarnessError> {
    let mut rows = Vec::with_capacity(thetas.len());
    for &theta in thetas {
        rows.push(theta_point(events, config, theta)?);
    }
    Ok(theta_report(config.seed, rows))
}

/// Injects `k` oversized arrivals at random replay positions and scores the
/// prediction residual of every arriving entry against a rolling history.
///
/// The residual of the changed entry is taken before the factors absorb the
/// event; entries of the newest tensor unit are also folded into the history
/// whenever the clock crosses a unit boundary.
pub fn inject_and_detect(
    events: &[TimestampedTuple<f64>],
    config: &RunConfig,
    k: usize,
    magnitude_factor: f64,
) -> Result<AnomalyRecord, HarnessError> {
    let mut prep = prepare(events, config)?;
    let period = config.period()?;
    let magnitude = magnitude_factor * prep.max_warmup_change.max(f64::MIN_POSITIVE);
    let categorical = config.mode_lengths()?;
    let time_len = config.window;

    let replay_slice: Vec<&TimestampedTuple<f64>> = events[prep.consumed..]
        .iter()
        .take_while(|e| e.timestamp <= prep.horizon)
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ INJECT_RNG_SALT);
    let positions: HashSet<usize> = {
        let n = replay_slice.len();
        let take = k.min(n);
        let mut swaps = std::collections::HashMap::new();
        let mut out = HashSet::with_capacity(take);
        for i in 0..take {
            let j = rng.gen_range(i..n);
            let vj = *swaps.get(&j).unwrap_or(&j);
            let vi = *swaps.get(&i).unwrap_or(&i);
            swaps.insert(j, vi);
            out.insert(vj);
        }
        out
    };

    let mut history = RollingStats::new(RESIDUAL_HISTORY);
    let mut suppressed = 0u64;
    let mut scored: Vec<Detection> = Vec::new();
    let mut injected: Vec<InjectedAnomaly> = Vec::new();
    let mut last_unit_boundary = prep.warm_end;

    let process = |replay: &mut Replay,
                       tuple: &TimestampedTuple<f64>,
                       history: &mut RollingStats,
                       scored: &mut Vec<Detection>,
                       suppressed: &mut u64|
     -> Result<(), HarnessError> {
        replay.ingest_scored(tuple, |delta, window, model| {
            if delta.kind != EventKind::Arrival {
                return;
            }
            let (coord, _) = &delta.changes[0];
            let x = window.value(coord);
            let xhat = reconstruct_entry(&model.factors, model.weights_slice(), coord)
                .unwrap_or(f64::NAN);
            let r = (x - xhat).abs();
            if !r.is_finite() {
                return;
            }
            match (history.count() >= MIN_RESIDUAL_HISTORY, history.std()) {
                (true, Some(std)) => {
                    let z = (r - history.mean()) / std;
                    scored.push(Detection {
                        coordinate: coord.0.clone(),
                        time: tuple.timestamp,
                        z_score: z,
                    });
                }
                _ => *suppressed += 1,
            }
            history.push(r);
        })
    };

    for (pos, tuple) in replay_slice.iter().enumerate() {
        if positions.contains(&pos) {
            let indices: Vec<usize> = categorical
                .iter()
                .map(|&n| rng.gen_range(1..=n))
                .collect();
            let anomaly = TimestampedTuple::new(indices.clone(), magnitude, tuple.timestamp);
            let mut coordinate = indices;
            coordinate.push(time_len);
            injected.push(InjectedAnomaly {
                coordinate,
                time: tuple.timestamp,
                magnitude,
            });
            process(
                &mut prep.replay,
                &anomaly,
                &mut history,
                &mut scored,
                &mut suppressed,
            )?;
        }
        process(
            &mut prep.replay,
            tuple,
            &mut history,
            &mut scored,
            &mut suppressed,
        )?;

        // Unit boundary: fold the whole newest tensor unit into the history.
        while prep.replay.stream.clock() >= last_unit_boundary + period {
            last_unit_boundary += period;
            let window = prep.replay.stream.window();
            let model = &prep.replay.model;
            let residuals: Vec<f64> = window
                .registry_iter(window.order() - 1, time_len)
                .map(|coord| {
                    let xhat = reconstruct_entry(&model.factors, model.weights_slice(), coord)
                        .unwrap_or(f64::NAN);
                    (window.value(coord) - xhat).abs()
                })
                .filter(|r| r.is_finite())
                .collect();
            for r in residuals {
                history.push(r);
            }
        }
    }

    // Rank all scored events, best first; one detection per coordinate.
    scored.sort_by(|a, b| {
        b.z_score
            .partial_cmp(&a.z_score)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.time.cmp(&b.time))
            .then(a.coordinate.cmp(&b.coordinate))
    });
    let mut seen = HashSet::new();
    let detections: Vec<Detection> = scored
        .into_iter()
        .filter(|d| seen.insert(d.coordinate.clone()))
        .take(k)
        .collect();

    let mut hits = 0usize;
    let mut latencies = Vec::new();
    for d in &detections {
        if let Some(inj) = injected
            .iter()
            .filter(|i| i.coordinate == d.coordinate && d.time >= i.time)
            .min_by_key(|i| d.time - i.time)
        {
            hits += 1;
            latencies.push((d.time - inj.time) as f64);
        }
    }

    Ok(AnomalyRecord {
        schema_version: REPORT_SCHEMA_VERSION,
        seed: config.seed,
        k,
        magnitude_factor,
        max_warmup_change: prep.max_warmup_change,
        injected,
        detections,
        precision_at_k: if k == 0 { 0.0 } else { hits as f64 / k as f64 },
        mean_detection_latency: if latencies.is_empty() {
            None
        } else {
            Some(latencies.iter().sum::<f64>() / latencies.len() as f64)
        },
        suppressed_scores: suppressed,
    })
}
