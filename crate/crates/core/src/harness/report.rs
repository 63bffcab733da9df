//! Report schemas and emitters.
//!
//! The fitness series goes out as CSV (one row per sample), summaries as
//! JSON with a `schema_version` field and fixed field order. Float fields
//! use shortest-round-trip formatting, so equal runs produce equal bytes;
//! the `*_ns` timing fields are the one wall-clock-dependent exception.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::io::RunConfig;

use super::HarnessError;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SeriesPoint {
    pub clock: i64,
    pub fitness: f64,
    pub relative_fitness: Option<f64>,
    pub cumulative_events: u64,
    pub elapsed_ns_mean: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Summary {
    pub algorithm: String,
    pub warmup_events: u64,
    pub warmup_sweeps: usize,
    pub warmup_fitness: f64,
    pub events_total: u64,
    pub arrivals: u64,
    pub shifts: u64,
    pub expiries: u64,
    pub final_fitness: f64,
    pub avg_relative_fitness: Option<f64>,
    pub mean_update_ns: f64,
    pub p50_update_ns: u64,
    pub p95_update_ns: u64,
    pub total_update_ns: u64,
    pub total_replay_ns: u64,
    pub window_nnz_final: usize,
    pub dead_column_skips: u64,
    pub sampled_rows: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema_version: u32,
    pub seed: u64,
    pub config: RunConfig,
    pub summary: Summary,
    pub series: Vec<SeriesPoint>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ThetaRow {
    pub theta: usize,
    pub avg_relative_fitness: Option<f64>,
    pub final_fitness: f64,
    pub mean_update_ns: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ThetaReport {
    pub schema_version: u32,
    pub seed: u64,
    pub rows: Vec<ThetaRow>,
    /// R² of the latency-versus-theta linear fit.
    pub latency_fit_r2: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ScaleRow {
    pub num_events: u64,
    pub events_processed: u64,
    pub total_update_ns: u64,
    pub total_replay_ns: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScaleReport {
    pub schema_version: u32,
    pub seed: u64,
    pub rows: Vec<ScaleRow>,
    /// Least-squares slope of log runtime against log events; absent with
    /// fewer than two sizes.
    pub loglog_slope: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct InjectedAnomaly {
    pub coordinate: Vec<usize>,
    pub time: i64,
    pub magnitude: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Detection {
    pub coordinate: Vec<usize>,
    pub time: i64,
    pub z_score: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnomalyRecord {
    pub schema_version: u32,
    pub seed: u64,
    pub k: usize,
    pub magnitude_factor: f64,
    /// Largest single-event change observed during warm-up.
    pub max_warmup_change: f64,
    pub injected: Vec<InjectedAnomaly>,
    pub detections: Vec<Detection>,
    pub precision_at_k: f64,
    /// Mean time-unit gap between injection and detection over the true
    /// positives; absent when nothing was detected.
    pub mean_detection_latency: Option<f64>,
    /// Scores suppressed while the residual history was too short.
    pub suppressed_scores: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    /// `series.csv` plus `summary.json`.
    Csv,
    /// One `report.json` holding everything.
    Json,
}

impl ReportFormat {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "csv" => Some(ReportFormat::Csv),
            "json" => Some(ReportFormat::Json),
            _ => None,
        }
    }
}

pub fn write_series_csv(path: &Path, series: &[SeriesPoint]) -> Result<(), HarnessError> {
    let mut out = String::new();
    out.push_str("clock,fitness,relative_fitness,cumulative_events,elapsed_ns_mean\n");
    for p in series {
        let rel = p
            .relative_fitness
            .map(|v| v.to_string())
            .unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            p.clock, p.fitness, rel, p.cumulative_events, p.elapsed_ns_mean
        ));
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn write_json<S: Serialize>(path: &Path, value: &S) -> Result<(), HarnessError> {
    let mut file = fs::File::create(path)?;
    let text = serde_json::to_string_pretty(value)?;
    file.write_all(text.as_bytes())?;
    file.write_all(b"\n")?;
    Ok(())
}

/// Writes a finished report under `dir` and returns the files created.
pub fn emit_report(
    report: &ExperimentReport,
    dir: &Path,
    format: ReportFormat,
) -> Result<Vec<PathBuf>, HarnessError> {
    fs::create_dir_all(dir)?;
    match format {
        ReportFormat::Csv => {
            let series = dir.join("series.csv");
            write_series_csv(&series, &report.series)?;
            let summary = dir.join("summary.json");
            #[derive(Serialize)]
            struct SummaryDoc<'a> {
                schema_version: u32,
                seed: u64,
                config: &'a RunConfig,
                summary: &'a Summary,
            }
            write_json(
                &summary,
                &SummaryDoc {
                    schema_version: report.schema_version,
                    seed: report.seed,
                    config: &report.config,
                    summary: &report.summary,
                },
            )?;
            Ok(vec![series, summary])
        }
        ReportFormat::Json => {
            let path = dir.join("report.json");
            write_json(&path, report)?;
            Ok(vec![path])
        }
    }
}
