//! Run configuration: flat JSON-compatible key-value file.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::updates::Algorithm;

use super::synth::SynthParams;
use super::IoError;

pub const DEFAULT_RANK: usize = 20;
pub const DEFAULT_WINDOW: usize = 10;
pub const DEFAULT_THETA: usize = 20;
pub const DEFAULT_ETA: f64 = 1000.0;

fn default_rank() -> usize {
    DEFAULT_RANK
}
fn default_window() -> usize {
    DEFAULT_WINDOW
}
fn default_theta() -> usize {
    DEFAULT_THETA
}
fn default_eta() -> f64 {
    DEFAULT_ETA
}
fn default_init_sweeps() -> usize {
    100
}
fn default_tolerance() -> f64 {
    1e-4
}
fn default_warmup_windows() -> u32 {
    1
}
fn default_run_duration() -> f64 {
    5.0
}
fn default_oracle_sweeps() -> usize {
    50
}
fn default_true() -> bool {
    true
}

/// Everything a run needs. Optional keys fall back to the defaults above;
/// the period has no default because it is dataset-specific.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Decomposition rank R.
    #[serde(default = "default_rank")]
    pub rank: usize,
    /// Time-mode length W (number of units in the window).
    #[serde(default = "default_window")]
    pub window: usize,
    /// Unit period T in the stream's native time unit. Required.
    pub period: Option<i64>,
    /// Sampling threshold θ.
    #[serde(default = "default_theta")]
    pub theta: usize,
    /// Clipping bound η.
    #[serde(default = "default_eta")]
    pub eta: f64,
    #[serde(default)]
    pub algorithm: Algorithm,
    #[serde(default)]
    pub seed: u64,
    /// Categorical mode lengths; required for file-driven runs, implied by
    /// `synth` otherwise.
    #[serde(default)]
    pub mode_lengths: Option<Vec<usize>>,
    #[serde(default = "default_init_sweeps")]
    pub init_sweeps: usize,
    #[serde(default = "default_tolerance")]
    pub init_tolerance: f64,
    /// Warm-up span in units of W·T.
    #[serde(default = "default_warmup_windows")]
    pub warmup_windows: u32,
    /// Replay span in units of W·T.
    #[serde(default = "default_run_duration")]
    pub run_duration: f64,
    /// Sampling cadence for the fitness series, in native time units.
    /// Defaults to W·T.
    #[serde(default)]
    pub report_interval: Option<i64>,
    #[serde(default = "default_oracle_sweeps")]
    pub oracle_sweeps: usize,
    #[serde(default = "default_tolerance")]
    pub oracle_tolerance: f64,
    /// Whether sample points run the fresh-ALS oracle for relative fitness.
    #[serde(default = "default_true")]
    pub oracle: bool,
    #[serde(default)]
    pub synth: Option<SynthParams>,
}

impl Default for RunConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all-default config parses")
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), IoError> {
        if self.rank < 1 {
            return Err(IoError::Range("rank must be >= 1".into()));
        }
        if self.window < 1 {
            return Err(IoError::Range("window must be >= 1".into()));
        }
        if self.theta < 1 {
            return Err(IoError::Range("theta must be >= 1".into()));
        }
        if !(self.eta > 0.0) {
            return Err(IoError::Range("eta must be > 0".into()));
        }
        if let Some(p) = self.period {
            if p < 1 {
                return Err(IoError::Range("period must be >= 1".into()));
            }
        }
        if !(self.run_duration > 0.0) {
            return Err(IoError::Range("run_duration must be > 0".into()));
        }
        if self.warmup_windows < 1 {
            return Err(IoError::Range("warmup_windows must be >= 1".into()));
        }
        if let Some(lengths) = &self.mode_lengths {
            if lengths.is_empty() || lengths.iter().any(|&n| n == 0) {
                return Err(IoError::Range("mode_lengths must be positive".into()));
            }
        }
        if let Some(synth) = &self.synth {
            if synth.mode_lengths.is_empty() || synth.mode_lengths.iter().any(|&n| n == 0) {
                return Err(IoError::Range("synth.mode_lengths must be positive".into()));
            }
        }
        Ok(())
    }

    /// The required unit period.
    pub fn period(&self) -> Result<i64, IoError> {
        self.period
            .ok_or_else(|| IoError::MissingRequiredKey("period".into()))
    }

    /// Categorical mode lengths from the explicit key or the synth section.
    pub fn mode_lengths(&self) -> Result<Vec<usize>, IoError> {
        if let Some(lengths) = &self.mode_lengths {
            return Ok(lengths.clone());
        }
        if let Some(synth) = &self.synth {
            return Ok(synth.mode_lengths.clone());
        }
        Err(IoError::MissingRequiredKey("mode_lengths".into()))
    }

    /// Fitness sampling cadence; defaults to one window span.
    pub fn report_interval(&self) -> Result<i64, IoError> {
        match self.report_interval {
            Some(i) if i >= 1 => Ok(i),
            Some(i) => Err(IoError::Range(format!(
                "report_interval must be >= 1, got {i}"
            ))),
            None => Ok(self.window as i64 * self.period()?),
        }
    }
}

pub fn load_config(path: &Path) -> Result<RunConfig, IoError> {
    let text = fs::read_to_string(path)?;
    let config: RunConfig =
        serde_json::from_str(&text).map_err(|e| IoError::Type(e.to_string()))?;
    config.validate()?;
    Ok(config)
}
