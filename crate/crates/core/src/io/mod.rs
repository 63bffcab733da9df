//! Event-file parsing, synthetic stream generation, and run configuration.

mod config;
mod events;
mod synth;

pub use config::{load_config, RunConfig, DEFAULT_ETA, DEFAULT_RANK, DEFAULT_THETA, DEFAULT_WINDOW};
pub use events::{open_events, read_events, write_events, EventReader, StreamSpec};
pub use synth::{synth_events, SynthKind, SynthParams};

use thiserror::Error;

use crate::scalar::Real;
use crate::stream::SparseWindow;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("line {line}: timestamp decreases")]
    NonMonotoneTimestamp { line: usize },
    #[error("line {line}: mode {mode} index {index} exceeds length {len}")]
    IndexOutOfRange {
        line: usize,
        mode: usize,
        index: usize,
        len: usize,
    },
    #[error("missing required key: {0}")]
    MissingRequiredKey(String),
    #[error("config type error: {0}")]
    Type(String),
    #[error("config range error: {0}")]
    Range(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// Suggested sampling threshold from a warm-up window: half the average
/// degree over the occupied (mode, index) pairs. A guide, never enforced.
pub fn suggested_theta<T: Real>(window: &SparseWindow<T>) -> usize {
    let mut total = 0usize;
    let mut occupied = 0usize;
    for mode in 0..window.order() {
        let len = window.mode_lengths()[mode];
        for index in 1..=len {
            let d = window.degree(mode, index).unwrap_or(0);
            if d > 0 {
                total += d;
                occupied += 1;
            }
        }
    }
    if occupied == 0 {
        return 1;
    }
    ((total / occupied) / 2).max(1)
}
