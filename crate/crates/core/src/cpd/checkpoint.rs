//! Factor checkpoint files.
//!
//! A checkpoint is a self-describing JSON document carrying the shapes, the
//! row-major factor values, the column weights (when present), and the seed
//! that produced the run. Floats are written in shortest-round-trip form, so
//! a save/load cycle reproduces the factors bit for bit.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::DenseMatrix;
use crate::scalar::Real;

use super::model::{FactorModel, FactorSet};

pub const CHECKPOINT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed checkpoint: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid checkpoint: {0}")]
    Invalid(String),
}

#[derive(Serialize, Deserialize)]
struct CheckpointFile {
    schema_version: u32,
    rank: usize,
    mode_lengths: Vec<usize>,
    seed: u64,
    weights: Option<Vec<f64>>,
    /// One row-major value block per mode.
    factors: Vec<Vec<f64>>,
}

pub fn save_checkpoint<T: Real>(
    path: &Path,
    model: &FactorModel<T>,
    seed: u64,
) -> Result<(), CheckpointError> {
    let file = CheckpointFile {
        schema_version: CHECKPOINT_SCHEMA_VERSION,
        rank: model.factors.rank(),
        mode_lengths: model.factors.mode_lengths(),
        seed,
        weights: model
            .weights
            .as_ref()
            .map(|w| w.iter().map(|v| v.to_f64_lossy()).collect()),
        factors: model
            .factors
            .factors()
            .iter()
            .map(|m| m.data().iter().map(|v| v.to_f64_lossy()).collect())
            .collect(),
    };
    fs::write(path, serde_json::to_string_pretty(&file)?)?;
    Ok(())
}

/// Loads a checkpoint; Grams are rebuilt from the factors. Returns the model
/// and the recorded seed.
pub fn load_checkpoint<T: Real>(path: &Path) -> Result<(FactorModel<T>, u64), CheckpointError> {
    let file: CheckpointFile = serde_json::from_str(&fs::read_to_string(path)?)?;
    if file.schema_version != CHECKPOINT_SCHEMA_VERSION {
        return Err(CheckpointError::Invalid(format!(
            "unsupported schema version {}",
            file.schema_version
        )));
    }
    if file.factors.len() != file.mode_lengths.len() {
        return Err(CheckpointError::Invalid(
            "factor count does not match mode count".into(),
        ));
    }
    let mut mats = Vec::with_capacity(file.factors.len());
    for (block, &n) in file.factors.iter().zip(file.mode_lengths.iter()) {
        let data: Vec<T> = block.iter().map(|&v| T::from_f64_lossy(v)).collect();
        let mat = DenseMatrix::from_rows(n, file.rank, data).map_err(|_| {
            CheckpointError::Invalid(format!(
                "factor block of {} values does not fill {n}×{}",
                block.len(),
                file.rank
            ))
        })?;
        mats.push(mat);
    }
    let mut model = FactorModel::from_factors(FactorSet::new(mats));
    model.weights = file
        .weights
        .map(|w| w.into_iter().map(T::from_f64_lossy).collect());
    Ok((model, file.seed))
}
