//! Decomposition state: factor matrices, cached Grams, column weights, the
//! offline ALS solver, and the fitness metrics.

mod als;
mod checkpoint;
mod model;

pub use als::{als_sweep, als_until, fitness, relative_fitness, residual_norm, FitnessValue};
pub use checkpoint::{
    load_checkpoint, save_checkpoint, CheckpointError, CHECKPOINT_SCHEMA_VERSION,
};
pub use model::{FactorModel, FactorSet, GramSet, PrevGramSet};

use thiserror::Error;

use crate::linalg::KernelError;

#[derive(Debug, Error)]
pub enum CpdError {
    #[error("non-finite factor entries produced while updating mode {mode}")]
    NonFinite { mode: usize },
    #[error(transparent)]
    Kernel(#[from] KernelError),
}
