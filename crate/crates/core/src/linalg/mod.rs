//! Dense small-matrix and sparse-tensor kernels shared by every update rule:
//! Khatri-Rao row products, sparse MTTKRP, Hadamard Gram assembly, the PSD
//! pseudoinverse, and entry reconstruction.
//!
//! Everything here is a pure function of its inputs.

mod eigen;
mod kernels;
mod matrix;

pub use eigen::{pinv_psd, sym_eigen, PINV_RELATIVE_CUTOFF};
pub(crate) use kernels::{hadamard_skip, kr_row_into};
pub use kernels::{gram_hadamard, kr_row, mttkrp, reconstruct_entry};
pub use matrix::{vec_mat, DenseMatrix};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum KernelError {
    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("index out of range: mode {mode} index {index} exceeds length {len}")]
    IndexOutOfRange { mode: usize, index: usize, len: usize },
    #[error("non-finite value encountered")]
    NonFinite,
}
