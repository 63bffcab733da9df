//! Continuous CP decomposition of sparse tensor streams.
//!
//! A timestamped event stream is aggregated into a sliding tensor window
//! whose unit boundaries move with the clock, so every event changes the
//! tensor immediately; the factor matrices of its CP decomposition are
//! updated per event by one of five rules trading accuracy for speed
//! (see [`updates::Algorithm`]).
//!
//! Numeric kernels are generic over [`scalar::Real`] (`f32`/`f64`); the
//! aliases below pin the default 64-bit instantiations the harness and CLI
//! use. The [`harness`] module drives full experiments: warm-up, timed
//! replay, relative-fitness oracles, sweeps, and anomaly detection.

pub mod cpd;
pub mod harness;
pub mod io;
pub mod linalg;
pub mod scalar;
pub mod stream;
pub mod updates;

pub use scalar::Real;

/// Default 64-bit instantiations.
pub type DenseMatrixF64 = linalg::DenseMatrix<f64>;
pub type SparseWindowF64 = stream::SparseWindow<f64>;
pub type StreamWindowF64 = stream::StreamWindow<f64>;
pub type FactorSetF64 = cpd::FactorSet<f64>;
pub type FactorModelF64 = cpd::FactorModel<f64>;
pub type TupleF64 = stream::TimestampedTuple<f64>;

/// 32-bit variants for callers that trade precision for footprint.
pub type DenseMatrixF32 = linalg::DenseMatrix<f32>;
pub type SparseWindowF32 = stream::SparseWindow<f32>;
pub type StreamWindowF32 = stream::StreamWindow<f32>;
pub type FactorSetF32 = cpd::FactorSet<f32>;
pub type FactorModelF32 = cpd::FactorModel<f32>;
