//! Snapshot-based model order reduction with time-extended autoencoders.
//!
//! The crate generates snapshot data for two transport benchmarks (viscous
//! Burgers' flow and an advected sawtooth), trains five autoencoder
//! configurations over three layer schedules with a from-scratch MLP engine,
//! and compares them against the proper-orthogonal-decomposition baseline.
//!
//! All numerical kernels are generic over the [`scalar::Scalar`] type; the
//! experiment pipeline runs in `f64` (see the aliases below).

pub mod autoencoder;
pub mod error;
pub mod linalg;
pub mod nn;
pub mod pod;
pub mod problems;
pub mod scalar;
pub mod training;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Double-precision instantiations used by the experiment pipeline.
pub type Matrix64 = linalg::Matrix<f64>;
pub type SvdResult64 = linalg::SvdResult<f64>;
pub type SnapshotSet64 = problems::SnapshotSet<f64>;
pub type Problem64 = problems::Problem<f64>;
pub type Autoencoder64 = autoencoder::Autoencoder<f64>;
pub type TrainConfig64 = training::TrainConfig<f64>;
pub type TrainResult64 = training::TrainResult<f64>;
pub type PodBasis64 = pod::PodBasis<f64>;

/// Single-precision aliases for experimentation at reduced precision.
pub type Matrix32 = linalg::Matrix<f32>;
pub type Autoencoder32 = autoencoder::Autoencoder<f32>;
