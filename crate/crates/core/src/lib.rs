//! Sparse signal recovery with trainable ISTA.
//!
//! The recursion alternates a pseudo-inverse linear step scaled by a
//! learned `gamma_t` with Bernoulli-Gaussian MMSE shrinkage driven by
//! estimated error variances. The crate also provides ISTA, AMP and OAMP
//! baselines, exact reverse-mode training, and an NMSE benchmark harness.
//!
//! Everything numeric is generic over [`Real`] (`f32` or `f64`); the
//! aliases below fix the scalar to `f64`.

pub mod error;
pub mod harness;
pub mod mnist;
pub mod prior;
pub mod recovery;
pub mod scalar;
pub mod sensing;
pub mod train;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Prior = prior::SparseSignalPrior<f64>;
pub type Denoiser = prior::BgDenoiser<f64>;
pub type System = sensing::SensingSystem<f64>;
pub type Params = recovery::TistaParams<f64>;
pub type Trace = recovery::RecoveryTrace<f64>;
pub type TrainedModel = train::TrainOutcome<f64>;
pub type Prior32 = prior::SparseSignalPrior<f32>;
pub type System32 = sensing::SensingSystem<f32>;
pub type Params32 = recovery::TistaParams<f32>;
