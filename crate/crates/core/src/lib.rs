//! Gumbel-max list sampling and its applications.
//!
//! * [`coupling`]: categorical laws, exponential race matrices, list
//!   sampling and the comparison couplers.
//! * [`bounds`]: closed-form acceptance and error bounds.
//! * [`specdec`]: multi-draft speculative decoding over tabular models.
//! * [`wz`]: compression with side information at several decoders.
//! * [`montecarlo`], [`stats`]: estimators and aggregation.

pub mod bounds;
pub mod coupling;
pub mod error;
pub mod montecarlo;
pub mod rng;
pub mod specdec;
pub mod stats;
pub mod wz;

pub use error::{Error, Result};
pub use rng::SeedContext;
