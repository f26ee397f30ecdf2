//! Concentration-rate machinery for sample means of dependent
//! heavy-tailed sequences.
//!
//! The crate is organized around five surfaces:
//!
//! - [`bounds`]: pure calculators for every rate constant, deviation
//!   threshold and block partition.
//! - [`generators`]: reproducible samplers for i.i.d. and Markov-modulated
//!   heavy-tailed processes with exactly computable mixing coefficients.
//! - [`estimators`]: sample mean, main/tail decomposition, truncated mean,
//!   Huber M-estimator and Hill tail-index estimator.
//! - [`experiments`]: deterministic replicated Monte Carlo studies of the
//!   deviation bounds and convergence rates.
//! - [`ingest`]: price-CSV to log-return pipeline with a dependence
//!   diagnostic.
//!
//! Deriving the constants and a deviation threshold for an independent
//! sequence with a finite 1.5-th absolute moment:
//!
//! ```
//! use heavytail::bounds::{rate_constants, MixingDecay, MomentSpec};
//!
//! let constants = rate_constants(
//!     MixingDecay::independent(),
//!     MomentSpec::new(0.5, 0.5, 2.5)?,
//!     0.01,  // delta
//!     1.355, // c
//! )?;
//! assert!((constants.beta - 1.0 / 3.0).abs() < 1e-12);
//! assert!(constants.deviation_threshold(100_000) < 1.8);
//! # Ok::<(), heavytail::Error>(())
//! ```

pub mod bounds;
pub mod error;
pub mod estimators;
pub mod experiments;
pub mod generators;
pub mod ingest;
pub mod report;

pub use error::{Error, Result};
