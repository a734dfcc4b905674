//! Simulation of a single-shot Kennedy receiver read out by a
//! photon-number-resolving transition-edge sensor.
//!
//! The crate is layered bottom-up:
//!
//! - [`bounds`]: standard quantum limit, Helstrom bound and dB improvement.
//! - [`photon_statistics`]: displaced-signal photon statistics and dark counts.
//! - [`discriminator`]: MAP decisions and their error probability.
//! - [`optimizer`]: displacement minimizing the ideal-counter error.
//! - [`trace_model`]: synthetic detector traces, matched filter and score histograms.
//! - [`experiment`]: Monte Carlo harness, sweeps and result files.

pub mod bounds;
pub mod discriminator;
pub mod error;
pub mod experiment;
pub mod optimizer;
pub mod photon_statistics;
pub mod trace_model;

pub use error::{Error, Result};
