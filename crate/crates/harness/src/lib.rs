//! File formats, configuration, experiment drivers and the `tactile-aif`
//! command line for the `tactile-aif` core.
//!
//! * [`pgm`]: 8-bit binary PGM images.
//! * [`manifest`]: labeled datasets as PGM files plus a CSV manifest.
//! * [`checkpoint`]: exact binary network checkpoints.
//! * [`config`]: the versioned TOML experiment configuration.
//! * [`run`]: run directories with config snapshot, hash and CSV results.
//! * [`experiment`]: perception, dual-policy, gradient-check and step-size
//!   calibration experiments.

pub mod checkpoint;
pub mod config;
pub mod error;
pub mod experiment;
pub mod manifest;
pub mod pgm;
pub mod run;

pub use error::{HarnessError, Result};
