//! Deep active inference for tactile peg alignment.
//!
//! The crate is `no_std` (it needs `alloc`) and contains every algorithmic
//! piece of the system:
//!
//! * [`image`]: fixed-size contact-area images, rotation and self-data
//!   augmentation.
//! * [`nn`]: a small neural-network kit with explicit forward, backward and
//!   tangent passes.
//! * [`generator`]: the decoder `g(mu)` mapping a tilt to a predicted
//!   contact-area image, trained from a single straight-pose image.
//! * [`inference`]: free energy and the perceptual update of the tilt belief.
//! * [`calibration`]: the sweep that picks the default inference step.
//! * [`baseline`]: a supervised CNN tilt regressor for comparison.
//! * [`world`]: a quasi-static peg-in-hole simulator with synthetic tactile
//!   rendering and the hybrid position/force control law.
//! * [`policy`]: the dual-policy loop alternating insertion and alignment.
//!
//! File formats, configuration and the command line live in the companion
//! `tactile-aif-harness` crate.
#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod baseline;
pub mod calibration;
pub mod error;
pub mod generator;
pub mod image;
pub mod inference;
pub mod nn;
pub mod policy;
pub mod seed;
pub mod world;

pub use error::{Error, Result};
