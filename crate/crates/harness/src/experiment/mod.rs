//! Experiment drivers. Each one computes a report from a validated config;
//! writing the report into a run directory is a separate step.

pub mod calibrate;
pub mod dual;
pub mod gradcheck;
pub mod perception;

use std::time::Instant;

use tactile_aif::seed;
use tactile_aif::world::PegKind;

/// Stable per-peg seed label, independent of the order pegs are listed in.
pub(crate) fn peg_label(kind: PegKind) -> u64 {
    PegKind::ALL.iter().position(|&k| k == kind).unwrap_or(0) as u64 + 1
}

pub(crate) fn stream(base: u64, label: u64) -> u64 {
    seed::derive(base, label)
}

/// Wall time spent in `f`, for timing notes only.
pub(crate) fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let t = Instant::now();
    let out = f();
    (out, t.elapsed().as_secs_f64())
}
