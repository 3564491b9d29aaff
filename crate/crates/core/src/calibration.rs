//! Step-size calibration for perceptual inference.
//!
//! A candidate `dt` is stable when, for every anchor, inference started at
//! `mu_init` on the decoder's own noiseless prediction recovers the anchor
//! tilt within tolerance inside `max_iters` updates, and the free-energy trace
//! is non-increasing over its second half (up to 1% of steps).

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::generator::DecoderModel;
use crate::inference::{perceptual_inference, InferenceConfig};

/// Fraction of tail steps allowed to increase `F`.
pub const TAIL_VIOLATION_FRACTION: f64 = 0.01;

/// `lo..=hi` split evenly in log space with `per_decade` points per decade.
pub fn log_grid(lo: f64, hi: f64, per_decade: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi >= lo && hi.is_finite()) || per_decade == 0 {
        return Err(Error::config("log grid needs 0 < lo <= hi and per_decade >= 1"));
    }
    let (a, b) = (libm::log10(lo), libm::log10(hi));
    let n = libm::round((b - a) * per_decade as f64) as usize;
    Ok((0..=n)
        .map(|i| {
            if n == 0 {
                lo
            } else {
                libm::pow(10.0, a + (b - a) * i as f64 / n as f64)
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct CalibrationOptions {
    pub tolerance_deg: f64,
    /// Keep evaluating smaller values after the first stable one.
    pub exhaustive: bool,
}

impl Default for CalibrationOptions {
    fn default() -> Self {
        CalibrationOptions {
            tolerance_deg: 1.0,
            exhaustive: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub dt: f64,
    pub stable: bool,
    pub diverged: bool,
    /// Worst `|mu - anchor|` over the anchors that ran to completion.
    pub worst_error_deg: f64,
    /// Worst fraction of tail steps with increasing `F`.
    pub worst_tail_violation: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Calibration {
    pub chosen_dt: f64,
    /// Evaluated points, largest `dt` first.
    pub sweep: Vec<SweepPoint>,
}

fn tail_violations(trace: &[(f64, f64)]) -> f64 {
    let tail = &trace[trace.len() / 2..];
    if tail.len() < 2 {
        return 0.0;
    }
    let ups = tail
        .windows(2)
        .filter(|w| w[1].1 > w[0].1 + 1e-9 * libm::fabs(w[0].1).max(1.0))
        .count();
    ups as f64 / (tail.len() - 1) as f64
}

/// Evaluates one `dt` against every `(model, anchor tilts)` case.
pub fn evaluate_dt(
    cases: &[(&DecoderModel, &[f64])],
    dt: f64,
    base: &InferenceConfig,
    tolerance_deg: f64,
) -> Result<SweepPoint> {
    let cfg = InferenceConfig {
        step_dt: dt,
        record_trace: true,
        ..*base
    };
    cfg.validate()?;
    let mut point = SweepPoint {
        dt,
        stable: true,
        diverged: false,
        worst_error_deg: 0.0,
        worst_tail_violation: 0.0,
    };
    for (model, anchors) in cases {
        for &t in anchors.iter() {
            let o = model.predict(t);
            match perceptual_inference(model, &o, &cfg) {
                Ok(b) => {
                    let err = libm::fabs(b.mu - t);
                    let v = tail_violations(b.trace.as_deref().unwrap_or(&[]));
                    point.worst_error_deg = point.worst_error_deg.max(err);
                    point.worst_tail_violation = point.worst_tail_violation.max(v);
                    if err > tolerance_deg || v > TAIL_VIOLATION_FRACTION {
                        point.stable = false;
                    }
                }
                Err(Error::InferenceDivergence { .. }) => {
                    point.stable = false;
                    point.diverged = true;
                    return Ok(point);
                }
                Err(e) => return Err(e),
            }
        }
    }
    Ok(point)
}

/// Evaluates `grid` from the largest value down. Unless `opts.exhaustive`,
/// stops at the first stable value.
pub fn sweep_step_dt(
    cases: &[(&DecoderModel, &[f64])],
    grid: &[f64],
    base: &InferenceConfig,
    opts: &CalibrationOptions,
) -> Result<Vec<SweepPoint>> {
    if cases.is_empty() || grid.is_empty() {
        return Err(Error::config("calibration needs at least one case and one dt"));
    }
    let mut order: Vec<f64> = grid.to_vec();
    order.sort_by(|a, b| b.total_cmp(a));
    order.dedup();
    let mut sweep = Vec::new();
    for dt in order {
        let point = evaluate_dt(cases, dt, base, opts.tolerance_deg)?;
        let stable = point.stable;
        sweep.push(point);
        if stable && !opts.exhaustive {
            break;
        }
    }
    Ok(sweep)
}

/// Largest stable `dt` of a sweep, or [`Error::NoStableStep`].
pub fn choose_step_dt(sweep: &[SweepPoint]) -> Result<f64> {
    sweep
        .iter()
        .filter(|p| p.stable)
        .map(|p| p.dt)
        .max_by(f64::total_cmp)
        .ok_or(Error::NoStableStep { tried: sweep.len() })
}

/// Sweep followed by [`choose_step_dt`].
pub fn calibrate_step_dt(
    cases: &[(&DecoderModel, &[f64])],
    grid: &[f64],
    base: &InferenceConfig,
    opts: &CalibrationOptions,
) -> Result<Calibration> {
    let sweep = sweep_step_dt(cases, grid, base, opts)?;
    let chosen_dt = choose_step_dt(&sweep)?;
    Ok(Calibration { chosen_dt, sweep })
}
