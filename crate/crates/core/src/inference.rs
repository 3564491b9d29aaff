//! Free energy and perceptual inference of the tilt belief.
//!
//! With an isotropic observation precision the free energy reduces to
//!
//! ```text
//! F(mu) = 1/2 * P * sum_px (o - g(mu))^2 + 1/2 * mu^2 / s_mu^2 + 1/2 * theta^2 / s_theta^2
//! ```
//!
//! and perception descends it:
//!
//! ```text
//! mu_dot = <dg/dmu, P * (o - g(mu))> - mu / s_mu^2
//! mu'    = mu + dt * mu_dot
//! ```
//!
//! The data term is obtained from one backward pass of the decoder with the
//! precision-weighted prediction error as the output gradient.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::generator::DecoderModel;
use crate::image::TactileImage;

/// Step size chosen by the repository's Δt calibration sweep
/// (`tactile-aif calibrate-dt`) over the five reference footprints.
pub const DEFAULT_STEP_DT: f64 = 3.162_277_660_168_379_5e-5;

/// Beliefs beyond this magnitude (degrees) are treated as diverged.
pub const MU_DIVERGENCE_LIMIT: f64 = 1e4;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct InferenceConfig {
    /// Isotropic observation precision.
    pub precision_tac: f64,
    pub prior_var_mu: f64,
    pub prior_var_theta: f64,
    pub step_dt: f64,
    pub max_iters: usize,
    pub mu_init: f64,
    /// Early exit once a step moves the belief by less than this (degrees).
    pub convergence_eps: f64,
    pub record_trace: bool,
}

impl Default for InferenceConfig {
    fn default() -> Self {
        InferenceConfig {
            precision_tac: 2e4,
            prior_var_mu: 1e-2,
            prior_var_theta: 1.0,
            step_dt: DEFAULT_STEP_DT,
            max_iters: 500,
            mu_init: 0.0,
            convergence_eps: 1e-3,
            record_trace: false,
        }
    }
}

impl InferenceConfig {
    /// A precision of exactly zero is accepted (prior-only dynamics).
    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if !(self.precision_tac >= 0.0 && self.precision_tac.is_finite()) {
            return Err(Error::config("precision_tac must be finite and non-negative"));
        }
        if !positive(self.prior_var_mu) || !positive(self.prior_var_theta) {
            return Err(Error::config("prior variances must be positive"));
        }
        if !positive(self.step_dt) {
            return Err(Error::config("step_dt must be positive"));
        }
        if self.max_iters == 0 {
            return Err(Error::config("max_iters must be at least 1"));
        }
        if !self.mu_init.is_finite() || !(self.convergence_eps >= 0.0) {
            return Err(Error::config("mu_init must be finite and convergence_eps non-negative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BeliefState {
    pub mu: f64,
    pub free_energy: f64,
    pub iterations_run: usize,
    /// `(mu, F)` after each update, when recording is enabled.
    pub trace: Option<Vec<(f64, f64)>>,
}

impl BeliefState {
    /// Belief at `mu` with its free energy evaluated against `o_tac` (theta 0).
    pub fn at(model: &DecoderModel, mu: f64, o_tac: &TactileImage, cfg: &InferenceConfig) -> Self {
        BeliefState {
            mu,
            free_energy: free_energy(model, mu, o_tac, 0.0, cfg),
            iterations_run: 0,
            trace: cfg.record_trace.then(Vec::new),
        }
    }
}

fn check_dims(model: &DecoderModel, o_tac: &TactileImage) -> Result<()> {
    if o_tac.width() != model.width() || o_tac.height() != model.height() {
        return Err(Error::Shape {
            layer: 0,
            expected: model.width() * model.height(),
            actual: o_tac.len(),
        });
    }
    Ok(())
}

fn quadratic_terms(mu: f64, theta: f64, cfg: &InferenceConfig) -> f64 {
    0.5 * mu * mu / cfg.prior_var_mu + 0.5 * theta * theta / cfg.prior_var_theta
}

/// Free energy with the constant dropped.
pub fn free_energy(
    model: &DecoderModel,
    mu: f64,
    o_tac: &TactileImage,
    theta: f64,
    cfg: &InferenceConfig,
) -> f64 {
    let g = model.predict(mu);
    let sse: f64 = o_tac
        .pixels()
        .iter()
        .zip(g.pixels())
        .map(|(o, p)| (o - p) * (o - p))
        .sum();
    0.5 * cfg.precision_tac * sse + quadratic_terms(mu, theta, cfg)
}

/// `(F(mu), mu_dot)` at `mu` (theta 0) from one forward and one backward pass.
pub fn evaluate(
    model: &DecoderModel,
    mu: f64,
    o_tac: &TactileImage,
    cfg: &InferenceConfig,
) -> (f64, f64) {
    let mut sse = 0.0;
    let (_, _, data) = model.prediction_and_pullback(mu, |g| {
        o_tac
            .pixels()
            .iter()
            .zip(g)
            .map(|(o, p)| {
                let e = o - p;
                sse += e * e;
                cfg.precision_tac * e
            })
            .collect()
    });
    let f = 0.5 * cfg.precision_tac * sse + quadratic_terms(mu, 0.0, cfg);
    (f, data - mu / cfg.prior_var_mu)
}

/// `mu_dot` at the belief's current `mu`.
pub fn mu_dot(model: &DecoderModel, mu: f64, o_tac: &TactileImage, cfg: &InferenceConfig) -> f64 {
    evaluate(model, mu, o_tac, cfg).1
}

fn step(mu: f64, mu_dot: f64, cfg: &InferenceConfig) -> Result<f64> {
    let next = mu + cfg.step_dt * mu_dot;
    if !mu_dot.is_finite() || !next.is_finite() || next.abs() > MU_DIVERGENCE_LIMIT {
        return Err(Error::InferenceDivergence {
            dt: cfg.step_dt,
            gradient: mu_dot.abs(),
        });
    }
    Ok(next)
}

/// One gradient step on the free energy; the returned belief carries `F` at
/// the new `mu`.
pub fn update_mu(
    model: &DecoderModel,
    belief: &BeliefState,
    o_tac: &TactileImage,
    cfg: &InferenceConfig,
) -> Result<BeliefState> {
    cfg.validate()?;
    check_dims(model, o_tac)?;
    let (_, rate) = evaluate(model, belief.mu, o_tac, cfg);
    let mu = step(belief.mu, rate, cfg)?;
    let free_energy = free_energy(model, mu, o_tac, 0.0, cfg);
    let mut trace = belief.trace.clone();
    if let Some(t) = trace.as_mut() {
        t.push((mu, free_energy));
    }
    Ok(BeliefState {
        mu,
        free_energy,
        iterations_run: belief.iterations_run + 1,
        trace,
    })
}

/// Iterates [`update_mu`] from `cfg.mu_init` until `cfg.max_iters` updates or
/// a step smaller than `cfg.convergence_eps`.
pub fn perceptual_inference(
    model: &DecoderModel,
    o_tac: &TactileImage,
    cfg: &InferenceConfig,
) -> Result<BeliefState> {
    perceptual_inference_from(model, o_tac, cfg, cfg.mu_init)
}

/// Same as [`perceptual_inference`] from an explicit starting belief.
pub fn perceptual_inference_from(
    model: &DecoderModel,
    o_tac: &TactileImage,
    cfg: &InferenceConfig,
    mu_start: f64,
) -> Result<BeliefState> {
    cfg.validate()?;
    check_dims(model, o_tac)?;
    let mut mu = mu_start;
    let (mut f, mut rate) = evaluate(model, mu, o_tac, cfg);
    let mut trace = cfg.record_trace.then(|| Vec::with_capacity(cfg.max_iters));
    let mut iterations = 0;
    while iterations < cfg.max_iters {
        let moved = cfg.step_dt * rate;
        mu = step(mu, rate, cfg)?;
        iterations += 1;
        (f, rate) = evaluate(model, mu, o_tac, cfg);
        if let Some(t) = trace.as_mut() {
            t.push((mu, f));
        }
        if moved.abs() < cfg.convergence_eps {
            break;
        }
    }
    Ok(BeliefState {
        mu,
        free_energy: f,
        iterations_run: iterations,
        trace,
    })
}
