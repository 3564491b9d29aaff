//! Logarithmic sweep for the perceptual-inference step size.

use serde::Serialize;
use tactile_aif::calibration::{choose_step_dt, log_grid, sweep_step_dt, SweepPoint};
use tactile_aif::generator::{instant_train_with, DecoderModel};
use tactile_aif::image::AugmentConfig;
use tactile_aif::world::{render_tactile, PegSpec};

use super::{peg_label, stream};
use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::run::RunDir;

pub const CALIBRATED_NAME: &str = "calibrated.toml";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub dt: f64,
    pub stable: bool,
    pub diverged: bool,
    pub worst_error_deg: f64,
    pub worst_tail_violation: f64,
}

impl From<&SweepPoint> for SweepRow {
    fn from(p: &SweepPoint) -> Self {
        SweepRow {
            dt: p.dt,
            stable: p.stable,
            diverged: p.diverged,
            worst_error_deg: p.worst_error_deg,
            worst_tail_violation: p.worst_tail_violation,
        }
    }
}

#[derive(Debug)]
pub struct CalibrationReport {
    pub sweep: Vec<SweepRow>,
    /// `Err` when no swept value was stable.
    pub chosen: std::result::Result<f64, tactile_aif::Error>,
    /// The input config with `inference.step_dt` set to the chosen value.
    pub calibrated: Option<ExperimentConfig>,
}

impl CalibrationReport {
    pub fn write(&self, run: &mut RunDir) -> Result<()> {
        run.write_csv(crate::run::RESULTS_NAME, &self.sweep)?;
        if let Some(cfg) = &self.calibrated {
            run.write_text(CALIBRATED_NAME, &cfg.to_toml()?)?;
        }
        Ok(())
    }
}

/// Decoders trained on clean straight-pose renders of every configured peg.
pub fn calibration_decoders(cfg: &ExperimentConfig) -> Result<Vec<DecoderModel>> {
    let d = &cfg.dataset;
    cfg.peg_kinds()?
        .into_iter()
        .map(|kind| {
            let base = stream(stream(cfg.master_seed, 0x6361_6c69_62), peg_label(kind));
            let peg = PegSpec::reference(kind).with_noise(0.0);
            let o = render_tactile(&peg, 0.0, stream(base, 1));
            let aug = AugmentConfig {
                count: d.train_samples,
                tilt_range_deg: d.tilt_range_deg,
                rng_seed: stream(base, 2),
            };
            Ok(instant_train_with(&o, &aug, d.epochs, stream(base, 3), &cfg.train)?.0)
        })
        .collect()
}

/// Sweeps with already trained decoders.
pub fn calibrate_with(cfg: &ExperimentConfig, models: &[DecoderModel]) -> Result<CalibrationReport> {
    let c = &cfg.calibration;
    let grid = log_grid(c.dt_min, c.dt_max, c.points_per_decade)?;
    let cases: Vec<_> = models.iter().map(|m| (m, c.anchors_deg.as_slice())).collect();
    let sweep = sweep_step_dt(&cases, &grid, &cfg.inference, &c.options)?;
    let chosen = choose_step_dt(&sweep);
    let calibrated = chosen.as_ref().ok().map(|&dt| {
        let mut out = cfg.clone();
        out.inference.step_dt = dt;
        out
    });
    Ok(CalibrationReport {
        sweep: sweep.iter().map(SweepRow::from).collect(),
        chosen,
        calibrated,
    })
}

pub fn run_calibration_experiment(cfg: &ExperimentConfig) -> Result<CalibrationReport> {
    cfg.validate()?;
    let models = calibration_decoders(cfg)?;
    calibrate_with(cfg, &models)
}
