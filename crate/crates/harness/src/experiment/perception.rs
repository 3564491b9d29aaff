//! Tilt-estimation accuracy of active inference against the supervised
//! baseline, per peg and noise setting.

use serde::Serialize;
use tactile_aif::baseline::{train_baseline_report, RegressorModel};
use tactile_aif::generator::{instant_train_with, DecoderModel};
use tactile_aif::image::{augment, rotate, AugmentConfig, TactileImage};
use tactile_aif::inference::{perceptual_inference, InferenceConfig};
use tactile_aif::world::{render_tactile, PegKind, PegSpec};

use super::{peg_label, stream, timed};
use crate::checkpoint::Checkpoint;
use crate::config::{ExperimentConfig, NoiseSetting};
use crate::error::Result;
use crate::run::RunDir;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PerceptionRow {
    pub peg: String,
    pub noise: String,
    pub noise_level: f64,
    pub status: String,
    pub test_samples: usize,
    pub aif_mae_deg: Option<f64>,
    pub supervised_mae_deg: Option<f64>,
    pub aif_max_error_deg: Option<f64>,
    pub supervised_max_error_deg: Option<f64>,
}

impl PerceptionRow {
    pub fn ok(&self) -> bool {
        self.status == "ok"
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PredictionRow {
    pub peg: String,
    pub noise: String,
    pub index: usize,
    pub tilt_deg: f64,
    pub aif_mu_deg: f64,
    pub aif_iterations: usize,
    pub supervised_deg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrainingRow {
    pub peg: String,
    pub noise: String,
    pub model: String,
    pub epoch: usize,
    pub loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRow {
    pub iteration: usize,
    pub mu: f64,
    pub free_energy: f64,
}

#[derive(Debug, Default)]
pub struct PerceptionReport {
    pub rows: Vec<PerceptionRow>,
    pub predictions: Vec<PredictionRow>,
    pub training: Vec<TrainingRow>,
    /// `(file stem, rows)` per traced test image.
    pub traces: Vec<(String, Vec<TraceRow>)>,
    pub models: Vec<(String, Checkpoint)>,
    pub timings: Vec<(String, f64)>,
}

impl PerceptionReport {
    pub fn all_ok(&self) -> bool {
        self.rows.iter().all(PerceptionRow::ok)
    }

    pub fn row(&self, peg: PegKind, noise: NoiseSetting) -> Option<&PerceptionRow> {
        self.rows
            .iter()
            .find(|r| r.peg == peg.name() && r.noise == noise.name())
    }

    pub fn write(&self, run: &mut RunDir) -> Result<()> {
        run.write_csv(crate::run::RESULTS_NAME, &self.rows)?;
        run.write_csv("predictions.csv", &self.predictions)?;
        run.write_csv("training.csv", &self.training)?;
        if !self.traces.is_empty() {
            let dir = run.subdir("traces")?;
            for (stem, rows) in &self.traces {
                crate::run::write_csv(&dir.join(format!("{stem}.csv")), rows)?;
            }
        }
        if !self.models.is_empty() {
            let dir = run.subdir("models")?;
            for (stem, ckpt) in &self.models {
                ckpt.save(&dir.join(format!("{stem}.ckpt")))?;
            }
        }
        for (label, s) in &self.timings {
            run.note_timing(label, *s);
        }
        Ok(())
    }
}

/// Surface noise used for `kind` under `setting`.
pub fn noise_level(cfg: &ExperimentConfig, kind: PegKind, setting: NoiseSetting) -> f64 {
    match setting {
        NoiseSetting::None => 0.0,
        NoiseSetting::Low => PegSpec::reference(kind).surface_noise,
        NoiseSetting::High => cfg.perception.high_noise_level,
    }
}

/// Seeds of one `(peg, noise)` cell; train and test renders never share a
/// noise seed.
struct CellSeeds {
    train_render: u64,
    test_render: u64,
    augment: u64,
    decoder: u64,
    baseline: u64,
    test_tilts: u64,
}

impl CellSeeds {
    fn new(master: u64, kind: PegKind, setting: NoiseSetting) -> Self {
        let base = stream(stream(master, peg_label(kind)), setting as u64 + 1);
        CellSeeds {
            train_render: stream(base, 1),
            test_render: stream(base, 2),
            augment: stream(base, 3),
            decoder: stream(base, 4),
            baseline: stream(base, 5),
            test_tilts: stream(base, 6),
        }
    }
}

struct Models {
    decoder: DecoderModel,
    baseline: RegressorModel,
}

fn train_models(
    cfg: &ExperimentConfig,
    o_train: &TactileImage,
    seeds: &CellSeeds,
    peg: &str,
    noise: &str,
    report: &mut PerceptionReport,
) -> Result<Models> {
    let d = &cfg.dataset;
    let aug = AugmentConfig {
        count: d.train_samples,
        tilt_range_deg: d.tilt_range_deg,
        rng_seed: seeds.augment,
    };
    let (decoder, decoder_report) =
        instant_train_with(o_train, &aug, d.epochs, seeds.decoder, &cfg.train)?;
    let dataset = augment(o_train, &aug)?;
    let (baseline, baseline_losses) =
        train_baseline_report(&dataset, d.epochs, seeds.baseline, &cfg.train)?;
    for (model, losses) in [("decoder", &decoder_report.epoch_losses), ("baseline", &baseline_losses)] {
        report.training.extend(losses.iter().enumerate().map(|(epoch, &loss)| TrainingRow {
            peg: peg.into(),
            noise: noise.into(),
            model: model.into(),
            epoch,
            loss,
        }));
    }
    Ok(Models { decoder, baseline })
}

/// Test tilts of one cell, uniform over the dataset tilt range.
pub fn test_tilts(cfg: &ExperimentConfig, kind: PegKind, setting: NoiseSetting) -> Vec<f64> {
    let seeds = CellSeeds::new(cfg.master_seed, kind, setting);
    let mut rng = tactile_aif::seed::rng(seeds.test_tilts);
    (0..cfg.dataset.test_samples)
        .map(|_| cfg.dataset.tilt_range_deg.sample(&mut rng))
        .collect()
}

fn run_cell(
    cfg: &ExperimentConfig,
    kind: PegKind,
    setting: NoiseSetting,
    report: &mut PerceptionReport,
) -> Result<PerceptionRow> {
    let (peg_name, noise_name) = (kind.name(), setting.name());
    let level = noise_level(cfg, kind, setting);
    let peg = PegSpec::reference(kind).with_noise(level);
    let seeds = CellSeeds::new(cfg.master_seed, kind, setting);
    let o_train = render_tactile(&peg, 0.0, seeds.train_render);
    let o_test = render_tactile(&peg, 0.0, seeds.test_render);

    let (models, train_s) = timed(|| train_models(cfg, &o_train, &seeds, peg_name, noise_name, report));
    report.timings.push((format!("{peg_name}/{noise_name} train"), train_s));
    let models = models?;
    if cfg.perception.save_models {
        let stem = format!("{peg_name}_{noise_name}");
        report
            .models
            .push((format!("{stem}_decoder"), Checkpoint::decoder(&models.decoder)));
        report
            .models
            .push((format!("{stem}_baseline"), Checkpoint::regressor(&models.baseline)));
    }

    let tilts = test_tilts(cfg, kind, setting);
    let (errors, test_s) = timed(|| -> Result<Vec<(f64, f64)>> {
        let mut errors = Vec::with_capacity(tilts.len());
        for (index, &tilt) in tilts.iter().enumerate() {
            let img = rotate(&o_test, tilt);
            let traced = index < cfg.perception.traces;
            let inf = InferenceConfig {
                record_trace: traced,
                ..cfg.inference
            };
            let belief = perceptual_inference(&models.decoder, &img, &inf)?;
            let sup = models.baseline.predict_tilt(&img)?;
            if let Some(trace) = belief.trace.as_ref().filter(|_| traced) {
                let rows = trace
                    .iter()
                    .enumerate()
                    .map(|(i, &(mu, f))| TraceRow {
                        iteration: i + 1,
                        mu,
                        free_energy: f,
                    })
                    .collect();
                report
                    .traces
                    .push((format!("{peg_name}_{noise_name}_{index:03}"), rows));
            }
            report.predictions.push(PredictionRow {
                peg: peg_name.into(),
                noise: noise_name.into(),
                index,
                tilt_deg: tilt,
                aif_mu_deg: belief.mu,
                aif_iterations: belief.iterations_run,
                supervised_deg: sup,
            });
            errors.push(((belief.mu - tilt).abs(), (sup - tilt).abs()));
        }
        Ok(errors)
    });
    report.timings.push((format!("{peg_name}/{noise_name} test"), test_s));
    let errors = errors?;
    let n = errors.len() as f64;
    let max = |f: fn(&(f64, f64)) -> f64| errors.iter().map(f).fold(0.0, f64::max);
    Ok(PerceptionRow {
        peg: peg_name.into(),
        noise: noise_name.into(),
        noise_level: level,
        status: "ok".into(),
        test_samples: errors.len(),
        aif_mae_deg: Some(errors.iter().map(|e| e.0).sum::<f64>() / n),
        supervised_mae_deg: Some(errors.iter().map(|e| e.1).sum::<f64>() / n),
        aif_max_error_deg: Some(max(|e| e.0)),
        supervised_max_error_deg: Some(max(|e| e.1)),
    })
}

/// Runs every `(peg, noise)` cell. A cell whose training or inference
/// diverges yields a row with the error as its status; other cells still
/// run.
pub fn run_perception_experiment(cfg: &ExperimentConfig) -> Result<PerceptionReport> {
    cfg.validate()?;
    let mut report = PerceptionReport::default();
    for kind in cfg.peg_kinds()? {
        for &setting in &cfg.perception.noise {
            let row = match run_cell(cfg, kind, setting, &mut report) {
                Ok(row) => row,
                Err(crate::HarnessError::Core(e)) => PerceptionRow {
                    peg: kind.name().into(),
                    noise: setting.name().into(),
                    noise_level: noise_level(cfg, kind, setting),
                    status: format!("failed: {e}"),
                    test_samples: 0,
                    aif_mae_deg: None,
                    supervised_mae_deg: None,
                    aif_max_error_deg: None,
                    supervised_max_error_deg: None,
                },
                Err(e) => return Err(e),
            };
            report.rows.push(row);
        }
    }
    Ok(report)
}
