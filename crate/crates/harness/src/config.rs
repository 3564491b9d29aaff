//! TOML experiment configuration.
//!
//! Every field has a default, so a file only needs the values it changes.
//! `schema_version` guards against files written for another layout.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use tactile_aif::calibration::CalibrationOptions;
use tactile_aif::generator::TrainOptions;
use tactile_aif::image::TiltRange;
use tactile_aif::inference::InferenceConfig;
use tactile_aif::policy::PolicyConfig;
use tactile_aif::world::{ControllerGains, PegKind, PegSpec, WorldParams};

use crate::error::{HarnessError, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Perception,
    DualPolicy,
    GradCheck,
    CalibrateDt,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Perception => "perception",
            ExperimentKind::DualPolicy => "dual-policy",
            ExperimentKind::GradCheck => "grad-check",
            ExperimentKind::CalibrateDt => "calibrate-dt",
        }
    }
}

/// Observation noise of a perception run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseSetting {
    /// Clean renders.
    None,
    /// Each peg's own reference surface noise.
    Low,
    /// `high_noise_level` for every peg.
    High,
}

impl NoiseSetting {
    pub fn name(self) -> &'static str {
        match self {
            NoiseSetting::None => "none",
            NoiseSetting::Low => "low",
            NoiseSetting::High => "high",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetConfig {
    pub train_samples: usize,
    pub test_samples: usize,
    pub tilt_range_deg: TiltRange,
    pub epochs: usize,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        DatasetConfig {
            train_samples: 500,
            test_samples: 100,
            tilt_range_deg: TiltRange::new(-20.0, 20.0),
            epochs: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PerceptionConfig {
    pub noise: Vec<NoiseSetting>,
    pub high_noise_level: f64,
    /// Write the `(iteration, mu, F)` trace of the first few test images.
    pub traces: usize,
    /// Save trained decoder and regressor checkpoints.
    pub save_models: bool,
}

impl Default for PerceptionConfig {
    fn default() -> Self {
        PerceptionConfig {
            noise: vec![NoiseSetting::None, NoiseSetting::Low, NoiseSetting::High],
            high_noise_level: 0.6,
            traces: 0,
            save_models: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    pub peg: String,
    pub clearance_mm: f64,
    pub depth_mm: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            name: "cuboid".into(),
            peg: "cuboid".into(),
            clearance_mm: 0.08,
            depth_mm: 10.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DualConfig {
    pub scenarios: Vec<ScenarioConfig>,
    pub episodes: usize,
    /// Start position is redrawn every this many episodes.
    pub reposition_every: usize,
    /// Also run each scenario with tactile feedback disabled.
    pub compare_without_alignment: bool,
    pub train_samples: usize,
    pub train_tilt_range_deg: TiltRange,
    pub initial_tilt_deg: TiltRange,
    /// Inference settings used inside episodes.
    pub inference: InferenceConfig,
    pub policy: PolicyConfig,
    pub gains: ControllerGains,
    pub world: WorldParams,
    pub episode_logs: bool,
}

impl Default for DualConfig {
    fn default() -> Self {
        DualConfig {
            scenarios: vec![
                ScenarioConfig::default(),
                ScenarioConfig {
                    name: "pulley".into(),
                    peg: "pulley".into(),
                    clearance_mm: 0.3,
                    depth_mm: 10.0,
                },
            ],
            episodes: 40,
            reposition_every: 10,
            compare_without_alignment: true,
            train_samples: 1000,
            train_tilt_range_deg: TiltRange::new(-15.0, 15.0),
            initial_tilt_deg: TiltRange::new(-10.0, 10.0),
            inference: InferenceConfig {
                max_iters: 1000,
                ..InferenceConfig::default()
            },
            policy: PolicyConfig::default(),
            gains: ControllerGains::default(),
            world: WorldParams::default(),
            episode_logs: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CalibrationConfig {
    pub dt_min: f64,
    pub dt_max: f64,
    pub points_per_decade: usize,
    pub anchors_deg: Vec<f64>,
    pub options: CalibrationOptions,
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        CalibrationConfig {
            dt_min: 1e-8,
            dt_max: 1e-2,
            points_per_decade: 2,
            anchors_deg: vec![-15.0, -5.0, 5.0, 15.0],
            options: CalibrationOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GradCheckConfig {
    pub instances: usize,
    pub epsilon: f64,
    pub mu_epsilon_deg: f64,
    pub layer_tolerance: f64,
    pub decoder_tolerance: f64,
}

impl Default for GradCheckConfig {
    fn default() -> Self {
        GradCheckConfig {
            instances: 20,
            epsilon: 1e-4,
            mu_epsilon_deg: 1e-4,
            layer_tolerance: 1e-4,
            decoder_tolerance: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub kind: ExperimentKind,
    pub master_seed: u64,
    /// Parent of the run directory; not part of the config hash.
    pub output_dir: PathBuf,
    pub pegs: Vec<String>,
    pub dataset: DatasetConfig,
    pub train: TrainOptions,
    pub inference: InferenceConfig,
    pub perception: PerceptionConfig,
    pub dual: DualConfig,
    pub calibration: CalibrationConfig,
    pub grad_check: GradCheckConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            schema_version: SCHEMA_VERSION,
            kind: ExperimentKind::Perception,
            master_seed: 42,
            output_dir: PathBuf::from("runs"),
            pegs: PegKind::ALL.iter().map(|k| k.name().to_string()).collect(),
            dataset: DatasetConfig::default(),
            train: TrainOptions::default(),
            inference: InferenceConfig::default(),
            perception: PerceptionConfig::default(),
            dual: DualConfig::default(),
            calibration: CalibrationConfig::default(),
            grad_check: GradCheckConfig::default(),
        }
    }
}

pub fn peg_kind(name: &str) -> Result<PegKind> {
    PegKind::from_name(name).ok_or_else(|| {
        let known: Vec<_> = PegKind::ALL.iter().map(|k| k.name()).collect();
        HarnessError::Config(format!("unknown peg {name:?} (known: {})", known.join(", ")))
    })
}

fn invalid(msg: impl Into<String>) -> HarnessError {
    HarnessError::Config(msg.into())
}

impl ExperimentConfig {
    pub fn for_kind(kind: ExperimentKind) -> Self {
        ExperimentConfig {
            kind,
            ..Self::default()
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn peg_kinds(&self) -> Result<Vec<PegKind>> {
        self.pegs.iter().map(|p| peg_kind(p)).collect()
    }

    /// Checks every sub-configuration the selected experiment uses.
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(invalid(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if self.master_seed > i64::MAX as u64 {
            return Err(invalid("master_seed must fit in a signed 64-bit integer"));
        }
        self.inference.validate()?;
        match self.kind {
            ExperimentKind::Perception => {
                self.validate_pegs()?;
                self.validate_dataset()?;
                let p = &self.perception;
                if p.noise.is_empty() {
                    return Err(invalid("perception.noise must list at least one setting"));
                }
                if !(0.0..=1.0).contains(&p.high_noise_level) {
                    return Err(invalid("perception.high_noise_level must be in [0, 1]"));
                }
            }
            ExperimentKind::CalibrateDt => {
                self.validate_pegs()?;
                self.validate_dataset()?;
                let c = &self.calibration;
                if c.anchors_deg.is_empty() || c.anchors_deg.iter().any(|a| !a.is_finite()) {
                    return Err(invalid("calibration.anchors_deg must be finite and non-empty"));
                }
                tactile_aif::calibration::log_grid(c.dt_min, c.dt_max, c.points_per_decade)?;
            }
            ExperimentKind::DualPolicy => {
                let d = &self.dual;
                if d.scenarios.is_empty() {
                    return Err(invalid("dual.scenarios must not be empty"));
                }
                if d.episodes == 0 || d.train_samples == 0 {
                    return Err(invalid("dual.episodes and dual.train_samples must be positive"));
                }
                self.validate_training()?;
                for s in &d.scenarios {
                    self.scenario(s)?.validate()?;
                }
                let r = d.train_tilt_range_deg;
                if !(r.lo <= r.hi && r.lo.is_finite() && r.hi.is_finite()) {
                    return Err(invalid("dual.train_tilt_range_deg must satisfy lo <= hi"));
                }
            }
            ExperimentKind::GradCheck => {
                let g = &self.grad_check;
                if g.instances == 0 {
                    return Err(invalid("grad_check.instances must be positive"));
                }
                let positive = |v: f64| v > 0.0 && v.is_finite();
                if ![g.epsilon, g.mu_epsilon_deg, g.layer_tolerance, g.decoder_tolerance]
                    .into_iter()
                    .all(positive)
                {
                    return Err(invalid("grad_check step sizes and tolerances must be positive"));
                }
            }
        }
        Ok(())
    }

    fn validate_pegs(&self) -> Result<()> {
        if self.pegs.is_empty() {
            return Err(invalid("peg list must not be empty"));
        }
        self.peg_kinds().map(|_| ())
    }

    fn validate_training(&self) -> Result<()> {
        let t = &self.train;
        if !(t.learning_rate > 0.0) || t.batch_size == 0 || !(0.0..1.0).contains(&t.dropout) {
            return Err(invalid("train: learning_rate > 0, batch_size >= 1, dropout in [0, 1)"));
        }
        if self.dataset.epochs == 0 {
            return Err(invalid("dataset.epochs must be positive"));
        }
        Ok(())
    }

    fn validate_dataset(&self) -> Result<()> {
        self.validate_training()?;
        let d = &self.dataset;
        if d.train_samples == 0 || d.test_samples == 0 {
            return Err(invalid("dataset sample counts must be positive"));
        }
        let r = d.tilt_range_deg;
        if !(r.lo <= r.hi && r.lo.is_finite() && r.hi.is_finite()) {
            return Err(invalid("dataset.tilt_range_deg must satisfy lo <= hi"));
        }
        Ok(())
    }

    /// Builds the simulator scenario for one dual-policy entry.
    pub fn scenario(&self, s: &ScenarioConfig) -> Result<tactile_aif::policy::Scenario> {
        let peg = PegSpec::reference(peg_kind(&s.peg)?);
        let d = &self.dual;
        let mut sc = tactile_aif::policy::Scenario::new(
            peg,
            tactile_aif::world::HoleSpec::new(s.clearance_mm, s.depth_mm),
        );
        sc.gains = d.gains;
        sc.inference = d.inference;
        sc.policy = d.policy;
        sc.world = d.world;
        sc.initial_tilt_deg = d.initial_tilt_deg;
        Ok(sc)
    }

    /// SHA-256 of the snapshot with `output_dir` blanked, as lowercase hex.
    pub fn hash(&self) -> Result<String> {
        let canonical = ExperimentConfig {
            output_dir: PathBuf::new(),
            ..self.clone()
        };
        let digest = Sha256::digest(canonical.to_toml()?.as_bytes());
        Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
    }
}

/// Overlays the keys of `over` onto `base`, recursing into tables.
pub fn merge_toml(base: &mut toml::Value, over: toml::Value) {
    match (base, over) {
        (toml::Value::Table(b), toml::Value::Table(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) => merge_toml(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

/// `base` (defaults plus command-line flags) with a config file applied on
/// top; the file wins wherever both set a value.
pub fn resolve(base: &ExperimentConfig, file_text: Option<&str>) -> Result<ExperimentConfig> {
    let Some(text) = file_text else {
        base.validate()?;
        return Ok(base.clone());
    };
    let mut value = toml::Value::try_from(base)?;
    let over: toml::Value = toml::from_str(text)?;
    merge_toml(&mut value, over);
    let cfg: ExperimentConfig = value.try_into()?;
    cfg.validate()?;
    Ok(cfg)
}
