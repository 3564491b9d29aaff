//! Insertion success with and without tactile alignment, on matched seeds.

use serde::Serialize;
use tactile_aif::generator::{instant_train_with, DecoderModel, TrainReport};
use tactile_aif::image::AugmentConfig;
use tactile_aif::policy::{campaign_row, campaign_setups, run_episode, CampaignRow, CampaignSummary, PolicyConfig};
use tactile_aif::world::render_tactile;

use super::{peg_label, stream, timed};
use crate::config::{peg_kind, ExperimentConfig, ScenarioConfig};
use crate::error::Result;
use crate::run::RunDir;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DualRow {
    pub scenario: String,
    pub peg: String,
    pub clearance_mm: f64,
    pub alignment: bool,
    pub episodes: usize,
    pub successes: usize,
    pub success_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpisodeLogRow {
    pub step: usize,
    pub mu_true: f64,
    pub phi_ee: f64,
    pub theta: f64,
    pub depth: f64,
    pub policy: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Campaign {
    pub scenario: String,
    pub alignment: bool,
    pub summary: CampaignSummary,
    pub logs: Vec<Vec<EpisodeLogRow>>,
}

impl Campaign {
    pub fn file_stem(&self) -> String {
        let mode = if self.alignment { "with" } else { "without" };
        format!("{}_{mode}_alignment", self.scenario)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrainingRow {
    pub scenario: String,
    pub epoch: usize,
    pub loss: f64,
}

#[derive(Debug, Default)]
pub struct DualReport {
    pub rows: Vec<DualRow>,
    pub training: Vec<TrainingRow>,
    pub campaigns: Vec<Campaign>,
    pub timings: Vec<(String, f64)>,
}

impl DualReport {
    pub fn campaign(&self, scenario: &str, alignment: bool) -> Option<&Campaign> {
        self.campaigns
            .iter()
            .find(|c| c.scenario == scenario && c.alignment == alignment)
    }

    pub fn write(&self, run: &mut RunDir) -> Result<()> {
        run.write_csv(crate::run::RESULTS_NAME, &self.rows)?;
        run.write_csv("training.csv", &self.training)?;
        for c in &self.campaigns {
            run.write_csv(&format!("campaign_{}.csv", c.file_stem()), &c.summary.rows)?;
            if !c.logs.is_empty() {
                let dir = run.subdir("episodes")?;
                for (i, log) in c.logs.iter().enumerate() {
                    crate::run::write_csv(&dir.join(format!("{}_{i:03}.csv", c.file_stem())), log)?;
                }
            }
        }
        for (label, s) in &self.timings {
            run.note_timing(label, *s);
        }
        Ok(())
    }
}

/// Decoder for a scenario's peg, trained on one straight-pose render.
pub fn scenario_decoder(cfg: &ExperimentConfig, s: &ScenarioConfig) -> Result<(DecoderModel, TrainReport)> {
    let kind = peg_kind(&s.peg)?;
    let sc = cfg.scenario(s)?;
    let base = stream(stream(cfg.master_seed, 0x6475_616c), peg_label(kind));
    let o = render_tactile(&sc.peg, 0.0, stream(base, 1));
    let aug = AugmentConfig {
        count: cfg.dual.train_samples,
        tilt_range_deg: cfg.dual.train_tilt_range_deg,
        rng_seed: stream(base, 2),
    };
    Ok(instant_train_with(&o, &aug, cfg.dataset.epochs, stream(base, 3), &cfg.train)?)
}

fn run_one(
    cfg: &ExperimentConfig,
    s: &ScenarioConfig,
    decoder: &DecoderModel,
    alignment: bool,
) -> Result<Campaign> {
    let mut sc = cfg.scenario(s)?;
    if !alignment {
        sc.policy = PolicyConfig {
            mu_action_threshold: f64::INFINITY,
            ..sc.policy
        };
    }
    // Same master seed with and without alignment: identical starts and
    // grasp tilts episode by episode.
    let master = stream(cfg.master_seed, 0x6570_6973_6f64);
    let setups = campaign_setups(&sc, cfg.dual.episodes, cfg.dual.reposition_every, master);
    let mut rows: Vec<CampaignRow> = Vec::with_capacity(setups.len());
    let mut logs = Vec::new();
    for (episode, setup) in setups.iter().enumerate() {
        let result = run_episode(&sc, decoder, setup)?;
        if cfg.dual.episode_logs {
            logs.push(
                result
                    .log
                    .iter()
                    .map(|r| EpisodeLogRow {
                        step: r.step,
                        mu_true: r.mu_true,
                        phi_ee: r.phi_ee,
                        theta: r.theta,
                        depth: r.depth,
                        policy: r.policy.name().into(),
                    })
                    .collect(),
            );
        }
        rows.push(campaign_row(episode, setup, &result));
    }
    Ok(Campaign {
        scenario: s.name.clone(),
        alignment,
        summary: CampaignSummary::from_rows(rows),
        logs,
    })
}

pub fn run_dualpolicy_experiment(cfg: &ExperimentConfig) -> Result<DualReport> {
    cfg.validate()?;
    let mut report = DualReport::default();
    for s in &cfg.dual.scenarios {
        let (decoder, t) = timed(|| scenario_decoder(cfg, s));
        report.timings.push((format!("{} train", s.name), t));
        let (decoder, train) = decoder?;
        report.training.extend(train.epoch_losses.iter().enumerate().map(|(epoch, &loss)| TrainingRow {
            scenario: s.name.clone(),
            epoch,
            loss,
        }));
        let modes: &[bool] = if cfg.dual.compare_without_alignment {
            &[true, false]
        } else {
            &[true]
        };
        for &alignment in modes {
            let (campaign, t) = timed(|| run_one(cfg, s, &decoder, alignment));
            let campaign = campaign?;
            report.timings.push((campaign.file_stem(), t));
            report.rows.push(DualRow {
                scenario: s.name.clone(),
                peg: s.peg.clone(),
                clearance_mm: s.clearance_mm,
                alignment,
                episodes: campaign.summary.rows.len(),
                successes: campaign.summary.successes,
                success_rate: campaign.summary.success_rate,
            });
            report.campaigns.push(campaign);
        }
    }
    Ok(report)
}
