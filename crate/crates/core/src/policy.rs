//! Dual-policy orchestration: force-controlled insertion, interrupted by
//! active-inference alignment whenever the estimated peg-to-hole angle grows
//! past a threshold.

use alloc::vec::Vec;

use rand::Rng;

use crate::error::{Error, Result};
use crate::generator::DecoderModel;
use crate::image::TiltRange;
use crate::inference::{perceptual_inference, perceptual_inference_from, InferenceConfig};
use crate::seed;
use crate::world::{
    apply_alignment, check_success, control_step, maybe_slip, render_tactile, slip,
    ControllerGains, HoleSpec, PegSpec, Vec2, WorldParams, WorldState,
};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct PolicyConfig {
    /// Initial alignment happens only if `|mu_hat|` exceeds this (degrees).
    /// An infinite value disables tactile feedback entirely.
    pub mu_action_threshold: f64,
    /// Re-alignment trigger on the estimated peg-to-hole angle (degrees).
    pub theta_switch_threshold: f64,
    /// Control ticks between belief refreshes.
    pub inference_period: usize,
    pub max_episode_steps: usize,
    /// Iteration budget of the perceptual inference runs.
    pub inference_iters: usize,
    /// Start each refresh from the previous belief instead of `mu = 0`.
    pub warm_start: bool,
    pub control_dt: f64,
    /// Downward pressing force target along the insertion axis (N).
    pub press_force: f64,
}

impl Default for PolicyConfig {
    fn default() -> Self {
        PolicyConfig {
            mu_action_threshold: 1.0,
            theta_switch_threshold: 0.7,
            inference_period: 10,
            max_episode_steps: 400,
            inference_iters: 1000,
            warm_start: false,
            control_dt: 0.2,
            press_force: 3.0,
        }
    }
}

impl PolicyConfig {
    pub fn without_alignment() -> Self {
        PolicyConfig {
            mu_action_threshold: f64::INFINITY,
            ..PolicyConfig::default()
        }
    }

    pub fn alignment_enabled(&self) -> bool {
        self.mu_action_threshold.is_finite()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu_action_threshold > 0.0) || !(self.theta_switch_threshold > 0.0) {
            return Err(Error::config("policy thresholds must be positive"));
        }
        if self.inference_period == 0 || self.max_episode_steps == 0 || self.inference_iters == 0 {
            return Err(Error::config(
                "inference period, episode length and iteration budget must be at least 1",
            ));
        }
        if !(self.control_dt > 0.0) || !(self.press_force > 0.0) {
            return Err(Error::config("control dt and press force must be positive"));
        }
        Ok(())
    }
}

/// Everything an episode needs apart from the decoder.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub peg: PegSpec,
    pub hole: HoleSpec,
    pub gains: ControllerGains,
    pub inference: InferenceConfig,
    pub policy: PolicyConfig,
    pub world: WorldParams,
    /// Range of the tilt the peg is grasped with at episode start.
    pub initial_tilt_deg: TiltRange,
    /// Nominal start of the peg tip relative to the hole entry, `(y, z)` mm.
    pub approach: Vec2,
    /// Half-width of the random start offset on each axis, mm.
    pub start_jitter_mm: f64,
}

impl Scenario {
    pub fn new(peg: PegSpec, hole: HoleSpec) -> Self {
        Scenario {
            peg,
            hole,
            gains: ControllerGains::default(),
            inference: InferenceConfig {
                max_iters: 1000,
                ..InferenceConfig::default()
            },
            policy: PolicyConfig::default(),
            world: WorldParams::default(),
            initial_tilt_deg: TiltRange::new(-10.0, 10.0),
            approach: [0.0, 20.0],
            start_jitter_mm: 10.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.peg.validate()?;
        self.hole.validate()?;
        self.gains.validate()?;
        self.inference.validate()?;
        self.policy.validate()?;
        self.world.validate()?;
        let r = self.initial_tilt_deg;
        if !(r.lo <= r.hi) || !(self.start_jitter_mm >= 0.0) {
            return Err(Error::config("initial tilt range or start jitter invalid"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActivePolicy {
    Insertion,
    Alignment,
}

impl ActivePolicy {
    pub fn name(self) -> &'static str {
        match self {
            ActivePolicy::Insertion => "insertion",
            ActivePolicy::Alignment => "alignment",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogRow {
    pub step: usize,
    pub mu_true: f64,
    pub phi_ee: f64,
    pub theta: f64,
    pub depth: f64,
    pub policy: ActivePolicy,
    /// Belief after the most recent refresh, if any.
    pub mu_hat: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeResult {
    pub success: bool,
    pub steps: usize,
    pub alignments_performed: usize,
    pub final_theta: f64,
    pub initial_tilt: f64,
    pub log: Vec<LogRow>,
}

/// Start conditions of one episode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeSetup {
    pub start_position: Vec2,
    pub initial_tilt: f64,
    pub seed: u64,
}

const NOISE_STREAM: u64 = 0x6e6f_6973_65;
const SLIP_STREAM: u64 = 0x736c_6970;

fn log_row(state: &WorldState, step: usize, policy: ActivePolicy, mu_hat: Option<f64>) -> LogRow {
    LogRow {
        step,
        mu_true: state.mu_true(),
        phi_ee: state.phi_ee(),
        theta: state.theta(),
        depth: state.insertion_depth,
        policy,
        mu_hat,
    }
}

/// Runs one insertion attempt. `decoder` must have been trained on this
/// peg's straight-pose contact area; it is unused when alignment is disabled.
pub fn run_episode(
    scenario: &Scenario,
    decoder: &DecoderModel,
    setup: &EpisodeSetup,
) -> Result<EpisodeResult> {
    scenario.validate()?;
    let pol = &scenario.policy;
    let inf = InferenceConfig {
        max_iters: pol.inference_iters,
        record_trace: false,
        ..scenario.inference
    };
    let noise_seed = |tick: usize| seed::derive(seed::derive(setup.seed, NOISE_STREAM), tick as u64);
    let mut slip_rng = seed::rng(seed::derive(setup.seed, SLIP_STREAM));

    let mut state = WorldState::new(setup.start_position, setup.initial_tilt);
    let mut log = Vec::with_capacity(pol.max_episode_steps + 1);
    let mut alignments = 0;
    let mut mu_hat = None;

    if pol.alignment_enabled() {
        let obs = render_tactile(&scenario.peg, state.mu_true(), noise_seed(0));
        let belief = perceptual_inference(decoder, &obs, &inf)?;
        mu_hat = Some(belief.mu);
        if belief.mu.abs() > pol.mu_action_threshold {
            state = apply_alignment(&state, belief.mu);
            alignments += 1;
            log.push(log_row(&state, 0, ActivePolicy::Alignment, mu_hat));
        }
    }

    let target_pose = [
        scenario.hole.entry[0],
        scenario.hole.entry[1] - scenario.hole.depth_mm,
    ];
    let target_force = [0.0, pol.press_force];
    let mut steps = 0;
    let mut success = check_success(&state, &scenario.hole, &scenario.peg);
    while !success && steps < pol.max_episode_steps {
        steps += 1;
        let mut policy = ActivePolicy::Insertion;
        if pol.alignment_enabled() && steps % pol.inference_period == 0 {
            let obs = render_tactile(&scenario.peg, state.mu_true(), noise_seed(steps));
            let belief = match (pol.warm_start, mu_hat) {
                (true, Some(prev)) => perceptual_inference_from(decoder, &obs, &inf, prev)?,
                _ => perceptual_inference(decoder, &obs, &inf)?,
            };
            mu_hat = Some(belief.mu);
            let theta_estimate = belief.mu + state.phi_ee();
            if theta_estimate.abs() > pol.theta_switch_threshold {
                policy = ActivePolicy::Alignment;
            }
        }
        match policy {
            ActivePolicy::Alignment => {
                state = apply_alignment(&state, mu_hat.expect("refreshed this tick"));
                alignments += 1;
            }
            ActivePolicy::Insertion => {
                let (_, next) = control_step(
                    &state,
                    &scenario.gains,
                    target_pose,
                    target_force,
                    pol.control_dt,
                    &scenario.hole,
                    &scenario.peg,
                    &scenario.world,
                )?;
                state = maybe_slip(&next, &scenario.world, &mut slip_rng).0;
            }
        }
        log.push(log_row(&state, steps, policy, mu_hat));
        success = check_success(&state, &scenario.hole, &scenario.peg);
    }
    Ok(EpisodeResult {
        success,
        steps,
        alignments_performed: alignments,
        final_theta: state.theta(),
        initial_tilt: setup.initial_tilt,
        log,
    })
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CampaignRow {
    pub episode: usize,
    pub seed: u64,
    pub initial_tilt: f64,
    pub alignments: usize,
    pub steps: usize,
    pub success: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CampaignSummary {
    pub rows: Vec<CampaignRow>,
    pub successes: usize,
    pub success_rate: f64,
}

impl CampaignSummary {
    pub fn from_rows(rows: Vec<CampaignRow>) -> Self {
        let successes = rows.iter().filter(|r| r.success).count();
        let success_rate = if rows.is_empty() {
            0.0
        } else {
            successes as f64 / rows.len() as f64
        };
        CampaignSummary {
            rows,
            successes,
            success_rate,
        }
    }
}

const POSITION_STREAM: u64 = 0x706f_73;
const TILT_STREAM: u64 = 0x7469_6c74;
const EPISODE_STREAM: u64 = 0x6570_6973;

/// Start conditions for every episode of a campaign. The start position is
/// redrawn every `reposition_every` episodes; the grasp tilt every episode.
/// Depends only on the master seed, so paired campaigns see the same starts.
pub fn campaign_setups(
    scenario: &Scenario,
    n_episodes: usize,
    reposition_every: usize,
    master_seed: u64,
) -> Vec<EpisodeSetup> {
    let every = reposition_every.max(1);
    let j = scenario.start_jitter_mm;
    let mut position = scenario.approach;
    (0..n_episodes)
        .map(|episode| {
            if episode % every == 0 {
                let mut rng = seed::rng(seed::derive(
                    seed::derive(master_seed, POSITION_STREAM),
                    (episode / every) as u64,
                ));
                position = [
                    scenario.approach[0] + rng.gen_range(-j..=j),
                    scenario.approach[1] + rng.gen_range(-j..=j),
                ];
            }
            let mut tilt_rng = seed::rng(seed::derive(
                seed::derive(master_seed, TILT_STREAM),
                episode as u64,
            ));
            let grasp = slip(&WorldState::new(position, 0.0), scenario.initial_tilt_deg, &mut tilt_rng);
            EpisodeSetup {
                start_position: position,
                initial_tilt: grasp.mu_true(),
                seed: seed::derive(seed::derive(master_seed, EPISODE_STREAM), episode as u64),
            }
        })
        .collect()
}

pub fn campaign_row(episode: usize, setup: &EpisodeSetup, result: &EpisodeResult) -> CampaignRow {
    CampaignRow {
        episode,
        seed: setup.seed,
        initial_tilt: setup.initial_tilt,
        alignments: result.alignments_performed,
        steps: result.steps,
        success: result.success,
    }
}

/// Runs `n_episodes` seeded episodes sequentially.
pub fn run_campaign(
    scenario: &Scenario,
    decoder: &DecoderModel,
    n_episodes: usize,
    reposition_every: usize,
    master_seed: u64,
) -> Result<CampaignSummary> {
    if n_episodes == 0 {
        return Err(Error::precondition("a campaign needs at least one episode"));
    }
    let setups = campaign_setups(scenario, n_episodes, reposition_every, master_seed);
    let mut rows = Vec::with_capacity(n_episodes);
    for (episode, setup) in setups.iter().enumerate() {
        let result = run_episode(scenario, decoder, setup)?;
        rows.push(campaign_row(episode, setup, &result));
    }
    Ok(CampaignSummary::from_rows(rows))
}
