use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tactile_aif::world::{render_clean, render_tactile, PegSpec};
use tactile_aif_harness::config::{peg_kind, resolve, ExperimentConfig, ExperimentKind, NoiseSetting};
use tactile_aif_harness::experiment::{calibrate, dual, gradcheck, perception};
use tactile_aif_harness::run::RunDir;
use tactile_aif_harness::{pgm, HarnessError, Result};

#[derive(Parser)]
#[command(name = "tactile-aif", version, about = "Deep active inference for tactile peg alignment")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML config; its values override command-line flags.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Tilt-estimation accuracy, active inference against the CNN baseline.
    Perceive {
        #[command(flatten)]
        common: Common,
        /// Comma-separated peg names.
        #[arg(long, value_delimiter = ',')]
        pegs: Option<Vec<String>>,
        /// Comma-separated noise settings: none, low, high.
        #[arg(long, value_delimiter = ',')]
        noise: Option<Vec<String>>,
        #[arg(long)]
        train_samples: Option<usize>,
        #[arg(long)]
        test_samples: Option<usize>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        max_iters: Option<usize>,
        /// Record inference traces for the first N test images per cell.
        #[arg(long)]
        traces: Option<usize>,
        #[arg(long)]
        save_models: bool,
    },
    /// Insertion campaigns with and without tactile alignment.
    DualPolicy {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        episodes: Option<usize>,
        /// Skip the paired no-alignment campaigns.
        #[arg(long)]
        no_compare: bool,
        /// Write one CSV per episode.
        #[arg(long)]
        episode_logs: bool,
    },
    /// Finite-difference check of every layer kind and of dg/dmu.
    GradCheck {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        instances: Option<usize>,
    },
    /// Sweep the inference step size and record the largest stable value.
    CalibrateDt {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',')]
        pegs: Option<Vec<String>>,
        #[arg(long)]
        dt_min: Option<f64>,
        #[arg(long)]
        dt_max: Option<f64>,
        #[arg(long)]
        points_per_decade: Option<usize>,
    },
    /// Write a rendered contact-area image as PGM.
    Render {
        #[arg(long, default_value = "cuboid")]
        peg: String,
        #[arg(long, default_value_t = 0.0)]
        tilt: f64,
        /// Surface noise; defaults to the peg's reference level.
        #[arg(long)]
        noise: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Noise-free coverage render.
        #[arg(long)]
        clean: bool,
        #[arg(long)]
        out: PathBuf,
    },
}

fn parse_noise(names: &[String]) -> Result<Vec<NoiseSetting>> {
    names
        .iter()
        .map(|n| match n.as_str() {
            "none" => Ok(NoiseSetting::None),
            "low" => Ok(NoiseSetting::Low),
            "high" => Ok(NoiseSetting::High),
            other => Err(HarnessError::Config(format!("unknown noise setting {other:?}"))),
        })
        .collect()
}

/// Defaults, then flags, then the config file on top.
fn build(kind: ExperimentKind, common: &Common, flags: impl FnOnce(&mut ExperimentConfig)) -> Result<ExperimentConfig> {
    let mut base = ExperimentConfig::for_kind(kind);
    if let Some(s) = common.seed {
        base.master_seed = s;
    }
    if let Some(d) = &common.output_dir {
        base.output_dir = d.clone();
    }
    flags(&mut base);
    let text = match &common.config {
        Some(p) => Some(std::fs::read_to_string(p).map_err(|e| HarnessError::Io {
            path: p.clone(),
            source: e,
        })?),
        None => None,
    };
    let cfg = resolve(&base, text.as_deref())?;
    if cfg.kind != kind {
        return Err(HarnessError::Config(format!(
            "config file is for {:?}, not {:?}",
            cfg.kind.name(),
            kind.name()
        )));
    }
    Ok(cfg)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".into(), |v| format!("{v:.3}"))
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Perceive {
            common,
            pegs,
            noise,
            train_samples,
            test_samples,
            epochs,
            max_iters,
            traces,
            save_models,
        } => {
            let noise = noise.as_deref().map(parse_noise).transpose()?;
            let cfg = build(ExperimentKind::Perception, &common, |c| {
                if let Some(p) = pegs {
                    c.pegs = p;
                }
                if let Some(n) = noise {
                    c.perception.noise = n;
                }
                if let Some(v) = train_samples {
                    c.dataset.train_samples = v;
                }
                if let Some(v) = test_samples {
                    c.dataset.test_samples = v;
                }
                if let Some(v) = epochs {
                    c.dataset.epochs = v;
                }
                if let Some(v) = max_iters {
                    c.inference.max_iters = v;
                }
                if let Some(v) = traces {
                    c.perception.traces = v;
                }
                c.perception.save_models |= save_models;
            })?;
            let mut run = RunDir::create(&cfg)?;
            let report = perception::run_perception_experiment(&cfg)?;
            report.write(&mut run)?;
            run.finish()?;
            println!("{:<20} {:<6} {:>10} {:>10}  status", "peg", "noise", "aif", "supervised");
            for r in &report.rows {
                println!(
                    "{:<20} {:<6} {:>10} {:>10}  {}",
                    r.peg,
                    r.noise,
                    fmt_opt(r.aif_mae_deg),
                    fmt_opt(r.supervised_mae_deg),
                    r.status
                );
            }
            println!("results in {}", run.path.display());
            Ok(report.all_ok())
        }
        Command::DualPolicy {
            common,
            episodes,
            no_compare,
            episode_logs,
        } => {
            let cfg = build(ExperimentKind::DualPolicy, &common, |c| {
                if let Some(e) = episodes {
                    c.dual.episodes = e;
                }
                if no_compare {
                    c.dual.compare_without_alignment = false;
                }
                c.dual.episode_logs |= episode_logs;
            })?;
            let mut run = RunDir::create(&cfg)?;
            let report = dual::run_dualpolicy_experiment(&cfg)?;
            report.write(&mut run)?;
            run.finish()?;
            for r in &report.rows {
                println!(
                    "{:<12} alignment={:<5} {}/{} ({:.0}%)",
                    r.scenario,
                    r.alignment,
                    r.successes,
                    r.episodes,
                    100.0 * r.success_rate
                );
            }
            println!("results in {}", run.path.display());
            Ok(true)
        }
        Command::GradCheck { common, instances } => {
            let cfg = build(ExperimentKind::GradCheck, &common, |c| {
                if let Some(n) = instances {
                    c.grad_check.instances = n;
                }
            })?;
            let mut run = RunDir::create(&cfg)?;
            let report = gradcheck::run_gradcheck_experiment(&cfg)?;
            report.write(&mut run)?;
            run.finish()?;
            let mut cases: Vec<&str> = report.rows.iter().map(|r| r.case.as_str()).collect();
            cases.dedup();
            for case in cases {
                let rows: Vec<_> = report.rows.iter().filter(|r| r.case == case).collect();
                let worst = rows.iter().map(|r| r.max_relative_error).fold(0.0, f64::max);
                let passed = rows.iter().filter(|r| r.pass).count();
                println!("{case:<16} {passed}/{} pass, worst relative error {worst:.2e}", rows.len());
            }
            println!("results in {}", run.path.display());
            Ok(report.all_pass())
        }
        Command::CalibrateDt {
            common,
            pegs,
            dt_min,
            dt_max,
            points_per_decade,
        } => {
            let cfg = build(ExperimentKind::CalibrateDt, &common, |c| {
                if let Some(p) = pegs {
                    c.pegs = p;
                }
                if let Some(v) = dt_min {
                    c.calibration.dt_min = v;
                }
                if let Some(v) = dt_max {
                    c.calibration.dt_max = v;
                }
                if let Some(v) = points_per_decade {
                    c.calibration.points_per_decade = v;
                }
            })?;
            let mut run = RunDir::create(&cfg)?;
            let report = calibrate::run_calibration_experiment(&cfg)?;
            report.write(&mut run)?;
            run.finish()?;
            for p in &report.sweep {
                println!(
                    "dt {:.3e}  stable={:<5} worst error {:.3} deg  F tail increases {:.1}%",
                    p.dt,
                    p.stable,
                    p.worst_error_deg,
                    100.0 * p.worst_tail_violation
                );
            }
            println!("results in {}", run.path.display());
            match &report.chosen {
                Ok(dt) => {
                    println!("chosen dt {dt:e} (written to {})", calibrate::CALIBRATED_NAME);
                    Ok(true)
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    Ok(false)
                }
            }
        }
        Command::Render {
            peg,
            tilt,
            noise,
            seed,
            clean,
            out,
        } => {
            let mut spec = PegSpec::reference(peg_kind(&peg)?);
            if let Some(n) = noise {
                spec = spec.with_noise(n);
            }
            spec.validate()?;
            let img = if clean {
                render_clean(&spec, tilt)
            } else {
                render_tactile(&spec, tilt, seed)
            };
            pgm::write(&out, &img)?;
            println!("wrote {} ({}x{}, mass {:.1})", out.display(), img.width(), img.height(), img.mass());
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
