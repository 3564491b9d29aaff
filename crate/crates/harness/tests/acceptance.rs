//! Acceptance suite. Runs every criterion in order on one thread, so the
//! runtime limits are measured without competing tests; prints one line per
//! criterion and exits non-zero if any fails.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tactile_aif::generator::instant_train;
use tactile_aif::image::{AugmentConfig, TiltRange};
use tactile_aif::inference::{mu_dot, update_mu, BeliefState, InferenceConfig};
use tactile_aif::world::*;
use tactile_aif_harness::config::{ExperimentConfig, ExperimentKind, NoiseSetting, ScenarioConfig};
use tactile_aif_harness::experiment::{calibrate, dual, gradcheck, perception};
use tactile_aif_harness::run::{RunDir, TIMING_NAME};

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn gradients() -> Outcome {
    let cfg = ExperimentConfig::for_kind(ExperimentKind::GradCheck);
    let t = Instant::now();
    let report = gradcheck::run_gradcheck_experiment(&cfg).map_err(|e| e.to_string())?;
    let secs = t.elapsed().as_secs_f64();
    let mut worst: BTreeMap<&str, (f64, usize)> = BTreeMap::new();
    for r in &report.rows {
        let w = worst.entry(r.case.as_str()).or_default();
        w.0 = w.0.max(r.max_relative_error);
        w.1 += 1;
    }
    let enough = worst.values().all(|&(_, n)| n >= 20);
    let detail = worst
        .iter()
        .map(|(c, (e, n))| format!("{c} {e:.1e} x{n}"))
        .collect::<Vec<_>>()
        .join(", ");
    check(report.all_pass() && enough && secs < 60.0, format!("{secs:.1} s; {detail}"))
}

fn fixed_point_and_prior_pull() -> Outcome {
    let peg = PegSpec::reference(PegKind::Cuboid).with_noise(0.0);
    let (model, _) = instant_train(&render_clean(&peg, 0.0), &AugmentConfig::new(500, -20.0, 20.0, 3), 5, 3)
        .map_err(|e| e.to_string())?;
    let c = InferenceConfig::default();
    if c.prior_var_mu != 1e-2 || c.precision_tac != 2e4 {
        return Err(format!("defaults changed: {c:?}"));
    }
    let anchor = model.predict(0.0);
    let at_anchor = mu_dot(&model, 0.0, &anchor, &c);
    let stepped = update_mu(&model, &BeliefState::at(&model, 0.0, &anchor, &c), &anchor, &c).map_err(|e| e.to_string())?;
    let mut ok = at_anchor == 0.0 && stepped.mu == 0.0;
    let mut worst: f64 = 0.0;
    for mu in [-15.0, -5.0, 2.0, 5.0, 15.0] {
        let o = model.predict(mu);
        let expected = -mu / c.prior_var_mu;
        let rate = mu_dot(&model, mu, &o, &c);
        let next = update_mu(&model, &BeliefState::at(&model, mu, &o, &c), &o, &c).map_err(|e| e.to_string())?;
        let step_err = (next.mu - (mu + c.step_dt * expected)).abs();
        worst = worst.max((rate - expected).abs() / expected.abs());
        ok &= (rate - expected).abs() <= 1e-12 * expected.abs() && step_err <= 1e-15 * mu.abs().max(1.0);
    }
    check(ok, format!("mu_dot at anchor {at_anchor}, prior pull relative error {worst:.1e}"))
}

fn perception_accuracy() -> Outcome {
    let mut cfg = ExperimentConfig::for_kind(ExperimentKind::Perception);
    cfg.perception.noise = vec![NoiseSetting::None, NoiseSetting::High];
    let t = Instant::now();
    let report = perception::run_perception_experiment(&cfg).map_err(|e| e.to_string())?;
    let secs = t.elapsed().as_secs_f64();
    let mut ok = report.all_ok() && secs < 600.0 && report.rows.len() == 10;
    let mut parts = Vec::new();
    for kind in PegKind::ALL {
        let clean = report.row(kind, NoiseSetting::None);
        let noisy = report.row(kind, NoiseSetting::High);
        let (Some(clean), Some(noisy)) = (clean, noisy) else {
            return Err(format!("missing rows for {}", kind.name()));
        };
        let aif = clean.aif_mae_deg.unwrap_or(f64::INFINITY);
        let (na, ns) = (
            noisy.aif_mae_deg.unwrap_or(f64::INFINITY),
            noisy.supervised_mae_deg.unwrap_or(0.0),
        );
        ok &= clean.test_samples == 100 && aif <= 1.5 && na < ns;
        parts.push(format!("{} {aif:.2} | {na:.2}<{ns:.2}", kind.name()));
    }
    check(ok, format!("{secs:.0} s; clean MAE | high-noise aif<supervised: {}", parts.join(", ")))
}

fn instant_training() -> Outcome {
    let peg = PegSpec::reference(PegKind::Cuboid);
    let o = render_tactile(&peg, 0.0, 5);
    let t = Instant::now();
    let (_, report) = instant_train(&o, &AugmentConfig::new(500, -20.0, 20.0, 5), 5, 5).map_err(|e| e.to_string())?;
    let secs = t.elapsed().as_secs_f64();
    check(
        secs < 30.0 && report.epoch_losses.len() == 5,
        format!("{secs:.1} s, final loss {:.2e}", report.epoch_losses.last().copied().unwrap_or(f64::NAN)),
    )
}

fn random_gains(rng: &mut ChaCha8Rng) -> ControllerGains {
    let mut v = || [rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)];
    let (kp_x, kd_x, kp_f, ki_f, a_x) = (v(), v(), v(), v(), v());
    ControllerGains {
        kp_x,
        kd_x,
        kp_f,
        ki_f,
        a_x,
        selection: [rng.gen_range(0.0..=1.0), rng.gen_range(0.0..=1.0)],
    }
}

fn control_law() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let peg = PegSpec::reference(PegKind::Cuboid);
    let hole = HoleSpec::new(0.08, 10.0);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let g = random_gains(&mut rng);
        let mut s = WorldState::new([rng.gen_range(-5.0..5.0), rng.gen_range(-1.0..5.0)], rng.gen_range(-10.0..10.0));
        s.velocity = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        s.wrench = [rng.gen_range(-2.0..2.0), rng.gen_range(0.0..2.0)];
        s.force_error_integral = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        let pose = [rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0)];
        let force = [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
        let (x_c, _) = control_step(&s, &g, pose, force, rng.gen_range(0.01..0.5), &hole, &peg, &WorldParams::default())
            .map_err(|e| e.to_string())?;
        for i in 0..2 {
            let sel = g.selection[i];
            let expected = sel * (g.kp_x[i] * (pose[i] - s.position[i]) - g.kd_x[i] * s.velocity[i])
                + g.a_x[i]
                + (1.0 - sel) * (g.kp_f[i] * (s.wrench[i] - force[i]) + g.ki_f[i] * s.force_error_integral[i]);
            worst = worst.max((x_c[i] - expected).abs() / (1.0 + expected.abs()));
        }
    }
    let unit = |selection| ControllerGains {
        kp_x: [1.0; 2],
        kd_x: [1.0; 2],
        kp_f: [1.0; 2],
        ki_f: [1.0; 2],
        selection,
        a_x: [0.0; 2],
    };
    let position = unit([1.0, 1.0]);
    let pure_position = hybrid_command(&position, [0.3, -0.2], [0.1, 0.0], [5.0, -3.0], [2.0, 1.0])
        == hybrid_command(&position, [0.3, -0.2], [0.1, 0.0], [-9.0, 7.0], [0.0, -4.0]);
    let force = unit([0.0, 0.0]);
    let pure_force = hybrid_command(&force, [0.3, -0.2], [0.1, 0.0], [5.0, -3.0], [2.0, 1.0])
        == hybrid_command(&force, [9.0, 4.0], [-2.0, 3.0], [5.0, -3.0], [2.0, 1.0]);
    check(
        worst <= 1e-12 && pure_position && pure_force,
        format!("1000 draws, worst relative deviation {worst:.1e}; S=I position-only {pure_position}, S=0 force-only {pure_force}"),
    )
}

fn dual_policy() -> Outcome {
    let mut cfg = ExperimentConfig::for_kind(ExperimentKind::DualPolicy);
    cfg.dual.scenarios = vec![ScenarioConfig::default()];
    let t = Instant::now();
    let report = dual::run_dualpolicy_experiment(&cfg).map_err(|e| e.to_string())?;
    let secs = t.elapsed().as_secs_f64();
    let (Some(with), Some(without)) = (report.campaign("cuboid", true), report.campaign("cuboid", false)) else {
        return Err("missing campaign".into());
    };
    let (a, b) = (&with.summary, &without.summary);
    let matched = a.rows.len() == 40
        && a.rows.len() == b.rows.len()
        && a.rows.iter().zip(&b.rows).all(|(x, y)| x.seed == y.seed && x.initial_tilt == y.initial_tilt);
    let only_with = a.rows.iter().zip(&b.rows).filter(|(x, y)| x.success && !y.success).count();
    let only_without = a.rows.iter().zip(&b.rows).filter(|(x, y)| !x.success && y.success).count();
    check(
        matched && a.success_rate >= 0.9 && b.success_rate < a.success_rate && b.success_rate <= 0.2 && secs < 600.0,
        format!(
            "{secs:.0} s; with alignment {}/40, without {}/40 (matched seeds, {only_with} rescued, {only_without} lost)",
            a.successes, b.successes
        ),
    )
}

fn reduced_configs(out: &Path) -> Vec<ExperimentConfig> {
    let mut perception = ExperimentConfig::for_kind(ExperimentKind::Perception);
    perception.pegs = vec!["cuboid".into(), "pulley".into()];
    perception.dataset.train_samples = 60;
    perception.dataset.test_samples = 6;
    perception.dataset.epochs = 1;
    perception.inference.max_iters = 100;
    perception.perception.traces = 1;

    let mut dual = ExperimentConfig::for_kind(ExperimentKind::DualPolicy);
    dual.dual.episodes = 3;
    dual.dual.train_samples = 60;
    dual.dual.episode_logs = true;
    dual.dual.policy.max_episode_steps = 60;
    dual.dual.inference.max_iters = 100;
    dual.dataset.epochs = 1;

    let mut grad = ExperimentConfig::for_kind(ExperimentKind::GradCheck);
    grad.grad_check.instances = 2;

    let mut cal = ExperimentConfig::for_kind(ExperimentKind::CalibrateDt);
    cal.pegs = vec!["shaft".into()];
    cal.dataset.train_samples = 60;
    cal.dataset.epochs = 1;
    cal.calibration.dt_min = 1e-5;
    cal.calibration.dt_max = 1e-3;
    cal.calibration.options.exhaustive = true;

    let mut all = vec![perception, dual, grad, cal];
    for c in &mut all {
        c.master_seed = 2024;
        c.output_dir = out.to_path_buf();
    }
    all
}

fn run_into(cfg: &ExperimentConfig) -> Result<std::path::PathBuf, String> {
    let e = |e: tactile_aif_harness::HarnessError| e.to_string();
    let mut run = RunDir::create(cfg).map_err(e)?;
    match cfg.kind {
        ExperimentKind::Perception => perception::run_perception_experiment(cfg).and_then(|r| r.write(&mut run)),
        ExperimentKind::DualPolicy => dual::run_dualpolicy_experiment(cfg).and_then(|r| r.write(&mut run)),
        ExperimentKind::GradCheck => gradcheck::run_gradcheck_experiment(cfg).and_then(|r| r.write(&mut run)),
        ExperimentKind::CalibrateDt => calibrate::run_calibration_experiment(cfg).and_then(|r| r.write(&mut run)),
    }
    .map_err(e)?;
    run.finish().map_err(e)?;
    Ok(run.path)
}

fn files(dir: &Path, prefix: &Path, out: &mut BTreeMap<std::path::PathBuf, Vec<u8>>) {
    for entry in std::fs::read_dir(dir).unwrap() {
        let p = entry.unwrap().path();
        if p.is_dir() {
            files(&p, prefix, out);
        } else if p.file_name().is_some_and(|n| n != TIMING_NAME) {
            let mut bytes = std::fs::read(&p).unwrap();
            if p.file_name().is_some_and(|n| n == "config.snapshot") {
                // The two runs differ only in where they were written.
                let text = String::from_utf8(bytes).unwrap();
                bytes = text.lines().filter(|l| !l.starts_with("output_dir")).collect::<Vec<_>>().join("\n").into_bytes();
            }
            out.insert(p.strip_prefix(prefix).unwrap().to_path_buf(), bytes);
        }
    }
}

fn determinism() -> Outcome {
    let a = tempfile::tempdir().map_err(|e| e.to_string())?;
    let b = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut compared = 0;
    let mut csvs = 0;
    for (ca, cb) in reduced_configs(a.path()).iter().zip(reduced_configs(b.path())) {
        let (da, db) = (run_into(ca)?, run_into(&cb)?);
        let (mut fa, mut fb) = (BTreeMap::new(), BTreeMap::new());
        files(&da, &da, &mut fa);
        files(&db, &db, &mut fb);
        if fa != fb {
            let differing: Vec<_> = fa.keys().filter(|k| fa.get(*k) != fb.get(*k)).collect();
            return Err(format!("{}: outputs differ: {differing:?}", ca.kind.name()));
        }
        csvs += fa.keys().filter(|k| k.extension().is_some_and(|x| x == "csv")).count();
        compared += fa.len();
    }
    check(csvs >= 8, format!("4 experiments run twice, {compared} files ({csvs} CSV) byte-identical"))
}

fn world_invariant() -> Outcome {
    let peg = PegSpec::reference(PegKind::Cuboid);
    let hole = HoleSpec::new(0.08, 10.0);
    let params = WorldParams::default();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut ops = 0usize;
    for seq in 0..10_000 {
        let mut s = WorldState::new([rng.gen_range(-10.0..10.0), rng.gen_range(-1.0..10.0)], rng.gen_range(-10.0..10.0));
        for _ in 0..rng.gen_range(1..20) {
            s = match rng.gen_range(0..5) {
                0 => {
                    let g = random_gains(&mut rng);
                    let pose = [rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0)];
                    control_step(&s, &g, pose, [0.0, 1.0], rng.gen_range(0.01..0.5), &hole, &peg, &params)
                        .map_err(|e| e.to_string())?
                        .1
                }
                1 => apply_alignment(&s, rng.gen_range(-15.0..15.0)),
                2 => slip(&s, TiltRange::new(-10.0, 10.0), &mut rng),
                3 => maybe_slip(&s, &params, &mut rng).0,
                _ => slippage_event(&s, &params, &mut rng).unwrap_or(s),
            };
            ops += 1;
            if s.theta() != s.mu_true() + s.phi_ee() {
                return Err(format!("sequence {seq}: theta {} != {} + {}", s.theta(), s.mu_true(), s.phi_ee()));
            }
        }
    }
    Ok(format!("10000 sequences, {ops} operations"))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("gradient correctness", gradients),
        ("fixed point and prior pull", fixed_point_and_prior_pull),
        ("perception accuracy", perception_accuracy),
        ("instant training speed", instant_training),
        ("hybrid control law", control_law),
        ("dual-policy insertion", dual_policy),
        ("determinism", determinism),
        ("theta invariant", world_invariant),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let (tag, detail) = match f() {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("criterion {} [{tag}] {name}: {detail}", i + 1);
    }
    println!("acceptance: {} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
