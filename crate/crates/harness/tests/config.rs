use sha2::{Digest, Sha256};
use tactile_aif_harness::config::*;
use tactile_aif_harness::run::{write_csv, RunDir, HASH_NAME, SNAPSHOT_NAME, TIMING_NAME};
use tactile_aif_harness::HarnessError;

fn config_error(r: tactile_aif_harness::Result<ExperimentConfig>) -> String {
    match r {
        Err(HarnessError::Config(msg)) => msg,
        other => panic!("expected a config error, got {other:?}"),
    }
}

#[test]
fn defaults_validate_for_every_kind() {
    for kind in [
        ExperimentKind::Perception,
        ExperimentKind::DualPolicy,
        ExperimentKind::GradCheck,
        ExperimentKind::CalibrateDt,
    ] {
        ExperimentConfig::for_kind(kind).validate().unwrap();
    }
}

#[test]
fn empty_peg_list_rejected() {
    let msg = config_error(ExperimentConfig::from_toml("kind = \"perception\"\npegs = []\n"));
    assert!(msg.contains("peg list must not be empty"), "{msg}");
}

#[test]
fn unknown_peg_rejected() {
    let msg = config_error(ExperimentConfig::from_toml("pegs = [\"bolt\"]\n"));
    assert!(msg.contains("bolt"), "{msg}");
}

#[test]
fn wrong_schema_version_rejected() {
    let msg = config_error(ExperimentConfig::from_toml("schema_version = 2\n"));
    assert!(msg.contains("schema_version 2"), "{msg}");
}

#[test]
fn unknown_fields_rejected() {
    assert!(matches!(ExperimentConfig::from_toml("sead = 3\n"), Err(HarnessError::Toml(_))));
    assert!(matches!(
        ExperimentConfig::from_toml("[dataset]\nsamples = 3\n"),
        Err(HarnessError::Toml(_))
    ));
}

#[test]
fn partial_file_keeps_other_defaults() {
    let cfg = ExperimentConfig::from_toml("[dataset]\nepochs = 2\n").unwrap();
    assert_eq!(cfg.dataset.epochs, 2);
    assert_eq!(cfg.dataset.train_samples, DatasetConfig::default().train_samples);
    assert_eq!(cfg.inference, ExperimentConfig::default().inference);
}

#[test]
fn toml_round_trip() {
    let mut cfg = ExperimentConfig::for_kind(ExperimentKind::DualPolicy);
    cfg.master_seed = 7;
    cfg.dual.episodes = 3;
    let back = ExperimentConfig::from_toml(&cfg.to_toml().unwrap()).unwrap();
    assert_eq!(back, cfg);
}

#[test]
fn file_values_override_flags() {
    let mut flags = ExperimentConfig::for_kind(ExperimentKind::Perception);
    flags.master_seed = 5;
    flags.dataset.epochs = 3;
    flags.dataset.test_samples = 20;
    let cfg = resolve(&flags, Some("master_seed = 9\n[dataset]\nepochs = 4\n")).unwrap();
    assert_eq!(cfg.master_seed, 9);
    assert_eq!(cfg.dataset.epochs, 4);
    // Untouched by the file, so the flag survives.
    assert_eq!(cfg.dataset.test_samples, 20);
    assert_eq!(resolve(&flags, None).unwrap(), flags);
}

#[test]
fn resolve_validates_the_merged_result() {
    let base = ExperimentConfig::for_kind(ExperimentKind::GradCheck);
    let msg = config_error(resolve(&base, Some("[grad_check]\ninstances = 0\n")));
    assert!(msg.contains("instances"), "{msg}");
}

#[test]
fn invalid_sections_rejected() {
    let cases = [
        "[dataset]\ntilt_range_deg = { lo = 5.0, hi = -5.0 }\n",
        "[inference]\nstep_dt = 0.0\n",
        "[perception]\nnoise = []\n",
        "[perception]\nhigh_noise_level = 1.5\n",
        "[train]\nlearning_rate = 0.0\n",
    ];
    for text in cases {
        assert!(ExperimentConfig::from_toml(text).is_err(), "{text}");
    }
    assert!(ExperimentConfig::from_toml("kind = \"dual-policy\"\n[dual]\nscenarios = []\n").is_err());
    assert!(ExperimentConfig::from_toml("kind = \"calibrate-dt\"\n[calibration]\nanchors_deg = []\n").is_err());
}

#[test]
fn hash_is_sha256_of_snapshot_without_output_dir() {
    let mut a = ExperimentConfig::default();
    a.output_dir = "/tmp/one".into();
    let mut b = a.clone();
    b.output_dir = "elsewhere".into();
    assert_eq!(a.hash().unwrap(), b.hash().unwrap());

    let mut blank = a.clone();
    blank.output_dir = std::path::PathBuf::new();
    let expected: String = Sha256::digest(blank.to_toml().unwrap().as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect();
    assert_eq!(a.hash().unwrap(), expected);

    b.master_seed += 1;
    assert_ne!(a.hash().unwrap(), b.hash().unwrap());
}

#[test]
fn run_dir_holds_snapshot_and_hash() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::for_kind(ExperimentKind::GradCheck);
    cfg.output_dir = dir.path().to_path_buf();
    let mut run = RunDir::create(&cfg).unwrap();
    let hash = cfg.hash().unwrap();
    assert_eq!(run.path, dir.path().join(format!("grad-check-{}", &hash[..12])));
    assert_eq!(std::fs::read_to_string(run.file(HASH_NAME)).unwrap(), format!("{hash}\n"));
    let snapshot = std::fs::read_to_string(run.file(SNAPSHOT_NAME)).unwrap();
    assert_eq!(ExperimentConfig::from_toml(&snapshot).unwrap(), cfg);

    run.note_timing("total", 1.5);
    run.finish().unwrap();
    assert_eq!(std::fs::read_to_string(run.file(TIMING_NAME)).unwrap(), "total\t1.500 s\n");
}

#[test]
fn csv_header_follows_the_row_type() {
    #[derive(serde::Serialize)]
    struct Row {
        peg: &'static str,
        mae: f64,
    }
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("r.csv");
    write_csv(&p, &[Row { peg: "cuboid", mae: 0.25 }]).unwrap();
    assert_eq!(std::fs::read_to_string(p).unwrap(), "peg,mae\ncuboid,0.25\n");
}
