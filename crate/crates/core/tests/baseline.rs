use std::sync::OnceLock;

use tactile_aif::baseline::*;
use tactile_aif::generator::TrainOptions;
use tactile_aif::image::{augment, AugmentConfig, LabeledSample, TactileImage};
use tactile_aif::world::{render_clean, render_tactile, PegKind, PegSpec};
use tactile_aif::Error;

fn cuboid() -> PegSpec {
    PegSpec::reference(PegKind::Cuboid)
}

fn dataset(n: usize, seed: u64) -> Vec<LabeledSample> {
    let o_init = render_tactile(&cuboid(), 0.0, seed);
    augment(&o_init, &AugmentConfig::new(n, -20.0, 20.0, seed)).unwrap()
}

fn trained() -> &'static (RegressorModel, Vec<f64>) {
    static CELL: OnceLock<(RegressorModel, Vec<f64>)> = OnceLock::new();
    CELL.get_or_init(|| train_baseline_report(&dataset(500, 1), 5, 1, &TrainOptions::default()).unwrap())
}

#[test]
fn trains_with_decreasing_loss() {
    let (_, losses) = trained();
    assert_eq!(losses.len(), 5);
    assert!(losses[4] < losses[0], "{losses:?}");
}

#[test]
fn anchor_prediction_is_close_to_zero() {
    let (model, _) = trained();
    let p = model.predict_tilt(&render_clean(&cuboid(), 0.0)).unwrap();
    assert!(p.abs() < 1.0, "predicted {p}");
}

#[test]
fn tracks_tilt_on_clean_footprints() {
    let (model, _) = trained();
    let tilts = [-15.0, -7.0, 7.0, 15.0];
    let mae: f64 = tilts
        .iter()
        .map(|t| (model.predict_tilt(&render_clean(&cuboid(), *t)).unwrap() - t).abs())
        .sum::<f64>()
        / tilts.len() as f64;
    assert!(mae < 5.0, "MAE {mae}");
}

#[test]
fn memorizes_a_single_sample() {
    let sample = LabeledSample {
        image: render_clean(&cuboid(), 0.0),
        tilt_deg: 0.0,
    };
    let model = train_baseline(&[sample.clone()], 30, 4).unwrap();
    let p = model.predict_tilt(&sample.image).unwrap();
    assert!(p.abs() < 0.5, "predicted {p}");
}

#[test]
fn zero_epochs_rejected() {
    assert!(matches!(train_baseline(&dataset(4, 2), 0, 2), Err(Error::Precondition(_))));
}

#[test]
fn empty_dataset_rejected() {
    assert!(matches!(train_baseline(&[], 3, 2), Err(Error::Precondition(_))));
}

#[test]
fn mixed_dimensions_rejected() {
    let mut data = dataset(2, 3);
    data.push(LabeledSample {
        image: TactileImage::zeros(32, 24),
        tilt_deg: 1.0,
    });
    assert!(train_baseline(&data, 1, 3).is_err());
}

#[test]
fn prediction_is_deterministic_and_shape_checked() {
    let (model, _) = trained();
    let img = render_tactile(&cuboid(), 5.0, 77);
    assert_eq!(model.predict_tilt(&img).unwrap(), model.predict_tilt(&img).unwrap());
    assert!(matches!(model.predict_tilt(&TactileImage::zeros(32, 24)), Err(Error::Shape { .. })));
}

#[test]
fn training_is_deterministic() {
    let data = dataset(24, 5);
    let a = train_baseline(&data, 2, 9).unwrap();
    let b = train_baseline(&data, 2, 9).unwrap();
    assert_eq!(a, b);
}

#[test]
fn regressor_has_scalar_output() {
    let spec = regressor_spec(64, 48).unwrap();
    let net = tactile_aif::nn::Network::new(64 * 48, spec, 0).unwrap();
    assert_eq!(net.output_len(), 1);
    assert!(regressor_spec(63, 48).is_err());
    let decoder = tactile_aif::generator::DecoderModel::new(64, 48, 0.0, 0).unwrap();
    assert!(RegressorModel::from_network(decoder.network().clone(), 64, 48).is_err());
}
