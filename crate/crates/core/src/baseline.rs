//! Supervised CNN tilt regressor, the comparison method for perception.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::generator::{fit, TrainOptions, MU_INPUT_SCALE};
use crate::image::{LabeledSample, TactileImage};
use crate::nn::{ConvGeometry, LayerSpec, Mode, Network};

/// conv(1->8, 5x5, s2) -> ReLU -> conv(8->16, 5x5, s2) -> ReLU -> FC 64 -> ReLU -> FC 1.
pub fn regressor_spec(width: usize, height: usize) -> Result<Vec<LayerSpec>> {
    if width % 4 != 0 || height % 4 != 0 || width == 0 || height == 0 {
        return Err(Error::config("regressor image dimensions must be multiples of 4"));
    }
    let (h1, w1) = (height / 2, width / 2);
    let (h2, w2) = (height / 4, width / 4);
    Ok(vec![
        LayerSpec::Conv(ConvGeometry::new(1, 8, height, width, 5, 2, 2)),
        LayerSpec::relu(),
        LayerSpec::Conv(ConvGeometry::new(8, 16, h1, w1, 5, 2, 2)),
        LayerSpec::relu(),
        LayerSpec::dense(16 * h2 * w2, 64),
        LayerSpec::relu(),
        LayerSpec::dense(64, 1),
    ])
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegressorModel {
    net: Network,
    width: usize,
    height: usize,
}

impl RegressorModel {
    pub fn from_network(net: Network, width: usize, height: usize) -> Result<Self> {
        if net.output_len() != 1 {
            return Err(Error::config("regressor output dimension must be 1"));
        }
        if net.input_len() != width * height {
            return Err(Error::config("regressor input does not match the image size"));
        }
        Ok(RegressorModel { net, width, height })
    }

    pub fn network(&self) -> &Network {
        &self.net
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Predicted tilt in degrees.
    pub fn predict_tilt(&self, img: &TactileImage) -> Result<f64> {
        if img.width() != self.width || img.height() != self.height {
            return Err(Error::Shape {
                layer: 0,
                expected: self.width * self.height,
                actual: img.len(),
            });
        }
        let cache = self.net.forward_slice(img.pixels(), Mode::Eval)?;
        Ok(cache.output()[0] / MU_INPUT_SCALE)
    }
}

/// MSE regression of the scaled tilt on the image, with the same optimizer
/// settings the decoder uses.
pub fn train_baseline(dataset: &[LabeledSample], epochs: usize, seed: u64) -> Result<RegressorModel> {
    train_baseline_with(dataset, epochs, seed, &TrainOptions::default())
}

pub fn train_baseline_with(
    dataset: &[LabeledSample],
    epochs: usize,
    seed: u64,
    opts: &TrainOptions,
) -> Result<RegressorModel> {
    train_baseline_report(dataset, epochs, seed, opts).map(|(m, _)| m)
}

/// Like [`train_baseline_with`] but also returns the per-epoch mean losses.
pub fn train_baseline_report(
    dataset: &[LabeledSample],
    epochs: usize,
    seed: u64,
    opts: &TrainOptions,
) -> Result<(RegressorModel, Vec<f64>)> {
    let first = dataset
        .first()
        .ok_or_else(|| Error::precondition("baseline dataset must be non-empty"))?;
    if epochs == 0 {
        return Err(Error::precondition("epochs must be at least 1"));
    }
    let (width, height) = (first.image.width(), first.image.height());
    if dataset
        .iter()
        .any(|s| s.image.width() != width || s.image.height() != height)
    {
        return Err(Error::precondition("baseline dataset images must share dimensions"));
    }
    let mut net = Network::new(width * height, regressor_spec(width, height)?, seed)?;
    let inputs: Vec<Vec<f64>> = dataset.iter().map(|s| s.image.pixels().to_vec()).collect();
    let targets: Vec<Vec<f64>> = dataset
        .iter()
        .map(|s| vec![s.tilt_deg * MU_INPUT_SCALE])
        .collect();
    let losses = fit(&mut net, &inputs, &targets, epochs, seed, opts)?;
    Ok((RegressorModel::from_network(net, width, height)?, losses))
}
