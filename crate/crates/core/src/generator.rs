//! The generative model `g(mu)`: a decoder from a scalar tilt to a predicted
//! contact-area image, trained "instantly" from one straight-pose image.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::image::{augment, AugmentConfig, TactileImage};
use crate::nn::{mse, Adam, ConvGeometry, LayerSpec, Mode, Network, NetworkParams};

/// Tilts are fed to the network as `mu * MU_INPUT_SCALE`.
pub const MU_INPUT_SCALE: f64 = 1.0 / 20.0;

/// Channels after the dense stack and after each convolution stage.
pub const DECODER_CHANNELS: [usize; 5] = [8, 8, 8, 8, 8];

/// Default decoder for a `height x width` image (both divisible by 8):
/// two dense layers, then alternating stride-2 transposed convolutions and
/// stride-1 convolutions, and a sigmoid output.
///
/// The channel counts are a stand-in; any chain mapping one scalar to an
/// image in `[0, 1]` works with the rest of the crate.
pub fn decoder_spec(width: usize, height: usize, dropout: f64) -> Result<Vec<LayerSpec>> {
    if width % 8 != 0 || height % 8 != 0 || width == 0 || height == 0 {
        return Err(Error::config("decoder image dimensions must be multiples of 8"));
    }
    let (h0, w0) = (height / 8, width / 8);
    let [c0, c1, c2, c3, c4] = DECODER_CHANNELS;
    Ok(vec![
        LayerSpec::dense(1, 64),
        LayerSpec::relu(),
        LayerSpec::dense(64, c0 * h0 * w0),
        LayerSpec::relu(),
        LayerSpec::Dropout { rate: dropout },
        LayerSpec::ConvTranspose(ConvGeometry::new(c0, c1, h0, w0, 4, 2, 1)),
        LayerSpec::relu(),
        LayerSpec::Conv(ConvGeometry::new(c1, c2, 2 * h0, 2 * w0, 3, 1, 1)),
        LayerSpec::relu(),
        LayerSpec::ConvTranspose(ConvGeometry::new(c2, c3, 2 * h0, 2 * w0, 4, 2, 1)),
        LayerSpec::relu(),
        LayerSpec::Conv(ConvGeometry::new(c3, c4, 4 * h0, 4 * w0, 3, 1, 1)),
        LayerSpec::relu(),
        LayerSpec::ConvTranspose(ConvGeometry::new(c4, 1, 4 * h0, 4 * w0, 4, 2, 1)),
        LayerSpec::sigmoid(),
    ])
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecoderModel {
    net: Network,
    width: usize,
    height: usize,
}

impl DecoderModel {
    /// Wraps a network whose input is one scalar and whose output matches the
    /// image size.
    pub fn from_network(net: Network, width: usize, height: usize) -> Result<Self> {
        if net.input_len() != 1 {
            return Err(Error::config("decoder input dimension must be 1"));
        }
        if net.output_len() != width * height {
            return Err(Error::config("decoder output does not match the image size"));
        }
        Ok(DecoderModel { net, width, height })
    }

    /// Freshly initialized default decoder.
    pub fn new(width: usize, height: usize, dropout: f64, seed: u64) -> Result<Self> {
        let mut net = Network::new(1, decoder_spec(width, height, dropout)?, seed)?;
        // With zero biases every first-layer kink would sit at mu = 0, where
        // g is then not differentiable. Spread them over the input range.
        let mut rng = crate::seed::rng(crate::seed::derive(seed, 0x6b69_6e6b));
        if let Some(first) = net.params_mut().layers.first_mut() {
            for b in first.bias.values_mut() {
                *b = rng.gen_range(-1.0..1.0);
            }
        }
        Self::from_network(net, width, height)
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

    pub fn params(&self) -> &NetworkParams {
        self.net.params()
    }

    /// Noiseless prediction `g(mu)`, eval mode.
    pub fn predict(&self, mu: f64) -> TactileImage {
        let cache = self
            .net
            .forward_slice(&[mu * MU_INPUT_SCALE], Mode::Eval)
            .expect("decoder input is scalar");
        TactileImage::from_pixels_clamped(self.width, self.height, cache.output().to_vec())
            .expect("decoder output matches image")
    }

    /// `dg/dmu` at `mu`, image-shaped, row-major.
    pub fn d_g_d_mu(&self, mu: f64) -> Vec<f64> {
        self.prediction_and_derivative(mu).1
    }

    /// `(g(mu), dg/dmu)` from one tangent pass.
    pub fn prediction_and_derivative(&self, mu: f64) -> (Vec<f64>, Vec<f64>) {
        let (y, mut t) = self
            .net
            .forward_tangent(&[mu * MU_INPUT_SCALE], &[1.0])
            .expect("decoder input is scalar");
        t.iter_mut().for_each(|v| *v *= MU_INPUT_SCALE);
        (y, t)
    }

    /// `(g(mu), <dg/dmu, weights>)` via one forward and one backward pass.
    pub fn prediction_and_pullback(
        &self,
        mu: f64,
        weights: impl FnOnce(&[f64]) -> Vec<f64>,
    ) -> (Vec<f64>, Vec<f64>, f64) {
        let cache = self
            .net
            .forward_slice(&[mu * MU_INPUT_SCALE], Mode::Eval)
            .expect("decoder input is scalar");
        let w = weights(cache.output());
        let dx = self
            .net
            .input_gradient(&cache, &w)
            .expect("cache from this network");
        let y = cache.output().to_vec();
        (y, w, dx[0] * MU_INPUT_SCALE)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Optimizer {
    Sgd,
    Adam,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct TrainOptions {
    pub optimizer: Optimizer,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub dropout: f64,
}

impl Default for TrainOptions {
    fn default() -> Self {
        TrainOptions {
            optimizer: Optimizer::Adam,
            learning_rate: 3e-3,
            batch_size: 8,
            dropout: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub epochs: usize,
    pub epoch_losses: Vec<f64>,
    /// Filled in by callers that own a clock.
    pub wall_time_s: Option<f64>,
}

/// Trains `net` to map each input to its target with MSE, shuffling every
/// epoch. Shared by the decoder and the baseline regressor.
pub(crate) fn fit(
    net: &mut Network,
    inputs: &[Vec<f64>],
    targets: &[Vec<f64>],
    epochs: usize,
    seed: u64,
    opts: &TrainOptions,
) -> Result<Vec<f64>> {
    if epochs == 0 {
        return Err(Error::precondition("epochs must be at least 1"));
    }
    if inputs.is_empty() || inputs.len() != targets.len() {
        return Err(Error::precondition("training set must be non-empty"));
    }
    if opts.batch_size == 0 || !(opts.learning_rate > 0.0) {
        return Err(Error::config("batch size and learning rate must be positive"));
    }
    let mut rng = crate::seed::rng(crate::seed::derive(seed, 0x7472_6169_6e));
    let mut order: Vec<usize> = (0..inputs.len()).collect();
    let mut adam = Adam::new(net.params(), opts.learning_rate);
    let mut grads = NetworkParams::zeros_like(net.spec());
    let mut losses = Vec::with_capacity(epochs);
    for epoch in 0..epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for batch in order.chunks(opts.batch_size) {
            grads.fill(0.0);
            for &i in batch {
                let cache = net.forward_slice(&inputs[i], Mode::Train(&mut rng))?;
                let (loss, mut dy) = mse(cache.output(), &targets[i]);
                total += loss;
                let inv = 1.0 / batch.len() as f64;
                dy.iter_mut().for_each(|d| *d *= inv);
                net.backward_accumulate(&cache, &dy, Some(&mut grads))?;
            }
            if !grads.all_finite() {
                return Err(Error::TrainingDivergence {
                    epoch,
                    learning_rate: opts.learning_rate,
                });
            }
            match opts.optimizer {
                Optimizer::Sgd => crate::nn::sgd_step(net.params_mut(), &grads, opts.learning_rate)?,
                Optimizer::Adam => adam.step(net.params_mut(), &grads)?,
            }
        }
        let mean = total / inputs.len() as f64;
        if !mean.is_finite() || !net.params().all_finite() {
            return Err(Error::TrainingDivergence {
                epoch,
                learning_rate: opts.learning_rate,
            });
        }
        losses.push(mean);
    }
    Ok(losses)
}

/// Instant decoder training: augment `o_init` by rotation, then fit the
/// decoder to the labeled images.
pub fn instant_train(
    o_init: &TactileImage,
    cfg: &AugmentConfig,
    epochs: usize,
    seed: u64,
) -> Result<(DecoderModel, TrainReport)> {
    instant_train_with(o_init, cfg, epochs, seed, &TrainOptions::default())
}

pub fn instant_train_with(
    o_init: &TactileImage,
    cfg: &AugmentConfig,
    epochs: usize,
    seed: u64,
    opts: &TrainOptions,
) -> Result<(DecoderModel, TrainReport)> {
    if epochs == 0 {
        return Err(Error::precondition("epochs must be at least 1"));
    }
    let dataset = augment(o_init, cfg)?;
    let mut model = DecoderModel::new(o_init.width(), o_init.height(), opts.dropout, seed)?;
    // Start the sigmoid output at the mean target intensity.
    let mean = o_init.mass() / o_init.len() as f64;
    let p = mean.clamp(0.01, 0.99);
    if let Some(last) = model.net.params_mut().layers.iter_mut().rev().find(|l| !l.bias.is_empty()) {
        last.bias.fill(libm::log(p / (1.0 - p)));
    }
    let inputs: Vec<Vec<f64>> = dataset
        .iter()
        .map(|s| vec![s.tilt_deg * MU_INPUT_SCALE])
        .collect();
    let targets: Vec<Vec<f64>> = dataset.into_iter().map(|s| s.image.into_pixels()).collect();
    let epoch_losses = fit(&mut model.net, &inputs, &targets, epochs, seed, opts)?;
    Ok((
        model,
        TrainReport {
            epochs,
            epoch_losses,
            wall_time_s: None,
        },
    ))
}
