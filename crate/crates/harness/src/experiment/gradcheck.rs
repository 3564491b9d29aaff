//! Finite-difference verification of every layer kind and of `dg/dmu`.

use rand::Rng;
use serde::Serialize;
use tactile_aif::generator::DecoderModel;
use tactile_aif::image::{DEFAULT_HEIGHT, DEFAULT_WIDTH};
use tactile_aif::nn::{grad_check, relative_error, ConvGeometry, LayerSpec, Mode, Network, NetworkParams};
use tactile_aif::seed;

use super::stream;
use crate::config::{ExperimentConfig, GradCheckConfig};
use crate::error::Result;
use crate::run::RunDir;

pub const LAYER_CASES: [&str; 7] = [
    "dense",
    "conv",
    "conv_transpose",
    "relu",
    "sigmoid",
    "dropout",
    "chain",
];

pub const DECODER_CASE: &str = "decoder_dg_dmu";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GradCheckRow {
    pub case: String,
    pub instance: usize,
    pub seed: u64,
    pub max_relative_error: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Default)]
pub struct GradCheckReport {
    pub rows: Vec<GradCheckRow>,
}

impl GradCheckReport {
    pub fn all_pass(&self) -> bool {
        !self.rows.is_empty() && self.rows.iter().all(|r| r.pass)
    }

    pub fn write(&self, run: &mut RunDir) -> Result<()> {
        run.write_csv(crate::run::RESULTS_NAME, &self.rows)
    }
}

/// A random network and input exercising `case`.
pub fn layer_instance(case: &str, seed: u64) -> Result<(Network, Vec<f64>)> {
    let mut rng = seed::rng(seed);
    fn conv(rng: &mut impl Rng, transposed: bool) -> ConvGeometry {
        let kernel: usize = [1, 2, 3, 4][rng.gen_range(0..4)];
        let stride = rng.gen_range(1..=2);
        let padding = rng.gen_range(0..kernel.div_ceil(2));
        ConvGeometry::new(
            rng.gen_range(1..=3),
            rng.gen_range(1..=3),
            rng.gen_range(kernel.max(2)..=6),
            rng.gen_range(kernel.max(2)..=6),
            kernel,
            stride,
            if transposed { padding.min(kernel - 1) } else { padding },
        )
    }
    let (input_len, spec) = match case {
        "dense" => {
            let (i, o) = (rng.gen_range(1..=8), rng.gen_range(1..=6));
            (i, vec![LayerSpec::dense(i, o)])
        }
        "conv" => {
            let g = conv(&mut rng, false);
            (g.input_len(), vec![LayerSpec::Conv(g)])
        }
        "conv_transpose" => {
            let g = conv(&mut rng, true);
            (g.input_len(), vec![LayerSpec::ConvTranspose(g)])
        }
        "relu" | "sigmoid" | "dropout" => {
            let n = rng.gen_range(2..=12);
            let layer = match case {
                "relu" => LayerSpec::relu(),
                "sigmoid" => LayerSpec::sigmoid(),
                _ => LayerSpec::Dropout {
                    rate: rng.gen_range(0.0..0.5),
                },
            };
            (n, vec![LayerSpec::dense(n, n), layer])
        }
        _ => {
            let c = ConvGeometry::new(1, 2, 6, 6, 3, 2, 1);
            let t = ConvGeometry::new(2, 2, 3, 3, 4, 2, 1);
            (
                36,
                vec![
                    LayerSpec::Conv(c),
                    LayerSpec::relu(),
                    LayerSpec::ConvTranspose(t),
                    LayerSpec::sigmoid(),
                    LayerSpec::dense(72, 3),
                ],
            )
        }
    };
    let net = Network::new(input_len, spec, stream(seed, 1))?;
    let input = (0..input_len)
        .map(|_| {
            // Keep inputs away from the ReLU kink.
            let v: f64 = rng.gen_range(0.05..1.0);
            if rng.gen_bool(0.5) {
                v
            } else {
                -v
            }
        })
        .collect();
    Ok((net, input))
}

/// Sign of every ReLU input of the decoder at `mu`.
pub fn relu_pattern(model: &DecoderModel, mu: f64) -> Result<Vec<bool>> {
    let net = model.network();
    let mut pattern = Vec::new();
    for (i, layer) in net.spec().iter().enumerate() {
        if *layer != LayerSpec::relu() {
            continue;
        }
        let prefix = NetworkParams {
            layers: net.params().layers[..i].to_vec(),
            seed: 0,
        };
        let sub = Network::with_params(1, net.spec()[..i].to_vec(), prefix)?;
        let input = [mu * tactile_aif::generator::MU_INPUT_SCALE];
        pattern.extend(sub.forward_slice(&input, Mode::Eval)?.output().iter().map(|v| *v > 0.0));
    }
    Ok(pattern)
}

/// Worst per-pixel relative error between the tangent-mode `dg/dmu` and a
/// central difference of `g`.
pub fn decoder_derivative_error(model: &DecoderModel, mu: f64, eps_deg: f64) -> Result<f64> {
    let g = |m: f64| -> Result<Vec<f64>> {
        let input = [m * tactile_aif::generator::MU_INPUT_SCALE];
        Ok(model.network().forward_slice(&input, Mode::Eval)?.output().to_vec())
    };
    let (plus, minus) = (g(mu + eps_deg)?, g(mu - eps_deg)?);
    let analytic = model.d_g_d_mu(mu);
    Ok(analytic
        .iter()
        .zip(plus.iter().zip(&minus))
        .map(|(&a, (&p, &m))| relative_error(a, (p - m) / (2.0 * eps_deg)))
        .fold(0.0, f64::max))
}

pub fn run_layer_case(case: &str, instance: usize, master: u64, g: &GradCheckConfig) -> Result<GradCheckRow> {
    let seed = seed::derive(stream(master, case_label(case)), instance as u64);
    let (net, input) = layer_instance(case, seed)?;
    let err = grad_check(&net, &input, g.epsilon)?;
    Ok(GradCheckRow {
        case: case.into(),
        instance,
        seed,
        max_relative_error: err,
        tolerance: g.layer_tolerance,
        pass: err <= g.layer_tolerance,
    })
}

pub fn run_decoder_case(instance: usize, master: u64, g: &GradCheckConfig) -> Result<GradCheckRow> {
    let seed = seed::derive(stream(master, case_label(DECODER_CASE)), instance as u64);
    let model = DecoderModel::new(DEFAULT_WIDTH, DEFAULT_HEIGHT, 0.1, seed)?;
    // g is only piecewise smooth; a stencil that straddles a ReLU switch
    // measures the kink, not the derivative, so such draws are redrawn.
    let mut rng = seed::rng(stream(seed, 2));
    let mut mu = rng.gen_range(-20.0..20.0);
    for _ in 0..100 {
        if relu_pattern(&model, mu - g.mu_epsilon_deg)? == relu_pattern(&model, mu + g.mu_epsilon_deg)? {
            break;
        }
        mu = rng.gen_range(-20.0..20.0);
    }
    let err = decoder_derivative_error(&model, mu, g.mu_epsilon_deg)?;
    Ok(GradCheckRow {
        case: DECODER_CASE.into(),
        instance,
        seed,
        max_relative_error: err,
        tolerance: g.decoder_tolerance,
        pass: err <= g.decoder_tolerance,
    })
}

fn case_label(case: &str) -> u64 {
    case.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ b as u64).wrapping_mul(0x100_0000_01b3))
}

pub fn run_gradcheck_experiment(cfg: &ExperimentConfig) -> Result<GradCheckReport> {
    cfg.validate()?;
    let g = &cfg.grad_check;
    let mut rows = Vec::new();
    for case in LAYER_CASES {
        for i in 0..g.instances {
            rows.push(run_layer_case(case, i, cfg.master_seed, g)?);
        }
    }
    for i in 0..g.instances {
        rows.push(run_decoder_case(i, cfg.master_seed, g)?);
    }
    Ok(GradCheckReport { rows })
}
