//! Central finite-difference verification of analytic gradients.

use alloc::vec::Vec;

use rand::Rng;

use super::network::{ForwardCache, Mode, Network, NetworkParams};
use crate::error::Result;

/// Gradients below this magnitude are compared in absolute terms.
pub const GRADIENT_FLOOR: f64 = 1e-6;

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    let scale = analytic.abs().max(numeric.abs()).max(GRADIENT_FLOOR);
    (analytic - numeric).abs() / scale
}

/// Analytic gradient routine under test: given the network, a forward cache
/// and the output gradient, returns parameter and input gradients.
pub type AnalyticGradient<'a> =
    &'a dyn Fn(&Network, &ForwardCache, &[f64]) -> Result<(NetworkParams, Vec<f64>)>;

fn projection(len: usize, seed: u64) -> Vec<f64> {
    let mut rng = crate::seed::rng(seed);
    (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

fn projected_output(net: &Network, input: &[f64], weights: &[f64]) -> Result<f64> {
    let cache = net.forward_slice(input, Mode::Eval)?;
    Ok(cache.output().iter().zip(weights).map(|(a, b)| a * b).sum())
}

/// Maximum relative error between the network's backward pass and central
/// differences, over every parameter and every input component. The scalar
/// probed is a fixed random projection of the eval-mode output.
pub fn grad_check(net: &Network, input: &[f64], epsilon: f64) -> Result<f64> {
    let analytic = |n: &Network, c: &ForwardCache, dy: &[f64]| {
        let mut grads = NetworkParams::zeros_like(n.spec());
        let dx = n.backward_accumulate(c, dy, Some(&mut grads))?;
        Ok((grads, dx))
    };
    grad_check_with(net, input, epsilon, &analytic)
}

pub fn grad_check_with(
    net: &Network,
    input: &[f64],
    epsilon: f64,
    analytic: AnalyticGradient<'_>,
) -> Result<f64> {
    if !(epsilon > 0.0) {
        return Err(crate::Error::precondition("epsilon must be positive"));
    }
    let weights = projection(net.output_len(), 0x6752_4144_4348_4b00);
    let cache = net.forward_slice(input, Mode::Eval)?;
    let (grads, dx) = analytic(net, &cache, &weights)?;
    let analytic_flat = grads.flat_values();

    let mut worst = 0.0f64;
    let mut probe = net.clone();
    for (index, &a) in analytic_flat.iter().enumerate() {
        let original = *probe.params_mut().scalar_mut(index);
        *probe.params_mut().scalar_mut(index) = original + epsilon;
        let plus = projected_output(&probe, input, &weights)?;
        *probe.params_mut().scalar_mut(index) = original - epsilon;
        let minus = projected_output(&probe, input, &weights)?;
        *probe.params_mut().scalar_mut(index) = original;
        worst = worst.max(relative_error(a, (plus - minus) / (2.0 * epsilon)));
    }

    let mut x = input.to_vec();
    for (j, &a) in dx.iter().enumerate() {
        let original = x[j];
        x[j] = original + epsilon;
        let plus = projected_output(net, &x, &weights)?;
        x[j] = original - epsilon;
        let minus = projected_output(net, &x, &weights)?;
        x[j] = original;
        worst = worst.max(relative_error(a, (plus - minus) / (2.0 * epsilon)));
    }
    Ok(worst)
}
