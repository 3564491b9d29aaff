//! Minimal neural-network kit: dense, convolution, transposed convolution,
//! dropout and activation layers with hand-written backward passes.

mod gradcheck;
mod layer;
mod network;
mod optim;
mod tensor;

pub use gradcheck::{grad_check, grad_check_with, relative_error, AnalyticGradient, GRADIENT_FLOOR};
pub use layer::{Activation, ConvGeometry, LayerSpec};
pub use network::{ForwardCache, LayerParams, Mode, Network, NetworkParams};
pub use optim::{sgd_step, Adam};
pub use tensor::Tensor;

/// Mean-squared error `mean((prediction - target)^2)` and its gradient with
/// respect to the prediction.
pub fn mse(prediction: &[f64], target: &[f64]) -> (f64, alloc::vec::Vec<f64>) {
    debug_assert_eq!(prediction.len(), target.len());
    let n = prediction.len().max(1) as f64;
    let mut loss = 0.0;
    let grad = prediction
        .iter()
        .zip(target)
        .map(|(p, t)| {
            let d = p - t;
            loss += d * d;
            2.0 * d / n
        })
        .collect();
    (loss / n, grad)
}
