use super::network::NetworkParams;
use crate::error::{Error, Result};

/// `params <- params - learning_rate * gradients`.
pub fn sgd_step(params: &mut NetworkParams, gradients: &NetworkParams, learning_rate: f64) -> Result<()> {
    if !params.same_layout(gradients) {
        return Err(Error::usage("gradient layout does not match parameters"));
    }
    for (p, g) in params.layers.iter_mut().zip(&gradients.layers) {
        p.weight.axpy(-learning_rate, &g.weight);
        p.bias.axpy(-learning_rate, &g.bias);
    }
    Ok(())
}

/// Adam moment estimates for one parameter set.
#[derive(Debug, Clone)]
pub struct Adam {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    step: u32,
    m: NetworkParams,
    v: NetworkParams,
}

impl Adam {
    pub fn new(like: &NetworkParams, learning_rate: f64) -> Self {
        let mut m = like.clone();
        m.fill(0.0);
        Adam {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            step: 0,
            v: m.clone(),
            m,
        }
    }

    pub fn step(&mut self, params: &mut NetworkParams, gradients: &NetworkParams) -> Result<()> {
        if !params.same_layout(gradients) || !params.same_layout(&self.m) {
            return Err(Error::usage("gradient layout does not match parameters"));
        }
        self.step += 1;
        let c1 = 1.0 - libm::pow(self.beta1, self.step as f64);
        let c2 = 1.0 - libm::pow(self.beta2, self.step as f64);
        let (b1, b2, lr, eps) = (self.beta1, self.beta2, self.learning_rate, self.epsilon);
        let layers = params
            .layers
            .iter_mut()
            .zip(&gradients.layers)
            .zip(self.m.layers.iter_mut().zip(self.v.layers.iter_mut()));
        for ((p, g), (m, v)) in layers {
            let pairs = [
                (p.weight.values_mut(), g.weight.values(), m.weight.values_mut(), v.weight.values_mut()),
                (p.bias.values_mut(), g.bias.values(), m.bias.values_mut(), v.bias.values_mut()),
            ];
            for (pv, gv, mv, vv) in pairs {
                for j in 0..pv.len() {
                    mv[j] = b1 * mv[j] + (1.0 - b1) * gv[j];
                    vv[j] = b2 * vv[j] + (1.0 - b2) * gv[j] * gv[j];
                    let mh = mv[j] / c1;
                    let vh = vv[j] / c2;
                    pv[j] -= lr * mh / (libm::sqrt(vh) + eps);
                }
            }
        }
        Ok(())
    }
}
