use alloc::vec;
use alloc::vec::Vec;
use core::sync::atomic::{AtomicU64, Ordering};

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::layer::{self, Activation, LayerSpec};
use super::tensor::Tensor;
use crate::error::{Error, Result};

/// Weight and bias of one layer. Parameter-free layers hold empty tensors.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerParams {
    pub weight: Tensor,
    pub bias: Tensor,
}

impl LayerParams {
    fn empty() -> Self {
        LayerParams {
            weight: Tensor::zeros(&[0]),
            bias: Tensor::zeros(&[0]),
        }
    }

    pub fn param_count(&self) -> usize {
        self.weight.len() + self.bias.len()
    }
}

/// Per-layer parameters plus the seed they were initialized from. Gradients
/// share this layout.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkParams {
    pub layers: Vec<LayerParams>,
    pub seed: u64,
}

impl NetworkParams {
    pub fn zeros_like(spec: &[LayerSpec]) -> Self {
        let layers = spec
            .iter()
            .map(|l| match l.param_shapes() {
                Some((w, b)) => LayerParams {
                    weight: Tensor::zeros(&w),
                    bias: Tensor::zeros(&[b]),
                },
                None => LayerParams::empty(),
            })
            .collect();
        NetworkParams { layers, seed: 0 }
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(LayerParams::param_count).sum()
    }

    pub fn fill(&mut self, value: f64) {
        for l in &mut self.layers {
            l.weight.fill(value);
            l.bias.fill(value);
        }
    }

    pub fn scale(&mut self, alpha: f64) {
        for l in &mut self.layers {
            l.weight.scale(alpha);
            l.bias.scale(alpha);
        }
    }

    pub fn all_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weight.all_finite() && l.bias.all_finite())
    }

    pub fn same_layout(&self, other: &NetworkParams) -> bool {
        self.layers.len() == other.layers.len()
            && self
                .layers
                .iter()
                .zip(&other.layers)
                .all(|(a, b)| a.weight.shape() == b.weight.shape() && a.bias.shape() == b.bias.shape())
    }

    /// Visits every scalar parameter in layer order (weights before biases).
    pub fn for_each_mut(&mut self, mut f: impl FnMut(&mut f64)) {
        for l in &mut self.layers {
            l.weight.values_mut().iter_mut().for_each(&mut f);
            l.bias.values_mut().iter_mut().for_each(&mut f);
        }
    }

    pub fn flat_values(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for l in &self.layers {
            out.extend_from_slice(l.weight.values());
            out.extend_from_slice(l.bias.values());
        }
        out
    }

    pub(crate) fn scalar_mut(&mut self, mut index: usize) -> &mut f64 {
        for l in &mut self.layers {
            let (nw, nb) = (l.weight.len(), l.bias.len());
            if index < nw {
                return &mut l.weight.values_mut()[index];
            }
            index -= nw;
            if index < nb {
                return &mut l.bias.values_mut()[index];
            }
            index -= nb;
        }
        panic!("parameter index out of range");
    }
}

pub enum Mode<'a> {
    Eval,
    /// Dropout active, masks drawn from the given generator.
    Train(&'a mut ChaCha8Rng),
}

/// Intermediates recorded by [`Network::forward`].
#[derive(Debug, Clone)]
pub struct ForwardCache {
    network_id: u64,
    generation: u64,
    /// `activations[0]` is the input; `activations[i + 1]` is layer `i`'s output.
    activations: Vec<Vec<f64>>,
    /// Inverted-dropout multipliers; `None` where the layer is not dropout or
    /// the pass ran in eval mode.
    masks: Vec<Option<Vec<f64>>>,
}

impl ForwardCache {
    pub fn output(&self) -> &[f64] {
        self.activations.last().map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn input(&self) -> &[f64] {
        &self.activations[0]
    }
}

static NEXT_NETWORK_ID: AtomicU64 = AtomicU64::new(1);

/// A sequential network with explicit differentiation.
#[derive(Debug)]
pub struct Network {
    id: u64,
    generation: u64,
    input_len: usize,
    output_len: usize,
    spec: Vec<LayerSpec>,
    params: NetworkParams,
}

impl Clone for Network {
    fn clone(&self) -> Self {
        Network {
            id: NEXT_NETWORK_ID.fetch_add(1, Ordering::Relaxed),
            generation: self.generation,
            input_len: self.input_len,
            output_len: self.output_len,
            spec: self.spec.clone(),
            params: self.params.clone(),
        }
    }
}

impl PartialEq for Network {
    fn eq(&self, other: &Self) -> bool {
        self.input_len == other.input_len && self.spec == other.spec && self.params == other.params
    }
}

impl Network {
    /// Builds a network with uniform fan-in weights from `seed` and zero biases.
    /// Random biases can silence a narrow ReLU layer entirely.
    pub fn new(input_len: usize, spec: Vec<LayerSpec>, seed: u64) -> Result<Self> {
        let mut params = NetworkParams::zeros_like(&spec);
        params.seed = seed;
        let mut rng = crate::seed::rng(seed);
        for (l, p) in spec.iter().zip(params.layers.iter_mut()) {
            let fan_in = l.fan_in();
            if fan_in == 0 {
                continue;
            }
            let bound = 1.0 / libm::sqrt(fan_in as f64);
            for v in p.weight.values_mut() {
                *v = rng.gen_range(-bound..bound);
            }
        }
        Self::with_params(input_len, spec, params)
    }

    pub fn with_params(input_len: usize, spec: Vec<LayerSpec>, params: NetworkParams) -> Result<Self> {
        if input_len == 0 {
            return Err(Error::config("network input length must be positive"));
        }
        if spec.is_empty() {
            return Err(Error::config("network needs at least one layer"));
        }
        let mut len = input_len;
        for (i, l) in spec.iter().enumerate() {
            l.validate(i)?;
            len = l.output_len(i, len)?;
        }
        let expected = NetworkParams::zeros_like(&spec);
        if !expected.same_layout(&params) {
            return Err(Error::config("parameter shapes do not match the layer chain"));
        }
        Ok(Network {
            id: NEXT_NETWORK_ID.fetch_add(1, Ordering::Relaxed),
            generation: 0,
            input_len,
            output_len: len,
            spec,
            params,
        })
    }

    pub fn input_len(&self) -> usize {
        self.input_len
    }

    pub fn output_len(&self) -> usize {
        self.output_len
    }

    pub fn spec(&self) -> &[LayerSpec] {
        &self.spec
    }

    pub fn params(&self) -> &NetworkParams {
        &self.params
    }

    /// Mutable access to the parameters. Invalidates outstanding caches.
    pub fn params_mut(&mut self) -> &mut NetworkParams {
        self.generation += 1;
        &mut self.params
    }

    pub fn forward(&self, input: &Tensor, mode: Mode<'_>) -> Result<(Tensor, ForwardCache)> {
        let cache = self.forward_slice(input.values(), mode)?;
        let out = Tensor::from_vec(&[self.output_len], cache.output().to_vec())
            .expect("output length");
        Ok((out, cache))
    }

    pub fn forward_slice(&self, input: &[f64], mut mode: Mode<'_>) -> Result<ForwardCache> {
        if input.len() != self.input_len {
            return Err(Error::Shape {
                layer: 0,
                expected: self.input_len,
                actual: input.len(),
            });
        }
        let mut activations = Vec::with_capacity(self.spec.len() + 1);
        let mut masks = Vec::with_capacity(self.spec.len());
        activations.push(input.to_vec());
        for (i, (l, p)) in self.spec.iter().zip(&self.params.layers).enumerate() {
            let x = &activations[i];
            let out_len = l.output_len(i, x.len())?;
            let mut y = vec![0.0; out_len];
            let mut mask = None;
            match l {
                LayerSpec::Dense { inputs, .. } => {
                    layer::dense_forward(p.weight.values(), p.bias.values(), *inputs, x, &mut y)
                }
                LayerSpec::Conv(g) => {
                    layer::conv_forward(g, p.weight.values(), Some(p.bias.values()), x, &mut y)
                }
                LayerSpec::ConvTranspose(g) => {
                    layer::conv_t_forward(g, p.weight.values(), Some(p.bias.values()), x, &mut y)
                }
                LayerSpec::Dropout { rate } => match &mut mode {
                    Mode::Train(rng) if *rate > 0.0 => {
                        let keep = 1.0 / (1.0 - rate);
                        let m: Vec<f64> = (0..x.len())
                            .map(|_| if rng.gen::<f64>() < *rate { 0.0 } else { keep })
                            .collect();
                        for ((o, a), s) in y.iter_mut().zip(x).zip(&m) {
                            *o = a * s;
                        }
                        mask = Some(m);
                    }
                    _ => y.copy_from_slice(x),
                },
                LayerSpec::Activation(Activation::Relu) => {
                    for (o, a) in y.iter_mut().zip(x) {
                        *o = a.max(0.0);
                    }
                }
                LayerSpec::Activation(Activation::Sigmoid) => {
                    for (o, a) in y.iter_mut().zip(x) {
                        *o = layer::sigmoid(*a);
                    }
                }
            }
            masks.push(mask);
            activations.push(y);
        }
        Ok(ForwardCache {
            network_id: self.id,
            generation: self.generation,
            activations,
            masks,
        })
    }

    fn check_cache(&self, cache: &ForwardCache, output_gradient: &[f64]) -> Result<()> {
        if cache.network_id != self.id || cache.generation != self.generation {
            return Err(Error::usage(
                "forward cache was produced by a different network or stale parameters",
            ));
        }
        if cache.activations.len() != self.spec.len() + 1 {
            return Err(Error::usage("forward cache does not match the layer chain"));
        }
        if output_gradient.len() != self.output_len {
            return Err(Error::Shape {
                layer: self.spec.len() - 1,
                expected: self.output_len,
                actual: output_gradient.len(),
            });
        }
        Ok(())
    }

    /// Gradients of `<output_gradient, output>` with respect to every
    /// parameter and the input.
    pub fn backward(
        &self,
        cache: &ForwardCache,
        output_gradient: &Tensor,
    ) -> Result<(NetworkParams, Tensor)> {
        let mut grads = NetworkParams::zeros_like(&self.spec);
        grads.seed = self.params.seed;
        let dx = self.backward_accumulate(cache, output_gradient.values(), Some(&mut grads))?;
        let dx = Tensor::from_vec(&[self.input_len], dx).expect("input length");
        Ok((grads, dx))
    }

    /// Input gradient only; skips parameter gradients.
    pub fn input_gradient(&self, cache: &ForwardCache, output_gradient: &[f64]) -> Result<Vec<f64>> {
        self.backward_accumulate(cache, output_gradient, None)
    }

    /// Adds parameter gradients into `grads` (when given) and returns the
    /// input gradient.
    pub fn backward_accumulate(
        &self,
        cache: &ForwardCache,
        output_gradient: &[f64],
        mut grads: Option<&mut NetworkParams>,
    ) -> Result<Vec<f64>> {
        self.check_cache(cache, output_gradient)?;
        let mut dy = output_gradient.to_vec();
        for i in (0..self.spec.len()).rev() {
            let x = &cache.activations[i];
            let y = &cache.activations[i + 1];
            let p = &self.params.layers[i];
            let mut dx = vec![0.0; x.len()];
            match &self.spec[i] {
                LayerSpec::Dense { inputs, outputs } => {
                    let w = p.weight.values();
                    if let Some(g) = grads.as_deref_mut() {
                        let gl = &mut g.layers[i];
                        let gw = gl.weight.values_mut();
                        for o in 0..*outputs {
                            let d = dy[o];
                            if d != 0.0 {
                                let row = &mut gw[o * inputs..(o + 1) * inputs];
                                for (r, xv) in row.iter_mut().zip(x) {
                                    *r += d * xv;
                                }
                            }
                        }
                        for (b, d) in gl.bias.values_mut().iter_mut().zip(&dy) {
                            *b += d;
                        }
                    }
                    for o in 0..*outputs {
                        let d = dy[o];
                        if d != 0.0 {
                            let row = &w[o * inputs..(o + 1) * inputs];
                            for (dv, wv) in dx.iter_mut().zip(row) {
                                *dv += d * wv;
                            }
                        }
                    }
                }
                LayerSpec::Conv(g) => {
                    let dw = grads.as_deref_mut().map(|gr| {
                        let LayerParams { weight, bias } = &mut gr.layers[i];
                        (weight.values_mut(), bias.values_mut())
                    });
                    layer::conv_backward(g, p.weight.values(), x, &dy, dw, Some(&mut dx));
                }
                LayerSpec::ConvTranspose(g) => {
                    let dw = grads.as_deref_mut().map(|gr| {
                        let LayerParams { weight, bias } = &mut gr.layers[i];
                        (weight.values_mut(), bias.values_mut())
                    });
                    layer::conv_t_backward(g, p.weight.values(), x, &dy, dw, Some(&mut dx));
                }
                LayerSpec::Dropout { .. } => match &cache.masks[i] {
                    Some(m) => {
                        for ((d, g), s) in dx.iter_mut().zip(&dy).zip(m) {
                            *d = g * s;
                        }
                    }
                    None => dx.copy_from_slice(&dy),
                },
                LayerSpec::Activation(Activation::Relu) => {
                    for ((d, g), a) in dx.iter_mut().zip(&dy).zip(x) {
                        *d = if *a > 0.0 { *g } else { 0.0 };
                    }
                }
                LayerSpec::Activation(Activation::Sigmoid) => {
                    for ((d, g), s) in dx.iter_mut().zip(&dy).zip(y) {
                        *d = g * s * (1.0 - s);
                    }
                }
            }
            dy = dx;
        }
        Ok(dy)
    }

    /// Eval-mode forward pass that also pushes a tangent vector through the
    /// network, returning `(output, d output / d input · tangent)`.
    pub fn forward_tangent(&self, input: &[f64], tangent: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        if input.len() != self.input_len || tangent.len() != self.input_len {
            return Err(Error::Shape {
                layer: 0,
                expected: self.input_len,
                actual: input.len().min(tangent.len()),
            });
        }
        let mut x = input.to_vec();
        let mut t = tangent.to_vec();
        for (i, (l, p)) in self.spec.iter().zip(&self.params.layers).enumerate() {
            let out_len = l.output_len(i, x.len())?;
            let mut y = vec![0.0; out_len];
            let mut ty = vec![0.0; out_len];
            match l {
                LayerSpec::Dense { inputs, .. } => {
                    layer::dense_forward(p.weight.values(), p.bias.values(), *inputs, &x, &mut y);
                    let zero = vec![0.0; out_len];
                    layer::dense_forward(p.weight.values(), &zero, *inputs, &t, &mut ty);
                }
                LayerSpec::Conv(g) => {
                    layer::conv_forward(g, p.weight.values(), Some(p.bias.values()), &x, &mut y);
                    layer::conv_forward(g, p.weight.values(), None, &t, &mut ty);
                }
                LayerSpec::ConvTranspose(g) => {
                    layer::conv_t_forward(g, p.weight.values(), Some(p.bias.values()), &x, &mut y);
                    layer::conv_t_forward(g, p.weight.values(), None, &t, &mut ty);
                }
                LayerSpec::Dropout { .. } => {
                    y.copy_from_slice(&x);
                    ty.copy_from_slice(&t);
                }
                LayerSpec::Activation(Activation::Relu) => {
                    for j in 0..out_len {
                        if x[j] > 0.0 {
                            y[j] = x[j];
                            ty[j] = t[j];
                        }
                    }
                }
                LayerSpec::Activation(Activation::Sigmoid) => {
                    for j in 0..out_len {
                        let s = layer::sigmoid(x[j]);
                        y[j] = s;
                        ty[j] = t[j] * s * (1.0 - s);
                    }
                }
            }
            x = y;
            t = ty;
        }
        Ok((x, t))
    }
}
