use alloc::vec::Vec;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Sigmoid,
}

/// Spatial geometry of a (transposed) convolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConvGeometry {
    pub in_channels: usize,
    pub out_channels: usize,
    pub in_height: usize,
    pub in_width: usize,
    pub kernel: usize,
    pub stride: usize,
    pub padding: usize,
}

impl ConvGeometry {
    pub const fn new(
        in_channels: usize,
        out_channels: usize,
        in_height: usize,
        in_width: usize,
        kernel: usize,
        stride: usize,
        padding: usize,
    ) -> Self {
        ConvGeometry {
            in_channels,
            out_channels,
            in_height,
            in_width,
            kernel,
            stride,
            padding,
        }
    }

    pub fn input_len(&self) -> usize {
        self.in_channels * self.in_height * self.in_width
    }

    pub fn weight_len(&self) -> usize {
        self.in_channels * self.out_channels * self.kernel * self.kernel
    }

    /// Output size of a strided convolution, `None` if the kernel does not fit.
    pub fn conv_output(&self) -> Option<(usize, usize)> {
        let h = self.in_height + 2 * self.padding;
        let w = self.in_width + 2 * self.padding;
        if self.stride == 0 || h < self.kernel || w < self.kernel {
            return None;
        }
        Some((
            (h - self.kernel) / self.stride + 1,
            (w - self.kernel) / self.stride + 1,
        ))
    }

    pub fn transposed_output(&self) -> Option<(usize, usize)> {
        if self.stride == 0 || self.in_height == 0 || self.in_width == 0 {
            return None;
        }
        let h = (self.in_height - 1) * self.stride + self.kernel;
        let w = (self.in_width - 1) * self.stride + self.kernel;
        if h < 2 * self.padding + 1 || w < 2 * self.padding + 1 {
            return None;
        }
        Some((h - 2 * self.padding, w - 2 * self.padding))
    }
}

/// One layer of a sequential network. Every layer consumes and produces a
/// flat buffer; convolutions interpret it as `(channels, height, width)`.
#[derive(Debug, Clone, PartialEq)]
pub enum LayerSpec {
    Dense { inputs: usize, outputs: usize },
    Conv(ConvGeometry),
    ConvTranspose(ConvGeometry),
    Dropout { rate: f64 },
    Activation(Activation),
}

impl LayerSpec {
    pub const fn dense(inputs: usize, outputs: usize) -> Self {
        LayerSpec::Dense { inputs, outputs }
    }

    pub const fn relu() -> Self {
        LayerSpec::Activation(Activation::Relu)
    }

    pub const fn sigmoid() -> Self {
        LayerSpec::Activation(Activation::Sigmoid)
    }

    /// Length of the output buffer given an input of `input_len` values.
    pub fn output_len(&self, index: usize, input_len: usize) -> Result<usize> {
        let expect = |expected: usize| {
            if expected == input_len {
                Ok(())
            } else {
                Err(Error::Shape {
                    layer: index,
                    expected,
                    actual: input_len,
                })
            }
        };
        match self {
            LayerSpec::Dense { inputs, outputs } => {
                expect(*inputs)?;
                Ok(*outputs)
            }
            LayerSpec::Conv(g) => {
                expect(g.input_len())?;
                let (h, w) = g
                    .conv_output()
                    .ok_or_else(|| Error::config("convolution kernel larger than input"))?;
                Ok(g.out_channels * h * w)
            }
            LayerSpec::ConvTranspose(g) => {
                expect(g.input_len())?;
                let (h, w) = g
                    .transposed_output()
                    .ok_or_else(|| Error::config("transposed convolution padding too large"))?;
                Ok(g.out_channels * h * w)
            }
            LayerSpec::Dropout { .. } | LayerSpec::Activation(_) => Ok(input_len),
        }
    }

    /// `(weight shape, bias length)`; parameter-free layers return `None`.
    pub fn param_shapes(&self) -> Option<(Vec<usize>, usize)> {
        match self {
            LayerSpec::Dense { inputs, outputs } => Some((alloc::vec![*outputs, *inputs], *outputs)),
            LayerSpec::Conv(g) => Some((
                alloc::vec![g.out_channels, g.in_channels, g.kernel, g.kernel],
                g.out_channels,
            )),
            LayerSpec::ConvTranspose(g) => Some((
                alloc::vec![g.in_channels, g.out_channels, g.kernel, g.kernel],
                g.out_channels,
            )),
            LayerSpec::Dropout { .. } | LayerSpec::Activation(_) => None,
        }
    }

    /// Fan-in used for uniform initialization.
    pub fn fan_in(&self) -> usize {
        match self {
            LayerSpec::Dense { inputs, .. } => *inputs,
            LayerSpec::Conv(g) => g.in_channels * g.kernel * g.kernel,
            LayerSpec::ConvTranspose(g) => {
                let per_output = (g.kernel * g.kernel) / (g.stride * g.stride).max(1);
                g.in_channels * per_output.max(1)
            }
            LayerSpec::Dropout { .. } | LayerSpec::Activation(_) => 0,
        }
    }

    pub(crate) fn validate(&self, index: usize) -> Result<()> {
        match self {
            LayerSpec::Dropout { rate } if !(0.0..1.0).contains(rate) => Err(Error::config(
                alloc::format!("layer {index}: dropout rate must lie in [0, 1)"),
            )),
            LayerSpec::Conv(g) | LayerSpec::ConvTranspose(g)
                if g.kernel == 0 || g.stride == 0 || g.in_channels == 0 || g.out_channels == 0 =>
            {
                Err(Error::config(alloc::format!(
                    "layer {index}: convolution sizes must be positive"
                )))
            }
            LayerSpec::Dense { inputs, outputs } if *inputs == 0 || *outputs == 0 => Err(
                Error::config(alloc::format!("layer {index}: dense sizes must be positive")),
            ),
            _ => Ok(()),
        }
    }
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + libm::exp(-x))
    } else {
        let e = libm::exp(x);
        e / (1.0 + e)
    }
}

// Kernels below operate on flat buffers in (channel, row, column) order.
// Weights: conv `[out, in, k, k]`, transposed conv `[in, out, k, k]`.

pub(crate) fn dense_forward(w: &[f64], b: &[f64], inputs: usize, x: &[f64], y: &mut [f64]) {
    for (o, out) in y.iter_mut().enumerate() {
        let row = &w[o * inputs..(o + 1) * inputs];
        *out = b[o] + row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
    }
}

/// Output indices `o` with `0 <= o * stride + k - pad < input` for `o < output`.
#[inline]
fn valid_range(k: usize, pad: usize, stride: usize, input: usize, output: usize) -> (usize, usize) {
    // o * stride >= pad - k
    let lo = if pad > k { (pad - k).div_ceil(stride) } else { 0 };
    // o * stride <= input - 1 + pad - k
    let top = input + pad;
    let hi = if top > k { ((top - k - 1) / stride + 1).min(output) } else { 0 };
    (lo.min(hi), hi)
}

/// Pixel lattice shared by a convolution and its transpose: `big` is the
/// conv input (transposed-conv output), `small` the conv output
/// (transposed-conv input), related by `big = small * stride + tap - pad`.
struct Lattice {
    channels: usize,
    big: (usize, usize),
    small: (usize, usize),
    k: usize,
    s: usize,
    p: usize,
}

impl Lattice {
    fn small_len(&self) -> usize {
        self.small.0 * self.small.1
    }

    fn rows(&self) -> usize {
        self.channels * self.k * self.k
    }

    /// For each `(channel, ky, kx)` row, the valid `small` rectangle and the
    /// `big` offset of its first element in every valid row.
    fn for_each_tap(&self, mut f: impl FnMut(usize, usize, (usize, usize), (usize, usize), usize)) {
        let (bh, bw) = self.big;
        let (sh, sw) = self.small;
        for c in 0..self.channels {
            for ky in 0..self.k {
                let ys = valid_range(ky, self.p, self.s, bh, sh);
                for kx in 0..self.k {
                    let xs = valid_range(kx, self.p, self.s, bw, sw);
                    let r = (c * self.k + ky) * self.k + kx;
                    let base = c * bh * bw + kx + xs.0 * self.s - self.p;
                    f(r, ky, ys, xs, base);
                }
            }
        }
    }

    /// `col[r][small pixel]` = the `big` value under tap `r`, 0 off the grid.
    fn gather(&self, big: &[f64]) -> Vec<f64> {
        let n = self.small_len();
        let (bw, sw, s, p) = (self.big.1, self.small.1, self.s, self.p);
        let mut col = alloc::vec![0.0; self.rows() * n];
        self.for_each_tap(|r, ky, (y0, y1), (x0, x1), base| {
            if x0 >= x1 {
                return;
            }
            for y in y0..y1 {
                let src = &big[base + (y * s + ky - p) * bw..];
                let dst = &mut col[r * n + y * sw + x0..r * n + y * sw + x1];
                if s == 1 {
                    dst.copy_from_slice(&src[..x1 - x0]);
                } else {
                    for (d, v) in dst.iter_mut().zip(src.iter().step_by(s)) {
                        *d = *v;
                    }
                }
            }
        });
        col
    }

    /// Adjoint of [`Lattice::gather`]: adds every column entry back onto the
    /// `big` pixel it came from.
    fn scatter_add(&self, col: &[f64], big: &mut [f64]) {
        let n = self.small_len();
        let (bw, sw, s, p) = (self.big.1, self.small.1, self.s, self.p);
        self.for_each_tap(|r, ky, (y0, y1), (x0, x1), base| {
            if x0 >= x1 {
                return;
            }
            for y in y0..y1 {
                let dst = &mut big[base + (y * s + ky - p) * bw..];
                let src = &col[r * n + y * sw + x0..r * n + y * sw + x1];
                if s == 1 {
                    for (d, v) in dst.iter_mut().zip(src) {
                        *d += v;
                    }
                } else {
                    for (d, v) in dst.iter_mut().step_by(s).zip(src) {
                        *d += v;
                    }
                }
            }
        });
    }
}

fn conv_lattice(g: &ConvGeometry) -> Lattice {
    Lattice {
        channels: g.in_channels,
        big: (g.in_height, g.in_width),
        small: g.conv_output().expect("validated geometry"),
        k: g.kernel,
        s: g.stride,
        p: g.padding,
    }
}

fn conv_t_lattice(g: &ConvGeometry) -> Lattice {
    Lattice {
        channels: g.out_channels,
        big: g.transposed_output().expect("validated geometry"),
        small: (g.in_height, g.in_width),
        k: g.kernel,
        s: g.stride,
        p: g.padding,
    }
}

/// `out[i] += sum_r a[i][r] * b[r]` over rows of length `n`.
fn mat_rows_acc(a: &[f64], b: &[f64], n: usize, out: &mut [f64]) {
    let r_len = b.len() / n;
    for (i, out_row) in out.chunks_exact_mut(n).enumerate() {
        for (r, b_row) in b.chunks_exact(n).enumerate() {
            let av = a[i * r_len + r];
            if av != 0.0 {
                for (o, v) in out_row.iter_mut().zip(b_row) {
                    *o += av * v;
                }
            }
        }
    }
}

/// `out[r] += sum_i a[i][r] * b[i]`: the transpose of [`mat_rows_acc`].
fn mat_rows_acc_t(a: &[f64], b: &[f64], n: usize, out: &mut [f64]) {
    let r_len = out.len() / n;
    for (i, b_row) in b.chunks_exact(n).enumerate() {
        for (r, out_row) in out.chunks_exact_mut(n).enumerate() {
            let av = a[i * r_len + r];
            if av != 0.0 {
                for (o, v) in out_row.iter_mut().zip(b_row) {
                    *o += av * v;
                }
            }
        }
    }
}

/// `out[i][r] += <a[i], b[r]>` over rows of length `n`.
fn outer_acc(a: &[f64], b: &[f64], n: usize, out: &mut [f64]) {
    let r_len = b.len() / n;
    for (i, a_row) in a.chunks_exact(n).enumerate() {
        for (r, b_row) in b.chunks_exact(n).enumerate() {
            out[i * r_len + r] += a_row.iter().zip(b_row).map(|(x, y)| x * y).sum::<f64>();
        }
    }
}

fn fill_bias(y: &mut [f64], b: Option<&[f64]>, n: usize) {
    for (c, plane) in y.chunks_exact_mut(n).enumerate() {
        plane.fill(b.map_or(0.0, |b| b[c]));
    }
}

fn add_bias_grad(dy: &[f64], n: usize, db: &mut [f64]) {
    for (c, plane) in dy.chunks_exact(n).enumerate() {
        db[c] += plane.iter().sum::<f64>();
    }
}

pub(crate) fn conv_forward(g: &ConvGeometry, w: &[f64], b: Option<&[f64]>, x: &[f64], y: &mut [f64]) {
    let lat = conv_lattice(g);
    let n = lat.small_len();
    fill_bias(y, b, n);
    mat_rows_acc(w, &lat.gather(x), n, y);
}

/// Accumulates conv gradients; parameter or input gradients may be skipped.
pub(crate) fn conv_backward(
    g: &ConvGeometry,
    w: &[f64],
    x: &[f64],
    dy: &[f64],
    dw: Option<(&mut [f64], &mut [f64])>,
    dx: Option<&mut [f64]>,
) {
    let lat = conv_lattice(g);
    let n = lat.small_len();
    if let Some((dw, db)) = dw {
        add_bias_grad(dy, n, db);
        outer_acc(dy, &lat.gather(x), n, dw);
    }
    if let Some(dx) = dx {
        let mut dcol = alloc::vec![0.0; lat.rows() * n];
        mat_rows_acc_t(w, dy, n, &mut dcol);
        lat.scatter_add(&dcol, dx);
    }
}

pub(crate) fn conv_t_forward(
    g: &ConvGeometry,
    w: &[f64],
    b: Option<&[f64]>,
    x: &[f64],
    y: &mut [f64],
) {
    let lat = conv_t_lattice(g);
    let (bh, bw) = lat.big;
    fill_bias(y, b, bh * bw);
    let n = lat.small_len();
    let mut col = alloc::vec![0.0; lat.rows() * n];
    mat_rows_acc_t(w, x, n, &mut col);
    lat.scatter_add(&col, y);
}

pub(crate) fn conv_t_backward(
    g: &ConvGeometry,
    w: &[f64],
    x: &[f64],
    dy: &[f64],
    dw: Option<(&mut [f64], &mut [f64])>,
    dx: Option<&mut [f64]>,
) {
    let lat = conv_t_lattice(g);
    let (bh, bw) = lat.big;
    let n = lat.small_len();
    let dcol = lat.gather(dy);
    if let Some((dw, db)) = dw {
        add_bias_grad(dy, bh * bw, db);
        outer_acc(x, &dcol, n, dw);
    }
    if let Some(dx) = dx {
        mat_rows_acc(w, &dcol, n, dx);
    }
}
