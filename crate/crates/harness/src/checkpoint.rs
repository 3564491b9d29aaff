//! Versioned little-endian binary dump of a network: layer chain, seed and
//! every parameter as raw `f64` bits, so a round trip is exact.
//!
//! ```text
//! magic "TAIFNET\0" | version u16 | kind u8 | width u32 | height u32
//! input_len u64 | seed u64 | layers u32 | layer specs...
//! per parameterized layer: weight rank u8, dims u64..., values f64...,
//!                          bias len u64, values f64...
//! ```

use std::path::Path;

use tactile_aif::baseline::RegressorModel;
use tactile_aif::generator::DecoderModel;
use tactile_aif::nn::{Activation, ConvGeometry, LayerParams, LayerSpec, Network, NetworkParams, Tensor};

use crate::error::{HarnessError, Result};

pub const MAGIC: &[u8; 8] = b"TAIFNET\0";
pub const VERSION: u16 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Network = 0,
    Decoder = 1,
    Regressor = 2,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub kind: ModelKind,
    /// Image dimensions for decoders and regressors, `(0, 0)` otherwise.
    pub width: usize,
    pub height: usize,
    pub network: Network,
}

impl Checkpoint {
    pub fn network(network: Network) -> Self {
        Checkpoint {
            kind: ModelKind::Network,
            width: 0,
            height: 0,
            network,
        }
    }

    pub fn decoder(model: &DecoderModel) -> Self {
        Checkpoint {
            kind: ModelKind::Decoder,
            width: model.width(),
            height: model.height(),
            network: model.network().clone(),
        }
    }

    pub fn regressor(model: &RegressorModel) -> Self {
        Checkpoint {
            kind: ModelKind::Regressor,
            width: model.width(),
            height: model.height(),
            network: model.network().clone(),
        }
    }

    pub fn into_decoder(self) -> Result<DecoderModel> {
        self.expect_kind(ModelKind::Decoder)?;
        Ok(DecoderModel::from_network(self.network, self.width, self.height)?)
    }

    pub fn into_regressor(self) -> Result<RegressorModel> {
        self.expect_kind(ModelKind::Regressor)?;
        Ok(RegressorModel::from_network(self.network, self.width, self.height)?)
    }

    fn expect_kind(&self, kind: ModelKind) -> Result<()> {
        if self.kind != kind {
            return Err(HarnessError::Config(format!(
                "checkpoint holds a {:?}, not a {kind:?}",
                self.kind
            )));
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Vec::new();
        w.extend_from_slice(MAGIC);
        w.extend_from_slice(&VERSION.to_le_bytes());
        w.push(self.kind as u8);
        w.extend_from_slice(&(self.width as u32).to_le_bytes());
        w.extend_from_slice(&(self.height as u32).to_le_bytes());
        put_u64(&mut w, self.network.input_len() as u64);
        put_u64(&mut w, self.network.params().seed);
        w.extend_from_slice(&(self.network.spec().len() as u32).to_le_bytes());
        for spec in self.network.spec() {
            put_spec(&mut w, spec);
        }
        for (spec, p) in self.network.spec().iter().zip(&self.network.params().layers) {
            if spec.param_shapes().is_none() {
                continue;
            }
            w.push(p.weight.shape().len() as u8);
            for &d in p.weight.shape() {
                put_u64(&mut w, d as u64);
            }
            put_values(&mut w, p.weight.values());
            put_u64(&mut w, p.bias.len() as u64);
            put_values(&mut w, p.bias.values());
        }
        w
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(8)? != MAGIC {
            return Err(HarnessError::parse(0, "not a tactile-aif checkpoint"));
        }
        let at = r.pos;
        let version = u16::from_le_bytes(r.array()?);
        if version != VERSION {
            return Err(HarnessError::parse(at, format!("unsupported checkpoint version {version}")));
        }
        let at = r.pos;
        let kind = match r.u8()? {
            0 => ModelKind::Network,
            1 => ModelKind::Decoder,
            2 => ModelKind::Regressor,
            k => return Err(HarnessError::parse(at, format!("unknown model kind {k}"))),
        };
        let width = u32::from_le_bytes(r.array()?) as usize;
        let height = u32::from_le_bytes(r.array()?) as usize;
        let input_len = r.len()?;
        let seed = r.u64()?;
        let n_layers = u32::from_le_bytes(r.array()?) as usize;
        let spec = (0..n_layers).map(|_| r.spec()).collect::<Result<Vec<_>>>()?;
        let mut params = NetworkParams::zeros_like(&spec);
        params.seed = seed;
        for (l, p) in spec.iter().zip(params.layers.iter_mut()) {
            if l.param_shapes().is_none() {
                continue;
            }
            let at = r.pos;
            let rank = r.u8()? as usize;
            let shape = (0..rank).map(|_| r.len()).collect::<Result<Vec<_>>>()?;
            let weight = r.values(shape.iter().product())?;
            let bias_len = r.len()?;
            let bias = r.values(bias_len)?;
            match (Tensor::from_vec(&shape, weight), Tensor::from_vec(&[bias_len], bias)) {
                (Some(weight), Some(bias)) => *p = LayerParams { weight, bias },
                _ => return Err(HarnessError::parse(at, "parameter tensor shape")),
            }
        }
        if r.pos != bytes.len() {
            return Err(HarnessError::parse(r.pos, "trailing bytes"));
        }
        let network = Network::with_params(input_len, spec, params)?;
        Ok(Checkpoint {
            kind,
            width,
            height,
            network,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()).map_err(|e| HarnessError::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| HarnessError::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}

fn put_u64(w: &mut Vec<u8>, v: u64) {
    w.extend_from_slice(&v.to_le_bytes());
}

fn put_values(w: &mut Vec<u8>, values: &[f64]) {
    for v in values {
        w.extend_from_slice(&v.to_le_bytes());
    }
}

fn put_spec(w: &mut Vec<u8>, spec: &LayerSpec) {
    let geometry = |w: &mut Vec<u8>, g: &ConvGeometry| {
        for v in [
            g.in_channels,
            g.out_channels,
            g.in_height,
            g.in_width,
            g.kernel,
            g.stride,
            g.padding,
        ] {
            put_u64(w, v as u64);
        }
    };
    match spec {
        LayerSpec::Dense { inputs, outputs } => {
            w.push(0);
            put_u64(w, *inputs as u64);
            put_u64(w, *outputs as u64);
        }
        LayerSpec::Conv(g) => {
            w.push(1);
            geometry(w, g);
        }
        LayerSpec::ConvTranspose(g) => {
            w.push(2);
            geometry(w, g);
        }
        LayerSpec::Dropout { rate } => {
            w.push(3);
            w.extend_from_slice(&rate.to_le_bytes());
        }
        LayerSpec::Activation(a) => {
            w.push(4);
            w.push(match a {
                Activation::Relu => 0,
                Activation::Sigmoid => 1,
            });
        }
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let Some(end) = end else {
            return Err(HarnessError::parse(self.bytes.len(), format!("truncated: need {n} bytes at {}", self.pos)));
        };
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N]> {
        let mut a = [0u8; N];
        a.copy_from_slice(self.take(N)?);
        Ok(a)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.array()?))
    }

    /// A length that must fit in the remaining input when read as values.
    fn len(&mut self) -> Result<usize> {
        let at = self.pos;
        let v = self.u64()?;
        usize::try_from(v)
            .ok()
            .filter(|&n| n <= self.bytes.len())
            .ok_or_else(|| HarnessError::parse(at, format!("implausible length {v}")))
    }

    fn values(&mut self, n: usize) -> Result<Vec<f64>> {
        let at = self.pos;
        let bytes = n
            .checked_mul(8)
            .ok_or_else(|| HarnessError::parse(at, "value count overflow"))?;
        let values: Vec<f64> = self
            .take(bytes)?
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect();
        match values.iter().position(|v| !v.is_finite()) {
            Some(i) => Err(HarnessError::parse(at + 8 * i, "non-finite parameter")),
            None => Ok(values),
        }
    }

    fn spec(&mut self) -> Result<LayerSpec> {
        let at = self.pos;
        let tag = self.u8()?;
        let mut geometry = || -> Result<ConvGeometry> {
            let mut v = [0usize; 7];
            for x in &mut v {
                *x = self.len()?;
            }
            Ok(ConvGeometry {
                in_channels: v[0],
                out_channels: v[1],
                in_height: v[2],
                in_width: v[3],
                kernel: v[4],
                stride: v[5],
                padding: v[6],
            })
        };
        Ok(match tag {
            0 => {
                let inputs = self.len()?;
                LayerSpec::Dense {
                    inputs,
                    outputs: self.len()?,
                }
            }
            1 => LayerSpec::Conv(geometry()?),
            2 => LayerSpec::ConvTranspose(geometry()?),
            3 => LayerSpec::Dropout {
                rate: f64::from_le_bytes(self.array()?),
            },
            4 => match self.u8()? {
                0 => LayerSpec::relu(),
                1 => LayerSpec::sigmoid(),
                a => return Err(HarnessError::parse(at + 1, format!("unknown activation {a}"))),
            },
            t => return Err(HarnessError::parse(at, format!("unknown layer tag {t}"))),
        })
    }
}
