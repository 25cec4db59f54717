//! UNet inference in `f32`.
//!
//! Layout, with `b` the base feature count:
//!
//! ```text
//! enc1..enc4   [conv3x3 -> BN -> ReLU] x2, features b, 2b, 4b, 8b; 2x2 max-pool after each
//! mid          [conv3x3 -> BN -> ReLU] x2, features 16b
//! dec1..dec4   nearest x2 upsample -> conv3x3 "up" (halves features), concat skip,
//!              [conv3x3 -> BN -> ReLU] x2; features 8b, 4b, 2b, b
//! head         conv1x1 to 2 channels, softplus
//! ```
//!
//! Every tensor is its own layer named like a framework state dict:
//! `enc1.conv1.weight`, `enc1.norm1.running_var`, `dec2.up.bias`,
//! `head.weight`, ...

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

pub const ENGINE_DOWN_BLOCKS: u32 = 4;
pub const ENGINE_UP_BLOCKS: u32 = 4;
pub const ENGINE_IN_CHANNELS: u32 = 2;
pub const ENGINE_OUT_CHANNELS: u32 = 2;
pub const BN_EPS: f32 = 1e-5;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LayerKind {
    Conv = 0,
    Norm = 1,
}

impl LayerKind {
    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(LayerKind::Conv),
            1 => Some(LayerKind::Norm),
            _ => None,
        }
    }

    pub fn code(self) -> u8 {
        self as u8
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Layer {
    pub name: String,
    pub kind: LayerKind,
    pub shape: Vec<usize>,
    pub data: Vec<f32>,
}

impl Layer {
    pub fn new(name: impl Into<String>, kind: LayerKind, shape: Vec<usize>, data: Vec<f32>) -> Result<Self> {
        let name = name.into();
        let count: usize = shape.iter().product();
        if count != data.len() {
            return Err(Error::WeightShape(format!(
                "layer {name}: shape {shape:?} holds {count} values, got {}",
                data.len()
            )));
        }
        Ok(Self { name, kind, shape, data })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Fingerprint {
    pub down_blocks: u32,
    pub up_blocks: u32,
    pub base_features: u32,
    pub in_channels: u32,
    pub out_channels: u32,
}

impl Fingerprint {
    pub fn standard(base_features: u32) -> Self {
        Self {
            down_blocks: ENGINE_DOWN_BLOCKS,
            up_blocks: ENGINE_UP_BLOCKS,
            base_features,
            in_channels: ENGINE_IN_CHANNELS,
            out_channels: ENGINE_OUT_CHANNELS,
        }
    }

    pub fn check(&self) -> Result<()> {
        let want = Self::standard(self.base_features);
        if *self != want || self.base_features == 0 {
            return Err(Error::Fingerprint(format!(
                "bundle is {}/{} blocks, {} -> {} channels, base {}; engine needs {}/{} blocks, {} -> {} channels",
                self.down_blocks,
                self.up_blocks,
                self.in_channels,
                self.out_channels,
                self.base_features,
                want.down_blocks,
                want.up_blocks,
                want.in_channels,
                want.out_channels
            )));
        }
        Ok(())
    }
}

/// Ordered layers plus the architecture fingerprint.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightBundle {
    pub fingerprint: Fingerprint,
    pub layers: Vec<Layer>,
}

/// Dense `[channel][row][col]` activation.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    pub channels: usize,
    pub height: usize,
    pub width: usize,
    pub data: Vec<f32>,
}

impl Tensor {
    pub fn zeros(channels: usize, height: usize, width: usize) -> Self {
        Self {
            channels,
            height,
            width,
            data: vec![0.0; channels * height * width],
        }
    }

    fn plane(&self, c: usize) -> &[f32] {
        let n = self.height * self.width;
        &self.data[c * n..(c + 1) * n]
    }

    fn plane_mut(&mut self, c: usize) -> &mut [f32] {
        let n = self.height * self.width;
        &mut self.data[c * n..(c + 1) * n]
    }
}

#[derive(Clone, Debug)]
struct Conv {
    out_c: usize,
    in_c: usize,
    k: usize,
    weight: Vec<f32>,
    bias: Vec<f32>,
}

impl Conv {
    fn forward(&self, x: &Tensor) -> Tensor {
        let (h, w) = (x.height, x.width);
        let mut out = Tensor::zeros(self.out_c, h, w);
        let pad = (self.k / 2) as isize;
        for o in 0..self.out_c {
            let plane = out.plane_mut(o);
            plane.fill(self.bias[o]);
            for i in 0..self.in_c {
                let src = x.plane(i);
                for ky in 0..self.k {
                    for kx in 0..self.k {
                        let wv = self.weight[((o * self.in_c + i) * self.k + ky) * self.k + kx];
                        let dy = ky as isize - pad;
                        let dx = kx as isize - pad;
                        let x0 = (-dx).max(0) as usize;
                        let x1 = (w as isize - dx).min(w as isize).max(0) as usize;
                        if x0 >= x1 {
                            continue;
                        }
                        for y in 0..h {
                            let sy = y as isize + dy;
                            if sy < 0 || sy >= h as isize {
                                continue;
                            }
                            let srow = &src[sy as usize * w..(sy as usize + 1) * w];
                            let drow = &mut plane[y * w..(y + 1) * w];
                            let sx0 = (x0 as isize + dx) as usize;
                            for (d, s) in drow[x0..x1].iter_mut().zip(&srow[sx0..sx0 + (x1 - x0)]) {
                                *d += wv * s;
                            }
                        }
                    }
                }
            }
        }
        out
    }
}

#[derive(Clone, Debug)]
struct Norm {
    scale: Vec<f32>,
    shift: Vec<f32>,
}

impl Norm {
    /// Batch norm with running statistics, followed by ReLU.
    fn forward_relu(&self, x: &mut Tensor) {
        for c in 0..x.channels {
            let (a, b) = (self.scale[c], self.shift[c]);
            for v in x.plane_mut(c) {
                let y = *v * a + b;
                // NaN propagates so corrupt weights stay detectable
                *v = if y > 0.0 || y.is_nan() { y } else { 0.0 };
            }
        }
    }
}

#[derive(Clone, Debug)]
struct DoubleConv {
    conv1: Conv,
    norm1: Norm,
    conv2: Conv,
    norm2: Norm,
}

impl DoubleConv {
    fn forward(&self, x: &Tensor, stage: &str) -> Result<Tensor> {
        let mut y = self.conv1.forward(x);
        check_finite(&y, stage)?;
        self.norm1.forward_relu(&mut y);
        let mut z = self.conv2.forward(&y);
        check_finite(&z, stage)?;
        self.norm2.forward_relu(&mut z);
        Ok(z)
    }
}

#[derive(Clone, Debug)]
struct UpBlock {
    up: Conv,
    body: DoubleConv,
}

/// Validated network ready for inference.
#[derive(Clone, Debug)]
pub struct UNet {
    fingerprint: Fingerprint,
    encoders: Vec<DoubleConv>,
    mid: DoubleConv,
    decoders: Vec<UpBlock>,
    head: Conv,
}

struct LayerTable<'a> {
    map: BTreeMap<&'a str, &'a Layer>,
}

impl<'a> LayerTable<'a> {
    fn take(&self, name: &str, kind: LayerKind, shape: &[usize]) -> Result<&'a Layer> {
        let layer = self
            .map
            .get(name)
            .ok_or_else(|| Error::WeightShape(format!("missing layer {name}")))?;
        if layer.kind != kind {
            return Err(Error::WeightShape(format!("layer {name} has the wrong kind")));
        }
        if layer.shape != shape {
            return Err(Error::WeightShape(format!(
                "layer {name} has shape {:?}, expected {shape:?}",
                layer.shape
            )));
        }
        Ok(layer)
    }

    fn conv(&self, prefix: &str, out_c: usize, in_c: usize, k: usize) -> Result<Conv> {
        let w = self.take(&format!("{prefix}.weight"), LayerKind::Conv, &[out_c, in_c, k, k])?;
        let b = self.take(&format!("{prefix}.bias"), LayerKind::Conv, &[out_c])?;
        Ok(Conv {
            out_c,
            in_c,
            k,
            weight: w.data.clone(),
            bias: b.data.clone(),
        })
    }

    fn norm(&self, prefix: &str, c: usize) -> Result<Norm> {
        let get = |p: &str| self.take(&format!("{prefix}.{p}"), LayerKind::Norm, &[c]);
        let (w, b, m, v) = (get("weight")?, get("bias")?, get("running_mean")?, get("running_var")?);
        let mut scale = Vec::with_capacity(c);
        let mut shift = Vec::with_capacity(c);
        for i in 0..c {
            if v.data[i] < 0.0 {
                return Err(Error::WeightShape(format!("{prefix}.running_var is negative")));
            }
            let inv = 1.0 / libm::sqrtf(v.data[i] + BN_EPS);
            scale.push(w.data[i] * inv);
            shift.push(b.data[i] - m.data[i] * w.data[i] * inv);
        }
        Ok(Norm { scale, shift })
    }

    fn double(&self, prefix: &str, out_c: usize, in_c: usize) -> Result<DoubleConv> {
        Ok(DoubleConv {
            conv1: self.conv(&format!("{prefix}.conv1"), out_c, in_c, 3)?,
            norm1: self.norm(&format!("{prefix}.norm1"), out_c)?,
            conv2: self.conv(&format!("{prefix}.conv2"), out_c, out_c, 3)?,
            norm2: self.norm(&format!("{prefix}.norm2"), out_c)?,
        })
    }
}

/// Expected `(name, kind, shape)` of every layer, in declaration order.
pub fn layer_specs(base_features: usize) -> Vec<(String, LayerKind, Vec<usize>)> {
    let b = base_features;
    let mut out = Vec::new();
    let double = |out: &mut Vec<(String, LayerKind, Vec<usize>)>, p: &str, o: usize, i: usize| {
        for (conv, norm, ic) in [("conv1", "norm1", i), ("conv2", "norm2", o)] {
            out.push((format!("{p}.{conv}.weight"), LayerKind::Conv, vec![o, ic, 3, 3]));
            out.push((format!("{p}.{conv}.bias"), LayerKind::Conv, vec![o]));
            for t in ["weight", "bias", "running_mean", "running_var"] {
                out.push((format!("{p}.{norm}.{t}"), LayerKind::Norm, vec![o]));
            }
        }
    };
    let mut in_c = ENGINE_IN_CHANNELS as usize;
    for i in 0..4 {
        let f = b << i;
        double(&mut out, &format!("enc{}", i + 1), f, in_c);
        in_c = f;
    }
    double(&mut out, "mid", b << 4, in_c);
    for i in 0..4 {
        let f = b << (3 - i);
        let p = format!("dec{}", i + 1);
        out.push((format!("{p}.up.weight"), LayerKind::Conv, vec![f, 2 * f, 3, 3]));
        out.push((format!("{p}.up.bias"), LayerKind::Conv, vec![f]));
        double(&mut out, &p, f, 2 * f);
    }
    out.push(("head.weight".into(), LayerKind::Conv, vec![ENGINE_OUT_CHANNELS as usize, b, 1, 1]));
    out.push(("head.bias".into(), LayerKind::Conv, vec![ENGINE_OUT_CHANNELS as usize]));
    out
}

/// `ln(1 + e^x)`, linear above 20 like common framework implementations.
pub fn softplus(x: f32) -> f32 {
    if x > 20.0 {
        x
    } else {
        libm::log1pf(libm::expf(x))
    }
}

fn max_pool(x: &Tensor) -> Tensor {
    let (h, w) = (x.height / 2, x.width / 2);
    let mut out = Tensor::zeros(x.channels, h, w);
    for c in 0..x.channels {
        let src = x.plane(c);
        let dst = out.plane_mut(c);
        for y in 0..h {
            for xx in 0..w {
                let i = 2 * y * x.width + 2 * xx;
                dst[y * w + xx] = src[i].max(src[i + 1]).max(src[i + x.width]).max(src[i + x.width + 1]);
            }
        }
    }
    out
}

fn upsample(x: &Tensor) -> Tensor {
    let (h, w) = (x.height * 2, x.width * 2);
    let mut out = Tensor::zeros(x.channels, h, w);
    for c in 0..x.channels {
        let src = x.plane(c);
        let dst = out.plane_mut(c);
        for y in 0..h {
            for xx in 0..w {
                dst[y * w + xx] = src[(y / 2) * x.width + xx / 2];
            }
        }
    }
    out
}

fn concat(a: &Tensor, b: &Tensor) -> Tensor {
    let mut data = Vec::with_capacity(a.data.len() + b.data.len());
    data.extend_from_slice(&a.data);
    data.extend_from_slice(&b.data);
    Tensor {
        channels: a.channels + b.channels,
        height: a.height,
        width: a.width,
        data,
    }
}

fn check_finite(t: &Tensor, stage: &str) -> Result<()> {
    if t.data.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFiniteActivation(stage.into()))
    }
}

impl UNet {
    pub fn from_bundle(bundle: &WeightBundle) -> Result<Self> {
        bundle.fingerprint.check()?;
        let b = bundle.fingerprint.base_features as usize;
        let mut map = BTreeMap::new();
        for layer in &bundle.layers {
            if map.insert(layer.name.as_str(), layer).is_some() {
                return Err(Error::WeightShape(format!("duplicate layer {}", layer.name)));
            }
            if layer.data.iter().any(|v| !v.is_finite()) {
                return Err(Error::WeightShape(format!("layer {} holds non-finite values", layer.name)));
            }
        }
        let expected = layer_specs(b);
        if map.len() != expected.len() {
            return Err(Error::WeightShape(format!(
                "bundle has {} layers, architecture needs {}",
                map.len(),
                expected.len()
            )));
        }
        let table = LayerTable { map };
        let mut encoders = Vec::new();
        let mut in_c = ENGINE_IN_CHANNELS as usize;
        for i in 0..4 {
            encoders.push(table.double(&format!("enc{}", i + 1), b << i, in_c)?);
            in_c = b << i;
        }
        let mid = table.double("mid", b << 4, in_c)?;
        let mut decoders = Vec::new();
        for i in 0..4 {
            let f = b << (3 - i);
            let p = format!("dec{}", i + 1);
            decoders.push(UpBlock {
                up: table.conv(&format!("{p}.up"), f, 2 * f, 3)?,
                body: table.double(&p, f, 2 * f)?,
            });
        }
        let head = table.conv("head", ENGINE_OUT_CHANNELS as usize, b, 1)?;
        Ok(Self {
            fingerprint: bundle.fingerprint,
            encoders,
            mid,
            decoders,
            head,
        })
    }

    pub fn fingerprint(&self) -> Fingerprint {
        self.fingerprint
    }

    /// Raw network output (before softplus) for an input whose sides are
    /// multiples of 16.
    pub fn forward(&self, input: &Tensor) -> Result<Tensor> {
        if input.channels != ENGINE_IN_CHANNELS as usize || !input.height.is_multiple_of(16) || !input.width.is_multiple_of(16) {
            return Err(Error::Shape(format!(
                "network input {}x{}x{} must be 2 channels with sides divisible by 16",
                input.channels, input.height, input.width
            )));
        }
        let mut skips = Vec::with_capacity(4);
        let mut x = input.clone();
        for (i, enc) in self.encoders.iter().enumerate() {
            let y = enc.forward(&x, &format!("enc{}", i + 1))?;
            x = max_pool(&y);
            skips.push(y);
        }
        x = self.mid.forward(&x, "mid")?;
        for (i, dec) in self.decoders.iter().enumerate() {
            let up = dec.up.forward(&upsample(&x));
            let skip = skips.pop().expect("one skip per decoder");
            let stage = format!("dec{}", i + 1);
            check_finite(&up, &stage)?;
            x = dec.body.forward(&concat(&up, &skip), &stage)?;
        }
        let out = self.head.forward(&x);
        check_finite(&out, "head")?;
        Ok(out)
    }

    /// Gains for a `[2][frames][bins]` magnitude tensor: normalized by its
    /// maximum, zero-padded at the end of both axes to multiples of 16, run
    /// through the network, cropped back and passed through softplus.
    pub fn predict(&self, magnitudes: &[f64], frames: usize, bins: usize) -> Result<Vec<f32>> {
        if magnitudes.len() != 2 * frames * bins {
            return Err(Error::Shape(format!("{} values for 2x{frames}x{bins}", magnitudes.len())));
        }
        let peak = magnitudes.iter().copied().fold(0.0, f64::max);
        let scale = if peak > 0.0 { 1.0 / peak } else { 0.0 };
        let h = frames.div_ceil(16).max(1) * 16;
        let w = bins.div_ceil(16).max(1) * 16;
        let mut input = Tensor::zeros(2, h, w);
        for c in 0..2 {
            let plane = input.plane_mut(c);
            for t in 0..frames {
                for f in 0..bins {
                    plane[t * w + f] = (magnitudes[(c * frames + t) * bins + f] * scale) as f32;
                }
            }
        }
        let out = self.forward(&input)?;
        let mut gains = Vec::with_capacity(2 * frames * bins);
        for c in 0..2 {
            let plane = out.plane(c);
            for t in 0..frames {
                gains.extend(plane[t * w..t * w + bins].iter().map(|&v| softplus(v)));
            }
        }
        Ok(gains)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn random_bundle(base: usize, seed: u64) -> WeightBundle {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layers = layer_specs(base)
            .into_iter()
            .map(|(name, kind, shape)| {
                let n: usize = shape.iter().product();
                let data = (0..n)
                    .map(|_| {
                        if name.ends_with("running_var") {
                            rng.random_range(0.5f32..1.5)
                        } else {
                            rng.random_range(-0.3f32..0.3)
                        }
                    })
                    .collect();
                Layer::new(name, kind, shape, data).unwrap()
            })
            .collect();
        WeightBundle {
            fingerprint: Fingerprint::standard(base as u32),
            layers,
        }
    }

    #[test]
    fn conv_matches_direct_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let conv = Conv {
            out_c: 2,
            in_c: 3,
            k: 3,
            weight: (0..54).map(|_| rng.random_range(-1.0f32..1.0)).collect(),
            bias: vec![0.5, -0.25],
        };
        let mut x = Tensor::zeros(3, 4, 5);
        for v in x.data.iter_mut() {
            *v = rng.random_range(-1.0f32..1.0);
        }
        let y = conv.forward(&x);
        for o in 0..2 {
            for r in 0..4i32 {
                for c in 0..5i32 {
                    let mut acc = conv.bias[o] as f64;
                    for i in 0..3 {
                        for ky in 0..3i32 {
                            for kx in 0..3i32 {
                                let (sr, sc) = (r + ky - 1, c + kx - 1);
                                if (0..4).contains(&sr) && (0..5).contains(&sc) {
                                    let wv = conv.weight[((o * 3 + i) * 3 + ky as usize) * 3 + kx as usize];
                                    acc += wv as f64 * x.data[(i * 4 + sr as usize) * 5 + sc as usize] as f64;
                                }
                            }
                        }
                    }
                    let got = y.data[(o * 4 + r as usize) * 5 + c as usize] as f64;
                    assert!((got - acc).abs() < 1e-5);
                }
            }
        }
    }

    #[test]
    fn pool_and_upsample() {
        let x = Tensor {
            channels: 1,
            height: 2,
            width: 4,
            data: vec![1.0, 5.0, -1.0, -2.0, 3.0, 2.0, -3.0, -4.0],
        };
        assert_eq!(max_pool(&x).data, vec![5.0, -1.0]);
        let u = upsample(&max_pool(&x));
        assert_eq!(u.data, vec![5.0, 5.0, -1.0, -1.0, 5.0, 5.0, -1.0, -1.0]);
    }

    #[test]
    fn softplus_values() {
        assert!((softplus(0.0) - core::f32::consts::LN_2).abs() < 1e-7);
        assert_eq!(softplus(30.0), 30.0);
        assert!(softplus(-30.0) > 0.0);
    }

    #[test]
    fn zero_input_gives_finite_positive_output() {
        let net = UNet::from_bundle(&random_bundle(2, 3)).unwrap();
        let zeros = vec![0.0; 2 * 7 * 19];
        let out = net.predict(&zeros, 7, 19).unwrap();
        assert_eq!(out.len(), 2 * 7 * 19);
        assert!(out.iter().all(|v| v.is_finite() && *v >= 0.0));
    }

    #[test]
    fn deterministic_and_channel_sensitive() {
        let net = UNet::from_bundle(&random_bundle(4, 4)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (t, f) = (9, 21);
        let x: Vec<f64> = (0..2 * t * f).map(|_| rng.random_range(0.0..1.0)).collect();
        let a = net.predict(&x, t, f).unwrap();
        let b = net.predict(&x, t, f).unwrap();
        assert_eq!(a, b);
        let mut swapped = x[t * f..].to_vec();
        swapped.extend_from_slice(&x[..t * f]);
        let c = net.predict(&swapped, t, f).unwrap();
        assert_eq!(c.len(), a.len());
        assert_ne!(a, c);
    }

    #[test]
    fn fingerprint_and_shape_errors() {
        let mut bundle = random_bundle(2, 6);
        bundle.fingerprint.down_blocks = 3;
        assert!(matches!(UNet::from_bundle(&bundle), Err(Error::Fingerprint(_))));
        let mut bundle = random_bundle(2, 6);
        bundle.layers[0].shape = vec![2, 2, 3, 3, 1];
        assert!(matches!(UNet::from_bundle(&bundle), Err(Error::WeightShape(_))));
        let mut bundle = random_bundle(2, 6);
        bundle.layers.pop();
        assert!(matches!(UNet::from_bundle(&bundle), Err(Error::WeightShape(_))));
        assert!(Layer::new("x", LayerKind::Conv, vec![2, 2], vec![0.0; 3]).is_err());
    }

    #[test]
    fn corrupt_weights_surface_as_non_finite() {
        let mut bundle = random_bundle(2, 7);
        let idx = bundle.layers.iter().position(|l| l.name == "enc1.conv1.bias").unwrap();
        bundle.layers[idx].data[0] = 3.0e38;
        let w = bundle.layers.iter().position(|l| l.name == "enc1.conv1.weight").unwrap();
        for v in bundle.layers[w].data.iter_mut() {
            *v = 3.0e38;
        }
        let net = UNet::from_bundle(&bundle).unwrap();
        let x = vec![1.0; 2 * 16 * 16];
        assert!(matches!(net.predict(&x, 16, 16), Err(Error::NonFiniteActivation(_))));
    }
}
