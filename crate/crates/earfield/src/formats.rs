//! Binary file formats.
//!
//! - HRTF grid: text header of `key=value` lines ended by an empty line,
//!   then `f32` LE `[el][az][ear][freq][mag, phase]`, then one state byte per
//!   bin (0 invalid, 1 measured, 2 filled).
//! - HRIR set: same layout with `magic=HRIRSET1` and `[el][az][ear][sample]`.
//! - Labels: `HLBL1\0\0\0`, `u32` frames, `u32` bins, `f32` LE
//!   `[ear][frame][freq]`.
//! - Weights: `UNETW1\0\0`, `u32` layer count, five `u32` fingerprint fields,
//!   then per layer `u16` name length, name, `u8` kind, `u8` rank,
//!   `u32` dims, `f32` LE payload.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use earfield_core::hrtf::{wrap_phase, BinState, Hrir, HrtfGrid};
use earfield_core::predictor::{Fingerprint, Layer, LayerKind, WeightBundle};
use earfield_core::spatial::{AZ_BINS, EL_BINS, NUM_BINS};

use crate::error::{Error, Result};

pub const GRID_MAGIC: &str = "HRTFGRID1";
pub const HRIR_MAGIC: &str = "HRIRSET1";
pub const LABEL_MAGIC: &[u8; 8] = b"HLBL1\0\0\0";
pub const WEIGHTS_MAGIC: &[u8; 8] = b"UNETW1\0\0";

struct Reader<'a> {
    what: &'static str,
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(what: &'static str, buf: &'a [u8]) -> Self {
        Self { what, buf, pos: 0 }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).ok_or(Error::Truncated {
            what: self.what,
            needed: usize::MAX,
            found: self.buf.len(),
        })?;
        if end > self.buf.len() {
            return Err(Error::Truncated {
                what: self.what,
                needed: end,
                found: self.buf.len(),
            });
        }
        let out = &self.buf[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f32s(&mut self, n: usize) -> Result<Vec<f32>> {
        let bytes = self.take(n.checked_mul(4).ok_or_else(|| Error::format(self.what, "payload size overflows"))?)?;
        Ok(bytes.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect())
    }

    fn finish(&self) -> Result<()> {
        if self.pos != self.buf.len() {
            return Err(Error::format(self.what, format!("{} trailing bytes", self.buf.len() - self.pos)));
        }
        Ok(())
    }
}

fn push_f32s(out: &mut Vec<u8>, values: impl IntoIterator<Item = f32>) {
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Splits a text header (`key=value` lines ended by an empty line) from the
/// binary body.
fn parse_header<'a>(what: &'static str, bytes: &'a [u8]) -> Result<(BTreeMap<String, String>, &'a [u8])> {
    let end = bytes
        .windows(2)
        .position(|w| w == b"\n\n")
        .ok_or(Error::BadMagic { what })?;
    let text = std::str::from_utf8(&bytes[..end]).map_err(|_| Error::BadMagic { what })?;
    let mut map = BTreeMap::new();
    for line in text.lines() {
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::format(what, format!("header line {line:?} is not key=value")))?;
        map.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok((map, &bytes[end + 2..]))
}

fn header_usize(what: &'static str, map: &BTreeMap<String, String>, key: &str) -> Result<usize> {
    map.get(key)
        .ok_or_else(|| Error::format(what, format!("header lacks {key}")))?
        .parse()
        .map_err(|_| Error::format(what, format!("header {key} is not an integer")))
}

fn check_magic_and_layout(what: &'static str, map: &BTreeMap<String, String>, magic: &str) -> Result<()> {
    if map.get("magic").map(String::as_str) != Some(magic) {
        return Err(Error::BadMagic { what });
    }
    if header_usize(what, map, "az_bins")? != AZ_BINS || header_usize(what, map, "el_bins")? != EL_BINS {
        return Err(Error::format(what, "bin layout must be 72 x 37"));
    }
    Ok(())
}

fn read_states(what: &'static str, r: &mut Reader<'_>) -> Result<Vec<BinState>> {
    r.take(NUM_BINS)?
        .iter()
        .map(|&b| BinState::from_byte(b).ok_or_else(|| Error::format(what, format!("bad bin state byte {b}"))))
        .collect()
}

pub fn grid_to_bytes(grid: &HrtfGrid) -> Vec<u8> {
    let header = format!(
        "magic={GRID_MAGIC}\nfft_size={}\nsample_rate={}\naz_bins={AZ_BINS}\nel_bins={EL_BINS}\n\n",
        grid.fft_size(),
        grid.sample_rate_hz()
    );
    let mut out = header.into_bytes();
    let mags = grid.magnitudes_raw();
    let phases = grid.phases_raw();
    out.reserve(mags.len() * 8 + NUM_BINS);
    push_f32s(
        &mut out,
        mags.iter().zip(phases).flat_map(|(&m, &p)| [m as f32, p as f32]),
    );
    out.extend(grid.states().iter().map(|s| s.to_byte()));
    out
}

pub fn grid_from_bytes(bytes: &[u8]) -> Result<HrtfGrid> {
    const WHAT: &str = "HRTF grid";
    let (map, body) = parse_header(WHAT, bytes)?;
    check_magic_and_layout(WHAT, &map, GRID_MAGIC)?;
    let fft_size = header_usize(WHAT, &map, "fft_size")?;
    let sample_rate = header_usize(WHAT, &map, "sample_rate")?;
    if fft_size < 2 || !fft_size.is_power_of_two() {
        return Err(Error::format(WHAT, format!("fft_size {fft_size} is not a power of two")));
    }
    let count = NUM_BINS * 2 * (fft_size / 2 + 1);
    let mut r = Reader::new(WHAT, body);
    let payload = r.f32s(count * 2)?;
    let states = read_states(WHAT, &mut r)?;
    r.finish()?;
    let mut mags = Vec::with_capacity(count);
    let mut phases = Vec::with_capacity(count);
    for pair in payload.chunks_exact(2) {
        mags.push(pair[0] as f64);
        phases.push(wrap_phase(pair[1] as f64));
    }
    let sample_rate = u32::try_from(sample_rate).map_err(|_| Error::format(WHAT, "sample rate out of range"))?;
    Ok(HrtfGrid::from_parts(fft_size, sample_rate, mags, phases, states)?)
}

pub fn write_grid(path: &Path, grid: &HrtfGrid) -> Result<()> {
    write_file(path, &grid_to_bytes(grid))
}

pub fn read_grid(path: &Path) -> Result<HrtfGrid> {
    grid_from_bytes(&read_file(path)?)
}

pub fn hrir_to_bytes(hrir: &Hrir) -> Vec<u8> {
    let header = format!(
        "magic={HRIR_MAGIC}\nir_length={}\nsample_rate={}\naz_bins={AZ_BINS}\nel_bins={EL_BINS}\n\n",
        hrir.ir_length(),
        hrir.sample_rate_hz()
    );
    let mut out = header.into_bytes();
    push_f32s(&mut out, hrir.data_raw().iter().map(|&v| v as f32));
    out.extend(hrir.states().iter().map(|s| s.to_byte()));
    out
}

pub fn hrir_from_bytes(bytes: &[u8]) -> Result<Hrir> {
    const WHAT: &str = "HRIR set";
    let (map, body) = parse_header(WHAT, bytes)?;
    check_magic_and_layout(WHAT, &map, HRIR_MAGIC)?;
    let ir_length = header_usize(WHAT, &map, "ir_length")?;
    let sample_rate = header_usize(WHAT, &map, "sample_rate")?;
    let mut r = Reader::new(WHAT, body);
    let data = r.f32s(NUM_BINS * 2 * ir_length)?;
    let states = read_states(WHAT, &mut r)?;
    r.finish()?;
    let sample_rate = u32::try_from(sample_rate).map_err(|_| Error::format(WHAT, "sample rate out of range"))?;
    Ok(Hrir::from_parts(
        ir_length,
        sample_rate,
        data.into_iter().map(f64::from).collect(),
        states,
    )?)
}

pub fn write_hrir(path: &Path, hrir: &Hrir) -> Result<()> {
    write_file(path, &hrir_to_bytes(hrir))
}

pub fn read_hrir(path: &Path) -> Result<Hrir> {
    hrir_from_bytes(&read_file(path)?)
}

/// Two-channel `[ear][frame][freq]` tensor as stored in label files.
#[derive(Clone, Debug, PartialEq)]
pub struct LabelTensor {
    pub frames: usize,
    pub bins: usize,
    pub data: Vec<f32>,
}

impl LabelTensor {
    pub fn from_f64(frames: usize, bins: usize, values: &[f64]) -> Result<Self> {
        if values.len() != 2 * frames * bins {
            return Err(Error::format("labels", "value count does not match 2 x frames x bins"));
        }
        Ok(Self {
            frames,
            bins,
            data: values.iter().map(|&v| v as f32).collect(),
        })
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.data.iter().map(|&v| v as f64).collect()
    }
}

pub fn labels_to_bytes(labels: &LabelTensor) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + labels.data.len() * 4);
    out.extend_from_slice(LABEL_MAGIC);
    out.extend_from_slice(&(labels.frames as u32).to_le_bytes());
    out.extend_from_slice(&(labels.bins as u32).to_le_bytes());
    push_f32s(&mut out, labels.data.iter().copied());
    out
}

pub fn labels_from_bytes(bytes: &[u8]) -> Result<LabelTensor> {
    const WHAT: &str = "labels";
    let mut r = Reader::new(WHAT, bytes);
    if r.take(8).map_err(|_| Error::BadMagic { what: WHAT })? != LABEL_MAGIC {
        return Err(Error::BadMagic { what: WHAT });
    }
    let frames = r.u32()? as usize;
    let bins = r.u32()? as usize;
    let count = frames
        .checked_mul(bins)
        .and_then(|n| n.checked_mul(2))
        .ok_or_else(|| Error::format(WHAT, "dimensions overflow"))?;
    let data = r.f32s(count)?;
    r.finish()?;
    Ok(LabelTensor { frames, bins, data })
}

pub fn write_labels(path: &Path, labels: &LabelTensor) -> Result<()> {
    write_file(path, &labels_to_bytes(labels))
}

pub fn read_labels(path: &Path) -> Result<LabelTensor> {
    labels_from_bytes(&read_file(path)?)
}

pub fn weights_to_bytes(bundle: &WeightBundle) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(WEIGHTS_MAGIC);
    out.extend_from_slice(&(bundle.layers.len() as u32).to_le_bytes());
    let f = &bundle.fingerprint;
    for v in [f.down_blocks, f.up_blocks, f.base_features, f.in_channels, f.out_channels] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for layer in &bundle.layers {
        out.extend_from_slice(&(layer.name.len() as u16).to_le_bytes());
        out.extend_from_slice(layer.name.as_bytes());
        out.push(layer.kind.code());
        out.push(layer.shape.len() as u8);
        for &d in &layer.shape {
            out.extend_from_slice(&(d as u32).to_le_bytes());
        }
        push_f32s(&mut out, layer.data.iter().copied());
    }
    out
}

/// Parses a weight bundle. Bad magic, truncation and inconsistent shapes
/// are distinct errors.
pub fn weights_from_bytes(bytes: &[u8]) -> Result<WeightBundle> {
    const WHAT: &str = "weights";
    let mut r = Reader::new(WHAT, bytes);
    if r.take(8).map_err(|_| Error::BadMagic { what: WHAT })? != WEIGHTS_MAGIC {
        return Err(Error::BadMagic { what: WHAT });
    }
    let count = r.u32()? as usize;
    let fingerprint = Fingerprint {
        down_blocks: r.u32()?,
        up_blocks: r.u32()?,
        base_features: r.u32()?,
        in_channels: r.u32()?,
        out_channels: r.u32()?,
    };
    let mut layers = Vec::with_capacity(count.min(1024));
    for _ in 0..count {
        let len = r.u16()? as usize;
        let name = std::str::from_utf8(r.take(len)?)
            .map_err(|_| Error::format(WHAT, "layer name is not UTF-8"))?
            .to_string();
        let kind = r.u8()?;
        let kind = LayerKind::from_code(kind).ok_or_else(|| Error::format(WHAT, format!("layer {name}: unknown kind {kind}")))?;
        let rank = r.u8()? as usize;
        let mut shape = Vec::with_capacity(rank);
        for _ in 0..rank {
            shape.push(r.u32()? as usize);
        }
        let n = shape
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .ok_or_else(|| Error::format(WHAT, format!("layer {name}: shape overflows")))?;
        let data = r.f32s(n)?;
        layers.push(Layer::new(name, kind, shape, data)?);
    }
    r.finish()?;
    Ok(WeightBundle { fingerprint, layers })
}

pub fn write_weights(path: &Path, bundle: &WeightBundle) -> Result<()> {
    write_file(path, &weights_to_bytes(bundle))
}

pub fn read_weights(path: &Path) -> Result<WeightBundle> {
    weights_from_bytes(&read_file(path)?)
}
