//! Direction-binned HRTF grids and HRIR sets.
//!
//! A grid stores, for each of the 72 × 37 direction bins and each ear, a
//! one-sided spectrum of `fft_size / 2 + 1` bins as linear magnitude and
//! phase in (-π, π]. Bins carry a [`BinState`]: never visited, measured, or
//! filled from a reference grid.

mod lookup;
mod model;
mod synth;

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

pub use lookup::{bilinear_neighbors, lookup, lookup_magnitude, LookupMode};
pub use model::{HeadModel, SpectralFeature, SPEED_OF_SOUND};
pub use synth::{hrir_to_grid, spectrum_to_ir, synthesize_hrirs, DEFAULT_IR_LENGTH, FADE_LEN};

use crate::spatial::{BinIndex, AZ_BINS, EL_BINS, NUM_BINS};
use crate::{Error, Result};

/// FFT size of grid spectra; equals the STFT window so per-frame gains map
/// one-to-one onto grid frequency bins.
pub const DEFAULT_FFT_SIZE: usize = 2048;

/// Ear index into grid and signal channels.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Ear {
    Left = 0,
    Right = 1,
}

impl Ear {
    pub const BOTH: [Ear; 2] = [Ear::Left, Ear::Right];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn opposite(self) -> Ear {
        match self {
            Ear::Left => Ear::Right,
            Ear::Right => Ear::Left,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinState {
    Invalid,
    Measured,
    Filled,
}

impl BinState {
    pub fn is_valid(self) -> bool {
        !matches!(self, BinState::Invalid)
    }

    pub fn to_byte(self) -> u8 {
        match self {
            BinState::Invalid => 0,
            BinState::Measured => 1,
            BinState::Filled => 2,
        }
    }

    pub fn from_byte(b: u8) -> Option<Self> {
        match b {
            0 => Some(BinState::Invalid),
            1 => Some(BinState::Measured),
            2 => Some(BinState::Filled),
            _ => None,
        }
    }
}

/// Wraps a phase into (-π, π].
pub fn wrap_phase(p: f64) -> f64 {
    let two_pi = 2.0 * PI;
    let mut r = p - two_pi * libm::floor((p + PI) / two_pi);
    if r <= -PI {
        r += two_pi;
    }
    if r > PI {
        r -= two_pi;
    }
    r
}

/// Magnitude and phase of one ear's spectrum.
#[derive(Clone, Debug, PartialEq)]
pub struct EarSpectrum {
    pub magnitude: Vec<f64>,
    pub phase: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HrtfGrid {
    fft_size: usize,
    sample_rate_hz: u32,
    magnitude: Vec<f64>,
    phase: Vec<f64>,
    states: Vec<BinState>,
}

impl HrtfGrid {
    /// All-invalid grid.
    pub fn new(fft_size: usize, sample_rate_hz: u32) -> Result<Self> {
        if fft_size < 2 || !fft_size.is_power_of_two() {
            return Err(Error::WindowNotPowerOfTwo(fft_size));
        }
        if sample_rate_hz == 0 {
            return Err(Error::InvalidSampleRate);
        }
        let len = NUM_BINS * 2 * (fft_size / 2 + 1);
        Ok(Self {
            fft_size,
            sample_rate_hz,
            magnitude: vec![0.0; len],
            phase: vec![0.0; len],
            states: vec![BinState::Invalid; NUM_BINS],
        })
    }

    /// Grid from raw `[bin][ear][freq]` arrays, validating every invariant.
    pub fn from_parts(
        fft_size: usize,
        sample_rate_hz: u32,
        magnitude: Vec<f64>,
        phase: Vec<f64>,
        states: Vec<BinState>,
    ) -> Result<Self> {
        let mut grid = Self::new(fft_size, sample_rate_hz)?;
        if magnitude.len() != grid.magnitude.len()
            || phase.len() != grid.phase.len()
            || states.len() != NUM_BINS
        {
            return Err(Error::Shape(format!(
                "grid payload {}/{}/{} does not match fft size {fft_size}",
                magnitude.len(),
                phase.len(),
                states.len()
            )));
        }
        if magnitude.iter().any(|m| !(m.is_finite() && *m >= 0.0)) {
            return Err(Error::Shape("magnitudes must be finite and non-negative".into()));
        }
        if phase.iter().any(|p| !(p.is_finite() && *p > -PI && *p <= PI)) {
            return Err(Error::Shape("phases must lie in (-pi, pi]".into()));
        }
        grid.magnitude = magnitude;
        grid.phase = phase;
        grid.states = states;
        Ok(grid)
    }

    pub fn fft_size(&self) -> usize {
        self.fft_size
    }

    pub fn sample_rate_hz(&self) -> u32 {
        self.sample_rate_hz
    }

    pub fn freq_bins(&self) -> usize {
        self.fft_size / 2 + 1
    }

    pub fn bin_hz(&self, k: usize) -> f64 {
        k as f64 * self.sample_rate_hz as f64 / self.fft_size as f64
    }

    fn offset(&self, bin: BinIndex, ear: Ear) -> usize {
        (bin.flat() * 2 + ear.index()) * self.freq_bins()
    }

    pub fn magnitude(&self, bin: BinIndex, ear: Ear) -> &[f64] {
        let o = self.offset(bin, ear);
        &self.magnitude[o..o + self.freq_bins()]
    }

    pub fn phase(&self, bin: BinIndex, ear: Ear) -> &[f64] {
        let o = self.offset(bin, ear);
        &self.phase[o..o + self.freq_bins()]
    }

    pub fn spectrum(&self, bin: BinIndex, ear: Ear) -> EarSpectrum {
        EarSpectrum {
            magnitude: self.magnitude(bin, ear).to_vec(),
            phase: self.phase(bin, ear).to_vec(),
        }
    }

    /// Raw `[bin][ear][freq]` magnitudes.
    pub fn magnitudes_raw(&self) -> &[f64] {
        &self.magnitude
    }

    /// Raw `[bin][ear][freq]` phases.
    pub fn phases_raw(&self) -> &[f64] {
        &self.phase
    }

    pub fn states(&self) -> &[BinState] {
        &self.states
    }

    pub fn state(&self, bin: BinIndex) -> BinState {
        self.states[bin.flat()]
    }

    pub fn set_state(&mut self, bin: BinIndex, state: BinState) {
        self.states[bin.flat()] = state;
    }

    /// Writes one ear's spectrum. Phases are wrapped into (-π, π].
    pub fn set_spectrum(
        &mut self,
        bin: BinIndex,
        ear: Ear,
        magnitude: &[f64],
        phase: &[f64],
    ) -> Result<()> {
        let f = self.freq_bins();
        if magnitude.len() != f || phase.len() != f {
            return Err(Error::Shape(format!("expected {f} frequency bins")));
        }
        if magnitude.iter().any(|m| !(m.is_finite() && *m >= 0.0)) || phase.iter().any(|p| !p.is_finite()) {
            return Err(Error::Shape("spectrum must be finite with non-negative magnitude".into()));
        }
        let o = self.offset(bin, ear);
        self.magnitude[o..o + f].copy_from_slice(magnitude);
        for (dst, &p) in self.phase[o..o + f].iter_mut().zip(phase) {
            *dst = wrap_phase(p);
        }
        Ok(())
    }

    pub fn valid_bins(&self) -> impl Iterator<Item = BinIndex> + '_ {
        BinIndex::all().filter(|b| self.state(*b).is_valid())
    }

    pub fn valid_count(&self) -> usize {
        self.states.iter().filter(|s| s.is_valid()).count()
    }

    /// Ok when both grids share bin layout, FFT size and sample rate.
    pub fn check_layout(&self, other: &HrtfGrid) -> Result<()> {
        if self.fft_size != other.fft_size {
            return Err(Error::FftSizeMismatch(self.fft_size, other.fft_size));
        }
        if self.sample_rate_hz != other.sample_rate_hz {
            return Err(Error::LayoutMismatch(format!(
                "sample rate {} vs {}",
                self.sample_rate_hz, other.sample_rate_hz
            )));
        }
        Ok(())
    }

    /// Copy with every magnitude multiplied by `gain`.
    pub fn scaled(&self, gain: f64) -> Self {
        let mut out = self.clone();
        for m in out.magnitude.iter_mut() {
            *m *= gain;
        }
        out
    }
}

/// Per-bin left/right impulse responses.
#[derive(Clone, Debug, PartialEq)]
pub struct Hrir {
    ir_length: usize,
    sample_rate_hz: u32,
    data: Vec<f64>,
    states: Vec<BinState>,
}

impl Hrir {
    pub fn new(ir_length: usize, sample_rate_hz: u32) -> Result<Self> {
        if ir_length == 0 {
            return Err(Error::Shape("impulse response length must be positive".into()));
        }
        if sample_rate_hz == 0 {
            return Err(Error::InvalidSampleRate);
        }
        Ok(Self {
            ir_length,
            sample_rate_hz,
            data: vec![0.0; NUM_BINS * 2 * ir_length],
            states: vec![BinState::Invalid; NUM_BINS],
        })
    }

    pub fn from_parts(
        ir_length: usize,
        sample_rate_hz: u32,
        data: Vec<f64>,
        states: Vec<BinState>,
    ) -> Result<Self> {
        let mut h = Self::new(ir_length, sample_rate_hz)?;
        if data.len() != h.data.len() || states.len() != NUM_BINS {
            return Err(Error::Shape(format!(
                "HRIR payload of {} samples does not match ir length {ir_length}",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteSample);
        }
        h.data = data;
        h.states = states;
        Ok(h)
    }

    pub fn ir_length(&self) -> usize {
        self.ir_length
    }

    pub fn sample_rate_hz(&self) -> u32 {
        self.sample_rate_hz
    }

    pub fn ir(&self, bin: BinIndex, ear: Ear) -> &[f64] {
        let o = (bin.flat() * 2 + ear.index()) * self.ir_length;
        &self.data[o..o + self.ir_length]
    }

    pub fn set_ir(&mut self, bin: BinIndex, ear: Ear, ir: &[f64]) -> Result<()> {
        if ir.len() != self.ir_length {
            return Err(Error::Shape(format!("expected {} samples", self.ir_length)));
        }
        let o = (bin.flat() * 2 + ear.index()) * self.ir_length;
        self.data[o..o + self.ir_length].copy_from_slice(ir);
        Ok(())
    }

    pub fn data_raw(&self) -> &[f64] {
        &self.data
    }

    pub fn states(&self) -> &[BinState] {
        &self.states
    }

    pub fn state(&self, bin: BinIndex) -> BinState {
        self.states[bin.flat()]
    }

    pub fn set_state(&mut self, bin: BinIndex, state: BinState) {
        self.states[bin.flat()] = state;
    }

    /// Valid bin closest (great-circle) to `d`; the bin containing `d` when
    /// it is valid.
    pub fn nearest_valid_bin(&self, d: &crate::spatial::Direction) -> Result<BinIndex> {
        nearest_valid(&self.states, d)
    }
}

pub(crate) fn nearest_valid(states: &[BinState], d: &crate::spatial::Direction) -> Result<BinIndex> {
    let b = crate::spatial::bin_direction(d);
    if states[b.flat()].is_valid() {
        return Ok(b);
    }
    let mut best: Option<(f64, BinIndex)> = None;
    for cand in BinIndex::all().filter(|c| states[c.flat()].is_valid()) {
        let center = crate::spatial::bin_center(&cand)?;
        let ang = center.angle_to(d);
        if best.is_none_or(|(a, _)| ang < a) {
            best = Some((ang, cand));
        }
    }
    best.map(|(_, b)| b).ok_or(Error::EmptyGrid)
}

#[allow(dead_code)]
const _LAYOUT: () = assert!(AZ_BINS * EL_BINS == NUM_BINS);

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phase_wrapping_range() {
        assert_eq!(wrap_phase(PI), PI);
        assert_eq!(wrap_phase(-PI), PI);
        assert!((wrap_phase(3.0 * PI) - PI).abs() < 1e-12);
        assert!((wrap_phase(0.5) - 0.5).abs() < 1e-15);
        assert!((wrap_phase(-7.0) - (-7.0 + 2.0 * PI)).abs() < 1e-12);
        for i in -1000..1000 {
            let p = wrap_phase(i as f64 * 0.0731);
            assert!(p > -PI && p <= PI);
        }
    }

    #[test]
    fn from_parts_validates() {
        let g = HrtfGrid::new(8, 48_000).unwrap();
        let n = g.magnitudes_raw().len();
        let mut mags = vec![1.0; n];
        mags[3] = -1.0;
        assert!(HrtfGrid::from_parts(8, 48_000, mags, vec![0.0; n], vec![BinState::Measured; NUM_BINS]).is_err());
        let mut ph = vec![0.0; n];
        ph[0] = -PI;
        assert!(HrtfGrid::from_parts(8, 48_000, vec![1.0; n], ph, vec![BinState::Measured; NUM_BINS]).is_err());
        assert!(HrtfGrid::from_parts(8, 48_000, vec![1.0; n], vec![0.0; n], vec![BinState::Measured; NUM_BINS]).is_ok());
        assert!(HrtfGrid::new(12, 48_000).is_err());
    }
}
