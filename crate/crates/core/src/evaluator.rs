//! Log-spectral distortion between HRTF magnitude spectra and grids.

use alloc::vec::Vec;
use core::ops::Range;

use crate::hrtf::{BinState, Ear, HrtfGrid};
use crate::spatial::BinIndex;
use crate::{Error, Result};

/// Magnitudes are clamped to this before taking logs.
pub const MAGNITUDE_FLOOR: f64 = 1e-6;
pub const DEFAULT_F_LO_HZ: f64 = 200.0;
pub const DEFAULT_F_HI_HZ: f64 = 18_000.0;

/// Inclusive frequency band in Hz.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FreqRange {
    pub lo_hz: f64,
    pub hi_hz: f64,
}

impl Default for FreqRange {
    fn default() -> Self {
        Self {
            lo_hz: DEFAULT_F_LO_HZ,
            hi_hz: DEFAULT_F_HI_HZ,
        }
    }
}

impl FreqRange {
    /// Spectrum bins `k` with `k * bin_hz` inside the band.
    pub fn bins(&self, bin_hz: f64, n: usize) -> Range<usize> {
        let lo = libm::ceil(self.lo_hz / bin_hz).max(0.0) as usize;
        let hi = (libm::floor(self.hi_hz / bin_hz) as usize + 1).min(n);
        lo.min(hi)..hi
    }
}

fn log_ratio_sq(a: f64, b: f64) -> f64 {
    let d = 20.0 * (libm::log10(a.max(MAGNITUDE_FLOOR)) - libm::log10(b.max(MAGNITUDE_FLOOR)));
    d * d
}

fn check_lengths(estimate: &[f64], truth: &[f64]) -> Result<()> {
    if estimate.len() != truth.len() {
        return Err(Error::Shape(alloc::format!(
            "spectra have {} and {} bins",
            estimate.len(),
            truth.len()
        )));
    }
    Ok(())
}

/// RMS over `bins` of the dB log-ratio between two magnitude spectra.
pub fn lsd_bins(estimate: &[f64], truth: &[f64], bins: Range<usize>) -> Result<f64> {
    check_lengths(estimate, truth)?;
    if bins.is_empty() || bins.end > truth.len() {
        return Err(Error::EmptyRange);
    }
    let n = bins.len() as f64;
    let sum: f64 = bins.map(|k| log_ratio_sq(estimate[k], truth[k])).sum();
    Ok(libm::sqrt(sum / n))
}

/// LSD in dB over the bins of `range`, for spectra with bin spacing `bin_hz`.
pub fn lsd(estimate: &[f64], truth: &[f64], bin_hz: f64, range: FreqRange) -> Result<f64> {
    check_lengths(estimate, truth)?;
    lsd_bins(estimate, truth, range.bins(bin_hz, truth.len()))
}

/// How the two ears of a bin combine into one value.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum EarMode {
    /// Mean of the per-ear LSD values.
    #[default]
    Average,
    /// One RMS over the frequency bins of both ears.
    Pooled,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CompareOptions {
    /// Score only bins the estimate measured, skipping filled ones.
    pub visited_only: bool,
    pub range: FreqRange,
    pub ears: EarMode,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LsdReport {
    /// Per-bin LSD in dB, in flat bin order.
    pub entries: Vec<(BinIndex, f64)>,
    pub median_db: Option<f64>,
    pub mean_db: Option<f64>,
    pub range: FreqRange,
    pub visited_only: bool,
    pub ears: EarMode,
}

/// Median of `values`; the mean of the middle pair for even counts.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 { v[m] } else { 0.5 * (v[m - 1] + v[m]) })
}

/// LSD between the estimate and truth at every bin valid in both. Pole rows
/// count once, through their azimuth-0 bin.
pub fn compare_grids(estimate: &HrtfGrid, truth: &HrtfGrid, opts: &CompareOptions) -> Result<LsdReport> {
    estimate.check_layout(truth)?;
    let bins = opts.range.bins(truth.bin_hz(1), truth.freq_bins());
    if bins.is_empty() {
        return Err(Error::EmptyRange);
    }
    let mut entries = Vec::new();
    for b in BinIndex::all().filter(|b| b.canonical() == *b) {
        let state = estimate.state(b);
        if !state.is_valid() || !truth.state(b).is_valid() {
            continue;
        }
        if opts.visited_only && state != BinState::Measured {
            continue;
        }
        let value = match opts.ears {
            EarMode::Average => {
                let l = lsd_bins(estimate.magnitude(b, Ear::Left), truth.magnitude(b, Ear::Left), bins.clone())?;
                let r = lsd_bins(estimate.magnitude(b, Ear::Right), truth.magnitude(b, Ear::Right), bins.clone())?;
                0.5 * (l + r)
            }
            EarMode::Pooled => {
                let sum: f64 = Ear::BOTH
                    .iter()
                    .flat_map(|&ear| {
                        let (e, t) = (estimate.magnitude(b, ear), truth.magnitude(b, ear));
                        bins.clone().map(move |k| log_ratio_sq(e[k], t[k]))
                    })
                    .sum();
                libm::sqrt(sum / (2 * bins.len()) as f64)
            }
        };
        entries.push((b, value));
    }
    let values: Vec<f64> = entries.iter().map(|e| e.1).collect();
    let mean_db = (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64);
    Ok(LsdReport {
        median_db: median(&values),
        mean_db,
        entries,
        range: opts.range,
        visited_only: opts.visited_only,
        ears: opts.ears,
    })
}
