//! Parametric spherical-head model used for the bundled reference subjects.
//!
//! Each ear's response is a one-pole/one-zero head-shadow filter, a
//! Woodworth-style arrival delay, and zero-phase spectral features in
//! log-frequency: elevation-dependent pinna notches, a concha resonance and
//! high-frequency shading for sources behind the head. The model is exactly
//! left-right symmetric.

use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

use super::{hrir_to_grid, spectrum_to_ir, BinState, Ear, Hrir, HrtfGrid, DEFAULT_FFT_SIZE, DEFAULT_IR_LENGTH, FADE_LEN};
use crate::dsp::Fft;
use crate::spatial::{bin_center, BinIndex, Direction};
use crate::Result;

pub const SPEED_OF_SOUND: f64 = 343.0;

/// Gaussian notch or peak on a log2-frequency axis.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralFeature {
    /// Center frequency for a source on the horizontal plane.
    pub center_hz: f64,
    /// Octaves the center moves per unit of the direction's z component.
    pub elevation_shift_oct: f64,
    /// Negative for a notch.
    pub gain_db: f64,
    /// Standard deviation in octaves.
    pub width_oct: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HeadModel {
    pub name: String,
    pub head_radius_m: f64,
    /// Fixed lead-in before the earliest arrival, in samples.
    pub base_delay_samples: f64,
    pub alpha_min: f64,
    pub theta_min_deg: f64,
    pub notches: Vec<SpectralFeature>,
    pub concha: SpectralFeature,
    /// High-frequency loss for a source directly behind, in dB.
    pub rear_shading_db: f64,
    pub rear_corner_hz: f64,
}

fn feature(center_hz: f64, elevation_shift_oct: f64, gain_db: f64, width_oct: f64) -> SpectralFeature {
    SpectralFeature {
        center_hz,
        elevation_shift_oct,
        gain_db,
        width_oct,
    }
}

impl HeadModel {
    /// Dummy-head style reference used as the generic HRTF.
    pub fn generic() -> Self {
        Self::with_params("generic", 0.0875, &[(7_500.0, 0.9, -12.0, 0.18), (11_500.0, 0.7, -8.0, 0.15)], 4_800.0, 6.0)
    }

    /// Names accepted by [`HeadModel::subject`].
    pub const SUBJECTS: [&'static str; 5] = ["generic", "a", "b", "c", "d"];

    /// Bundled reference subjects, each with its own head size and pinna
    /// features.
    pub fn subject(name: &str) -> Option<Self> {
        let m = match name {
            "generic" => Self::generic(),
            "a" => Self::with_params("a", 0.0800, &[(6_600.0, 1.0, -14.0, 0.16), (10_200.0, 0.8, -9.0, 0.14)], 4_200.0, 7.0),
            "b" => Self::with_params("b", 0.0950, &[(8_400.0, 0.8, -10.0, 0.20), (12_800.0, 0.6, -11.0, 0.14)], 5_300.0, 5.0),
            "c" => Self::with_params("c", 0.0830, &[(7_000.0, 1.1, -16.0, 0.15), (13_400.0, 0.5, -7.0, 0.18)], 3_900.0, 8.0),
            "d" => Self::with_params("d", 0.0910, &[(9_100.0, 0.7, -11.0, 0.17), (11_000.0, 0.9, -10.0, 0.13)], 5_600.0, 6.5),
            _ => return None,
        };
        Some(m)
    }

    fn with_params(name: &str, radius: f64, notches: &[(f64, f64, f64, f64)], concha_hz: f64, concha_db: f64) -> Self {
        Self {
            name: name.into(),
            head_radius_m: radius,
            base_delay_samples: 64.0,
            alpha_min: 0.1,
            theta_min_deg: 150.0,
            notches: notches.iter().map(|&(c, s, g, w)| feature(c, s, g, w)).collect(),
            concha: feature(concha_hz, 0.1, concha_db, 0.45),
            rear_shading_db: 6.0,
            rear_corner_hz: 6_000.0,
        }
    }

    /// Complex response of one ear at frequency bins `k · fs / fft_size`,
    /// `k = 0..=fft_size/2`.
    pub fn spectrum(&self, ear: Ear, d: &Direction, fft_size: usize, sample_rate_hz: u32) -> Vec<Complex64> {
        // The right ear sees the mirror image of what the left ear sees.
        let v = match ear {
            Ear::Left => d.to_unit_vector(),
            Ear::Right => d.mirrored().to_unit_vector(),
        };
        let [x, y, z] = v;
        let fs = sample_rate_hz as f64;
        let a_over_c = self.head_radius_m / SPEED_OF_SOUND;
        let theta = libm::acos(y.clamp(-1.0, 1.0));
        let alpha = (1.0 + self.alpha_min / 2.0)
            + (1.0 - self.alpha_min / 2.0) * libm::cos(theta / (self.theta_min_deg.to_radians()) * PI);
        let path = if theta < PI / 2.0 {
            -a_over_c * libm::cos(theta)
        } else {
            a_over_c * (theta - PI / 2.0)
        };
        let delay_s = self.base_delay_samples / fs + a_over_c + path;
        let w0 = 1.0 / a_over_c;
        let ipsi = 0.5 + 0.5 * y;
        let behind = (-x).max(0.0);

        (0..=fft_size / 2)
            .map(|k| {
                let f = k as f64 * fs / fft_size as f64;
                let w = 2.0 * PI * f;
                let shadow = Complex64::new(1.0, alpha * w / (2.0 * w0)) / Complex64::new(1.0, w / (2.0 * w0));
                let lin_delay = Complex64::from_polar(1.0, -w * delay_s);
                let mut db = 0.0;
                if f > 0.0 {
                    for n in &self.notches {
                        db += (0.4 + 0.6 * ipsi) * (0.6 + 0.4 * x.abs()) * gaussian_db(n, f, z);
                    }
                    db += ipsi * gaussian_db(&self.concha, f, z);
                    db -= self.rear_shading_db * behind * f * f / (f * f + self.rear_corner_hz * self.rear_corner_hz);
                }
                shadow * lin_delay * libm::pow(10.0, db / 20.0)
            })
            .collect()
    }

    /// Impulse responses for every bin center, truncated and faded like any
    /// synthesized HRIR.
    pub fn hrir(&self, sample_rate_hz: u32) -> Result<Hrir> {
        let fft = Fft::new(DEFAULT_FFT_SIZE)?;
        let mut out = Hrir::new(DEFAULT_IR_LENGTH, sample_rate_hz)?;
        let mut mag = Vec::new();
        let mut phase = Vec::new();
        for bin in BinIndex::all() {
            let d = bin_center(&bin)?;
            for ear in Ear::BOTH {
                let spec = self.spectrum(ear, &d, DEFAULT_FFT_SIZE, sample_rate_hz);
                mag.clear();
                phase.clear();
                for c in &spec {
                    mag.push(c.norm());
                    phase.push(c.arg());
                }
                let mut ir = spectrum_to_ir(&fft, &mag, &phase, DEFAULT_IR_LENGTH)?;
                taper(&mut ir);
                out.set_ir(bin, ear, &ir)?;
            }
            out.set_state(bin, BinState::Measured);
        }
        Ok(out)
    }

    /// Full grid: the spectra of [`HeadModel::hrir`].
    pub fn grid(&self, sample_rate_hz: u32) -> Result<HrtfGrid> {
        hrir_to_grid(&self.hrir(sample_rate_hz)?, DEFAULT_FFT_SIZE)
    }
}

/// Fades the fractional-delay sinc tail to zero well before the synthesis
/// fade region, so re-synthesizing a model grid reproduces it exactly.
fn taper(ir: &mut [f64]) {
    let end = ir.len() - FADE_LEN;
    let start = end / 2;
    for (i, v) in ir[start..].iter_mut().enumerate() {
        let n = end - start;
        *v *= if i < n {
            0.5 * (1.0 + libm::cos(PI * i as f64 / n as f64))
        } else {
            0.0
        };
    }
}

fn gaussian_db(feat: &SpectralFeature, f: f64, z: f64) -> f64 {
    let center = feat.center_hz * libm::exp2(feat.elevation_shift_oct * z);
    let u = libm::log2(f / center) / feat.width_oct;
    feat.gain_db * libm::exp(-0.5 * u * u)
}
