//! Signals, STFT, convolution and delay.

mod convolve;
mod delay;
mod fft;
mod stft;

use alloc::vec::Vec;

pub use convolve::{convolve, time_varying_convolve, IrSegment};
pub use delay::{fractional_delay, FRACTIONAL_DELAY_TAPS};
pub use fft::Fft;
pub use stft::{
    hann_window, istft, stft_binaural, stft_channels, stft_complex, stft_mono, ComplexSpectrogram,
    Spectrogram, DEFAULT_HOP, DEFAULT_WINDOW,
};

use crate::{Error, Result, SAMPLE_RATE_HZ};

/// Single-channel waveform.
#[derive(Clone, Debug, PartialEq)]
pub struct MonoSignal {
    pub sample_rate_hz: u32,
    pub samples: Vec<f64>,
}

impl MonoSignal {
    pub fn new(sample_rate_hz: u32, samples: Vec<f64>) -> Result<Self> {
        if sample_rate_hz == 0 {
            return Err(Error::InvalidSampleRate);
        }
        if samples.iter().any(|s| !s.is_finite()) {
            return Err(Error::NonFiniteSample);
        }
        Ok(Self {
            sample_rate_hz,
            samples,
        })
    }

    /// 48 kHz signal.
    pub fn at_default_rate(samples: Vec<f64>) -> Result<Self> {
        Self::new(SAMPLE_RATE_HZ, samples)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn rms(&self) -> f64 {
        rms(&self.samples)
    }
}

/// Two-channel waveform with equal channel lengths.
#[derive(Clone, Debug, PartialEq)]
pub struct BinauralSignal {
    pub sample_rate_hz: u32,
    pub left: Vec<f64>,
    pub right: Vec<f64>,
}

impl BinauralSignal {
    pub fn new(sample_rate_hz: u32, left: Vec<f64>, right: Vec<f64>) -> Result<Self> {
        if sample_rate_hz == 0 {
            return Err(Error::InvalidSampleRate);
        }
        if left.len() != right.len() {
            return Err(Error::ChannelLengthMismatch {
                left: left.len(),
                right: right.len(),
            });
        }
        if left.iter().chain(&right).any(|s| !s.is_finite()) {
            return Err(Error::NonFiniteSample);
        }
        Ok(Self {
            sample_rate_hz,
            left,
            right,
        })
    }

    pub fn len(&self) -> usize {
        self.left.len()
    }

    pub fn is_empty(&self) -> bool {
        self.left.is_empty()
    }

    pub fn swapped(&self) -> Self {
        Self {
            sample_rate_hz: self.sample_rate_hz,
            left: self.right.clone(),
            right: self.left.clone(),
        }
    }

    pub fn channel(&self, ear: usize) -> &[f64] {
        if ear == 0 {
            &self.left
        } else {
            &self.right
        }
    }
}

pub fn rms(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    libm::sqrt(x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64)
}
