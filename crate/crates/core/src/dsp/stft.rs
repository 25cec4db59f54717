use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

use super::{BinauralSignal, Fft, MonoSignal};
use crate::{Error, Result};

/// STFT window length in samples.
pub const DEFAULT_WINDOW: usize = 2048;
/// STFT hop in samples (10 ms at 48 kHz).
pub const DEFAULT_HOP: usize = 480;

/// Periodic Hann window.
pub fn hann_window(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 0.5 * (1.0 - libm::cos(2.0 * PI * i as f64 / n as f64)))
        .collect()
}

/// Magnitude spectrogram, laid out `[channel][frame][bin]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrogram {
    channels: usize,
    frames: usize,
    bins: usize,
    window_size: usize,
    hop: usize,
    sample_rate_hz: u32,
    magnitudes: Vec<f64>,
}

impl Spectrogram {
    pub fn new(
        channels: usize,
        frames: usize,
        window_size: usize,
        hop: usize,
        sample_rate_hz: u32,
        magnitudes: Vec<f64>,
    ) -> Result<Self> {
        let bins = window_size / 2 + 1;
        if !(1..=2).contains(&channels) {
            return Err(Error::Shape(format!("{channels} channels")));
        }
        if magnitudes.len() != channels * frames * bins {
            return Err(Error::Shape(format!(
                "{} magnitudes for {channels}x{frames}x{bins}",
                magnitudes.len()
            )));
        }
        if magnitudes.iter().any(|m| !(m.is_finite() && *m >= 0.0)) {
            return Err(Error::Shape("magnitudes must be finite and non-negative".into()));
        }
        Ok(Self {
            channels,
            frames,
            bins,
            window_size,
            hop,
            sample_rate_hz,
            magnitudes,
        })
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn window_size(&self) -> usize {
        self.window_size
    }

    pub fn hop(&self) -> usize {
        self.hop
    }

    pub fn sample_rate_hz(&self) -> u32 {
        self.sample_rate_hz
    }

    pub fn magnitudes(&self) -> &[f64] {
        &self.magnitudes
    }

    pub fn get(&self, channel: usize, frame: usize, bin: usize) -> f64 {
        self.magnitudes[(channel * self.frames + frame) * self.bins + bin]
    }

    pub fn frame(&self, channel: usize, frame: usize) -> &[f64] {
        let start = (channel * self.frames + frame) * self.bins;
        &self.magnitudes[start..start + self.bins]
    }

    /// Center time of a frame in seconds.
    pub fn frame_center_s(&self, frame: usize) -> f64 {
        (frame * self.hop + self.window_size / 2) as f64 / self.sample_rate_hz as f64
    }

    /// Frequency of a bin in Hz.
    pub fn bin_hz(&self, bin: usize) -> f64 {
        bin as f64 * self.sample_rate_hz as f64 / self.window_size as f64
    }

    /// Largest magnitude over all channels, frames and bins.
    pub fn max_magnitude(&self) -> f64 {
        self.magnitudes.iter().copied().fold(0.0, f64::max)
    }

    /// Channel-swapped copy (stereo only; mono is returned unchanged).
    pub fn swapped(&self) -> Self {
        let mut out = self.clone();
        if self.channels == 2 {
            let n = self.frames * self.bins;
            out.magnitudes[..n].copy_from_slice(&self.magnitudes[n..]);
            out.magnitudes[n..].copy_from_slice(&self.magnitudes[..n]);
        }
        out
    }
}

/// One-sided complex STFT of a mono signal, laid out `[frame][bin]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexSpectrogram {
    pub window_size: usize,
    pub hop: usize,
    pub sample_rate_hz: u32,
    pub frames: usize,
    pub data: Vec<Complex64>,
}

impl ComplexSpectrogram {
    pub fn bins(&self) -> usize {
        self.window_size / 2 + 1
    }

    pub fn frame(&self, t: usize) -> &[Complex64] {
        let f = self.bins();
        &self.data[t * f..(t + 1) * f]
    }

    pub fn zeros(window_size: usize, hop: usize, sample_rate_hz: u32, frames: usize) -> Self {
        Self {
            window_size,
            hop,
            sample_rate_hz,
            frames,
            data: vec![Complex64::new(0.0, 0.0); frames * (window_size / 2 + 1)],
        }
    }
}

fn check_params(len: usize, window_size: usize, hop: usize) -> Result<usize> {
    if !window_size.is_power_of_two() {
        return Err(Error::WindowNotPowerOfTwo(window_size));
    }
    if hop == 0 || hop > window_size {
        return Err(Error::InvalidHop {
            hop,
            window: window_size,
        });
    }
    if len < window_size {
        return Err(Error::SignalTooShort {
            len,
            window: window_size,
        });
    }
    Ok((len - window_size) / hop + 1)
}

/// Hann-windowed one-sided complex STFT without padding.
pub fn stft_complex(
    samples: &[f64],
    sample_rate_hz: u32,
    window_size: usize,
    hop: usize,
) -> Result<ComplexSpectrogram> {
    let frames = check_params(samples.len(), window_size, hop)?;
    let fft = Fft::new(window_size)?;
    let window = hann_window(window_size);
    let bins = window_size / 2 + 1;
    let mut data = Vec::with_capacity(frames * bins);
    let mut buf = vec![Complex64::new(0.0, 0.0); window_size];
    for t in 0..frames {
        let seg = &samples[t * hop..t * hop + window_size];
        for ((b, &x), &w) in buf.iter_mut().zip(seg).zip(&window) {
            *b = Complex64::new(x * w, 0.0);
        }
        fft.forward(&mut buf);
        data.extend_from_slice(&buf[..bins]);
    }
    Ok(ComplexSpectrogram {
        window_size,
        hop,
        sample_rate_hz,
        frames,
        data,
    })
}

/// Magnitude spectrogram of one or two equal-length channels.
pub fn stft_channels(
    channels: &[&[f64]],
    sample_rate_hz: u32,
    window_size: usize,
    hop: usize,
) -> Result<Spectrogram> {
    let mut magnitudes = Vec::new();
    let mut frames = 0;
    for ch in channels {
        let spec = stft_complex(ch, sample_rate_hz, window_size, hop)?;
        frames = spec.frames;
        magnitudes.extend(spec.data.iter().map(|c| c.norm()));
    }
    Spectrogram::new(
        channels.len(),
        frames,
        window_size,
        hop,
        sample_rate_hz,
        magnitudes,
    )
}

pub fn stft_mono(signal: &MonoSignal, window_size: usize, hop: usize) -> Result<Spectrogram> {
    stft_channels(&[&signal.samples], signal.sample_rate_hz, window_size, hop)
}

pub fn stft_binaural(signal: &BinauralSignal, window_size: usize, hop: usize) -> Result<Spectrogram> {
    stft_channels(
        &[&signal.left, &signal.right],
        signal.sample_rate_hz,
        window_size,
        hop,
    )
}

/// Weighted overlap-add inverse of [`stft_complex`]. The output has
/// `(frames - 1) * hop + window_size` samples; samples where the summed
/// squared window vanishes are zero.
pub fn istft(spec: &ComplexSpectrogram) -> Result<MonoSignal> {
    let n = spec.window_size;
    if !n.is_power_of_two() {
        return Err(Error::WindowNotPowerOfTwo(n));
    }
    if spec.hop == 0 || !n.is_multiple_of(spec.hop) {
        return Err(Error::InvalidHop {
            hop: spec.hop,
            window: n,
        });
    }
    if spec.data.len() != spec.frames * spec.bins() {
        return Err(Error::Shape(format!(
            "{} values for {} frames of {} bins",
            spec.data.len(),
            spec.frames,
            spec.bins()
        )));
    }
    if spec.frames == 0 {
        return MonoSignal::new(spec.sample_rate_hz, Vec::new());
    }
    let fft = Fft::new(n)?;
    let window = hann_window(n);
    let len = (spec.frames - 1) * spec.hop + n;
    let mut out = vec![0.0; len];
    let mut norm = vec![0.0; len];
    for t in 0..spec.frames {
        let (frame, _) = fft.inverse_real(spec.frame(t));
        let start = t * spec.hop;
        for i in 0..n {
            out[start + i] += frame[i] * window[i];
            norm[start + i] += window[i] * window[i];
        }
    }
    for (o, w) in out.iter_mut().zip(&norm) {
        if *w > 1e-10 {
            *o /= *w;
        } else {
            *o = 0.0;
        }
    }
    MonoSignal::new(spec.sample_rate_hz, out)
}
