//! Per-frame filter estimates from binaural spectrograms.
//!
//! Three interchangeable predictors: the simulator's ground-truth labels
//! (oracle), division by a time-aligned reference (ratio), and UNet
//! inference from a weight bundle (neural).

mod unet;

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

pub use unet::{
    softplus, Fingerprint, Layer, LayerKind, Tensor, UNet, WeightBundle, BN_EPS, ENGINE_DOWN_BLOCKS, ENGINE_IN_CHANNELS,
    ENGINE_OUT_CHANNELS, ENGINE_UP_BLOCKS,
};

use crate::dsp::Spectrogram;
use crate::{Error, Result};

/// Reference level below each frame's peak at which the ratio predictor
/// abstains.
pub const DEFAULT_FLOOR_DB: f64 = -60.0;

/// Multiplicative gains `[ear][frame][freq]` with a validity mask. Masked
/// entries hold gain 0.
#[derive(Clone, Debug, PartialEq)]
pub struct FilterEstimate {
    frames: usize,
    bins: usize,
    gains: Vec<f64>,
    valid: Vec<bool>,
}

impl FilterEstimate {
    pub fn new(frames: usize, bins: usize, gains: Vec<f64>, valid: Vec<bool>) -> Result<Self> {
        let n = 2 * frames * bins;
        if gains.len() != n || valid.len() != n {
            return Err(Error::Shape(format!(
                "estimate of {}/{} values for 2x{frames}x{bins}",
                gains.len(),
                valid.len()
            )));
        }
        if gains.iter().any(|g| !(g.is_finite() && *g >= 0.0)) {
            return Err(Error::Shape("gains must be finite and non-negative".into()));
        }
        if gains.iter().zip(&valid).any(|(g, v)| !v && *g != 0.0) {
            return Err(Error::Shape("masked entries must carry gain 0".into()));
        }
        Ok(Self {
            frames,
            bins,
            gains,
            valid,
        })
    }

    /// Fully valid estimate from a two-channel gain spectrogram.
    pub fn from_spectrogram(gains: &Spectrogram) -> Result<Self> {
        if gains.channels() != 2 {
            return Err(Error::Shape("gains need two channels".into()));
        }
        let n = gains.magnitudes().len();
        Self::new(gains.frames(), gains.bins(), gains.magnitudes().to_vec(), vec![true; n])
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    fn index(&self, ear: usize, frame: usize, bin: usize) -> usize {
        (ear * self.frames + frame) * self.bins + bin
    }

    pub fn gain(&self, ear: usize, frame: usize, bin: usize) -> f64 {
        self.gains[self.index(ear, frame, bin)]
    }

    pub fn is_valid(&self, ear: usize, frame: usize, bin: usize) -> bool {
        self.valid[self.index(ear, frame, bin)]
    }

    pub fn gains(&self) -> &[f64] {
        &self.gains
    }

    pub fn validity(&self) -> &[bool] {
        &self.valid
    }

    pub fn frame_gains(&self, ear: usize, frame: usize) -> &[f64] {
        let o = self.index(ear, frame, 0);
        &self.gains[o..o + self.bins]
    }

    pub fn frame_validity(&self, ear: usize, frame: usize) -> &[bool] {
        let o = self.index(ear, frame, 0);
        &self.valid[o..o + self.bins]
    }
}

/// Returns simulation labels verbatim, all valid.
pub fn oracle_predict(labels: &Spectrogram) -> Result<FilterEstimate> {
    FilterEstimate::from_spectrogram(labels)
}

/// `R_e(t, f) / S(t, f)` wherever the reference exceeds `floor_db` relative
/// to its frame peak; invalid elsewhere.
pub fn ratio_predict(recording: &Spectrogram, reference: &Spectrogram, floor_db: f64) -> Result<FilterEstimate> {
    if recording.channels() != 2 || reference.channels() != 1 {
        return Err(Error::Shape("ratio needs a 2-channel recording and a mono reference".into()));
    }
    if recording.frames() != reference.frames() || recording.bins() != reference.bins() {
        return Err(Error::FrameCountMismatch {
            estimate: reference.frames(),
            recording: recording.frames(),
        });
    }
    let (frames, bins) = (recording.frames(), recording.bins());
    let floor = libm::pow(10.0, floor_db / 20.0);
    let mut gains = vec![0.0; 2 * frames * bins];
    let mut valid = vec![false; 2 * frames * bins];
    for t in 0..frames {
        let s = reference.frame(0, t);
        let threshold = s.iter().copied().fold(0.0, f64::max) * floor;
        for ear in 0..2 {
            let r = recording.frame(ear, t);
            let o = (ear * frames + t) * bins;
            for f in 0..bins {
                if s[f] > threshold && s[f] > 0.0 {
                    let g = r[f] / s[f];
                    if g.is_finite() {
                        gains[o + f] = g;
                        valid[o + f] = true;
                    }
                }
            }
        }
    }
    FilterEstimate::new(frames, bins, gains, valid)
}

/// UNet gains for a binaural magnitude spectrogram, all valid.
pub fn neural_predict(recording: &Spectrogram, net: &UNet) -> Result<FilterEstimate> {
    if recording.channels() != 2 {
        return Err(Error::Shape("neural predictor needs two channels".into()));
    }
    let out = net.predict(recording.magnitudes(), recording.frames(), recording.bins())?;
    let n = out.len();
    FilterEstimate::new(
        recording.frames(),
        recording.bins(),
        out.into_iter().map(f64::from).collect(),
        vec![true; n],
    )
}

/// What a predictor may consume for one recording.
#[derive(Clone, Copy, Debug)]
pub struct EstimationInput<'a> {
    pub recording: &'a Spectrogram,
    pub labels: Option<&'a Spectrogram>,
    pub reference: Option<&'a Spectrogram>,
}

#[derive(Clone, Debug)]
pub enum Predictor {
    Oracle,
    Ratio { floor_db: f64 },
    Neural(alloc::boxed::Box<UNet>),
}

impl Predictor {
    pub fn predict(&self, input: &EstimationInput<'_>) -> Result<FilterEstimate> {
        let est = match self {
            Predictor::Oracle => oracle_predict(input.labels.ok_or(Error::MissingPredictorInput("labels"))?)?,
            Predictor::Ratio { floor_db } => ratio_predict(
                input.recording,
                input.reference.ok_or(Error::MissingPredictorInput("reference"))?,
                *floor_db,
            )?,
            Predictor::Neural(net) => neural_predict(input.recording, net)?,
        };
        if est.frames() != input.recording.frames() {
            return Err(Error::FrameCountMismatch {
                estimate: est.frames(),
                recording: input.recording.frames(),
            });
        }
        Ok(est)
    }

    pub fn name(&self) -> &'static str {
        match self {
            Predictor::Oracle => "oracle",
            Predictor::Ratio { .. } => "ratio",
            Predictor::Neural(_) => "neural",
        }
    }
}
