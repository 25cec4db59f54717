//! Personalized HRTF estimation from head-tracked binaural recordings.
//!
//! This crate is `no_std` (with `alloc`) and holds every algorithmic piece of
//! the pipeline:
//!
//! - [`spatial`]: directions, head poses, head-relative source rotation and
//!   5° direction binning.
//! - [`dsp`]: FFT, STFT/ISTFT, linear and time-varying convolution,
//!   fractional delay.
//! - [`hrtf`]: direction-binned HRTF grids, lookup, HRIR synthesis, and a
//!   parametric head model used for bundled reference subjects.
//! - [`sim`]: binaural scenario renderer with shoebox image-source multipath
//!   and ground-truth label generation.
//! - [`predictor`]: per-frame filter estimates (oracle, reference division,
//!   UNet inference).
//! - [`aggregator`]: accumulation of filter estimates into a direction-binned
//!   HRTF and HRIR synthesis with generic phase.
//! - [`evaluator`]: log-spectral distortion and grid comparison.
//! - [`playback`]: block-based head-tracked binaural renderer.
//!
//! File formats, WAV/CSV IO and the command-line tools live in the `earfield`
//! crate.

#![no_std]

extern crate alloc;

pub mod aggregator;
pub mod dsp;
pub mod error;
pub mod evaluator;
pub mod hrtf;
pub mod playback;
pub mod predictor;
pub mod sim;
pub mod spatial;

pub use error::{Error, Result};

/// Sample rate used by every pipeline stage.
pub const SAMPLE_RATE_HZ: u32 = 48_000;
