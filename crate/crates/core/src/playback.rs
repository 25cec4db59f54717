//! Block-based head-tracked binaural playback of a looping source.
//!
//! The renderer consumes one pose per block and switches HRIR pairs with a
//! one-block linear crossfade. Offline rendering from a pose track and live
//! rendering from network poses both drive the same [`HeadTrackedRenderer`].

use alloc::vec;
use alloc::vec::Vec;

use crate::dsp::{BinauralSignal, MonoSignal};
use crate::hrtf::{Ear, Hrir};
use crate::spatial::{calibrated_source_direction, BinIndex, Direction, HeadPose, PoseTrack};
use crate::{Error, Result};

/// Samples per render block (10 ms at 48 kHz).
pub const BLOCK_LEN: usize = 480;

/// Stereo output of one block.
#[derive(Clone, Debug, PartialEq)]
pub struct Block {
    pub left: Vec<f64>,
    pub right: Vec<f64>,
    /// Bin whose HRIRs are fully active at the end of the block.
    pub bin: BinIndex,
    /// Whether this block crossfaded into a new bin.
    pub switched: bool,
}

pub struct HeadTrackedRenderer {
    hrir: Hrir,
    source: Vec<f64>,
    initial: Direction,
    calibration: Option<HeadPose>,
    current: Option<BinIndex>,
    /// Last `ir_length - 1` source samples, oldest first.
    history: Vec<f64>,
    position: usize,
}

impl HeadTrackedRenderer {
    /// `initial` is the head-frame source direction at the calibration pose,
    /// which is the first pose passed to [`render_block`](Self::render_block).
    pub fn new(hrir: Hrir, source: &MonoSignal, initial: Direction) -> Result<Self> {
        if source.is_empty() {
            return Err(Error::Shape("empty playback source".into()));
        }
        if source.sample_rate_hz != hrir.sample_rate_hz() {
            return Err(Error::LayoutMismatch(alloc::format!(
                "HRIRs at {} Hz, source at {} Hz",
                hrir.sample_rate_hz(),
                source.sample_rate_hz
            )));
        }
        if hrir.states().iter().all(|s| !s.is_valid()) {
            return Err(Error::EmptyGrid);
        }
        let history = vec![0.0; hrir.ir_length() - 1];
        Ok(Self {
            hrir,
            source: source.samples.clone(),
            initial,
            calibration: None,
            current: None,
            history,
            position: 0,
        })
    }

    pub fn sample_rate_hz(&self) -> u32 {
        self.hrir.sample_rate_hz()
    }

    /// Samples rendered so far.
    pub fn position(&self) -> usize {
        self.position
    }

    /// Makes `pose` the pose at which the source is at the initial direction.
    pub fn calibrate(&mut self, pose: HeadPose) {
        self.calibration = Some(pose);
    }

    /// Head-frame source direction for `pose`, calibrating on the first call.
    pub fn direction_for(&mut self, pose: &HeadPose) -> Direction {
        let cal = *self.calibration.get_or_insert(*pose);
        calibrated_source_direction(&cal, pose, &self.initial)
    }

    /// Renders the next block of the looping source heard at `pose`.
    pub fn render_block(&mut self, pose: &HeadPose) -> Result<Block> {
        let d = self.direction_for(pose);
        let bin = self.hrir.nearest_valid_bin(&d)?;
        let n = self.source.len();
        let input: Vec<f64> = (0..BLOCK_LEN).map(|i| self.source[(self.position + i) % n]).collect();
        let mut x = self.history.clone();
        x.extend_from_slice(&input);

        let previous = self.current.replace(bin);
        let switched = previous.is_some_and(|p| p != bin);
        let mut out = [vec![0.0; BLOCK_LEN], vec![0.0; BLOCK_LEN]];
        for (ear, y) in Ear::BOTH.into_iter().zip(out.iter_mut()) {
            let new = filter(&x, self.hrir.ir(bin, ear));
            match previous {
                Some(p) if switched => {
                    let old = filter(&x, self.hrir.ir(p, ear));
                    for i in 0..BLOCK_LEN {
                        let w = i as f64 / BLOCK_LEN as f64;
                        y[i] = (1.0 - w) * old[i] + w * new[i];
                    }
                }
                _ => y.copy_from_slice(&new),
            }
        }

        let keep = self.history.len();
        self.history = x[x.len() - keep..].to_vec();
        self.position += BLOCK_LEN;
        let [left, right] = out;
        Ok(Block {
            left,
            right,
            bin,
            switched,
        })
    }
}

/// The last `x.len() - h.len() + 1` samples of `x * h`.
fn filter(x: &[f64], h: &[f64]) -> Vec<f64> {
    let offset = h.len() - 1;
    (0..x.len() - offset)
        .map(|i| {
            let n = i + offset;
            h.iter().enumerate().map(|(k, hk)| hk * x[n - k]).sum()
        })
        .collect()
}

/// Renders `len` samples with the pose of each block taken from `track` at
/// the block start (relative to the track's first timestamp).
pub fn render_track(
    hrir: &Hrir,
    source: &MonoSignal,
    initial: Direction,
    track: &PoseTrack,
    len: usize,
) -> Result<BinauralSignal> {
    let mut r = HeadTrackedRenderer::new(hrir.clone(), source, initial)?;
    let fs = r.sample_rate_hz() as f64;
    let t0 = track.calibration().t;
    let mut left = Vec::with_capacity(len + BLOCK_LEN);
    let mut right = Vec::with_capacity(len + BLOCK_LEN);
    while left.len() < len {
        let pose = *track.pose_at(t0 + r.position() as f64 / fs);
        let block = r.render_block(&pose)?;
        left.extend_from_slice(&block.left);
        right.extend_from_slice(&block.right);
    }
    left.truncate(len);
    right.truncate(len);
    BinauralSignal::new(r.sample_rate_hz(), left, right)
}
