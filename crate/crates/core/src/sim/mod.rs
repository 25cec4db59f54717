//! Binaural recording simulator: a stationary source heard by a rotating
//! listener through an HRTF grid, with optional shoebox multipath and
//! ambient noise. Every rendered recording carries its ground-truth
//! per-frame direct-path gains.

mod filter;
mod motion;
mod room;

use alloc::vec;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub use filter::{has_minimum_bandwidth, BANDWIDTH_FLOOR_DB, BANDWIDTH_OCTAVES, BANDWIDTH_TOP_HZ};
pub use motion::{random_pose_track, sweep_track, MAX_PITCH_DEG, MAX_SPEED_DEG_S, MIN_SPEED_DEG_S, POSE_INTERVAL_S};
pub use room::{
    image_sources, room_impulse_response, rt60_to_reflection_coeff, schroeder_rt60, ImageSource, RoomConfig,
};

use crate::dsp::{
    fractional_delay, time_varying_convolve, BinauralSignal, Fft, IrSegment, MonoSignal, Spectrogram, DEFAULT_HOP,
    DEFAULT_WINDOW,
};
use crate::hrtf::{lookup, lookup_magnitude, spectrum_to_ir, HrtfGrid, LookupMode, DEFAULT_IR_LENGTH};
use crate::spatial::{Direction, HeadPose, PoseTrack};
use crate::{Error, Result};

pub const DEFAULT_SOURCE_DISTANCE_M: f64 = 1.5;
pub const DEFAULT_DURATION_S: f64 = 3.0;
pub const DEFAULT_IMAGE_ORDER: usize = 2;
pub const DEFAULT_NOISE_DB: f64 = -40.0;

#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    /// Head-frame source direction at the first pose of the track.
    pub source_direction: Direction,
    pub source_distance_m: f64,
    pub pose_track: PoseTrack,
    pub room: RoomConfig,
    /// Ambient noise level relative to the direct-path RMS; `None` for none.
    pub ambient_noise_db: Option<f64>,
    pub duration_s: f64,
    pub image_order: usize,
}

impl Scenario {
    /// Anechoic, noiseless scenario with default distance and duration.
    pub fn new(source_direction: Direction, pose_track: PoseTrack) -> Self {
        Self {
            source_direction,
            source_distance_m: DEFAULT_SOURCE_DISTANCE_M,
            pose_track,
            room: RoomConfig::anechoic(),
            ambient_noise_db: None,
            duration_s: DEFAULT_DURATION_S,
            image_order: DEFAULT_IMAGE_ORDER,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.source_distance_m.is_finite() && self.source_distance_m > 0.0) {
            return Err(Error::Scenario("source distance must be positive".into()));
        }
        if !(self.duration_s.is_finite() && self.duration_s > 0.0) {
            return Err(Error::Scenario("duration must be positive".into()));
        }
        if self.ambient_noise_db.is_some_and(|db| !db.is_finite()) {
            return Err(Error::Scenario("noise level must be finite".into()));
        }
        self.room.validate()
    }

    /// Left-right mirror image: azimuths, yaw and the room's side walls
    /// swap sides.
    pub fn mirrored(&self) -> Self {
        Self {
            source_direction: self.source_direction.mirrored(),
            pose_track: self.pose_track.mirrored(),
            room: self.room.mirrored(),
            ..self.clone()
        }
    }

    /// Source position relative to the listener in the world frame (the
    /// head frame of the first pose).
    pub fn source_position(&self) -> [f64; 3] {
        let v = self
            .pose_track
            .calibration()
            .rotation()
            .apply(self.source_direction.to_unit_vector());
        v.map(|c| c * self.source_distance_m)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LabeledRecording {
    pub binaural: BinauralSignal,
    /// Ground-truth direct-path gains `[ear][frame][freq]`.
    pub labels: Spectrogram,
    /// Head-frame source direction at each frame center.
    pub source_track: Vec<Direction>,
    pub scenario: Scenario,
    /// The dry source aligned with the direct path.
    pub reference: MonoSignal,
}

/// Number of STFT frames of a clip with `len` samples.
pub fn frame_count(len: usize) -> usize {
    if len < DEFAULT_WINDOW {
        0
    } else {
        (len - DEFAULT_WINDOW) / DEFAULT_HOP + 1
    }
}

/// Head-frame source direction at the center of every frame.
pub fn frame_directions(track: &PoseTrack, initial: &Direction, frames: usize, sample_rate_hz: u32) -> Vec<Direction> {
    let t0 = track.calibration().t;
    (0..frames)
        .map(|t| {
            let center = (t * DEFAULT_HOP + DEFAULT_WINDOW / 2) as f64 / sample_rate_hz as f64;
            track.source_direction_at(t0 + center, initial)
        })
        .collect()
}

/// Renders `scenario` with `source` through `hrtf`. Paths are referenced to
/// the direct path: it arrives with unit gain at sample 0, reflections
/// follow with their relative gain and delay. `seed` drives the ambient
/// noise only.
pub fn render(scenario: &Scenario, source: &MonoSignal, hrtf: &HrtfGrid, seed: u64) -> Result<LabeledRecording> {
    scenario.validate()?;
    let fs = source.sample_rate_hz;
    if hrtf.sample_rate_hz() != fs {
        return Err(Error::LayoutMismatch(alloc::format!(
            "HRTF at {} Hz, source at {fs} Hz",
            hrtf.sample_rate_hz()
        )));
    }
    if hrtf.fft_size() != DEFAULT_WINDOW {
        return Err(Error::FftSizeMismatch(hrtf.fft_size(), DEFAULT_WINDOW));
    }
    if hrtf.valid_count() == 0 {
        return Err(Error::EmptyGrid);
    }
    let n = libm::round(scenario.duration_s * fs as f64) as usize;
    if source.len() < n {
        return Err(Error::SourceTooShort {
            len: source.len(),
            needed: n,
        });
    }
    let dry = MonoSignal::new(fs, source.samples[..n].to_vec())?;

    let order = if scenario.room.enabled { scenario.image_order } else { 0 };
    let images = image_sources(&scenario.room, scenario.source_position(), order)?;
    let direct = images
        .iter()
        .find(|i| i.order == 0)
        .ok_or_else(|| Error::Room("missing direct path".into()))?
        .clone();

    let track = &scenario.pose_track;
    let t0 = track.calibration().t;
    let mut switches: Vec<(usize, &HeadPose)> = Vec::new();
    for p in track.poses() {
        let start = libm::round((p.t - t0) * fs as f64) as usize;
        if start >= n && !switches.is_empty() {
            break;
        }
        match switches.last_mut() {
            Some(last) if last.0 == start => last.1 = p,
            _ => switches.push((start, p)),
        }
    }

    let fft = Fft::new(hrtf.fft_size())?;
    let ir_length = DEFAULT_IR_LENGTH.min(hrtf.fft_size());
    let mut left = vec![0.0; n];
    let mut right = vec![0.0; n];
    let mut direct_energy = 0.0;
    for img in &images {
        let gain = img.attenuation / direct.attenuation;
        let delay = (img.delay_s - direct.delay_s) * fs as f64;
        if delay >= n as f64 {
            continue;
        }
        let mut path = if delay > 0.0 { fractional_delay(&dry, delay)? } else { dry.clone() };
        if gain != 1.0 {
            for v in path.samples.iter_mut() {
                *v *= gain;
            }
        }
        let world = unit(img.position);
        let mut schedule: Vec<IrSegment> = Vec::with_capacity(switches.len());
        for &(start, pose) in &switches {
            let d = Direction::from_vector(pose.rotation().inverse().apply(world));
            let (l, r) = lookup(hrtf, &d, LookupMode::Bilinear)?;
            let seg = IrSegment {
                start_sample: start,
                left: spectrum_to_ir(&fft, &l.magnitude, &l.phase, ir_length)?,
                right: spectrum_to_ir(&fft, &r.magnitude, &r.phase, ir_length)?,
            };
            match schedule.last() {
                Some(prev) if prev.left == seg.left && prev.right == seg.right => {}
                _ => schedule.push(seg),
            }
        }
        let out = time_varying_convolve(&path, &schedule)?;
        for i in 0..n {
            left[i] += out.left[i];
            right[i] += out.right[i];
        }
        if img.order == 0 {
            direct_energy = out.left[..n].iter().chain(&out.right[..n]).map(|v| v * v).sum::<f64>();
        }
    }

    if let Some(db) = scenario.ambient_noise_db {
        let direct_rms = libm::sqrt(direct_energy / (2 * n) as f64);
        let sigma = direct_rms * libm::pow(10.0, db / 20.0);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for ch in [&mut left, &mut right] {
            for v in ch.iter_mut() {
                let z: f64 = StandardNormal.sample(&mut rng);
                *v += sigma * z;
            }
        }
    }

    let frames = frame_count(n);
    let source_track = frame_directions(track, &scenario.source_direction, frames, fs);
    let bins = DEFAULT_WINDOW / 2 + 1;
    let mut labels = vec![0.0; 2 * frames * bins];
    for (t, d) in source_track.iter().enumerate() {
        let mags = lookup_magnitude(hrtf, d, LookupMode::Bilinear)?;
        for (ear, m) in mags.iter().enumerate() {
            let o = (ear * frames + t) * bins;
            labels[o..o + bins].copy_from_slice(m);
        }
    }

    Ok(LabeledRecording {
        binaural: BinauralSignal::new(fs, left, right)?,
        labels: Spectrogram::new(2, frames, DEFAULT_WINDOW, DEFAULT_HOP, fs, labels)?,
        source_track,
        scenario: scenario.clone(),
        reference: dry,
    })
}

fn unit(p: [f64; 3]) -> [f64; 3] {
    let n = libm::sqrt(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]);
    p.map(|c| c / n)
}

/// Unit-variance white Gaussian noise, deterministic per seed.
pub fn white_noise(len: usize, sample_rate_hz: u32, seed: u64) -> Result<MonoSignal> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    MonoSignal::new(sample_rate_hz, (0..len).map(|_| StandardNormal.sample(&mut rng)).collect())
}

/// Six three-second sweep scenarios: a frontal source at elevations -20, 0
/// and 20 degrees, heard while the head sweeps yaw from -75 to 75 degrees,
/// and back again with a ±7.5 degree pitch wobble.
pub fn sweep_scenarios() -> Result<Vec<Scenario>> {
    let mut out = Vec::new();
    for el in [-20.0, 0.0, 20.0] {
        let d = Direction::new(0.0, el)?;
        out.push(Scenario::new(d, sweep_track(DEFAULT_DURATION_S, -75.0, 75.0, 0.0, 0.0)?));
        out.push(Scenario::new(d, sweep_track(DEFAULT_DURATION_S, 75.0, -75.0, 7.5, 1.0)?));
    }
    Ok(out)
}
