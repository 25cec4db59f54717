use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::spatial::{HeadPose, PoseTrack};
use crate::{Error, Result};

/// Pose sample spacing of generated tracks.
pub const POSE_INTERVAL_S: f64 = 0.01;
pub const MAX_PITCH_DEG: f64 = 45.0;
pub const MIN_SPEED_DEG_S: f64 = 10.0;
pub const MAX_SPEED_DEG_S: f64 = 150.0;

fn sample_count(duration_s: f64) -> Result<usize> {
    if !(duration_s.is_finite() && duration_s > 0.0) {
        return Err(Error::Scenario("duration must be positive".into()));
    }
    Ok((libm::round(duration_s / POSE_INTERVAL_S) as usize).max(1))
}

/// Random head motion starting from the identity pose: piecewise
/// constant-velocity segments of 0.5 to 1.5 s, each with a uniform speed in
/// [10, 150] °/s along a uniform random direction in the yaw/pitch plane.
/// Pitch is clamped to ±45°, roll stays zero.
pub fn random_pose_track(duration_s: f64, seed: u64) -> Result<PoseTrack> {
    let n = sample_count(duration_s)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut poses = Vec::with_capacity(n);
    let (mut yaw, mut pitch) = (0.0f64, 0.0f64);
    let mut remaining = 0.0;
    let (mut yaw_rate, mut pitch_rate) = (0.0, 0.0);
    for i in 0..n {
        poses.push(HeadPose::new(i as f64 * POSE_INTERVAL_S, yaw, pitch, 0.0)?);
        if remaining <= 0.0 {
            remaining = rng.random_range(0.5..=1.5);
            let speed: f64 = rng.random_range(MIN_SPEED_DEG_S..=MAX_SPEED_DEG_S);
            let heading: f64 = rng.random_range(0.0..core::f64::consts::TAU);
            yaw_rate = speed * libm::cos(heading);
            pitch_rate = speed * libm::sin(heading);
        }
        yaw += yaw_rate * POSE_INTERVAL_S;
        pitch = (pitch + pitch_rate * POSE_INTERVAL_S).clamp(-MAX_PITCH_DEG, MAX_PITCH_DEG);
        remaining -= POSE_INTERVAL_S;
    }
    PoseTrack::new(poses, POSE_INTERVAL_S)
}

/// Linear yaw sweep with an optional sinusoidal pitch wobble.
pub fn sweep_track(
    duration_s: f64,
    yaw_from_deg: f64,
    yaw_to_deg: f64,
    pitch_amplitude_deg: f64,
    pitch_hz: f64,
) -> Result<PoseTrack> {
    let n = sample_count(duration_s)?;
    let span = ((n.max(2) - 1) as f64) * POSE_INTERVAL_S;
    let poses = (0..n)
        .map(|i| {
            let t = i as f64 * POSE_INTERVAL_S;
            let yaw = yaw_from_deg + (yaw_to_deg - yaw_from_deg) * t / span;
            let pitch = pitch_amplitude_deg * libm::sin(core::f64::consts::TAU * pitch_hz * t);
            HeadPose::new(t, yaw, pitch, 0.0)
        })
        .collect::<Result<Vec<_>>>()?;
    PoseTrack::new(poses, POSE_INTERVAL_S)
}
