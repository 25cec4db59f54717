//! Directions, head poses and 5° direction bins.
//!
//! Conventions (head frame): `x` points out of the nose, `y` out of the left
//! ear, `z` out of the top of the head. Positive azimuth is toward the
//! listener's left, positive elevation is up. Head poses are intrinsic
//! yaw → pitch → roll rotations: positive yaw turns the head left, positive
//! pitch tilts the nose up, positive roll lowers the right ear.

use alloc::vec::Vec;
use core::ops::Mul;

use crate::{Error, Result};

/// Angular bin width in degrees for both azimuth and elevation.
pub const BIN_DEG: f64 = 5.0;
/// Number of azimuth bins covering [-180, 180).
pub const AZ_BINS: usize = 72;
/// Number of elevation bins covering [-90, 90].
pub const EL_BINS: usize = 37;
/// Total bins in a grid, including every azimuth alias of the two poles.
pub const NUM_BINS: usize = AZ_BINS * EL_BINS;

/// Wraps an azimuth in degrees into [-180, 180).
pub fn normalize_azimuth(az_deg: f64) -> f64 {
    let wrapped = az_deg - 360.0 * libm::floor((az_deg + 180.0) / 360.0);
    // rounding in the subtraction can land exactly on +180
    if wrapped >= 180.0 {
        wrapped - 360.0
    } else if wrapped < -180.0 {
        wrapped + 360.0
    } else {
        wrapped
    }
}

/// A source direction relative to some frame, in degrees.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Direction {
    azimuth_deg: f64,
    elevation_deg: f64,
}

impl Direction {
    pub fn new(azimuth_deg: f64, elevation_deg: f64) -> Result<Self> {
        if !azimuth_deg.is_finite() || !elevation_deg.is_finite() {
            return Err(Error::NonFinite);
        }
        if !(-90.0..=90.0).contains(&elevation_deg) {
            return Err(Error::ElevationOutOfRange(elevation_deg));
        }
        Ok(Self {
            azimuth_deg: normalize_azimuth(azimuth_deg),
            elevation_deg,
        })
    }

    pub const FRONT: Direction = Direction {
        azimuth_deg: 0.0,
        elevation_deg: 0.0,
    };

    pub fn azimuth_deg(&self) -> f64 {
        self.azimuth_deg
    }

    pub fn elevation_deg(&self) -> f64 {
        self.elevation_deg
    }

    /// Unit vector in the frame the direction is expressed in.
    pub fn to_unit_vector(&self) -> [f64; 3] {
        let az = self.azimuth_deg.to_radians();
        let el = self.elevation_deg.to_radians();
        let (sa, ca) = libm::sincos(az);
        let (se, ce) = libm::sincos(el);
        [ce * ca, ce * sa, se]
    }

    /// Direction of an arbitrary non-zero vector. A zero vector maps to the
    /// front direction.
    pub fn from_vector(v: [f64; 3]) -> Self {
        let norm = libm::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
        if norm == 0.0 || !norm.is_finite() {
            return Self::FRONT;
        }
        let z = (v[2] / norm).clamp(-1.0, 1.0);
        let elevation_deg = libm::asin(z).to_degrees().clamp(-90.0, 90.0);
        let azimuth_deg = normalize_azimuth(libm::atan2(v[1], v[0]).to_degrees());
        Self {
            azimuth_deg,
            elevation_deg,
        }
    }

    /// Left-right mirror image (azimuth negated).
    pub fn mirrored(&self) -> Self {
        Self {
            azimuth_deg: normalize_azimuth(-self.azimuth_deg),
            elevation_deg: self.elevation_deg,
        }
    }

    /// Great-circle angle to another direction, in degrees.
    pub fn angle_to(&self, other: &Direction) -> f64 {
        let a = self.to_unit_vector();
        let b = other.to_unit_vector();
        let dot = (a[0] * b[0] + a[1] * b[1] + a[2] * b[2]).clamp(-1.0, 1.0);
        libm::acos(dot).to_degrees()
    }
}

/// Head orientation at time `t`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HeadPose {
    pub t: f64,
    pub yaw_deg: f64,
    pub pitch_deg: f64,
    pub roll_deg: f64,
}

impl HeadPose {
    pub fn new(t: f64, yaw_deg: f64, pitch_deg: f64, roll_deg: f64) -> Result<Self> {
        if ![t, yaw_deg, pitch_deg, roll_deg].iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite);
        }
        if t < 0.0 {
            return Err(Error::PoseTrack("negative timestamp"));
        }
        Ok(Self {
            t,
            yaw_deg,
            pitch_deg,
            roll_deg,
        })
    }

    pub fn identity(t: f64) -> Self {
        Self {
            t,
            yaw_deg: 0.0,
            pitch_deg: 0.0,
            roll_deg: 0.0,
        }
    }

    /// Head-to-world rotation of this pose.
    pub fn rotation(&self) -> Rotation {
        Rotation::about_axis([0.0, 0.0, 1.0], self.yaw_deg.to_radians())
            * Rotation::about_axis([0.0, 1.0, 0.0], -self.pitch_deg.to_radians())
            * Rotation::about_axis([1.0, 0.0, 0.0], self.roll_deg.to_radians())
    }

    /// Left-right mirror image of the pose.
    pub fn mirrored(&self) -> Self {
        Self {
            t: self.t,
            yaw_deg: -self.yaw_deg,
            pitch_deg: self.pitch_deg,
            roll_deg: -self.roll_deg,
        }
    }
}

/// Unit quaternion rotation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rotation {
    w: f64,
    x: f64,
    y: f64,
    z: f64,
}

impl Rotation {
    pub const IDENTITY: Rotation = Rotation {
        w: 1.0,
        x: 0.0,
        y: 0.0,
        z: 0.0,
    };

    /// Right-handed rotation by `angle_rad` about a unit `axis`.
    pub fn about_axis(axis: [f64; 3], angle_rad: f64) -> Self {
        let (s, c) = libm::sincos(angle_rad * 0.5);
        Self {
            w: c,
            x: axis[0] * s,
            y: axis[1] * s,
            z: axis[2] * s,
        }
    }

    pub fn inverse(&self) -> Self {
        Self {
            w: self.w,
            x: -self.x,
            y: -self.y,
            z: -self.z,
        }
    }

    pub fn apply(&self, v: [f64; 3]) -> [f64; 3] {
        // v' = v + 2w (q × v) + 2 q × (q × v)
        let q = [self.x, self.y, self.z];
        let t = cross(q, v);
        let t = [2.0 * t[0], 2.0 * t[1], 2.0 * t[2]];
        let u = cross(q, t);
        [
            v[0] + self.w * t[0] + u[0],
            v[1] + self.w * t[1] + u[1],
            v[2] + self.w * t[2] + u[2],
        ]
    }
}

impl Mul for Rotation {
    type Output = Rotation;

    fn mul(self, r: Rotation) -> Rotation {
        Rotation {
            w: self.w * r.w - self.x * r.x - self.y * r.y - self.z * r.z,
            x: self.w * r.x + self.x * r.w + self.y * r.z - self.z * r.y,
            y: self.w * r.y - self.x * r.z + self.y * r.w + self.z * r.x,
            z: self.w * r.z + self.x * r.y - self.y * r.x + self.z * r.w,
        }
    }
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// Source direction in the current head frame, given the head pose relative
/// to the calibration pose and the head-frame source direction at
/// calibration.
pub fn relative_source_direction(pose: &HeadPose, initial: &Direction) -> Direction {
    let v = pose.rotation().inverse().apply(initial.to_unit_vector());
    Direction::from_vector(v)
}

/// Like [`relative_source_direction`] for a pose track whose calibration pose
/// (`calibration`) is not necessarily the identity.
pub fn calibrated_source_direction(
    calibration: &HeadPose,
    pose: &HeadPose,
    initial: &Direction,
) -> Direction {
    let world = calibration.rotation().apply(initial.to_unit_vector());
    Direction::from_vector(pose.rotation().inverse().apply(world))
}

/// Time-ordered head poses.
#[derive(Clone, Debug, PartialEq)]
pub struct PoseTrack {
    poses: Vec<HeadPose>,
    sample_interval_s: f64,
}

impl PoseTrack {
    pub fn new(poses: Vec<HeadPose>, sample_interval_s: f64) -> Result<Self> {
        if poses.is_empty() {
            return Err(Error::PoseTrack("track needs at least one pose"));
        }
        if !(sample_interval_s.is_finite() && sample_interval_s > 0.0) {
            return Err(Error::PoseTrack("sample interval must be positive"));
        }
        for p in &poses {
            HeadPose::new(p.t, p.yaw_deg, p.pitch_deg, p.roll_deg)?;
        }
        if poses.windows(2).any(|w| w[1].t <= w[0].t) {
            return Err(Error::PoseTrack("timestamps must be strictly increasing"));
        }
        Ok(Self {
            poses,
            sample_interval_s,
        })
    }

    /// Track of one pose held for all time.
    pub fn constant(pose: HeadPose, sample_interval_s: f64) -> Result<Self> {
        Self::new(alloc::vec![pose], sample_interval_s)
    }

    /// Builds a track from poses with arbitrary timestamps, inferring the
    /// sample interval from the median spacing.
    pub fn from_poses(poses: Vec<HeadPose>) -> Result<Self> {
        let interval = if poses.len() < 2 {
            0.01
        } else {
            let mut gaps: Vec<f64> = poses.windows(2).map(|w| w[1].t - w[0].t).collect();
            gaps.sort_by(f64::total_cmp);
            gaps[gaps.len() / 2]
        };
        if interval.is_nan() || interval <= 0.0 {
            return Err(Error::PoseTrack("timestamps must be strictly increasing"));
        }
        Self::new(poses, interval)
    }

    pub fn poses(&self) -> &[HeadPose] {
        &self.poses
    }

    pub fn sample_interval_s(&self) -> f64 {
        self.sample_interval_s
    }

    pub fn calibration(&self) -> &HeadPose {
        &self.poses[0]
    }

    /// Time of the last sample.
    pub fn end_time(&self) -> f64 {
        self.poses[self.poses.len() - 1].t
    }

    /// Pose held at time `t` (last sample at or before `t`; the first sample
    /// before the track starts).
    pub fn pose_at(&self, t: f64) -> &HeadPose {
        let idx = self.poses.partition_point(|p| p.t <= t);
        &self.poses[idx.saturating_sub(1)]
    }

    /// Head-frame source direction at time `t`, calibrated at the first pose.
    pub fn source_direction_at(&self, t: f64, initial: &Direction) -> Direction {
        calibrated_source_direction(self.calibration(), self.pose_at(t), initial)
    }

    pub fn mirrored(&self) -> Self {
        Self {
            poses: self.poses.iter().map(HeadPose::mirrored).collect(),
            sample_interval_s: self.sample_interval_s,
        }
    }
}

/// Index of a 5° × 5° direction bin. Azimuth bin 0 is centered at -180°,
/// elevation bin 0 at -90°.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BinIndex {
    pub azimuth_bin: usize,
    pub elevation_bin: usize,
}

impl BinIndex {
    pub fn new(azimuth_bin: usize, elevation_bin: usize) -> Result<Self> {
        if azimuth_bin >= AZ_BINS || elevation_bin >= EL_BINS {
            return Err(Error::BinOutOfRange {
                azimuth_bin,
                elevation_bin,
            });
        }
        Ok(Self {
            azimuth_bin,
            elevation_bin,
        })
    }

    /// Row-major position `[elevation][azimuth]`.
    pub fn flat(&self) -> usize {
        self.elevation_bin * AZ_BINS + self.azimuth_bin
    }

    pub fn from_flat(i: usize) -> Self {
        Self {
            azimuth_bin: i % AZ_BINS,
            elevation_bin: i / AZ_BINS,
        }
    }

    pub fn is_pole(&self) -> bool {
        self.elevation_bin == 0 || self.elevation_bin == EL_BINS - 1
    }

    /// Representative of the bin's alias class: every azimuth bin on a pole
    /// row collapses to azimuth bin 0.
    pub fn canonical(&self) -> Self {
        if self.is_pole() {
            Self {
                azimuth_bin: 0,
                elevation_bin: self.elevation_bin,
            }
        } else {
            *self
        }
    }

    /// Iterates all bins in row-major order.
    pub fn all() -> impl Iterator<Item = BinIndex> {
        (0..NUM_BINS).map(BinIndex::from_flat)
    }
}

/// Bin containing `d` (nearest multiple of 5° on each axis, azimuth wrapping).
pub fn bin_direction(d: &Direction) -> BinIndex {
    let az_steps = libm::round(d.azimuth_deg() / BIN_DEG) as i64;
    let el_steps = libm::round(d.elevation_deg() / BIN_DEG) as i64;
    let half_az = (AZ_BINS / 2) as i64;
    let half_el = (EL_BINS / 2) as i64;
    BinIndex {
        azimuth_bin: (az_steps + half_az).rem_euclid(AZ_BINS as i64) as usize,
        elevation_bin: (el_steps + half_el).clamp(0, EL_BINS as i64 - 1) as usize,
    }
}

/// Center direction of a bin.
pub fn bin_center(b: &BinIndex) -> Result<Direction> {
    let b = BinIndex::new(b.azimuth_bin, b.elevation_bin)?;
    let az = b.azimuth_bin as f64 * BIN_DEG - 180.0;
    let el = b.elevation_bin as f64 * BIN_DEG - 90.0;
    Direction::new(az, el)
}
