//! Pose logs: CSV with header `t,yaw,pitch,roll`, seconds and degrees.

use std::path::Path;

use earfield_core::spatial::{HeadPose, PoseTrack};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Serialize, Deserialize)]
struct Row {
    t: f64,
    yaw: f64,
    pitch: f64,
    roll: f64,
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> Error + '_ {
    move |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    }
}

pub fn read_pose_log(path: &Path) -> Result<PoseTrack> {
    let mut reader = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let headers = reader.headers().map_err(csv_err(path))?.clone();
    if headers.iter().map(str::trim).collect::<Vec<_>>() != ["t", "yaw", "pitch", "roll"] {
        return Err(Error::format(
            "pose log",
            format!("{}: header must be t,yaw,pitch,roll", path.display()),
        ));
    }
    let mut poses = Vec::new();
    for row in reader.deserialize::<Row>() {
        let r = row.map_err(csv_err(path))?;
        poses.push(HeadPose::new(r.t, r.yaw, r.pitch, r.roll)?);
    }
    if poses.is_empty() {
        return Err(Error::format("pose log", format!("{}: no poses", path.display())));
    }
    Ok(PoseTrack::from_poses(poses)?)
}

pub fn write_pose_log(path: &Path, track: &PoseTrack) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    for p in track.poses() {
        w.serialize(Row {
            t: p.t,
            yaw: p.yaw_deg,
            pitch: p.pitch_deg,
            roll: p.roll_deg,
        })
        .map_err(csv_err(path))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
