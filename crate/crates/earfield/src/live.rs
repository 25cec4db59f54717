//! Real-time head-tracked rendering driven by network poses.

use std::time::{Duration, Instant};

use earfield_core::dsp::{BinauralSignal, MonoSignal};
use earfield_core::hrtf::Hrir;
use earfield_core::playback::{HeadTrackedRenderer, BLOCK_LEN};
use earfield_core::spatial::{Direction, HeadPose};
use log::{info, warn};

use crate::udp::PoseIngest;
use crate::Result;

/// Pose-to-output target for a 10 ms block.
pub const LATENCY_TARGET_MS: f64 = 30.0;

#[derive(Clone, Debug, PartialEq)]
pub struct LiveOutcome {
    pub output: BinauralSignal,
    /// Packet arrival to completion of the block that switched HRIRs.
    pub latencies_ms: Vec<f64>,
    /// Blocks rendered without a pose newer than the previous block's.
    pub stale_blocks: usize,
}

/// Renders `blocks` blocks, reading the newest pose before each one. The
/// first accepted packet calibrates the head frame; until it arrives the
/// source is held at `initial`. With `pace` set, blocks are produced on a
/// 10 ms clock instead of as fast as possible.
pub fn render_live(
    hrir: &Hrir,
    source: &MonoSignal,
    initial: Direction,
    ingest: &PoseIngest,
    blocks: usize,
    pace: bool,
) -> Result<LiveOutcome> {
    let mut renderer = HeadTrackedRenderer::new(hrir.clone(), source, initial)?;
    let block_dur = Duration::from_secs_f64(BLOCK_LEN as f64 / renderer.sample_rate_hz() as f64);
    let start = Instant::now();
    let mut left = Vec::with_capacity(blocks * BLOCK_LEN);
    let mut right = Vec::with_capacity(blocks * BLOCK_LEN);
    let mut latencies_ms = Vec::new();
    let mut stale_blocks = 0;
    let mut calibrated = false;
    let mut last_seq = None;
    for k in 0..blocks {
        if pace {
            let due = start + block_dur * k as u32;
            if let Some(wait) = due.checked_duration_since(Instant::now()) {
                std::thread::sleep(wait);
            }
        }
        let latest = ingest.latest();
        let pose = match latest {
            Some(r) => {
                let pose = r.packet.pose()?;
                if !calibrated {
                    renderer.calibrate(pose);
                    calibrated = true;
                }
                pose
            }
            None => HeadPose::identity(0.0),
        };
        let seq = latest.map(|r| r.packet.seq);
        if seq == last_seq {
            stale_blocks += 1;
        }
        let block = renderer.render_block(&pose)?;
        if let (true, Some(r)) = (block.switched && seq != last_seq, latest) {
            latencies_ms.push(r.arrived.elapsed().as_secs_f64() * 1e3);
        }
        last_seq = seq;
        left.extend_from_slice(&block.left);
        right.extend_from_slice(&block.right);
    }
    if !latencies_ms.is_empty() {
        let max = latencies_ms.iter().copied().fold(0.0, f64::max);
        let mean = latencies_ms.iter().sum::<f64>() / latencies_ms.len() as f64;
        info!(
            "pose-to-output latency over {} switches: mean {mean:.2} ms, max {max:.2} ms",
            latencies_ms.len()
        );
        if max > LATENCY_TARGET_MS {
            warn!("latency above the {LATENCY_TARGET_MS} ms target");
        }
    }
    Ok(LiveOutcome {
        output: BinauralSignal::new(renderer.sample_rate_hz(), left, right)?,
        latencies_ms,
        stale_blocks,
    })
}
