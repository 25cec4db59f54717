//! Head-pose packets over UDP.
//!
//! Wire format, little-endian, 28 bytes: `HPOS`, u32 sequence number, f64
//! timestamp in seconds, then yaw, pitch and roll in degrees as f32.

use std::net::{SocketAddr, ToSocketAddrs, UdpSocket};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;
use std::time::{Duration, Instant};

use earfield_core::spatial::HeadPose;
use log::{debug, warn};

use crate::{Error, Result};

pub const POSE_MAGIC: [u8; 4] = *b"HPOS";
pub const PACKET_LEN: usize = 28;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PosePacket {
    pub seq: u32,
    pub timestamp_s: f64,
    pub yaw_deg: f32,
    pub pitch_deg: f32,
    pub roll_deg: f32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PacketError {
    Length(usize),
    Magic,
    NonFinite,
}

impl PosePacket {
    pub fn to_bytes(&self) -> [u8; PACKET_LEN] {
        let mut b = [0u8; PACKET_LEN];
        b[0..4].copy_from_slice(&POSE_MAGIC);
        b[4..8].copy_from_slice(&self.seq.to_le_bytes());
        b[8..16].copy_from_slice(&self.timestamp_s.to_le_bytes());
        b[16..20].copy_from_slice(&self.yaw_deg.to_le_bytes());
        b[20..24].copy_from_slice(&self.pitch_deg.to_le_bytes());
        b[24..28].copy_from_slice(&self.roll_deg.to_le_bytes());
        b
    }

    pub fn from_bytes(b: &[u8]) -> std::result::Result<Self, PacketError> {
        if b.len() != PACKET_LEN {
            return Err(PacketError::Length(b.len()));
        }
        if b[0..4] != POSE_MAGIC {
            return Err(PacketError::Magic);
        }
        let f32_at = |i: usize| f32::from_le_bytes(b[i..i + 4].try_into().expect("4 bytes"));
        let p = PosePacket {
            seq: u32::from_le_bytes(b[4..8].try_into().expect("4 bytes")),
            timestamp_s: f64::from_le_bytes(b[8..16].try_into().expect("8 bytes")),
            yaw_deg: f32_at(16),
            pitch_deg: f32_at(20),
            roll_deg: f32_at(24),
        };
        let finite = p.timestamp_s.is_finite() && [p.yaw_deg, p.pitch_deg, p.roll_deg].iter().all(|v| v.is_finite());
        if !finite {
            return Err(PacketError::NonFinite);
        }
        Ok(p)
    }

    pub fn pose(&self) -> Result<HeadPose> {
        Ok(HeadPose::new(
            self.timestamp_s.max(0.0),
            self.yaw_deg as f64,
            self.pitch_deg as f64,
            self.roll_deg as f64,
        )?)
    }
}

/// A pose with the instant its packet arrived.
#[derive(Clone, Copy, Debug)]
pub struct Received {
    pub packet: PosePacket,
    pub arrived: Instant,
}

#[derive(Debug, Default)]
pub struct ListenerStats {
    pub accepted: AtomicU64,
    pub malformed: AtomicU64,
    pub reordered: AtomicU64,
}

/// Latest-pose slot plus the sequence filter; last writer wins.
#[derive(Debug, Default)]
pub struct PoseIngest {
    slot: Mutex<Option<Received>>,
    last_seq: Mutex<Option<u32>>,
    pub stats: ListenerStats,
}

impl PoseIngest {
    /// Parses one datagram; malformed packets and sequence regressions are
    /// counted and dropped.
    pub fn handle(&self, bytes: &[u8], arrived: Instant) -> bool {
        let packet = match PosePacket::from_bytes(bytes) {
            Ok(p) => p,
            Err(e) => {
                debug!("dropping malformed pose packet: {e:?}");
                self.stats.malformed.fetch_add(1, Ordering::Relaxed);
                return false;
            }
        };
        {
            let mut last = self.last_seq.lock().expect("sequence lock poisoned");
            if last.is_some_and(|l| packet.seq <= l) {
                self.stats.reordered.fetch_add(1, Ordering::Relaxed);
                return false;
            }
            *last = Some(packet.seq);
        }
        *self.slot.lock().expect("pose slot poisoned") = Some(Received { packet, arrived });
        self.stats.accepted.fetch_add(1, Ordering::Relaxed);
        true
    }

    /// Most recent accepted pose, if any. Never waits on the network.
    pub fn latest(&self) -> Option<Received> {
        *self.slot.lock().expect("pose slot poisoned")
    }
}

/// Background UDP receiver feeding a [`PoseIngest`].
pub struct PoseListener {
    ingest: Arc<PoseIngest>,
    stop: Arc<AtomicBool>,
    handle: Option<JoinHandle<()>>,
    local_addr: SocketAddr,
}

impl PoseListener {
    pub fn bind(addr: impl ToSocketAddrs) -> Result<Self> {
        let socket = UdpSocket::bind(addr).map_err(|e| Error::io("udp socket", e))?;
        socket
            .set_read_timeout(Some(Duration::from_millis(20)))
            .map_err(|e| Error::io("udp socket", e))?;
        let local_addr = socket.local_addr().map_err(|e| Error::io("udp socket", e))?;
        let ingest = Arc::new(PoseIngest::default());
        let stop = Arc::new(AtomicBool::new(false));
        let handle = {
            let (ingest, stop) = (ingest.clone(), stop.clone());
            std::thread::spawn(move || {
                let mut buf = [0u8; 512];
                while !stop.load(Ordering::Relaxed) {
                    match socket.recv_from(&mut buf) {
                        Ok((n, _)) => {
                            ingest.handle(&buf[..n], Instant::now());
                        }
                        Err(e) if matches!(e.kind(), std::io::ErrorKind::WouldBlock | std::io::ErrorKind::TimedOut) => {}
                        Err(e) => warn!("pose socket: {e}"),
                    }
                }
            })
        };
        Ok(Self {
            ingest,
            stop,
            handle: Some(handle),
            local_addr,
        })
    }

    pub fn local_addr(&self) -> SocketAddr {
        self.local_addr
    }

    pub fn ingest(&self) -> &PoseIngest {
        &self.ingest
    }
}

impl Drop for PoseListener {
    fn drop(&mut self) {
        self.stop.store(true, Ordering::Relaxed);
        if let Some(h) = self.handle.take() {
            let _ = h.join();
        }
    }
}
