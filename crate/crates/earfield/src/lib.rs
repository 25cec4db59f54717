//! File formats, audio and pose IO, dataset generation and live rendering
//! around `earfield-core`.

pub mod dataset;
pub mod error;
pub mod formats;
pub mod hrtfs;
pub mod live;
pub mod pose_log;
pub mod report;
pub mod udp;
pub mod wav;

pub use error::{Error, Result};
