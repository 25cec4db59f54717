//! LSD and coverage reports as CSV and JSON.

use std::path::Path;

use earfield_core::aggregator::{CoverageReport, LOGICAL_BINS};
use earfield_core::evaluator::{EarMode, LsdReport};
use earfield_core::spatial::{bin_center, BinIndex};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LsdRow {
    pub az_deg: f64,
    pub el_deg: f64,
    pub lsd_db: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LsdSummary {
    pub median_db: f64,
    pub mean_db: f64,
    pub bins: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LsdJson {
    pub f_lo_hz: f64,
    pub f_hi_hz: f64,
    pub visited_only: bool,
    pub ears: String,
    pub summary: Option<LsdSummary>,
    pub bins: Vec<LsdRow>,
}

fn center(b: &BinIndex) -> (f64, f64) {
    let d = bin_center(b).expect("report bins are in range");
    (d.azimuth_deg(), d.elevation_deg())
}

pub fn lsd_rows(report: &LsdReport) -> Vec<LsdRow> {
    report
        .entries
        .iter()
        .map(|(b, v)| {
            let (az_deg, el_deg) = center(b);
            LsdRow {
                az_deg,
                el_deg,
                lsd_db: *v,
            }
        })
        .collect()
}

pub fn lsd_json(report: &LsdReport) -> LsdJson {
    LsdJson {
        f_lo_hz: report.range.lo_hz,
        f_hi_hz: report.range.hi_hz,
        visited_only: report.visited_only,
        ears: match report.ears {
            EarMode::Average => "average",
            EarMode::Pooled => "pooled",
        }
        .into(),
        summary: report.median_db.zip(report.mean_db).map(|(median_db, mean_db)| LsdSummary {
            median_db,
            mean_db,
            bins: report.entries.len(),
        }),
        bins: lsd_rows(report),
    }
}

pub fn write_lsd_csv(path: &Path, report: &LsdReport) -> Result<()> {
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(csv_err)?;
    w.write_record(["az_deg", "el_deg", "lsd_db"]).map_err(csv_err)?;
    for row in lsd_rows(report) {
        w.serialize(row).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverageBin {
    pub az_deg: f64,
    pub el_deg: f64,
    pub frames: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistogramBucket {
    pub min_frames: u64,
    pub max_frames_exclusive: u64,
    pub bins: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverageJson {
    pub visited_fraction: f64,
    pub visited_bins: usize,
    pub logical_bins: usize,
    pub histogram: Vec<HistogramBucket>,
    /// Gated frame counts, `[elevation][azimuth]` from (-90, -180) upward.
    pub heatmap: Vec<Vec<u64>>,
    pub bins: Vec<CoverageBin>,
}

pub fn coverage_json(report: &CoverageReport) -> CoverageJson {
    CoverageJson {
        visited_fraction: report.visited_fraction(),
        visited_bins: report.visited.len(),
        logical_bins: LOGICAL_BINS,
        histogram: report
            .histogram()
            .into_iter()
            .map(|(lo, hi, bins)| HistogramBucket {
                min_frames: lo,
                max_frames_exclusive: hi,
                bins,
            })
            .collect(),
        heatmap: report.heatmap(),
        bins: report
            .visited
            .iter()
            .map(|(b, frames)| {
                let (az_deg, el_deg) = center(b);
                CoverageBin {
                    az_deg,
                    el_deg,
                    frames: *frames,
                }
            })
            .collect(),
    }
}
