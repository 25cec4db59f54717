//! Simulated training and evaluation data: rendering, file layout and the
//! JSON-lines manifest.

use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use earfield_core::aggregator::CalibratedRecording;
use earfield_core::dsp::{MonoSignal, Spectrogram, DEFAULT_HOP, DEFAULT_WINDOW};
use earfield_core::hrtf::HrtfGrid;
use earfield_core::sim::{
    has_minimum_bandwidth, random_pose_track, render, sweep_scenarios, white_noise, RoomConfig, Scenario,
    DEFAULT_DURATION_S,
};
use earfield_core::spatial::Direction;
use earfield_core::SAMPLE_RATE_HZ;
use log::{debug, info, warn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::formats::{read_labels, write_labels, LabelTensor};
use crate::pose_log::{read_pose_log, write_pose_log};
use crate::wav::{read_binaural, read_mono, read_pipeline_wav, write_binaural, write_mono};
use crate::{Error, Result};

pub const MANIFEST_NAME: &str = "manifest.jsonl";
/// Room used by the sweep preset when multipath is on.
pub const SWEEP_ROOM_WALLS_M: [f64; 6] = [6.0; 6];
pub const SWEEP_ROOM_RT60_S: f64 = 0.6;
const MAX_SOURCE_DRAWS: usize = 64;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoomMeta {
    pub enabled: bool,
    pub wall_distances_m: [f64; 6],
    pub rt60_s: f64,
}

impl From<&RoomConfig> for RoomMeta {
    fn from(r: &RoomConfig) -> Self {
        Self {
            enabled: r.enabled,
            wall_distances_m: r.wall_distances_m,
            rt60_s: r.rt60_s,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioMeta {
    pub source_distance_m: f64,
    pub duration_s: f64,
    pub image_order: usize,
    pub ambient_noise_db: Option<f64>,
    pub room: RoomMeta,
}

/// One recording. Paths are relative to the manifest's directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestRow {
    pub id: String,
    pub seed: u64,
    pub hrtf: String,
    pub source: String,
    pub source_offset: usize,
    pub binaural: String,
    pub poses: String,
    /// Head-frame source direction at the first pose.
    pub initial_azimuth_deg: f64,
    pub initial_elevation_deg: f64,
    pub labels: Option<String>,
    pub reference: Option<String>,
    pub scenario: Option<ScenarioMeta>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preset {
    /// Random directions, head motion, rooms and corpus excerpts.
    Random,
    /// The six frontal sweeps with a white-noise source.
    Sweeps,
}

pub struct DatasetConfig {
    pub out_dir: PathBuf,
    pub preset: Preset,
    /// Examples to draw; ignored by the sweep preset.
    pub count: usize,
    pub corpus: Vec<(String, MonoSignal)>,
    pub hrtfs: Vec<(String, HrtfGrid)>,
    pub seed: u64,
    pub room: bool,
    pub noise_db: Option<f64>,
    pub threads: usize,
}

/// Loads every `.wav` in `dir` (sorted by name) as a 48 kHz mono clip.
pub fn load_corpus(dir: &Path) -> Result<Vec<(String, MonoSignal)>> {
    if !dir.is_dir() {
        return Err(Error::Config(format!("--corpus {}: no such directory", dir.display())));
    }
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x.eq_ignore_ascii_case("wav")))
        .collect();
    paths.sort();
    let mut clips = Vec::new();
    for p in paths {
        let name = p.file_name().unwrap_or_default().to_string_lossy().into_owned();
        clips.push((name, read_pipeline_wav(&p)?.into_mono()?));
    }
    if clips.is_empty() {
        return Err(Error::Config(format!("--corpus {}: no .wav files", dir.display())));
    }
    Ok(clips)
}

struct Job {
    row: ManifestRow,
    scenario: Scenario,
    source: MonoSignal,
    hrtf: usize,
}

fn excerpt(clip: &MonoSignal, offset: usize, len: usize) -> Result<MonoSignal> {
    Ok(MonoSignal::new(clip.sample_rate_hz, clip.samples[offset..offset + len].to_vec())?)
}

fn random_room(rng: &mut ChaCha8Rng) -> Result<RoomConfig> {
    let walls = std::array::from_fn(|_| rng.random_range(2.0..=10.0));
    Ok(RoomConfig::new(walls, rng.random_range(0.4..=0.9))?)
}

fn base_row(id: String, seed: u64, hrtf: &str, source: &str, offset: usize, initial: Direction) -> ManifestRow {
    ManifestRow {
        binaural: format!("{id}.wav"),
        poses: format!("{id}.poses.csv"),
        labels: Some(format!("{id}.lbl")),
        reference: Some(format!("{id}.ref.wav")),
        id,
        seed,
        hrtf: hrtf.to_string(),
        source: source.to_string(),
        source_offset: offset,
        initial_azimuth_deg: initial.azimuth_deg(),
        initial_elevation_deg: initial.elevation_deg(),
        scenario: None,
    }
}

fn random_job(config: &DatasetConfig, index: usize, seed: u64) -> Result<Job> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let hrtf = rng.random_range(0..config.hrtfs.len());
    let initial = Direction::new(rng.random_range(-180.0..180.0), rng.random_range(-45.0..=45.0))?;
    let track = random_pose_track(DEFAULT_DURATION_S, rng.random())?;
    let mut scenario = Scenario::new(initial, track);
    scenario.ambient_noise_db = config.noise_db;
    if config.room {
        scenario.room = random_room(&mut rng)?;
    }
    let n = (DEFAULT_DURATION_S * SAMPLE_RATE_HZ as f64).round() as usize;
    let usable: Vec<usize> = (0..config.corpus.len()).filter(|&i| config.corpus[i].1.len() >= n).collect();
    if usable.is_empty() {
        return Err(Error::Config(format!("--corpus has no clip of at least {DEFAULT_DURATION_S} s")));
    }
    for _ in 0..MAX_SOURCE_DRAWS {
        let (name, clip) = &config.corpus[usable[rng.random_range(0..usable.len())]];
        let offset = rng.random_range(0..=clip.len() - n);
        let source = excerpt(clip, offset, n)?;
        if has_minimum_bandwidth(&source)? {
            let row = base_row(format!("{index:06}"), seed, &config.hrtfs[hrtf].0, name, offset, initial);
            return Ok(Job {
                row,
                scenario,
                source,
                hrtf,
            });
        }
        debug!("example {index}: {name}@{offset} rejected by the bandwidth filter");
    }
    Err(Error::Config(format!(
        "--corpus: no excerpt passed the bandwidth filter in {MAX_SOURCE_DRAWS} draws"
    )))
}

fn jobs(config: &DatasetConfig) -> Result<Vec<Job>> {
    if config.hrtfs.is_empty() {
        return Err(Error::Config("--hrtf-set is empty".into()));
    }
    let mut master = ChaCha8Rng::seed_from_u64(config.seed);
    match config.preset {
        Preset::Random => {
            if config.corpus.is_empty() {
                return Err(Error::Config("--corpus is empty".into()));
            }
            let seeds: Vec<u64> = (0..config.count).map(|_| master.random()).collect();
            seeds.iter().enumerate().map(|(i, &s)| random_job(config, i, s)).collect()
        }
        Preset::Sweeps => {
            let n = (DEFAULT_DURATION_S * SAMPLE_RATE_HZ as f64).round() as usize;
            let mut out = Vec::new();
            for (i, mut scenario) in sweep_scenarios()?.into_iter().enumerate() {
                let seed: u64 = master.random();
                if config.room {
                    scenario.room = RoomConfig::new(SWEEP_ROOM_WALLS_M, SWEEP_ROOM_RT60_S)?;
                }
                scenario.ambient_noise_db = config.noise_db;
                let hrtf = i % config.hrtfs.len();
                let row = base_row(
                    format!("{i:06}"),
                    seed,
                    &config.hrtfs[hrtf].0,
                    "white-noise",
                    0,
                    scenario.source_direction,
                );
                out.push(Job {
                    row,
                    source: white_noise(n, SAMPLE_RATE_HZ, seed)?,
                    scenario,
                    hrtf,
                });
            }
            Ok(out)
        }
    }
}

fn run_job(config: &DatasetConfig, job: Job) -> Result<ManifestRow> {
    let Job {
        mut row,
        scenario,
        source,
        hrtf,
    } = job;
    let rec = render(&scenario, &source, &config.hrtfs[hrtf].1, row.seed)?;
    let dir = &config.out_dir;
    write_binaural(&dir.join(&row.binaural), &rec.binaural)?;
    write_pose_log(&dir.join(&row.poses), &scenario.pose_track)?;
    if let Some(p) = &row.labels {
        let l = &rec.labels;
        write_labels(&dir.join(p), &LabelTensor::from_f64(l.frames(), l.bins(), l.magnitudes())?)?;
    }
    if let Some(p) = &row.reference {
        write_mono(&dir.join(p), &rec.reference)?;
    }
    row.scenario = Some(ScenarioMeta {
        source_distance_m: scenario.source_distance_m,
        duration_s: scenario.duration_s,
        image_order: scenario.image_order,
        ambient_noise_db: scenario.ambient_noise_db,
        room: RoomMeta::from(&scenario.room),
    });
    Ok(row)
}

/// Renders the dataset into `config.out_dir` and writes the manifest. Files
/// and manifest bytes depend only on the configuration, not on scheduling.
pub fn generate_dataset(config: &DatasetConfig) -> Result<Vec<ManifestRow>> {
    std::fs::create_dir_all(&config.out_dir).map_err(|e| Error::io(&config.out_dir, e))?;
    let jobs = jobs(config)?;
    let total = jobs.len();
    let queue = Mutex::new(jobs.into_iter().enumerate().collect::<Vec<_>>().into_iter());
    let results: Mutex<Vec<Option<Result<ManifestRow>>>> = Mutex::new((0..total).map(|_| None).collect());
    let done = AtomicUsize::new(0);
    std::thread::scope(|s| {
        for _ in 0..config.threads.clamp(1, total.max(1)) {
            s.spawn(|| loop {
                let next = queue.lock().expect("job queue poisoned").next();
                let Some((i, job)) = next else { break };
                let r = run_job(config, job);
                results.lock().expect("results poisoned")[i] = Some(r);
                let n = done.fetch_add(1, Ordering::Relaxed) + 1;
                debug!("rendered {n}/{total}");
            });
        }
    });
    let rows = results
        .into_inner()
        .expect("results poisoned")
        .into_iter()
        .map(|r| r.expect("every job ran"))
        .collect::<Result<Vec<_>>>()?;
    write_manifest(&config.out_dir.join(MANIFEST_NAME), &rows)?;
    info!("wrote {} recordings to {}", rows.len(), config.out_dir.display());
    Ok(rows)
}

pub fn write_manifest(path: &Path, rows: &[ManifestRow]) -> Result<()> {
    let mut out = Vec::new();
    for row in rows {
        serde_json::to_writer(&mut out, row).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })?;
        out.push(b'\n');
    }
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&out).map_err(|e| Error::io(path, e))
}

pub fn read_manifest(path: &Path) -> Result<Vec<ManifestRow>> {
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rows = Vec::new();
    for line in BufReader::new(f).lines() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        rows.push(serde_json::from_str(&line).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })?);
    }
    Ok(rows)
}

/// Loads the recording a manifest row describes, with its labels and
/// reference when present.
pub fn load_recording(base: &Path, row: &ManifestRow) -> Result<CalibratedRecording> {
    let binaural = read_binaural(&base.join(&row.binaural))?;
    let track = read_pose_log(&base.join(&row.poses))?;
    let initial = Direction::new(row.initial_azimuth_deg, row.initial_elevation_deg)?;
    let mut rec = CalibratedRecording::new(binaural, track, initial);
    if let Some(p) = &row.reference {
        rec.reference = Some(read_mono(&base.join(p))?);
    }
    if let Some(p) = &row.labels {
        let path = base.join(p);
        let t = read_labels(&path)?;
        if t.bins != DEFAULT_WINDOW / 2 + 1 {
            warn!("{}: {} frequency bins", path.display(), t.bins);
        }
        rec.labels = Some(Spectrogram::new(
            2,
            t.frames,
            2 * (t.bins - 1),
            DEFAULT_HOP,
            SAMPLE_RATE_HZ,
            t.to_f64(),
        )?);
    }
    Ok(rec)
}
