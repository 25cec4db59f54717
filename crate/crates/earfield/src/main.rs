use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use earfield::dataset::{generate_dataset, load_corpus, load_recording, read_manifest, DatasetConfig, Preset};
use earfield::formats::{read_hrir, read_weights, write_grid, write_hrir};
use earfield::hrtfs::{builtin_grid, load_grid_arg, load_hrtf_set};
use earfield::live::render_live;
use earfield::pose_log::read_pose_log;
use earfield::report::{coverage_json, lsd_json, write_json, write_lsd_csv};
use earfield::udp::PoseListener;
use earfield::wav::{read_pipeline_wav, write_binaural};
use earfield::{Error, Result};
use earfield_core::aggregator::{
    accumulate_recording, EstimateConfig, FillPolicy, HrtfAccumulator, Statistic, DEFAULT_ENERGY_THRESHOLD,
};
use earfield_core::evaluator::{compare_grids, CompareOptions, EarMode, FreqRange, DEFAULT_F_HI_HZ, DEFAULT_F_LO_HZ};
use earfield_core::hrtf::{synthesize_hrirs, HeadModel, Hrir, DEFAULT_IR_LENGTH};
use earfield_core::playback::{render_track, BLOCK_LEN};
use earfield_core::predictor::{Predictor, UNet, DEFAULT_FLOOR_DB};
use earfield_core::sim::DEFAULT_NOISE_DB;
use earfield_core::spatial::Direction;
use earfield_core::SAMPLE_RATE_HZ;
use log::info;

#[derive(Parser)]
#[command(name = "earfield", version, about = "Personalized HRTF estimation from head-tracked binaural recordings")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Render simulated recordings with labels and a manifest.
    GenData(GenData),
    /// Estimate an HRTF grid and HRIRs from a manifest of recordings.
    Estimate(Estimate),
    /// Log-spectral distortion between an estimated and a reference grid.
    Evaluate(Evaluate),
    /// Head-tracked playback from UDP poses or a pose log.
    RenderLive(RenderLive),
    /// Write a built-in head model as grid and HRIR files.
    SynthHrtf(SynthHrtf),
}

#[derive(Clone, Copy, ValueEnum)]
enum PresetArg {
    Random,
    Sweeps,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Switch {
    On,
    Off,
}

#[derive(clap::Args)]
struct GenData {
    #[arg(long, value_enum, default_value = "random")]
    preset: PresetArg,
    /// Number of recordings (random preset).
    #[arg(long, default_value_t = 10)]
    count: usize,
    /// Directory of 48 kHz source clips (random preset).
    #[arg(long, default_value = "data/corpus")]
    corpus: PathBuf,
    /// `builtin`, `builtin:a,b`, or a directory of .grid files.
    #[arg(long, default_value = "builtin")]
    hrtf_set: String,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, env = "EARFIELD_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "on")]
    room: Switch,
    /// Ambient noise relative to the direct path, in dB.
    #[arg(long, default_value_t = DEFAULT_NOISE_DB, allow_hyphen_values = true)]
    noise_db: f64,
    #[arg(long)]
    no_noise: bool,
    /// Worker threads; output does not depend on it.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum PredictorArg {
    Oracle,
    Ratio,
    Neural,
}

#[derive(Clone, Copy, ValueEnum)]
enum StatArg {
    Mean,
    Median,
}

#[derive(Clone, Copy, ValueEnum)]
enum FillArg {
    Generic,
    LeaveInvalid,
}

#[derive(clap::Args)]
struct Estimate {
    /// Manifest (JSON lines) listing recordings, pose logs and calibration.
    #[arg(long)]
    recordings: PathBuf,
    #[arg(long, value_enum, default_value = "ratio")]
    predictor: PredictorArg,
    /// Weight bundle for the neural predictor.
    #[arg(long)]
    weights: Option<PathBuf>,
    /// Grid supplying phase and fill values.
    #[arg(long, default_value = "builtin:generic")]
    generic: String,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = DEFAULT_ENERGY_THRESHOLD)]
    energy_threshold: f64,
    #[arg(long, value_enum, default_value = "mean")]
    stat: StatArg,
    #[arg(long, value_enum, default_value = "generic")]
    fill: FillArg,
    /// Magnitude floor of the ratio predictor relative to the reference peak.
    #[arg(long, default_value_t = DEFAULT_FLOOR_DB, allow_hyphen_values = true)]
    floor_db: f64,
    #[arg(long, default_value_t = DEFAULT_IR_LENGTH)]
    ir_length: usize,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
    Both,
}

#[derive(Clone, Copy, ValueEnum)]
enum EarsArg {
    Average,
    Pooled,
}

#[derive(clap::Args)]
struct Evaluate {
    /// Estimated grid file.
    #[arg(long)]
    estimate: PathBuf,
    /// Reference grid file or `builtin:<subject>`.
    #[arg(long)]
    truth: String,
    /// Skip bins the estimate filled from the generic grid.
    #[arg(long)]
    visited_only: bool,
    #[arg(long, value_enum, default_value = "both")]
    format: FormatArg,
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Report name prefix; defaults to the reference's name.
    #[arg(long)]
    subject: Option<String>,
    /// Report name suffix; defaults to the estimate's file stem.
    #[arg(long)]
    condition: Option<String>,
    #[arg(long, default_value_t = DEFAULT_F_LO_HZ)]
    f_lo: f64,
    #[arg(long, default_value_t = DEFAULT_F_HI_HZ)]
    f_hi: f64,
    #[arg(long, value_enum, default_value = "average")]
    ears: EarsArg,
}

#[derive(clap::Args)]
struct RenderLive {
    /// HRIR file or `builtin:<subject>`.
    #[arg(long)]
    hrir: String,
    /// Source WAV, looped.
    #[arg(long)]
    source: PathBuf,
    /// UDP port to receive pose packets on.
    #[arg(long, conflicts_with = "poses")]
    listen: Option<u16>,
    /// Pose log to replay instead of listening.
    #[arg(long)]
    poses: Option<PathBuf>,
    /// Output WAV path, or `audio-device`.
    #[arg(long)]
    out: String,
    /// Head-frame source direction at calibration, `az,el` in degrees.
    #[arg(long, default_value = "0,0", allow_hyphen_values = true)]
    initial_dir: String,
    /// Seconds to render; defaults to the source length for replay.
    #[arg(long)]
    duration: Option<f64>,
    #[arg(long, default_value = "0.0.0.0")]
    bind: String,
}

#[derive(clap::Args)]
struct SynthHrtf {
    /// Built-in subject: generic, a, b, c or d.
    #[arg(long, default_value = "generic")]
    subject: String,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = DEFAULT_IR_LENGTH)]
    ir_length: usize,
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn gen_data(args: GenData) -> Result<()> {
    let preset = match args.preset {
        PresetArg::Random => Preset::Random,
        PresetArg::Sweeps => Preset::Sweeps,
    };
    if args.count == 0 && preset == Preset::Random {
        return Err(Error::Config("--count must be positive".into()));
    }
    let corpus = match preset {
        Preset::Random => load_corpus(&args.corpus)?,
        Preset::Sweeps => Vec::new(),
    };
    let hrtfs = load_hrtf_set(&args.hrtf_set)?;
    let threads = args
        .threads
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let rows = generate_dataset(&DatasetConfig {
        out_dir: args.out.clone(),
        preset,
        count: args.count,
        corpus,
        hrtfs,
        seed: args.seed,
        room: args.room == Switch::On,
        noise_db: (!args.no_noise).then_some(args.noise_db),
        threads,
    })?;
    println!("{} recordings in {}", rows.len(), args.out.display());
    Ok(())
}

fn estimate(args: Estimate) -> Result<()> {
    let predictor = match args.predictor {
        PredictorArg::Oracle => Predictor::Oracle,
        PredictorArg::Ratio => Predictor::Ratio { floor_db: args.floor_db },
        PredictorArg::Neural => {
            let path = args
                .weights
                .as_ref()
                .ok_or_else(|| Error::Config("--predictor neural needs --weights".into()))?;
            Predictor::Neural(Box::new(UNet::from_bundle(&read_weights(path)?)?))
        }
    };
    let rows = read_manifest(&args.recordings)?;
    if rows.is_empty() {
        return Err(Error::Config(format!("--recordings {}: no recordings", args.recordings.display())));
    }
    let base = args.recordings.parent().unwrap_or(Path::new("."));
    let generic = load_grid_arg(&args.generic)?;
    let stat = match args.stat {
        StatArg::Mean => Statistic::Mean,
        StatArg::Median => Statistic::Median,
    };
    let config = EstimateConfig {
        energy_threshold: args.energy_threshold,
        stat,
        fill: match args.fill {
            FillArg::Generic => FillPolicy::Generic,
            FillArg::LeaveInvalid => FillPolicy::LeaveInvalid,
        },
        ir_length: args.ir_length,
        ..Default::default()
    };
    let mut acc = match stat {
        Statistic::Mean => HrtfAccumulator::new(generic.freq_bins()),
        Statistic::Median => HrtfAccumulator::retaining_samples(generic.freq_bins()),
    };
    for row in &rows {
        let rec = load_recording(base, row)?;
        accumulate_recording(&mut acc, &rec, &predictor, generic.fft_size(), &config)?;
        info!("accumulated {}", row.id);
    }
    let (grid, hrir) = acc.finalize(&generic, config.fill, config.stat, config.ir_length)?;
    let coverage = acc.coverage();
    create_dir(&args.out)?;
    write_grid(&args.out.join("hrtf.grid"), &grid)?;
    write_hrir(&args.out.join("hrtf.hrir"), &hrir)?;
    write_json(&args.out.join("coverage.json"), &coverage_json(&coverage))?;
    println!(
        "{} recordings, {} bins visited ({:.1}% coverage), written to {}",
        rows.len(),
        coverage.visited.len(),
        100.0 * coverage.visited_fraction(),
        args.out.display()
    );
    Ok(())
}

fn stem(s: &str) -> String {
    match s.strip_prefix("builtin:") {
        Some(name) => name.to_string(),
        None => Path::new(s)
            .file_stem()
            .map_or_else(|| "grid".into(), |x| x.to_string_lossy().into_owned()),
    }
}

fn evaluate(args: Evaluate) -> Result<()> {
    let estimate = earfield::formats::read_grid(&args.estimate)?;
    let truth = load_grid_arg(&args.truth)?;
    let opts = CompareOptions {
        visited_only: args.visited_only,
        range: FreqRange {
            lo_hz: args.f_lo,
            hi_hz: args.f_hi,
        },
        ears: match args.ears {
            EarsArg::Average => EarMode::Average,
            EarsArg::Pooled => EarMode::Pooled,
        },
    };
    let report = compare_grids(&estimate, &truth, &opts)?;
    let subject = args.subject.unwrap_or_else(|| stem(&args.truth));
    let condition = args.condition.unwrap_or_else(|| stem(&args.estimate.to_string_lossy()));
    create_dir(&args.out)?;
    let name = format!("{subject}_{condition}_lsd");
    if args.format != FormatArg::Csv {
        write_json(&args.out.join(format!("{name}.json")), &lsd_json(&report))?;
    }
    if args.format != FormatArg::Json {
        write_lsd_csv(&args.out.join(format!("{name}.csv")), &report)?;
    }
    match report.median_db {
        Some(m) => println!("median LSD {m:.4} dB over {} bins", report.entries.len()),
        None => println!("median LSD n/a (no bins)"),
    }
    Ok(())
}

fn parse_direction(s: &str) -> Result<Direction> {
    let bad = || Error::Config(format!("--initial-dir {s:?}: expected az,el in degrees"));
    let (az, el) = s.split_once(',').ok_or_else(bad)?;
    let az: f64 = az.trim().parse().map_err(|_| bad())?;
    let el: f64 = el.trim().parse().map_err(|_| bad())?;
    Direction::new(az, el).map_err(|e| Error::Config(format!("--initial-dir {s:?}: {e}")))
}

fn load_hrir_arg(arg: &str) -> Result<Hrir> {
    match arg.strip_prefix("builtin:") {
        Some(name) => {
            let model =
                HeadModel::subject(name).ok_or_else(|| Error::Config(format!("--hrir: unknown subject {name:?}")))?;
            Ok(model.hrir(SAMPLE_RATE_HZ)?)
        }
        None => read_hrir(Path::new(arg)),
    }
}

fn render_live_cmd(args: RenderLive) -> Result<()> {
    if args.out == "audio-device" {
        return Err(Error::Config(
            "--out audio-device: this build has no audio output; give a .wav path".into(),
        ));
    }
    let initial = parse_direction(&args.initial_dir)?;
    let hrir = load_hrir_arg(&args.hrir)?;
    let source = read_pipeline_wav(&args.source)?.into_mono()?;
    let out = PathBuf::from(&args.out);
    let fs = SAMPLE_RATE_HZ as f64;
    let signal = match (&args.poses, args.listen) {
        (Some(poses), _) => {
            let track = read_pose_log(poses)?;
            let len = args.duration.map_or(source.len(), |d| (d * fs).round() as usize);
            render_track(&hrir, &source, initial, &track, len)?
        }
        (None, Some(port)) => {
            let listener = PoseListener::bind((args.bind.as_str(), port))?;
            info!("listening for poses on {}", listener.local_addr());
            let seconds = args.duration.unwrap_or(10.0);
            let blocks = (seconds * fs / BLOCK_LEN as f64).ceil() as usize;
            let outcome = render_live(&hrir, &source, initial, listener.ingest(), blocks, true)?;
            let stats = &listener.ingest().stats;
            let load = |a: &std::sync::atomic::AtomicU64| a.load(std::sync::atomic::Ordering::Relaxed);
            info!(
                "poses accepted {}, malformed {}, reordered {}; {} stale blocks",
                load(&stats.accepted),
                load(&stats.malformed),
                load(&stats.reordered),
                outcome.stale_blocks
            );
            outcome.output
        }
        (None, None) => return Err(Error::Config("render-live needs --listen or --poses".into())),
    };
    write_binaural(&out, &signal)?;
    println!("{} samples written to {}", signal.len(), out.display());
    Ok(())
}

fn synth_hrtf(args: SynthHrtf) -> Result<()> {
    let grid = builtin_grid(&args.subject)?;
    let hrir = synthesize_hrirs(&grid, &grid, args.ir_length)?;
    create_dir(&args.out)?;
    write_grid(&args.out.join(format!("{}.grid", args.subject)), &grid)?;
    write_hrir(&args.out.join(format!("{}.hrir", args.subject)), &hrir)?;
    println!("wrote {} grid and HRIRs to {}", args.subject, args.out.display());
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::GenData(a) => gen_data(a),
        Command::Estimate(a) => estimate(a),
        Command::Evaluate(a) => evaluate(a),
        Command::RenderLive(a) => render_live_cmd(a),
        Command::SynthHrtf(a) => synth_hrtf(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
