//! End-to-end acceptance checks, one PASS/FAIL line per criterion.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::Instant;

use earfield::formats::{read_hrir, read_labels, read_weights};
use earfield::pose_log::{read_pose_log, write_pose_log};
use earfield::wav::{read_binaural, read_mono, write_mono};
use earfield_core::aggregator::{FillPolicy, HrtfAccumulator, Statistic};
use earfield_core::dsp::{Spectrogram, DEFAULT_WINDOW};
use earfield_core::evaluator::lsd_bins;
use earfield_core::hrtf::{BinState, Ear, HeadModel, HrtfGrid};
use earfield_core::playback::render_track;
use earfield_core::predictor::{neural_predict, FilterEstimate, Fingerprint, UNet};
use earfield_core::sim::{
    image_sources, random_pose_track, render, room_impulse_response, schroeder_rt60, sweep_track, white_noise,
    RoomConfig, Scenario,
};
use earfield_core::spatial::{
    bin_center, bin_direction, relative_source_direction, BinIndex, Direction, HeadPose, PoseTrack, AZ_BINS,
};
use earfield_core::SAMPLE_RATE_HZ;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tempfile::TempDir;

type Check = std::result::Result<String, String>;
type CheckFn<'a> = Box<dyn FnOnce() -> Check + 'a>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> std::result::Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn cli(args: &[&str]) -> std::result::Result<String, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_earfield"))
        .args(args)
        .env("RUST_LOG", "warn")
        .env_remove("EARFIELD_SEED")
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!("{args:?}: {}", String::from_utf8_lossy(&out.stderr).trim()));
    }
    Ok(String::from_utf8_lossy(&out.stdout).into_owned())
}

fn s(p: &Path) -> &str {
    p.to_str().expect("utf-8 temp path")
}

fn read(p: &Path) -> std::result::Result<Vec<u8>, String> {
    std::fs::read(p).map_err(|e| format!("{}: {e}", p.display()))
}

fn json(p: &Path) -> std::result::Result<serde_json::Value, String> {
    serde_json::from_slice(&read(p)?).map_err(|e| e.to_string())
}

/// Sweeps dataset plus estimate, then visited-only LSD against subject `a`.
fn sweep_lsd(work: &Path, name: &str, room: &str, predictor: &str) -> std::result::Result<(f64, f64), String> {
    let data = work.join(format!("data_{room}"));
    if !data.join("manifest.jsonl").exists() {
        cli(&["gen-data", "--preset", "sweeps", "--hrtf-set", "builtin:a", "--room", room, "--no-noise", "--out", s(&data)])?;
    }
    let est = work.join(name);
    cli(&["estimate", "--recordings", s(&data.join("manifest.jsonl")), "--predictor", predictor, "--out", s(&est)])?;
    cli(&[
        "evaluate", "--estimate", s(&est.join("hrtf.grid")), "--truth", "builtin:a", "--visited-only", "--format", "json",
        "--condition", name, "--out", s(work),
    ])?;
    let report = json(&work.join(format!("a_{name}_lsd.json")))?;
    let median = report["summary"]["median_db"].as_f64().ok_or("no LSD summary")?;
    let coverage = json(&est.join("coverage.json"))?["visited_fraction"].as_f64().ok_or("no coverage")?;
    Ok((median, coverage))
}

fn oracle_closure(work: &Path) -> Check {
    let start = Instant::now();
    let (median, coverage) = sweep_lsd(work, "oracle", "off", "oracle")?;
    let secs = start.elapsed().as_secs_f64();
    ensure(median < 1.0 && coverage > 0.05 && secs < 60.0, || {
        format!("median {median:.3} dB, coverage {coverage:.3}, {secs:.1} s")
    })?;
    Ok(format!("median {median:.3} dB < 1.0, coverage {coverage:.3}, {secs:.1} s < 60 s"))
}

fn reference_division(work: &Path) -> Check {
    let (dry, _) = sweep_lsd(work, "ratio_dry", "off", "ratio")?;
    let (wet, _) = sweep_lsd(work, "ratio_room", "on", "ratio")?;
    ensure(dry < 1.5 && wet < 6.0 && wet > dry, || format!("anechoic {dry:.3} dB, room {wet:.3} dB"))?;
    Ok(format!("anechoic {dry:.3} dB < 1.5, room RT60 0.6 s {wet:.3} dB < 6"))
}

fn lsd_suite() -> Check {
    let t: Vec<f64> = (0..64).map(|k| 0.2 + (k % 9) as f64 * 0.3).collect();
    let n = t.len();
    let scaled = |c: f64| t.iter().map(|v| v * c).collect::<Vec<_>>();
    let close = |name: &str, got: f64, want: f64| ensure((got - want).abs() < 1e-3, || format!("{name}: {got} vs {want}"));
    close("identity", lsd_bins(&t, &t, 0..n).map_err(|e| e.to_string())?, 0.0)?;
    close("ratio 10", lsd_bins(&scaled(10.0), &t, 0..n).unwrap(), 20.0)?;
    close("ratio 2", lsd_bins(&scaled(2.0), &t, 0..n).unwrap(), 6.0206)?;
    let alt: Vec<f64> = t.iter().enumerate().map(|(k, v)| if k % 2 == 0 { v * 10.0 } else { *v }).collect();
    close("alternating", lsd_bins(&alt, &t, 0..n).unwrap(), 14.142)?;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..200 {
        let a: Vec<f64> = (0..n).map(|_| rng.random_range(1e-3..10.0)).collect();
        let b: Vec<f64> = (0..n).map(|_| rng.random_range(1e-3..10.0)).collect();
        let c = rng.random_range(0.01..100.0);
        let ab = lsd_bins(&a, &b, 0..n).unwrap();
        ensure(ab == lsd_bins(&b, &a, 0..n).unwrap(), || "asymmetric".into())?;
        let ca: Vec<f64> = a.iter().map(|v| v * c).collect();
        close("constant gain", lsd_bins(&ca, &a, 0..n).unwrap(), (20.0 * c.log10()).abs())?;
        let cb: Vec<f64> = b.iter().map(|v| v * c).collect();
        close("common scale", lsd_bins(&ca, &cb, 0..n).unwrap(), ab)?;
    }
    Ok("identity, 10x, 2x, alternating, symmetry and scale within 1e-3 dB".into())
}

const WINDOW: usize = 16;
const F: usize = WINDOW / 2 + 1;
const FS: u32 = 1000;

struct Rec {
    spec: Spectrogram,
    estimate: FilterEstimate,
    track: PoseTrack,
    initial: Direction,
}

fn random_rec(rng: &mut ChaCha8Rng) -> Rec {
    let frames = rng.random_range(1..6);
    let n = 2 * frames * F;
    let mags = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
    let valid: Vec<bool> = (0..n).map(|_| rng.random_bool(0.8)).collect();
    let gains = valid.iter().map(|v| if *v { rng.random_range(0.0..4.0) } else { 0.0 }).collect();
    let speed: f64 = rng.random_range(-600.0..600.0);
    let poses = (0..=frames)
        .map(|i| HeadPose::new(i as f64 * 0.004, speed * i as f64 * 0.004, 0.0, 0.0).unwrap())
        .collect();
    Rec {
        spec: Spectrogram::new(2, frames, WINDOW, 4, FS, mags).unwrap(),
        estimate: FilterEstimate::new(frames, F, gains, valid).unwrap(),
        track: PoseTrack::new(poses, 0.004).unwrap(),
        initial: Direction::new(rng.random_range(-180.0..180.0), rng.random_range(-60.0..60.0)).unwrap(),
    }
}

fn small_generic() -> HrtfGrid {
    let mut g = HrtfGrid::new(WINDOW, FS).unwrap();
    let phase: Vec<f64> = (0..F).map(|k| if k == 0 || k == F - 1 { 0.0 } else { 0.1 * k as f64 }).collect();
    for b in BinIndex::all() {
        for ear in Ear::BOTH {
            g.set_spectrum(b, ear, &[0.5; F], &phase).unwrap();
        }
        g.set_state(b, BinState::Measured);
    }
    g
}

fn accumulate(acc: &mut HrtfAccumulator, recs: &[&Rec], threshold: f64) {
    for r in recs {
        acc.accumulate(&r.estimate, &r.spec, &r.track, &r.initial, threshold).unwrap();
    }
}

fn algorithm_properties() -> Check {
    let generic = small_generic();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for trial in 0..40 {
        let recs: Vec<Rec> = (0..rng.random_range(1..6)).map(|_| random_rec(&mut rng)).collect();
        let forward: Vec<&Rec> = recs.iter().collect();
        let mut shuffled = forward.clone();
        for i in (1..shuffled.len()).rev() {
            shuffled.swap(i, rng.random_range(0..=i));
        }
        let (mut a, mut b) = (HrtfAccumulator::retaining_samples(F), HrtfAccumulator::retaining_samples(F));
        accumulate(&mut a, &forward, 1e-3);
        accumulate(&mut b, &shuffled, 1e-3);
        for stat in [Statistic::Mean, Statistic::Median] {
            let ga = a.finalize(&generic, FillPolicy::Generic, stat, WINDOW).unwrap();
            let gb = b.finalize(&generic, FillPolicy::Generic, stat, WINDOW).unwrap();
            ensure(ga == gb, || format!("trial {trial}: order changed {stat:?} result"))?;
        }

        let split = rng.random_range(0..=forward.len());
        let (mut head, mut tail) = (HrtfAccumulator::retaining_samples(F), HrtfAccumulator::retaining_samples(F));
        accumulate(&mut head, &forward[..split], 1e-3);
        accumulate(&mut tail, &forward[split..], 1e-3);
        head.merge(&tail).unwrap();
        ensure(head == a, || format!("trial {trial}: merge differs from sequential"))?;

        let lo = rng.random_range(0.0..0.6);
        let mut high = HrtfAccumulator::new(F);
        let mut low = HrtfAccumulator::new(F);
        accumulate(&mut low, &forward, lo);
        accumulate(&mut high, &forward, lo + rng.random_range(0.0..0.4));
        for bin in high.visited_bins() {
            for ear in Ear::BOTH {
                for k in 0..F {
                    ensure(high.count(bin, ear, k) <= low.count(bin, ear, k), || {
                        format!("trial {trial}: raising the gate added counts")
                    })?;
                }
            }
        }
    }

    let ones = Spectrogram::new(2, 1, WINDOW, 4, FS, vec![1.0; 2 * F]).unwrap();
    let still = PoseTrack::constant(HeadPose::identity(0.0), 0.01).unwrap();
    let mut acc = HrtfAccumulator::new(F);
    for g in [0.5, 1.5] {
        let est = FilterEstimate::new(1, F, vec![g; 2 * F], vec![true; 2 * F]).unwrap();
        acc.accumulate(&est, &ones, &still, &Direction::FRONT, 1e-3).unwrap();
    }
    let mean = acc.statistic(bin_direction(&Direction::FRONT), Ear::Left, Statistic::Mean).unwrap();
    ensure(mean.iter().all(|m| *m == Some(1.0)), || format!("mean of 0.5 and 1.5 gave {mean:?}"))?;

    let (empty, _) = HrtfAccumulator::new(F).finalize(&generic, FillPolicy::Generic, Statistic::Mean, WINDOW).unwrap();
    ensure(
        empty.magnitudes_raw() == generic.magnitudes_raw() && empty.phases_raw() == generic.phases_raw(),
        || "empty accumulator does not finalize to the generic grid".into(),
    )?;
    Ok("permutation and merge bitwise over 40 random sets, gate monotone, mean{0.5,1.5}=1.0, empty=generic".into())
}

fn rms_diff(x: &[f64], y: &[f64]) -> f64 {
    (x.iter().zip(y).map(|(p, q)| (p - q) * (p - q)).sum::<f64>() / x.len() as f64).sqrt()
}

fn renderer_physics() -> Check {
    let mut rt = Vec::new();
    for target in [0.4, 0.6, 0.9] {
        let room = RoomConfig::new([4.0; 6], target).unwrap();
        let len = (1.5 * target * SAMPLE_RATE_HZ as f64) as usize;
        let ir = room_impulse_response(&room, [1.2, 0.7, 0.3], len, SAMPLE_RATE_HZ).unwrap();
        let est = schroeder_rt60(&ir, SAMPLE_RATE_HZ).ok_or("decay never reached -25 dB")?;
        ensure((est - target).abs() / target < 0.25, || format!("RT60 {target}: estimated {est:.3}"))?;
        rt.push(format!("{est:.2}"));
    }

    let room = RoomConfig::new([3.0, 4.0, 2.5, 5.0, 2.0, 6.0], 0.5).unwrap();
    let first = image_sources(&room, [1.0, 0.5, 0.2], 1).unwrap();
    let count = first.iter().filter(|i| i.order == 1).count();
    ensure(count == 6, || format!("{count} first-order images"))?;

    let anechoic = RoomConfig::anechoic();
    for r in [0.5, 1.0, 2.0, 4.0, 8.0] {
        let near = image_sources(&anechoic, [r, 0.0, 0.0], 0).unwrap()[0].attenuation;
        let far = image_sources(&anechoic, [2.0 * r, 0.0, 0.0], 0).unwrap()[0].attenuation;
        ensure(near == 1.0 / r && far / near == 0.5, || format!("1/r broken at {r} m"))?;
    }

    let grid = HeadModel::generic().grid(SAMPLE_RATE_HZ).unwrap();
    let mut sc = Scenario::new(Direction::new(35.0, 10.0).unwrap(), random_pose_track(1.0, 3).unwrap());
    sc.duration_s = 1.0;
    sc.room = RoomConfig::new([2.5, 3.0, 2.2, 3.4, 2.0, 2.6], 0.5).unwrap();
    sc.image_order = 2;
    let src = white_noise(48_000, SAMPLE_RATE_HZ, 8).unwrap();
    let a = render(&sc, &src, &grid, 0).unwrap();
    let b = render(&sc.mirrored(), &src, &grid, 0).unwrap();
    let mirror = rms_diff(&a.binaural.left, &b.binaural.right).max(rms_diff(&a.binaural.right, &b.binaural.left));
    ensure(mirror < 1e-6, || format!("mirror RMS {mirror:e}"))?;

    let mut identity = HrtfGrid::new(DEFAULT_WINDOW, SAMPLE_RATE_HZ).unwrap();
    let f = identity.freq_bins();
    for bin in BinIndex::all() {
        for ear in Ear::BOTH {
            identity.set_spectrum(bin, ear, &vec![1.0; f], &vec![0.0; f]).unwrap();
        }
        identity.set_state(bin, BinState::Measured);
    }
    let mut sc = Scenario::new(Direction::new(30.0, 10.0).unwrap(), sweep_track(0.5, 0.0, 40.0, 0.0, 0.0).unwrap());
    sc.duration_s = 0.5;
    let src = white_noise(24_000, SAMPLE_RATE_HZ, 1).unwrap();
    let rec = render(&sc, &src, &identity, 0).unwrap();
    let err = [&rec.binaural.left, &rec.binaural.right]
        .iter()
        .flat_map(|ch| ch.iter().zip(&src.samples).map(|(x, y)| (x - y).abs()))
        .fold(0.0, f64::max);
    ensure(err < 1e-12, || format!("identity render error {err:e}"))?;
    Ok(format!(
        "RT60 {} s for 0.4/0.6/0.9, 6 first-order images, 1/r exact, mirror RMS {mirror:.1e}, identity error {err:.1e}",
        rt.join("/")
    ))
}

type Mat = [[f64; 3]; 3];

fn mul(a: &Mat, b: &Mat) -> Mat {
    let mut m = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            m[i][j] = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    m
}

fn head_matrix(yaw: f64, pitch: f64, roll: f64) -> Mat {
    let (y, p, r) = (yaw.to_radians(), -pitch.to_radians(), roll.to_radians());
    let rz = [[y.cos(), -y.sin(), 0.0], [y.sin(), y.cos(), 0.0], [0.0, 0.0, 1.0]];
    let ry = [[p.cos(), 0.0, p.sin()], [0.0, 1.0, 0.0], [-p.sin(), 0.0, p.cos()]];
    let rx = [[1.0, 0.0, 0.0], [0.0, r.cos(), -r.sin()], [0.0, r.sin(), r.cos()]];
    mul(&mul(&rz, &ry), &rx)
}

fn unit(az: f64, el: f64) -> [f64; 3] {
    let (a, e) = (az.to_radians(), el.to_radians());
    [e.cos() * a.cos(), e.cos() * a.sin(), e.sin()]
}

fn geometry() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let (yaw, pitch, roll) = (rng.random_range(-180.0..180.0), rng.random_range(-89.0..89.0), rng.random_range(-180.0..180.0));
        let (az, el) = (rng.random_range(-180.0..180.0), rng.random_range(-90.0..=90.0));
        let got = relative_source_direction(&HeadPose::new(0.0, yaw, pitch, roll).unwrap(), &Direction::new(az, el).unwrap())
            .to_unit_vector();
        let m = head_matrix(yaw, pitch, roll);
        let v = unit(az, el);
        let want: [f64; 3] = [0, 1, 2].map(|i| (0..3).map(|k| m[k][i] * v[k]).sum());
        let chord = (0..3).map(|i| (got[i] - want[i]).powi(2)).sum::<f64>().sqrt();
        worst = worst.max(chord.to_degrees());
    }
    ensure(worst < 1e-6, || format!("rotation oracle disagrees by {worst:e} deg"))?;

    for b in BinIndex::all() {
        let back = bin_direction(&bin_center(&b).unwrap());
        ensure(back == b, || format!("{b:?} round-trips to {back:?}"))?;
    }

    // 300 deg/s for one 10 ms frame is 3 degrees of rotation about any axis.
    for _ in 0..20_000 {
        let pose = HeadPose::new(0.0, rng.random_range(-180.0..180.0), rng.random_range(-45.0..45.0), rng.random_range(-30.0..30.0)).unwrap();
        let axis = unit(rng.random_range(-180.0..180.0), rng.random_range(-90.0..90.0));
        let step = earfield_core::spatial::Rotation::about_axis(axis, rng.random_range(0.0..3.0f64).to_radians());
        let d = Direction::new(rng.random_range(-180.0..180.0), rng.random_range(-40.0..40.0)).unwrap();
        let p = relative_source_direction(&pose, &d);
        let q = Direction::from_vector(step.apply(p.to_unit_vector()));
        let (bp, bq) = (bin_direction(&p), bin_direction(&q));
        let daz = bp.azimuth_bin.abs_diff(bq.azimuth_bin);
        ensure(bp.elevation_bin.abs_diff(bq.elevation_bin) <= 1, || format!("elevation jump {p:?} -> {q:?}"))?;
        if p.elevation_deg().abs() <= 45.0 && q.elevation_deg().abs() <= 45.0 {
            ensure(daz.min(AZ_BINS - daz) <= 1, || format!("azimuth jump {p:?} -> {q:?}"))?;
        }
    }
    Ok(format!("1000 pairs within {worst:.1e} deg, {} bins round-trip, 20000 3-degree steps move at most one bin", BinIndex::all().count()))
}

fn same_files(a: &Path, b: &Path, names: &[&str]) -> std::result::Result<(), String> {
    for n in names {
        ensure(read(&a.join(n))? == read(&b.join(n))?, || format!("{n} differs between runs"))?;
    }
    Ok(())
}

fn determinism(work: &Path) -> Check {
    let corpus = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/corpus");
    let runs = [work.join("det_a"), work.join("det_b")];
    for r in &runs {
        cli(&["gen-data", "--count", "1", "--seed", "42", "--corpus", s(&corpus), "--out", s(&r.join("random"))])?;
        cli(&["gen-data", "--preset", "sweeps", "--hrtf-set", "builtin:b", "--seed", "42", "--out", s(&r.join("sweeps"))])?;
        cli(&["estimate", "--recordings", s(&r.join("sweeps/manifest.jsonl")), "--out", s(&r.join("est"))])?;
        cli(&["evaluate", "--estimate", s(&r.join("est/hrtf.grid")), "--truth", "builtin:b", "--out", s(&r.join("rep"))])?;
        cli(&["synth-hrtf", "--subject", "d", "--ir-length", "256", "--out", s(&r.join("synth"))])?;
    }
    let [a, b] = &runs;
    same_files(&a.join("random"), &b.join("random"), &["manifest.jsonl", "000000.wav", "000000.poses.csv", "000000.lbl", "000000.ref.wav"])?;
    let sweep_files: Vec<String> = (0..6)
        .flat_map(|i| ["wav", "poses.csv", "lbl", "ref.wav"].map(|e| format!("{i:06}.{e}")))
        .chain(["manifest.jsonl".to_string()])
        .collect();
    same_files(&a.join("sweeps"), &b.join("sweeps"), &sweep_files.iter().map(String::as_str).collect::<Vec<_>>())?;
    same_files(&a.join("est"), &b.join("est"), &["hrtf.grid", "hrtf.hrir", "coverage.json"])?;
    same_files(&a.join("rep"), &b.join("rep"), &["b_hrtf_lsd.csv", "b_hrtf_lsd.json"])?;
    same_files(&a.join("synth"), &b.join("synth"), &["d.grid", "d.hrir"])?;

    let hrir_path = a.join("synth/d.hrir");
    let src_path = work.join("replay_src.wav");
    write_mono(&src_path, &white_noise(12_000, SAMPLE_RATE_HZ, 9).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    let poses = work.join("replay_poses.csv");
    write_pose_log(&poses, &random_pose_track(0.5, 21).unwrap()).map_err(|e| e.to_string())?;
    let outs = [work.join("replay_a.wav"), work.join("replay_b.wav")];
    for o in &outs {
        cli(&["render-live", "--hrir", s(&hrir_path), "--source", s(&src_path), "--poses", s(&poses), "--initial-dir", "60,-20", "--out", s(o)])?;
    }
    ensure(read(&outs[0])? == read(&outs[1])?, || "replay output differs between runs".into())?;
    let replay = read_binaural(&outs[0]).map_err(|e| e.to_string())?;
    let src = read_mono(&src_path).map_err(|e| e.to_string())?;
    let hrir = read_hrir(&hrir_path).map_err(|e| e.to_string())?;
    let track = read_pose_log(&poses).map_err(|e| e.to_string())?;
    let offline = render_track(&hrir, &src, Direction::new(60.0, -20.0).unwrap(), &track, src.len()).unwrap();
    let f32s = |x: &[f64]| x.iter().map(|v| *v as f32 as f64).collect::<Vec<_>>();
    ensure(replay.left == f32s(&offline.left) && replay.right == f32s(&offline.right), || {
        "replay differs from offline render".into()
    })?;
    Ok("gen-data (random, sweeps), estimate, evaluate, synth-hrtf, render-live byte-identical; replay equals offline bitwise".into())
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn neural_fixture() -> Check {
    let bundle = read_weights(&fixture("unet_tiny.weights")).map_err(|e| e.to_string())?;
    ensure(bundle.fingerprint == Fingerprint::standard(8), || "unexpected fingerprint".into())?;
    let net = UNet::from_bundle(&bundle).map_err(|e| e.to_string())?;
    let input = read_labels(&fixture("unet_input.lbl")).map_err(|e| e.to_string())?;
    let expected = read_labels(&fixture("unet_expected.lbl")).map_err(|e| e.to_string())?;
    let spec = Spectrogram::new(2, input.frames, 2 * (input.bins - 1), 4, SAMPLE_RATE_HZ, input.to_f64()).unwrap();
    let first = neural_predict(&spec, &net).map_err(|e| e.to_string())?;
    let second = neural_predict(&spec, &net).map_err(|e| e.to_string())?;
    ensure(first == second, || "two runs differ".into())?;
    ensure(first.gains().len() == expected.data.len(), || "output shape differs".into())?;
    let worst = first.gains().iter().zip(&expected.data).map(|(a, b)| (a - *b as f64).abs()).fold(0.0, f64::max);
    ensure(worst < 1e-4, || format!("max difference {worst:e}"))?;
    Ok(format!("max difference {worst:.1e} < 1e-4, deterministic"))
}

fn main() -> ExitCode {
    let work = TempDir::new().expect("temp dir");
    let w = work.path();
    let checks: Vec<(&str, CheckFn)> = vec![
        ("oracle pipeline closure", Box::new(|| oracle_closure(w))),
        ("reference division", Box::new(|| reference_division(w))),
        ("LSD metric suite", Box::new(lsd_suite)),
        ("aggregation properties", Box::new(algorithm_properties)),
        ("renderer physics", Box::new(renderer_physics)),
        ("geometry", Box::new(geometry)),
        ("determinism", Box::new(|| determinism(w))),
        ("neural inference fixture", Box::new(neural_fixture)),
    ];
    let mut failed = 0;
    for (name, check) in checks {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_else(|| "panic".into()))
        });
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("PASS {name}: {detail} [{secs:.1} s]"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {name}: {detail} [{secs:.1} s]");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
