//! Direction-binned aggregation of per-frame filter estimates into an HRTF.
//!
//! Each gated frame is attributed to the bin of the head-frame source
//! direction at the frame center. Sums are kept in 2^-80 fixed point so the
//! result does not depend on the order recordings arrive in, and two
//! accumulators merge exactly.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::dsp::{stft_binaural, stft_mono, BinauralSignal, MonoSignal, Spectrogram, DEFAULT_HOP};
use crate::hrtf::{synthesize_hrirs, BinState, Ear, Hrir, HrtfGrid, DEFAULT_IR_LENGTH};
use crate::predictor::{EstimationInput, FilterEstimate, Predictor};
use crate::sim::LabeledRecording;
use crate::spatial::{bin_direction, BinIndex, Direction, PoseTrack, AZ_BINS, EL_BINS};
use crate::{Error, Result};

/// Default per-frequency gate on clip-max-normalized mean magnitude.
pub const DEFAULT_ENERGY_THRESHOLD: f64 = 1e-3;

/// Distinct accumulation cells once pole rows collapse.
pub const LOGICAL_BINS: usize = AZ_BINS * (EL_BINS - 2) + 2;

const FIXED_BITS: i32 = 80;
const MAX_GAIN: f64 = (1u64 << 40) as f64;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Statistic {
    #[default]
    Mean,
    Median,
}

/// What to do with bins no gated frame landed in.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum FillPolicy {
    /// Copy the generic spectrum and flag the bin as filled.
    #[default]
    Generic,
    LeaveInvalid,
}

/// A binaural capture with its head track and calibration direction.
#[derive(Clone, Debug, PartialEq)]
pub struct CalibratedRecording {
    pub binaural: BinauralSignal,
    pub pose_track: PoseTrack,
    /// Head-frame source direction at the first pose.
    pub initial_source: Direction,
    /// Dry source aligned with the direct path, for the ratio predictor.
    pub reference: Option<MonoSignal>,
    /// Ground-truth gains, for the oracle predictor.
    pub labels: Option<Spectrogram>,
}

impl CalibratedRecording {
    pub fn new(binaural: BinauralSignal, pose_track: PoseTrack, initial_source: Direction) -> Self {
        Self {
            binaural,
            pose_track,
            initial_source,
            reference: None,
            labels: None,
        }
    }
}

impl From<LabeledRecording> for CalibratedRecording {
    fn from(r: LabeledRecording) -> Self {
        Self {
            binaural: r.binaural,
            pose_track: r.scenario.pose_track,
            initial_source: r.scenario.source_direction,
            reference: Some(r.reference),
            labels: Some(r.labels),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
struct Cell {
    sums: Vec<u128>,
    counts: Vec<u64>,
    frames: u64,
    samples: Option<Vec<Vec<f64>>>,
}

impl Cell {
    fn new(freq_bins: usize, retain: bool) -> Self {
        Self {
            sums: vec![0; 2 * freq_bins],
            counts: vec![0; 2 * freq_bins],
            frames: 0,
            samples: retain.then(|| vec![Vec::new(); 2 * freq_bins]),
        }
    }
}

/// Per (bin, ear, frequency) sums and counts of appended gains.
#[derive(Clone, Debug, PartialEq)]
pub struct HrtfAccumulator {
    freq_bins: usize,
    retain_samples: bool,
    cells: BTreeMap<usize, Cell>,
}

fn to_fixed(g: f64) -> Result<u128> {
    if !(g.is_finite() && (0.0..MAX_GAIN).contains(&g)) {
        return Err(Error::GainOutOfRange(g));
    }
    Ok(libm::ldexp(g, FIXED_BITS) as u128)
}

fn fixed_mean(sum: u128, n: u64) -> f64 {
    let n = n as u128;
    let q = sum / n;
    let r = sum % n;
    libm::ldexp(q as f64 + r as f64 / n as f64, -FIXED_BITS)
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// Frequencies whose mean magnitude over all channels and frames, relative
/// to the clip maximum, exceeds `threshold`.
pub fn energy_gate(spec: &Spectrogram, threshold: f64) -> Vec<bool> {
    let max = spec.max_magnitude();
    let bins = spec.bins();
    if max <= 0.0 {
        return vec![false; bins];
    }
    let mut sum = vec![0.0; bins];
    for c in 0..spec.channels() {
        for t in 0..spec.frames() {
            for (s, m) in sum.iter_mut().zip(spec.frame(c, t)) {
                *s += m;
            }
        }
    }
    let n = (spec.channels() * spec.frames()) as f64;
    sum.iter().map(|s| s / n / max > threshold).collect()
}

/// Head-frame source direction at every frame center of `spec`.
pub fn frame_source_directions(spec: &Spectrogram, track: &PoseTrack, initial: &Direction) -> Vec<Direction> {
    let t0 = track.calibration().t;
    (0..spec.frames())
        .map(|t| track.source_direction_at(t0 + spec.frame_center_s(t), initial))
        .collect()
}

impl HrtfAccumulator {
    /// Accumulator for the mean statistic only.
    pub fn new(freq_bins: usize) -> Self {
        Self {
            freq_bins,
            retain_samples: false,
            cells: BTreeMap::new(),
        }
    }

    /// Accumulator that also keeps every gain so the median can be taken.
    pub fn retaining_samples(freq_bins: usize) -> Self {
        Self {
            retain_samples: true,
            ..Self::new(freq_bins)
        }
    }

    pub fn freq_bins(&self) -> usize {
        self.freq_bins
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Adds the gains of `estimate` for every gated frequency. `spec` is the
    /// recording's magnitude STFT that the gate and frame times come from.
    pub fn accumulate(
        &mut self,
        estimate: &FilterEstimate,
        spec: &Spectrogram,
        track: &PoseTrack,
        initial: &Direction,
        energy_threshold: f64,
    ) -> Result<()> {
        if estimate.frames() != spec.frames() {
            return Err(Error::FrameCountMismatch {
                estimate: estimate.frames(),
                recording: spec.frames(),
            });
        }
        if estimate.bins() != self.freq_bins || spec.bins() != self.freq_bins {
            return Err(Error::Shape(format!(
                "accumulator has {} bins, estimate {}, recording {}",
                self.freq_bins,
                estimate.bins(),
                spec.bins()
            )));
        }
        let gate = energy_gate(spec, energy_threshold);
        if !gate.iter().any(|&g| g) {
            return Ok(());
        }
        let dirs = frame_source_directions(spec, track, initial);
        let f = self.freq_bins;
        let mut staged = self.clone();
        for (t, d) in dirs.iter().enumerate() {
            let key = bin_direction(d).canonical().flat();
            let cell = staged
                .cells
                .entry(key)
                .or_insert_with(|| Cell::new(f, self.retain_samples));
            let mut appended = false;
            for ear in 0..2 {
                let gains = estimate.frame_gains(ear, t);
                let valid = estimate.frame_validity(ear, t);
                for k in (0..f).filter(|&k| gate[k] && valid[k]) {
                    let i = ear * f + k;
                    cell.sums[i] = cell.sums[i]
                        .checked_add(to_fixed(gains[k])?)
                        .ok_or(Error::AccumulatorOverflow)?;
                    cell.counts[i] += 1;
                    if let Some(s) = cell.samples.as_mut() {
                        s[i].push(gains[k]);
                    }
                    appended = true;
                }
            }
            if appended {
                cell.frames += 1;
            } else if cell.frames == 0 {
                staged.cells.remove(&key);
            }
        }
        *self = staged;
        Ok(())
    }

    /// Folds `other` in; equivalent to having accumulated its recordings here.
    pub fn merge(&mut self, other: &HrtfAccumulator) -> Result<()> {
        if other.freq_bins != self.freq_bins || other.retain_samples != self.retain_samples {
            return Err(Error::Shape("accumulators differ in layout".into()));
        }
        let mut merged = self.cells.clone();
        for (key, cell) in &other.cells {
            let dst = merged
                .entry(*key)
                .or_insert_with(|| Cell::new(self.freq_bins, self.retain_samples));
            for (a, b) in dst.sums.iter_mut().zip(&cell.sums) {
                *a = a.checked_add(*b).ok_or(Error::AccumulatorOverflow)?;
            }
            for (a, b) in dst.counts.iter_mut().zip(&cell.counts) {
                *a += b;
            }
            dst.frames += cell.frames;
            if let (Some(d), Some(s)) = (dst.samples.as_mut(), cell.samples.as_ref()) {
                for (a, b) in d.iter_mut().zip(s) {
                    a.extend_from_slice(b);
                }
            }
        }
        self.cells = merged;
        Ok(())
    }

    /// Number of gains appended at `(bin, ear, k)`; pole bins share a count.
    pub fn count(&self, bin: BinIndex, ear: Ear, k: usize) -> u64 {
        self.cells
            .get(&bin.canonical().flat())
            .map_or(0, |c| c.counts[ear.index() * self.freq_bins + k])
    }

    /// Gated frames attributed to `bin`.
    pub fn frames(&self, bin: BinIndex) -> u64 {
        self.cells.get(&bin.canonical().flat()).map_or(0, |c| c.frames)
    }

    /// Canonical bins with at least one appended gain.
    pub fn visited_bins(&self) -> impl Iterator<Item = BinIndex> + '_ {
        self.cells.keys().map(|&k| BinIndex::from_flat(k))
    }

    /// Aggregated magnitude at `(bin, ear)`; `None` where nothing was appended.
    pub fn statistic(&self, bin: BinIndex, ear: Ear, stat: Statistic) -> Result<Vec<Option<f64>>> {
        let f = self.freq_bins;
        let Some(cell) = self.cells.get(&bin.canonical().flat()) else {
            return Ok(vec![None; f]);
        };
        let o = ear.index() * f;
        match stat {
            Statistic::Mean => Ok((0..f)
                .map(|k| (cell.counts[o + k] > 0).then(|| fixed_mean(cell.sums[o + k], cell.counts[o + k])))
                .collect()),
            Statistic::Median => {
                let s = cell.samples.as_ref().ok_or(Error::MedianUnavailable)?;
                Ok((0..f).map(|k| (!s[o + k].is_empty()).then(|| median(&s[o + k]))).collect())
            }
        }
    }

    /// Builds the personalized grid and its HRIRs. Visited bins take the
    /// aggregated magnitude (generic magnitude at gated-out frequencies) and
    /// the generic phase.
    pub fn finalize(
        &self,
        generic: &HrtfGrid,
        fill: FillPolicy,
        stat: Statistic,
        ir_length: usize,
    ) -> Result<(HrtfGrid, Hrir)> {
        if generic.freq_bins() != self.freq_bins {
            return Err(Error::LayoutMismatch(format!(
                "generic grid has {} frequency bins, accumulator {}",
                generic.freq_bins(),
                self.freq_bins
            )));
        }
        let mut grid = HrtfGrid::new(generic.fft_size(), generic.sample_rate_hz())?;
        for bin in BinIndex::all() {
            let generic_valid = generic.state(bin).is_valid();
            if self.cells.contains_key(&bin.canonical().flat()) {
                if !generic_valid {
                    return Err(Error::MissingGenericBin {
                        azimuth_bin: bin.azimuth_bin,
                        elevation_bin: bin.elevation_bin,
                    });
                }
                for ear in Ear::BOTH {
                    let fallback = generic.magnitude(bin, ear);
                    let mag: Vec<f64> = self
                        .statistic(bin, ear, stat)?
                        .iter()
                        .zip(fallback)
                        .map(|(v, g)| v.unwrap_or(*g))
                        .collect();
                    grid.set_spectrum(bin, ear, &mag, generic.phase(bin, ear))?;
                }
                grid.set_state(bin, BinState::Measured);
            } else if fill == FillPolicy::Generic && generic_valid {
                for ear in Ear::BOTH {
                    grid.set_spectrum(bin, ear, generic.magnitude(bin, ear), generic.phase(bin, ear))?;
                }
                grid.set_state(bin, BinState::Filled);
            }
        }
        let hrir = synthesize_hrirs(&grid, generic, ir_length.min(generic.fft_size()))?;
        Ok((grid, hrir))
    }

    pub fn coverage(&self) -> CoverageReport {
        CoverageReport {
            visited: self
                .cells
                .iter()
                .map(|(&k, c)| (BinIndex::from_flat(k), c.frames))
                .collect(),
        }
    }
}

/// Which bins the gated frames reached and how often.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CoverageReport {
    /// Canonical visited bins with their gated frame counts, in flat order.
    pub visited: Vec<(BinIndex, u64)>,
}

impl CoverageReport {
    pub fn visited_fraction(&self) -> f64 {
        self.visited.len() as f64 / LOGICAL_BINS as f64
    }

    /// Frame counts as a row-major `[elevation][azimuth]` array; pole rows
    /// repeat their shared count across azimuth.
    pub fn heatmap(&self) -> Vec<Vec<u64>> {
        let mut map = vec![vec![0u64; AZ_BINS]; EL_BINS];
        for &(b, n) in &self.visited {
            if b.is_pole() {
                map[b.elevation_bin].iter_mut().for_each(|v| *v = n);
            } else {
                map[b.elevation_bin][b.azimuth_bin] = n;
            }
        }
        map
    }

    /// Visited bins per frame-count bucket `[2^i, 2^(i+1))`, as
    /// `(lower, upper, bins)` with empty buckets above the largest omitted.
    pub fn histogram(&self) -> Vec<(u64, u64, usize)> {
        let Some(max) = self.visited.iter().map(|v| v.1).max() else {
            return Vec::new();
        };
        let buckets = 64 - max.leading_zeros() as usize;
        let mut out: Vec<(u64, u64, usize)> = (0..buckets).map(|i| (1u64 << i, 1u64 << (i + 1), 0)).collect();
        for &(_, n) in &self.visited {
            out[63 - n.leading_zeros() as usize].2 += 1;
        }
        out
    }
}

/// Settings of a full estimation run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EstimateConfig {
    pub energy_threshold: f64,
    pub stat: Statistic,
    pub fill: FillPolicy,
    pub ir_length: usize,
    pub hop: usize,
}

impl Default for EstimateConfig {
    fn default() -> Self {
        Self {
            energy_threshold: DEFAULT_ENERGY_THRESHOLD,
            stat: Statistic::Mean,
            fill: FillPolicy::Generic,
            ir_length: DEFAULT_IR_LENGTH,
            hop: DEFAULT_HOP,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HrtfEstimate {
    pub grid: HrtfGrid,
    pub hrir: Hrir,
    pub coverage: CoverageReport,
}

/// Runs STFT, prediction and accumulation for one recording. The STFT window
/// equals the generic grid's FFT size.
pub fn accumulate_recording(
    acc: &mut HrtfAccumulator,
    rec: &CalibratedRecording,
    predictor: &Predictor,
    window: usize,
    config: &EstimateConfig,
) -> Result<()> {
    let spec = stft_binaural(&rec.binaural, window, config.hop)?;
    let reference = rec
        .reference
        .as_ref()
        .map(|r| stft_mono(r, window, config.hop))
        .transpose()?;
    let estimate = predictor.predict(&EstimationInput {
        recording: &spec,
        labels: rec.labels.as_ref(),
        reference: reference.as_ref(),
    })?;
    acc.accumulate(&estimate, &spec, &rec.pose_track, &rec.initial_source, config.energy_threshold)
}

/// Estimates a personalized HRTF from a set of calibrated recordings.
pub fn estimate_hrtf(
    recordings: &[CalibratedRecording],
    predictor: &Predictor,
    generic: &HrtfGrid,
    config: &EstimateConfig,
) -> Result<HrtfEstimate> {
    if recordings.is_empty() {
        return Err(Error::NoRecordings);
    }
    let mut acc = match config.stat {
        Statistic::Mean => HrtfAccumulator::new(generic.freq_bins()),
        Statistic::Median => HrtfAccumulator::retaining_samples(generic.freq_bins()),
    };
    for rec in recordings {
        accumulate_recording(&mut acc, rec, predictor, generic.fft_size(), config)?;
    }
    let (grid, hrir) = acc.finalize(generic, config.fill, config.stat, config.ir_length)?;
    Ok(HrtfEstimate {
        grid,
        hrir,
        coverage: acc.coverage(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spatial::HeadPose;
    use crate::SAMPLE_RATE_HZ;

    const WINDOW: usize = 16;
    const F: usize = WINDOW / 2 + 1;

    fn spec(frames: usize, mag: impl Fn(usize) -> f64) -> Spectrogram {
        let data = (0..2 * frames * F).map(|i| mag(i % F)).collect();
        Spectrogram::new(2, frames, WINDOW, 4, SAMPLE_RATE_HZ, data).unwrap()
    }

    fn constant(frames: usize, g: f64) -> FilterEstimate {
        FilterEstimate::new(frames, F, vec![g; 2 * frames * F], vec![true; 2 * frames * F]).unwrap()
    }

    fn still() -> PoseTrack {
        PoseTrack::constant(HeadPose::identity(0.0), 0.01).unwrap()
    }

    fn generic() -> HrtfGrid {
        let mut g = HrtfGrid::new(WINDOW, SAMPLE_RATE_HZ).unwrap();
        for b in BinIndex::all() {
            let m: Vec<f64> = (0..F).map(|k| 1.0 + (b.flat() + k) as f64 * 1e-3).collect();
            let p: Vec<f64> = (0..F).map(|k| if k == 0 || k == F - 1 { 0.0 } else { -0.3 * k as f64 }).collect();
            for ear in Ear::BOTH {
                g.set_spectrum(b, ear, &m, &p).unwrap();
            }
            g.set_state(b, BinState::Measured);
        }
        g
    }

    fn front() -> Direction {
        Direction::new(30.0, 10.0).unwrap()
    }

    #[test]
    fn static_constant_estimate_lands_in_one_bin() {
        let mut acc = HrtfAccumulator::new(F);
        acc.accumulate(&constant(12, 0.7), &spec(12, |_| 1.0), &still(), &front(), 1e-3)
            .unwrap();
        let bins: Vec<BinIndex> = acc.visited_bins().collect();
        assert_eq!(bins, vec![bin_direction(&front())]);
        for ear in Ear::BOTH {
            for k in 0..F {
                assert_eq!(acc.count(bins[0], ear, k), 12);
            }
            let mean = acc.statistic(bins[0], ear, Statistic::Mean).unwrap();
            assert!(mean.iter().all(|m| *m == Some(0.7)));
        }
    }

    #[test]
    fn gate_drops_silent_frequencies_everywhere() {
        let mut acc = HrtfAccumulator::new(F);
        let s = spec(8, |k| if k < 4 { 1.0 } else { 1e-5 });
        acc.accumulate(&constant(8, 1.0), &s, &still(), &front(), 1e-3).unwrap();
        let b = bin_direction(&front());
        for k in 0..F {
            assert_eq!(acc.count(b, Ear::Left, k), if k < 4 { 8 } else { 0 });
        }
    }

    #[test]
    fn silent_recording_visits_nothing() {
        let mut acc = HrtfAccumulator::new(F);
        acc.accumulate(&constant(4, 1.0), &spec(4, |_| 0.0), &still(), &front(), 1e-3)
            .unwrap();
        assert!(acc.is_empty());
    }

    #[test]
    fn two_recordings_average_linearly() {
        let mut acc = HrtfAccumulator::new(F);
        let s = spec(5, |_| 1.0);
        acc.accumulate(&constant(5, 0.5), &s, &still(), &front(), 1e-3).unwrap();
        acc.accumulate(&constant(5, 1.5), &s, &still(), &front(), 1e-3).unwrap();
        let mean = acc.statistic(bin_direction(&front()), Ear::Right, Statistic::Mean).unwrap();
        assert!(mean.iter().all(|m| *m == Some(1.0)));
    }

    #[test]
    fn masked_gains_are_skipped() {
        let mut valid = vec![true; 2 * 3 * F];
        let mut gains = vec![2.0; 2 * 3 * F];
        valid[F + 2] = false;
        gains[F + 2] = 0.0;
        let est = FilterEstimate::new(3, F, gains, valid).unwrap();
        let mut acc = HrtfAccumulator::new(F);
        acc.accumulate(&est, &spec(3, |_| 1.0), &still(), &front(), 1e-3).unwrap();
        let b = bin_direction(&front());
        assert_eq!(acc.count(b, Ear::Left, 2), 2);
        assert_eq!(acc.count(b, Ear::Left, 3), 3);
    }

    #[test]
    fn frame_mismatch_and_bad_gain_leave_accumulator_untouched() {
        let mut acc = HrtfAccumulator::new(F);
        let err = acc.accumulate(&constant(3, 1.0), &spec(4, |_| 1.0), &still(), &front(), 1e-3);
        assert_eq!(
            err,
            Err(Error::FrameCountMismatch {
                estimate: 3,
                recording: 4
            })
        );
        let mut gains = vec![1.0; 2 * 4 * F];
        gains[7] = MAX_GAIN * 2.0;
        let est = FilterEstimate::new(4, F, gains, vec![true; 2 * 4 * F]).unwrap();
        assert!(matches!(
            acc.accumulate(&est, &spec(4, |_| 1.0), &still(), &front(), 1e-3),
            Err(Error::GainOutOfRange(_))
        ));
        assert!(acc.is_empty());
    }

    #[test]
    fn rotating_head_spreads_frames_over_bins() {
        let poses = (0..=100)
            .map(|i| HeadPose::new(i as f64 * 0.01, i as f64, 0.0, 0.0).unwrap())
            .collect();
        let track = PoseTrack::new(poses, 0.01).unwrap();
        let s = Spectrogram::new(2, 200, WINDOW, 4, 1000, vec![1.0; 2 * 200 * F]).unwrap();
        let mut acc = HrtfAccumulator::new(F);
        acc.accumulate(&constant(200, 1.0), &s, &track, &Direction::FRONT, 1e-3)
            .unwrap();
        let expected: alloc::collections::BTreeSet<usize> = frame_source_directions(&s, &track, &Direction::FRONT)
            .iter()
            .map(|d| bin_direction(d).canonical().flat())
            .collect();
        let got: alloc::collections::BTreeSet<usize> = acc.visited_bins().map(|b| b.flat()).collect();
        assert_eq!(got, expected);
        assert!(got.len() > 10);
        let total: u64 = acc.coverage().visited.iter().map(|v| v.1).sum();
        assert_eq!(total, 200);
    }

    #[test]
    fn empty_accumulator_finalizes_to_generic() {
        let g = generic();
        let (grid, hrir) = HrtfAccumulator::new(F)
            .finalize(&g, FillPolicy::Generic, Statistic::Mean, WINDOW)
            .unwrap();
        assert_eq!(grid.magnitudes_raw(), g.magnitudes_raw());
        assert_eq!(grid.phases_raw(), g.phases_raw());
        assert!(grid.states().iter().all(|s| *s == BinState::Filled));
        assert!(hrir.states().iter().all(|s| *s == BinState::Filled));

        let (grid, _) = HrtfAccumulator::new(F)
            .finalize(&g, FillPolicy::LeaveInvalid, Statistic::Mean, WINDOW)
            .unwrap();
        assert_eq!(grid.valid_count(), 0);
    }

    #[test]
    fn visited_bin_takes_mean_magnitude_and_generic_phase() {
        let g = generic();
        let mut acc = HrtfAccumulator::new(F);
        acc.accumulate(&constant(3, 1.0), &spec(3, |_| 1.0), &still(), &front(), 1e-3)
            .unwrap();
        let (grid, _) = acc.finalize(&g, FillPolicy::Generic, Statistic::Mean, WINDOW).unwrap();
        let b = bin_direction(&front());
        assert_eq!(grid.state(b), BinState::Measured);
        for ear in Ear::BOTH {
            assert!(grid.magnitude(b, ear).iter().all(|m| *m == 1.0));
            assert_eq!(grid.phase(b, ear), g.phase(b, ear));
        }
        let other = BinIndex::new(0, 18).unwrap();
        assert_eq!(grid.state(other), BinState::Filled);
        assert_eq!(grid.magnitude(other, Ear::Left), g.magnitude(other, Ear::Left));
    }

    #[test]
    fn median_resists_outliers() {
        let s = spec(1, |_| 1.0);
        let mut acc = HrtfAccumulator::retaining_samples(F);
        for g in [0.5, 10.0, 0.5] {
            acc.accumulate(&constant(1, g), &s, &still(), &front(), 1e-3).unwrap();
        }
        let b = bin_direction(&front());
        let med = acc.statistic(b, Ear::Left, Statistic::Median).unwrap();
        assert!(med.iter().all(|m| *m == Some(0.5)));
        let mean = acc.statistic(b, Ear::Left, Statistic::Mean).unwrap();
        assert!(mean.iter().all(|m| (m.unwrap() - 11.0 / 3.0).abs() < 1e-12));
        assert_eq!(median(&[1.0, 4.0, 2.0, 3.0]), 2.5);

        let plain = HrtfAccumulator::new(F);
        assert_eq!(plain.statistic(b, Ear::Left, Statistic::Median), Ok(vec![None; F]));
        let mut one = HrtfAccumulator::new(F);
        one.accumulate(&constant(1, 1.0), &s, &still(), &front(), 1e-3).unwrap();
        assert_eq!(one.statistic(b, Ear::Left, Statistic::Median), Err(Error::MedianUnavailable));
    }

    #[test]
    fn pole_bins_share_one_cell() {
        let mut acc = HrtfAccumulator::new(F);
        let up = Direction::new(0.0, 90.0).unwrap();
        acc.accumulate(&constant(2, 0.25), &spec(2, |_| 1.0), &still(), &up, 1e-3)
            .unwrap();
        let (grid, _) = acc.finalize(&generic(), FillPolicy::Generic, Statistic::Mean, WINDOW).unwrap();
        for az in 0..AZ_BINS {
            let b = BinIndex::new(az, EL_BINS - 1).unwrap();
            assert_eq!(grid.state(b), BinState::Measured);
            assert_eq!(grid.magnitude(b, Ear::Left)[3], 0.25);
        }
        let heat = acc.coverage().heatmap();
        assert!(heat[EL_BINS - 1].iter().all(|&n| n == 2));
        assert_eq!(acc.coverage().visited.len(), 1);
    }

    #[test]
    fn coverage_histogram_buckets_by_power_of_two() {
        let report = CoverageReport {
            visited: vec![
                (BinIndex::new(1, 1).unwrap(), 1),
                (BinIndex::new(2, 1).unwrap(), 3),
                (BinIndex::new(3, 1).unwrap(), 2),
                (BinIndex::new(4, 1).unwrap(), 9),
            ],
        };
        assert_eq!(report.histogram(), vec![(1, 2, 1), (2, 4, 2), (4, 8, 0), (8, 16, 1)]);
        assert!((report.visited_fraction() - 4.0 / LOGICAL_BINS as f64).abs() < 1e-15);
        assert!(CoverageReport::default().histogram().is_empty());
    }

    #[test]
    fn finalize_checks_layout() {
        let acc = HrtfAccumulator::new(F + 1);
        assert!(matches!(
            acc.finalize(&generic(), FillPolicy::Generic, Statistic::Mean, WINDOW),
            Err(Error::LayoutMismatch(_))
        ));
    }

    #[test]
    fn no_recordings_is_an_error() {
        assert_eq!(
            estimate_hrtf(&[], &Predictor::Oracle, &generic(), &EstimateConfig::default()),
            Err(Error::NoRecordings)
        );
    }

    #[test]
    fn fixed_point_mean_is_exact_for_repeated_values() {
        for g in [0.7, 1e-7, 123.456, 0.0, 4.0e-9] {
            let x = to_fixed(g).unwrap();
            assert_eq!(fixed_mean(x * 37, 37), g);
        }
        assert!(to_fixed(-1.0).is_err());
        assert!(to_fixed(f64::NAN).is_err());
    }
}
