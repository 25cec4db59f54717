use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use super::{BinauralSignal, Fft, MonoSignal};
use crate::{Error, Result};

/// Crossfade length at impulse-response switches (one 10 ms hop).
pub const CROSSFADE_LEN: usize = 480;

/// Impulse-response pair that becomes active at `start_sample`.
#[derive(Clone, Debug, PartialEq)]
pub struct IrSegment {
    pub start_sample: usize,
    pub left: Vec<f64>,
    pub right: Vec<f64>,
}

/// Full linear convolution, `len(a) + len(b) - 1` samples.
pub fn convolve(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let out_len = a.len() + b.len() - 1;
    if a.len().min(b.len()) <= 32 {
        let mut out = vec![0.0; out_len];
        for (i, &x) in a.iter().enumerate() {
            for (j, &h) in b.iter().enumerate() {
                out[i + j] += x * h;
            }
        }
        return out;
    }
    let n = out_len.next_power_of_two();
    let fft = Fft::new(n).expect("power of two");
    let mut fa = vec![Complex64::new(0.0, 0.0); n];
    let mut fb = vec![Complex64::new(0.0, 0.0); n];
    for (dst, &x) in fa.iter_mut().zip(a) {
        dst.re = x;
    }
    for (dst, &x) in fb.iter_mut().zip(b) {
        dst.re = x;
    }
    fft.forward(&mut fa);
    fft.forward(&mut fb);
    for (x, y) in fa.iter_mut().zip(&fb) {
        *x *= y;
    }
    fft.inverse(&mut fa);
    fa.iter().take(out_len).map(|c| c.re).collect()
}

/// Overlap-save evaluator for `(x * h)[range]` with a fixed FFT size.
struct SegmentConvolver {
    fft: Fft,
    chunk: usize,
    ir_len: usize,
}

impl SegmentConvolver {
    fn new(ir_len: usize) -> Self {
        let chunk = ir_len.next_power_of_two().max(1024);
        Self {
            fft: Fft::new(2 * chunk).expect("power of two"),
            chunk,
            ir_len,
        }
    }

    fn ir_spectrum(&self, ir: &[f64]) -> Vec<Complex64> {
        let mut buf = vec![Complex64::new(0.0, 0.0); self.fft.len()];
        for (dst, &x) in buf.iter_mut().zip(ir) {
            dst.re = x;
        }
        self.fft.forward(&mut buf);
        buf
    }

    /// Writes `(x * h_e)[from..to]` for both ears into `out_l`/`out_r`.
    fn run(
        &self,
        x: &[f64],
        spectra: [&[Complex64]; 2],
        from: usize,
        to: usize,
        out: [&mut Vec<f64>; 2],
    ) {
        let [out_l, out_r] = out;
        out_l.clear();
        out_r.clear();
        let n = self.fft.len();
        let m = self.ir_len;
        let mut input = vec![Complex64::new(0.0, 0.0); n];
        let mut work = vec![Complex64::new(0.0, 0.0); n];
        let mut o = from;
        while o < to {
            let count = self.chunk.min(to - o);
            for (j, slot) in input.iter_mut().enumerate() {
                // input sample index o - (m - 1) + j
                let idx = (o + j).checked_sub(m - 1);
                let v = match idx {
                    Some(i) if j < self.chunk + m - 1 && i < x.len() => x[i],
                    _ => 0.0,
                };
                *slot = Complex64::new(v, 0.0);
            }
            self.fft.forward(&mut input);
            for (ear, dst) in [&mut *out_l, &mut *out_r].into_iter().enumerate() {
                for ((w, a), b) in work.iter_mut().zip(&input).zip(spectra[ear]) {
                    *w = a * b;
                }
                self.fft.inverse(&mut work);
                dst.extend(work[m - 1..m - 1 + count].iter().map(|c| c.re));
            }
            o += count;
        }
    }
}

/// Binaural convolution with an impulse-response schedule.
///
/// Segment `k` is active from its `start_sample` until the next segment
/// starts (the first segment is active from sample 0). At each switch the
/// output crossfades linearly over [`CROSSFADE_LEN`] samples from the
/// previous segment's filter output to the new one; a switch that arrives
/// before the previous crossfade finished cuts it short. Output length is
/// `len(source) + len(ir) - 1`.
pub fn time_varying_convolve(source: &MonoSignal, schedule: &[IrSegment]) -> Result<BinauralSignal> {
    let first = schedule.first().ok_or(Error::EmptySchedule)?;
    let m = first.left.len();
    if m == 0 {
        return Err(Error::Shape("empty impulse response".into()));
    }
    for (i, seg) in schedule.iter().enumerate() {
        if seg.left.len() != m || seg.right.len() != m {
            return Err(Error::Shape(format!("impulse response {i} length differs")));
        }
        if i > 0 && seg.start_sample <= schedule[i - 1].start_sample {
            return Err(Error::Shape("schedule must be sorted by start sample".into()));
        }
    }
    let x = &source.samples;
    if x.is_empty() {
        return BinauralSignal::new(source.sample_rate_hz, vec![0.0; m - 1], vec![0.0; m - 1]);
    }
    if schedule.len() == 1 {
        return BinauralSignal::new(
            source.sample_rate_hz,
            convolve(x, &first.left),
            convolve(x, &first.right),
        );
    }

    let out_len = x.len() + m - 1;
    let starts: Vec<usize> = core::iter::once(0)
        .chain(schedule[1..].iter().map(|s| s.start_sample.min(out_len)))
        .collect();
    let conv = SegmentConvolver::new(m);
    let mut left = vec![0.0; out_len];
    let mut right = vec![0.0; out_len];
    let mut cur = [Vec::new(), Vec::new()];
    // previous segment's output starting at this segment's start
    let mut prev_tail: [Vec<f64>; 2] = [Vec::new(), Vec::new()];

    for (k, seg) in schedule.iter().enumerate() {
        let from = starts[k];
        let own_end = starts.get(k + 1).copied().unwrap_or(out_len);
        let to = if k + 1 < schedule.len() {
            (own_end + CROSSFADE_LEN).min(out_len)
        } else {
            out_len
        };
        if from >= out_len {
            break;
        }
        let hl = conv.ir_spectrum(&seg.left);
        let hr = conv.ir_spectrum(&seg.right);
        let [cl, cr] = &mut cur;
        conv.run(x, [&hl, &hr], from, to, [cl, cr]);

        for (ear, out) in [&mut left, &mut right].into_iter().enumerate() {
            for n in from..own_end {
                let y = cur[ear][n - from];
                let offset = n - from;
                out[n] = if k > 0 && offset < CROSSFADE_LEN && offset < prev_tail[ear].len() {
                    let w = offset as f64 / CROSSFADE_LEN as f64;
                    (1.0 - w) * prev_tail[ear][offset] + w * y
                } else {
                    y
                };
            }
            prev_tail[ear].clear();
            if own_end < to {
                prev_tail[ear].extend_from_slice(&cur[ear][own_end - from..to - from]);
            }
        }
    }
    BinauralSignal::new(source.sample_rate_hz, left, right)
}
