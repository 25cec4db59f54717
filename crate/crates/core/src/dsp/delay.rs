use alloc::vec;
use core::f64::consts::PI;

use super::MonoSignal;
use crate::{Error, Result};

/// Length of the windowed-sinc interpolation kernel.
pub const FRACTIONAL_DELAY_TAPS: usize = 31;

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        libm::sin(PI * x) / (PI * x)
    }
}

/// Delays `signal` by a non-negative, possibly fractional number of samples
/// using a Hann-windowed 31-tap sinc interpolator. The output keeps the input
/// length (samples pushed past the end are dropped). Integer delays are
/// exact shifts.
pub fn fractional_delay(signal: &MonoSignal, delay_samples: f64) -> Result<MonoSignal> {
    if !delay_samples.is_finite() {
        return Err(Error::NonFinite);
    }
    if delay_samples < 0.0 {
        return Err(Error::NegativeDelay(delay_samples));
    }
    let x = &signal.samples;
    let n = x.len();
    let whole = libm::floor(delay_samples);
    let frac = delay_samples - whole;
    let whole = whole as usize;
    let mut out = vec![0.0; n];
    if frac == 0.0 {
        if whole < n {
            out[whole..].copy_from_slice(&x[..n - whole]);
        }
        return MonoSignal::new(signal.sample_rate_hz, out);
    }
    let half = (FRACTIONAL_DELAY_TAPS / 2) as i64;
    let taps: vec::Vec<f64> = (-half..=half)
        .map(|j| {
            let u = j as f64 - frac;
            let w = 0.5 * (1.0 + libm::cos(PI * u / (half as f64 + 1.0)));
            sinc(u) * w
        })
        .collect();
    // y[i] = Σ_j x[i - whole - j] · h(j - frac)
    for (i, y) in out.iter_mut().enumerate() {
        let base = i as i64 - whole as i64;
        let mut acc = 0.0;
        for (t, j) in (-half..=half).enumerate() {
            let src = base - j;
            if src >= 0 && (src as usize) < n {
                acc += x[src as usize] * taps[t];
            }
        }
        *y = acc;
    }
    MonoSignal::new(signal.sample_rate_hz, out)
}
