use crate::dsp::{stft_mono, MonoSignal, DEFAULT_HOP, DEFAULT_WINDOW};
use crate::Result;

/// Upper edge of the highest octave band that must carry energy.
pub const BANDWIDTH_TOP_HZ: f64 = 5_000.0;
pub const BANDWIDTH_OCTAVES: usize = 6;
/// Minimum band level relative to the clip's peak STFT magnitude.
pub const BANDWIDTH_FLOOR_DB: f64 = -40.0;

/// True when every octave band `[5000 / 2^(k+1), 5000 / 2^k)` Hz,
/// `k = 0..6`, has a mean STFT magnitude within 40 dB of the clip peak.
pub fn has_minimum_bandwidth(signal: &MonoSignal) -> Result<bool> {
    let spec = stft_mono(signal, DEFAULT_WINDOW, DEFAULT_HOP)?;
    let peak = spec.max_magnitude();
    if peak <= 0.0 {
        return Ok(false);
    }
    let floor = peak * libm::pow(10.0, BANDWIDTH_FLOOR_DB / 20.0);
    for k in 0..BANDWIDTH_OCTAVES {
        let hi = BANDWIDTH_TOP_HZ / (1u32 << k) as f64;
        let lo = hi / 2.0;
        let bins: alloc::vec::Vec<usize> = (0..spec.bins())
            .filter(|&b| {
                let f = spec.bin_hz(b);
                f >= lo && f < hi
            })
            .collect();
        let mut sum = 0.0;
        for t in 0..spec.frames() {
            let frame = spec.frame(0, t);
            sum += bins.iter().map(|&b| frame[b]).sum::<f64>();
        }
        let mean = sum / (bins.len() * spec.frames()) as f64;
        if mean < floor {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn low_tone_is_rejected() {
        let x: Vec<f64> = (0..48_000)
            .map(|i| libm::sin(core::f64::consts::TAU * 200.0 * i as f64 / 48_000.0))
            .collect();
        assert!(!has_minimum_bandwidth(&MonoSignal::at_default_rate(x).unwrap()).unwrap());
    }

    #[test]
    fn white_noise_passes() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let x: Vec<f64> = (0..48_000).map(|_| StandardNormal.sample(&mut rng)).collect();
        assert!(has_minimum_bandwidth(&MonoSignal::at_default_rate(x).unwrap()).unwrap());
    }

    #[test]
    fn silence_is_rejected() {
        assert!(!has_minimum_bandwidth(&MonoSignal::at_default_rate(alloc::vec![0.0; 4096]).unwrap()).unwrap());
    }
}
