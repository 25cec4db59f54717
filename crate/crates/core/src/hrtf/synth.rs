use alloc::vec::Vec;

use num_complex::Complex64;

use super::{Ear, Hrir, HrtfGrid};
use crate::dsp::Fft;
use crate::{Error, Result};

pub const DEFAULT_IR_LENGTH: usize = 512;
/// Length of the half-Hann fade-out applied to the tail of every synthesized IR.
pub const FADE_LEN: usize = 64;

const REAL_TOLERANCE: f64 = 1e-10;

/// Impulse response of one ear spectrum, truncated to `ir_length` with the
/// tail fade applied.
///
/// DC and Nyquist are made real by keeping the magnitude and the sign of
/// `cos(phase)`.
pub fn spectrum_to_ir(fft: &Fft, magnitude: &[f64], phase: &[f64], ir_length: usize) -> Result<Vec<f64>> {
    let n = fft.len();
    let half = n / 2 + 1;
    if magnitude.len() != half || phase.len() != half {
        return Err(Error::FftSizeMismatch(n, 2 * (magnitude.len().max(1) - 1)));
    }
    if ir_length > n {
        return Err(Error::IrTooLong { ir_length, fft_size: n });
    }
    let mut spec: Vec<Complex64> = magnitude
        .iter()
        .zip(phase)
        .map(|(&m, &p)| Complex64::from_polar(m, p))
        .collect();
    for k in [0, half - 1] {
        let sign = if libm::cos(phase[k]) < 0.0 { -1.0 } else { 1.0 };
        spec[k] = Complex64::new(sign * magnitude[k], 0.0);
    }
    let (mut ir, residue) = fft.inverse_real(&spec);
    if residue >= REAL_TOLERANCE {
        return Err(Error::NonRealSpectrum(residue));
    }
    ir.truncate(ir_length);
    apply_fade(&mut ir);
    Ok(ir)
}

fn apply_fade(ir: &mut [f64]) {
    let len = FADE_LEN.min(ir.len());
    let start = ir.len() - len;
    for (i, v) in ir[start..].iter_mut().enumerate() {
        *v *= 0.5 * (1.0 + libm::cos(core::f64::consts::PI * i as f64 / FADE_LEN as f64));
    }
}

/// Combines the magnitudes of `magnitude_grid` with the phase of `generic`
/// and returns the impulse responses of every valid bin.
pub fn synthesize_hrirs(magnitude_grid: &HrtfGrid, generic: &HrtfGrid, ir_length: usize) -> Result<Hrir> {
    magnitude_grid.check_layout(generic)?;
    let fft = Fft::new(magnitude_grid.fft_size())?;
    if ir_length > fft.len() {
        return Err(Error::IrTooLong {
            ir_length,
            fft_size: fft.len(),
        });
    }
    let mut out = Hrir::new(ir_length, magnitude_grid.sample_rate_hz())?;
    for bin in magnitude_grid.valid_bins() {
        if !generic.state(bin).is_valid() {
            return Err(Error::MissingGenericBin {
                azimuth_bin: bin.azimuth_bin,
                elevation_bin: bin.elevation_bin,
            });
        }
        for ear in Ear::BOTH {
            let ir = spectrum_to_ir(&fft, magnitude_grid.magnitude(bin, ear), generic.phase(bin, ear), ir_length)?;
            out.set_ir(bin, ear, &ir)?;
        }
        out.set_state(bin, magnitude_grid.state(bin));
    }
    Ok(out)
}

/// Zero-padded spectra of every valid HRIR bin.
pub fn hrir_to_grid(hrir: &Hrir, fft_size: usize) -> Result<HrtfGrid> {
    if hrir.ir_length() > fft_size {
        return Err(Error::IrTooLong {
            ir_length: hrir.ir_length(),
            fft_size,
        });
    }
    let fft = Fft::new(fft_size)?;
    let mut grid = HrtfGrid::new(fft_size, hrir.sample_rate_hz())?;
    let mut mag = Vec::with_capacity(grid.freq_bins());
    let mut phase = Vec::with_capacity(grid.freq_bins());
    for bin in crate::spatial::BinIndex::all().filter(|b| hrir.state(*b).is_valid()) {
        for ear in Ear::BOTH {
            let spec = fft.forward_real(hrir.ir(bin, ear));
            mag.clear();
            phase.clear();
            for c in &spec {
                mag.push(c.norm());
                phase.push(c.arg());
            }
            grid.set_spectrum(bin, ear, &mag, &phase)?;
        }
        grid.set_state(bin, hrir.state(bin));
    }
    Ok(grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hrtf::BinState;
    use crate::spatial::BinIndex;
    use alloc::vec;
    use core::f64::consts::PI;

    fn flat_grid(fft_size: usize, phase_of: impl Fn(usize) -> f64) -> HrtfGrid {
        let mut g = HrtfGrid::new(fft_size, 48_000).unwrap();
        let f = g.freq_bins();
        let mag = vec![1.0; f];
        let ph: Vec<f64> = (0..f).map(phase_of).collect();
        let b = BinIndex::new(10, 18).unwrap();
        for ear in Ear::BOTH {
            g.set_spectrum(b, ear, &mag, &ph).unwrap();
        }
        g.set_state(b, BinState::Measured);
        g
    }

    #[test]
    fn flat_spectrum_zero_phase_is_unit_impulse() {
        let g = flat_grid(2048, |_| 0.0);
        let h = synthesize_hrirs(&g, &g, 512).unwrap();
        let ir = h.ir(BinIndex::new(10, 18).unwrap(), Ear::Left);
        assert_eq!(ir[0], 1.0);
        assert!(ir[1..].iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn linear_phase_shifts_impulse() {
        let n = 2048;
        let k = 32.0;
        let g = flat_grid(n, |f| super::super::wrap_phase(-2.0 * PI * f as f64 * k / n as f64));
        let h = synthesize_hrirs(&g, &g, 512).unwrap();
        let ir = h.ir(BinIndex::new(10, 18).unwrap(), Ear::Right);
        for (i, v) in ir.iter().enumerate() {
            let want = if i == 32 { 1.0 } else { 0.0 };
            assert!((v - want).abs() < 1e-12, "sample {i}: {v}");
        }
    }

    #[test]
    fn delayed_impulse_has_linear_phase() {
        let mut h = Hrir::new(512, 48_000).unwrap();
        let b = BinIndex::new(3, 7).unwrap();
        let mut ir = vec![0.0; 512];
        ir[32] = 1.0;
        h.set_ir(b, Ear::Left, &ir).unwrap();
        ir[32] = 0.0;
        ir[0] = 1.0;
        h.set_ir(b, Ear::Right, &ir).unwrap();
        h.set_state(b, BinState::Measured);
        let g = hrir_to_grid(&h, 2048).unwrap();
        assert_eq!(g.valid_count(), 1);
        for f in 0..g.freq_bins() {
            assert!((g.magnitude(b, Ear::Left)[f] - 1.0).abs() < 1e-12);
            assert!((g.magnitude(b, Ear::Right)[f] - 1.0).abs() < 1e-12);
            assert!(g.phase(b, Ear::Right)[f].abs() < 1e-12);
            let want = super::super::wrap_phase(-2.0 * PI * f as f64 * 32.0 / 2048.0);
            let got = g.phase(b, Ear::Left)[f];
            let diff = super::super::wrap_phase(got - want);
            assert!(diff.abs() < 1e-9, "bin {f}: {got} vs {want}");
        }
    }

    #[test]
    fn fade_shape() {
        let mut ir = vec![1.0; 100];
        apply_fade(&mut ir);
        assert!(ir[..36].iter().all(|&v| v == 1.0));
        assert_eq!(ir[36], 1.0);
        assert!((ir[68] - 0.5).abs() < 1e-12);
        assert!(ir[99] < 1e-3 && ir[99] > 0.0);
        assert!(ir.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn rejects_mismatches() {
        let a = flat_grid(2048, |_| 0.0);
        let b = flat_grid(1024, |_| 0.0);
        assert!(matches!(synthesize_hrirs(&a, &b, 512), Err(Error::FftSizeMismatch(..))));
        assert!(matches!(synthesize_hrirs(&a, &a, 4096), Err(Error::IrTooLong { .. })));
        let empty = HrtfGrid::new(2048, 48_000).unwrap();
        assert!(matches!(synthesize_hrirs(&a, &empty, 512), Err(Error::MissingGenericBin { .. })));
        let h = Hrir::new(512, 48_000).unwrap();
        assert!(hrir_to_grid(&h, 256).is_err());
    }

    #[test]
    fn inverted_polarity_keeps_sign_at_dc_and_nyquist() {
        let fft = Fft::new(64).unwrap();
        let ir = spectrum_to_ir(&fft, &vec![0.5; 33], &vec![PI; 33], 64).unwrap();
        assert!((ir[0] + 0.5).abs() < 1e-15);
        assert!(ir[1..].iter().all(|v| v.abs() < 1e-15));
    }
}
