use alloc::vec::Vec;

use super::{nearest_valid, wrap_phase, Ear, EarSpectrum, HrtfGrid};
use crate::spatial::{BinIndex, Direction, AZ_BINS, BIN_DEG, EL_BINS};
use crate::Result;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum LookupMode {
    Nearest,
    #[default]
    Bilinear,
}

/// The four bins surrounding `d` with their bilinear weights, lower-left
/// first.
pub fn bilinear_neighbors(d: &Direction) -> [(BinIndex, f64); 4] {
    let a = (d.azimuth_deg() + 180.0) / BIN_DEG;
    let e = (d.elevation_deg() + 90.0) / BIN_DEG;
    let a0 = libm::floor(a);
    let fa = a - a0;
    let e0 = libm::floor(e).min((EL_BINS - 2) as f64);
    let fe = e - e0;
    let a0i = (a0 as i64).rem_euclid(AZ_BINS as i64) as usize;
    let a1i = (a0i + 1) % AZ_BINS;
    let e0i = e0 as usize;
    let e1i = e0i + 1;
    let bin = |az, el| BinIndex {
        azimuth_bin: az,
        elevation_bin: el,
    };
    [
        (bin(a0i, e0i), (1.0 - fa) * (1.0 - fe)),
        (bin(a1i, e0i), fa * (1.0 - fe)),
        (bin(a0i, e1i), (1.0 - fa) * fe),
        (bin(a1i, e1i), fa * fe),
    ]
}

/// Left and right spectra for a direction.
///
/// Nearest returns the bin containing `d`, or the closest valid bin when
/// that one is invalid. Bilinear interpolates magnitude linearly and phase
/// along the shortest arc over the four surrounding bin centers, and falls
/// back to nearest when any of them is invalid.
pub fn lookup(grid: &HrtfGrid, d: &Direction, mode: LookupMode) -> Result<(EarSpectrum, EarSpectrum)> {
    if mode == LookupMode::Bilinear {
        let nb = bilinear_neighbors(d);
        if nb.iter().all(|(b, _)| grid.state(*b).is_valid()) {
            return Ok((interpolate(grid, &nb, Ear::Left), interpolate(grid, &nb, Ear::Right)));
        }
    }
    let b = nearest_valid(grid.states(), d)?;
    Ok((grid.spectrum(b, Ear::Left), grid.spectrum(b, Ear::Right)))
}

/// Interpolated magnitudes only (both ears), as used for training labels.
pub fn lookup_magnitude(grid: &HrtfGrid, d: &Direction, mode: LookupMode) -> Result<[Vec<f64>; 2]> {
    if mode == LookupMode::Bilinear {
        let nb = bilinear_neighbors(d);
        if nb.iter().all(|(b, _)| grid.state(*b).is_valid()) {
            return Ok(Ear::BOTH.map(|ear| interpolate_magnitude(grid, &nb, ear)));
        }
    }
    let b = nearest_valid(grid.states(), d)?;
    Ok(Ear::BOTH.map(|ear| grid.magnitude(b, ear).to_vec()))
}

fn interpolate_magnitude(grid: &HrtfGrid, nb: &[(BinIndex, f64); 4], ear: Ear) -> Vec<f64> {
    let f = grid.freq_bins();
    let mut mag = alloc::vec![0.0; f];
    for (b, w) in nb {
        for (m, v) in mag.iter_mut().zip(grid.magnitude(*b, ear)) {
            *m += w * v;
        }
    }
    mag
}

/// Shortest-arc bilinear phase, done as two azimuth interpolations followed
/// by one in elevation. Each step is `p0 + w·wrap(p1 - p0)`, which is
/// symmetric under swapping the endpoints, so mirrored queries produce
/// mirrored results. DC and Nyquist are interpolated as signed real values.
fn interpolate(grid: &HrtfGrid, nb: &[(BinIndex, f64); 4], ear: Ear) -> EarSpectrum {
    let magnitude = interpolate_magnitude(grid, nb, ear);
    let wa = nb[1].1 + nb[3].1;
    let we = nb[2].1 + nb[3].1;
    let lerp = |p0: f64, p1: f64, w: f64| {
        if w == 0.0 {
            p0
        } else if w == 1.0 {
            p1
        } else {
            p0 + w * wrap_phase(p1 - p0)
        }
    };
    let rows = [grid.phase(nb[0].0, ear), grid.phase(nb[1].0, ear), grid.phase(nb[2].0, ear), grid.phase(nb[3].0, ear)];
    let mut phase: Vec<f64> = (0..grid.freq_bins())
        .map(|k| {
            let low = lerp(rows[0][k], rows[1][k], wa);
            let high = lerp(rows[2][k], rows[3][k], wa);
            wrap_phase(lerp(low, high, we))
        })
        .collect();
    let mut magnitude = magnitude;
    // DC and Nyquist are real: interpolate the signed value instead.
    let last = grid.freq_bins() - 1;
    for k in [0, last] {
        let v: f64 = nb
            .iter()
            .map(|(b, w)| w * grid.magnitude(*b, ear)[k] * libm::cos(grid.phase(*b, ear)[k]))
            .sum();
        magnitude[k] = v.abs();
        phase[k] = if v < 0.0 { core::f64::consts::PI } else { 0.0 };
    }
    EarSpectrum { magnitude, phase }
}
