use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::hrtf::SPEED_OF_SOUND;
use crate::{Error, Result};

/// Shoebox room around a listener at the origin. Walls are ordered
/// `[+x, -x, +y, -y, +z, -z]`, each given as its distance from the listener.
#[derive(Clone, Debug, PartialEq)]
pub struct RoomConfig {
    pub wall_distances_m: [f64; 6],
    pub rt60_s: f64,
    pub enabled: bool,
}

impl RoomConfig {
    pub fn anechoic() -> Self {
        Self {
            wall_distances_m: [5.0; 6],
            rt60_s: 0.6,
            enabled: false,
        }
    }

    pub fn new(wall_distances_m: [f64; 6], rt60_s: f64) -> Result<Self> {
        let room = Self {
            wall_distances_m,
            rt60_s,
            enabled: true,
        };
        room.validate()?;
        Ok(room)
    }

    pub fn validate(&self) -> Result<()> {
        if self.wall_distances_m.iter().any(|d| !(d.is_finite() && *d >= 0.1)) {
            return Err(Error::Room("wall distances must be at least 0.1 m".into()));
        }
        if self.enabled && !(self.rt60_s.is_finite() && self.rt60_s > 0.0) {
            return Err(Error::Room("RT60 must be positive".into()));
        }
        Ok(())
    }

    /// Room extent along each axis.
    pub fn dimensions(&self) -> [f64; 3] {
        let d = &self.wall_distances_m;
        [d[0] + d[1], d[2] + d[3], d[4] + d[5]]
    }

    pub fn volume(&self) -> f64 {
        let [x, y, z] = self.dimensions();
        x * y * z
    }

    pub fn surface_area(&self) -> f64 {
        let [x, y, z] = self.dimensions();
        2.0 * (x * y + x * z + y * z)
    }

    pub fn contains(&self, p: [f64; 3]) -> bool {
        let d = &self.wall_distances_m;
        (0..3).all(|a| p[a] > -d[2 * a + 1] && p[a] < d[2 * a])
    }

    /// Left-right mirror image (`+y` and `-y` walls swapped).
    pub fn mirrored(&self) -> Self {
        let mut out = self.clone();
        out.wall_distances_m.swap(2, 3);
        out
    }
}

/// Uniform wall reflection coefficient from the RT60 target via Sabine's
/// formula.
pub fn rt60_to_reflection_coeff(room: &RoomConfig) -> Result<f64> {
    room.validate()?;
    if !room.enabled {
        return Err(Error::Room("room is disabled".into()));
    }
    let alpha = 0.161 * room.volume() / (room.surface_area() * room.rt60_s);
    if alpha >= 1.0 {
        return Err(Error::Room(format!(
            "absorption {alpha:.3} >= 1: room too small for RT60 {} s, use larger wall distances",
            room.rt60_s
        )));
    }
    Ok(libm::sqrt(1.0 - alpha).clamp(0.0, 0.999))
}

#[derive(Clone, Debug, PartialEq)]
pub struct ImageSource {
    pub position: [f64; 3],
    /// `reflection_coeff^order / distance`.
    pub attenuation: f64,
    pub delay_s: f64,
    pub order: usize,
}

/// Per-axis images `(coordinate, reflection count)` within `max_reflections`.
fn axis_images(lo: f64, width: f64, s: f64, max_reflections: usize, max_abs: f64) -> Vec<(f64, usize)> {
    let u = s - lo;
    let mut out = Vec::new();
    let by_order = max_reflections / 2 + 1;
    let by_distance = if max_abs.is_finite() {
        (max_abs / (2.0 * width)) as usize + 2
    } else {
        usize::MAX
    };
    let n_max = by_order.min(by_distance) as i64;
    for n in -n_max..=n_max {
        let plus = (2 * n).unsigned_abs() as usize;
        let x = lo + 2.0 * n as f64 * width + u;
        if plus <= max_reflections && x.abs() <= max_abs {
            out.push((x, plus));
        }
        let minus = (2 * n - 1).unsigned_abs() as usize;
        let x = lo + 2.0 * n as f64 * width - u;
        if minus <= max_reflections && x.abs() <= max_abs {
            out.push((x, minus));
        }
    }
    out
}

fn enumerate(
    room: &RoomConfig,
    source: [f64; 3],
    max_order: usize,
    max_distance: f64,
) -> Result<Vec<ImageSource>> {
    let direct = |p: [f64; 3]| -> Result<ImageSource> {
        let dist = norm(p);
        if dist <= 0.0 {
            return Err(Error::Room("source coincides with the listener".into()));
        }
        Ok(ImageSource {
            position: p,
            attenuation: 1.0 / dist,
            delay_s: dist / SPEED_OF_SOUND,
            order: 0,
        })
    };
    if !room.enabled || max_order == 0 {
        room.validate()?;
        return Ok(vec![direct(source)?]);
    }
    if !room.contains(source) {
        return Err(Error::Room("source lies outside the room".into()));
    }
    let beta = rt60_to_reflection_coeff(room)?;
    let dims = room.dimensions();
    let d = &room.wall_distances_m;
    let axes: Vec<Vec<(f64, usize)>> = (0..3)
        .map(|a| axis_images(-d[2 * a + 1], dims[a], source[a], max_order, max_distance))
        .collect();
    let mut out = Vec::new();
    for &(x, ox) in &axes[0] {
        for &(y, oy) in &axes[1] {
            let oxy = ox + oy;
            if oxy > max_order || x * x + y * y > max_distance * max_distance {
                continue;
            }
            for &(z, oz) in &axes[2] {
                let order = oxy + oz;
                if order > max_order {
                    continue;
                }
                let p = [x, y, z];
                let dist = norm(p);
                if dist > max_distance {
                    continue;
                }
                out.push(ImageSource {
                    position: p,
                    attenuation: libm::pow(beta, order as f64) / dist,
                    delay_s: dist / SPEED_OF_SOUND,
                    order,
                });
            }
        }
    }
    out.sort_by(|a, b| a.delay_s.total_cmp(&b.delay_s).then(a.order.cmp(&b.order)));
    Ok(out)
}

fn norm(p: [f64; 3]) -> f64 {
    libm::sqrt(p[0] * p[0] + p[1] * p[1] + p[2] * p[2])
}

/// Direct path plus mirrored images up to `order` reflections, sorted by
/// arrival time. A disabled room yields only the direct path.
pub fn image_sources(room: &RoomConfig, source_position: [f64; 3], order: usize) -> Result<Vec<ImageSource>> {
    enumerate(room, source_position, order, f64::INFINITY)
}

/// Omnidirectional room impulse response of `length` samples, with every
/// image that arrives within it placed at its nearest sample.
pub fn room_impulse_response(
    room: &RoomConfig,
    source_position: [f64; 3],
    length: usize,
    sample_rate_hz: u32,
) -> Result<Vec<f64>> {
    let fs = sample_rate_hz as f64;
    let max_distance = length as f64 / fs * SPEED_OF_SOUND;
    let max_order = if room.enabled { usize::MAX } else { 0 };
    let images = enumerate(room, source_position, max_order, max_distance)?;
    let mut ir = vec![0.0; length];
    for img in images {
        let n = libm::round(img.delay_s * fs) as usize;
        if n < length {
            ir[n] += img.attenuation;
        }
    }
    Ok(ir)
}

/// RT60 from the Schroeder energy decay curve: a least-squares line through
/// the -5 to -25 dB range, extrapolated to -60 dB. `None` when the curve
/// never reaches -25 dB.
pub fn schroeder_rt60(ir: &[f64], sample_rate_hz: u32) -> Option<f64> {
    let mut edc = vec![0.0; ir.len()];
    let mut acc = 0.0;
    for i in (0..ir.len()).rev() {
        acc += ir[i] * ir[i];
        edc[i] = acc;
    }
    let total = *edc.first()?;
    if total <= 0.0 {
        return None;
    }
    let fs = sample_rate_hz as f64;
    let (mut n, mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    let mut reached = false;
    for (i, e) in edc.iter().enumerate() {
        let db = 10.0 * libm::log10(e / total);
        if db < -25.0 {
            reached = true;
            break;
        }
        if db <= -5.0 {
            let t = i as f64 / fs;
            n += 1.0;
            sx += t;
            sy += db;
            sxx += t * t;
            sxy += t * db;
        }
    }
    if !reached || n < 2.0 {
        return None;
    }
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    (slope < 0.0).then(|| -60.0 / slope)
}
