//! Iterative radix-2 FFT over `Complex64`.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

use crate::{Error, Result};

/// Precomputed twiddles and bit-reversal permutation for one power-of-two
/// size.
#[derive(Clone, Debug)]
pub struct Fft {
    n: usize,
    twiddles: Vec<Complex64>,
    bitrev: Vec<u32>,
}

impl Fft {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 || !n.is_power_of_two() {
            return Err(Error::WindowNotPowerOfTwo(n));
        }
        let twiddles = (0..n / 2)
            .map(|k| {
                if k == 0 {
                    Complex64::new(1.0, 0.0)
                } else {
                    let (s, c) = libm::sincos(-2.0 * PI * k as f64 / n as f64);
                    Complex64::new(c, s)
                }
            })
            .collect();
        let bits = n.trailing_zeros();
        let bitrev = (0..n as u32)
            .map(|i| if bits == 0 { 0 } else { i.reverse_bits() >> (32 - bits) })
            .collect();
        Ok(Self {
            n,
            twiddles,
            bitrev,
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// In-place forward transform, `X[k] = Σ x[n] e^{-2πikn/N}`.
    pub fn forward(&self, buf: &mut [Complex64]) {
        self.transform(buf, false);
    }

    /// In-place inverse transform including the `1/N` normalization.
    pub fn inverse(&self, buf: &mut [Complex64]) {
        self.transform(buf, true);
        let scale = 1.0 / self.n as f64;
        for v in buf.iter_mut() {
            *v *= scale;
        }
    }

    fn transform(&self, buf: &mut [Complex64], inverse: bool) {
        assert_eq!(buf.len(), self.n, "buffer length must match plan size");
        for i in 0..self.n {
            let j = self.bitrev[i] as usize;
            if j > i {
                buf.swap(i, j);
            }
        }
        let mut len = 2;
        while len <= self.n {
            let half = len / 2;
            let stride = self.n / len;
            for start in (0..self.n).step_by(len) {
                for k in 0..half {
                    let mut w = self.twiddles[k * stride];
                    if inverse {
                        w = w.conj();
                    }
                    let a = buf[start + k];
                    let b = buf[start + k + half] * w;
                    buf[start + k] = a + b;
                    buf[start + k + half] = a - b;
                }
            }
            len <<= 1;
        }
    }

    /// One-sided spectrum (`N/2 + 1` bins) of a real signal zero-padded or
    /// truncated to `N`.
    pub fn forward_real(&self, input: &[f64]) -> Vec<Complex64> {
        let mut buf = vec![Complex64::new(0.0, 0.0); self.n];
        for (b, &x) in buf.iter_mut().zip(input) {
            b.re = x;
        }
        self.forward(&mut buf);
        buf.truncate(self.n / 2 + 1);
        buf
    }

    /// Real signal from a one-sided spectrum. The full spectrum is built
    /// with exact conjugate symmetry; DC and Nyquist must be real-valued
    /// (their imaginary parts are ignored).
    ///
    /// Returns the signal and the largest imaginary residue observed before
    /// it was discarded.
    pub fn inverse_real(&self, half: &[Complex64]) -> (Vec<f64>, f64) {
        let n = self.n;
        assert_eq!(half.len(), n / 2 + 1, "one-sided spectrum length");
        let mut buf = vec![Complex64::new(0.0, 0.0); n];
        buf[0] = Complex64::new(half[0].re, 0.0);
        if n > 1 {
            buf[n / 2] = Complex64::new(half[n / 2].re, 0.0);
        }
        for k in 1..n / 2 {
            buf[k] = half[k];
            buf[n - k] = half[k].conj();
        }
        self.inverse(&mut buf);
        let residue = buf.iter().map(|c| c.im.abs()).fold(0.0, f64::max);
        (buf.into_iter().map(|c| c.re).collect(), residue)
    }
}
