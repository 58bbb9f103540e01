//! Radix-2 complex FFT.
//!
//! Grid sizes in this crate are powers of two by construction, so a plain
//! iterative Cooley–Tukey transform with a precomputed twiddle table covers
//! everything the spectral propagator needs. Forward convention:
//! `X[m] = Σ_j x[j] e^{-2πi jm/N}`; `inverse` undoes it exactly (including
//! the `1/N` scale).

use alloc::vec::Vec;
use core::f64::consts::PI;
use num_complex::Complex64;

pub struct Fft {
    len: usize,
    // e^{-2πi k/len} for k in 0..len/2
    twiddles: Vec<Complex64>,
}

impl Fft {
    /// `len` must be a power of two ≥ 2.
    pub fn new(len: usize) -> Self {
        assert!(len.is_power_of_two() && len >= 2, "FFT length must be a power of two >= 2");
        let mut twiddles = Vec::with_capacity(len / 2);
        for k in 0..len / 2 {
            let angle = -2.0 * PI * k as f64 / len as f64;
            twiddles.push(Complex64::new(libm::cos(angle), libm::sin(angle)));
        }
        Fft { len, twiddles }
    }

    pub fn forward(&self, buf: &mut [Complex64]) {
        self.transform(buf, false);
    }

    pub fn inverse(&self, buf: &mut [Complex64]) {
        self.transform(buf, true);
        let scale = 1.0 / self.len as f64;
        for v in buf.iter_mut() {
            *v *= scale;
        }
    }

    fn transform(&self, buf: &mut [Complex64], inverse: bool) {
        let n = self.len;
        assert_eq!(buf.len(), n);

        // bit-reversal permutation
        let mut j = 0usize;
        for i in 1..n {
            let mut bit = n >> 1;
            while j & bit != 0 {
                j ^= bit;
                bit >>= 1;
            }
            j |= bit;
            if i < j {
                buf.swap(i, j);
            }
        }

        let mut half = 1usize;
        while half < n {
            let stride = n / (2 * half);
            let mut start = 0usize;
            while start < n {
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
                start += 2 * half;
            }
            half *= 2;
        }
    }
}

/// Signed wavenumber `κ_m = 2π m̃ / (N Δx)` of DFT bin `m`, with `m̃` wrapped
/// into `[-N/2, N/2)`.
pub fn wavenumber(m: usize, n: usize, dx: f64) -> f64 {
    let signed = if m < n / 2 { m as i64 } else { m as i64 - n as i64 };
    2.0 * PI * signed as f64 / (n as f64 * dx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;
    use proptest::prelude::*;

    /// O(N²) reference transform, independent of the fast path.
    fn naive_dft(input: &[Complex64]) -> Vec<Complex64> {
        let n = input.len();
        (0..n)
            .map(|m| {
                let mut acc = Complex64::new(0.0, 0.0);
                for (j, &x) in input.iter().enumerate() {
                    let angle = -2.0 * PI * (j * m) as f64 / n as f64;
                    acc += x * Complex64::new(libm::cos(angle), libm::sin(angle));
                }
                acc
            })
            .collect()
    }

    fn random_signal(n: usize, seed: u64) -> Vec<Complex64> {
        let mut rng = SplitMix64::new(seed);
        (0..n)
            .map(|_| Complex64::new(rng.range(-1.0, 1.0), rng.range(-1.0, 1.0)))
            .collect()
    }

    #[test]
    fn matches_naive_dft() {
        for &n in &[2usize, 8, 64, 256] {
            let signal = random_signal(n, 0xfeed + n as u64);
            let expected = naive_dft(&signal);
            let mut buf = signal.clone();
            Fft::new(n).forward(&mut buf);
            for (got, want) in buf.iter().zip(&expected) {
                assert!(
                    (got - want).norm() < 1e-10,
                    "n={n}: {got} vs {want}"
                );
            }
        }
    }

    #[test]
    fn wavenumbers_wrap() {
        let n = 8;
        let dx = 0.5;
        assert_eq!(wavenumber(0, n, dx), 0.0);
        assert!(wavenumber(1, n, dx) > 0.0);
        assert!(wavenumber(n - 1, n, dx) < 0.0);
        assert!((wavenumber(1, n, dx) + wavenumber(n - 1, n, dx)).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn roundtrip_is_identity(seed in any::<u64>(), log2n in 1usize..10) {
            let n = 1 << log2n;
            let signal = random_signal(n, seed);
            let mut buf = signal.clone();
            let fft = Fft::new(n);
            fft.forward(&mut buf);
            fft.inverse(&mut buf);
            for (got, want) in buf.iter().zip(&signal) {
                prop_assert!((got - want).norm() < 1e-12);
            }
        }

        #[test]
        fn unitary_up_to_scale(seed in any::<u64>()) {
            let n = 128usize;
            let signal = random_signal(n, seed);
            let mut buf = signal.clone();
            Fft::new(n).forward(&mut buf);
            let before: f64 = signal.iter().map(|v| v.norm_sqr()).sum();
            let after: f64 = buf.iter().map(|v| v.norm_sqr()).sum();
            prop_assert!((after - before * n as f64).abs() < 1e-8 * before.max(1.0) * n as f64);
        }
    }
}
