//! Complex FFT for arbitrary lengths.
//!
//! Power-of-two lengths use an iterative radix-2 kernel. Other lengths go
//! through Bluestein's chirp-z transform on top of a power-of-two plan.
//! The forward transform is unnormalized, the inverse carries the `1/n`.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

#[derive(Debug, Clone)]
pub struct Fft {
    len: usize,
    kernel: Kernel,
}

#[derive(Debug, Clone)]
enum Kernel {
    Radix2(Radix2),
    Bluestein(Bluestein),
}

impl Fft {
    pub fn new(len: usize) -> Self {
        assert!(len > 0, "FFT length must be positive");
        let kernel = if len.is_power_of_two() {
            Kernel::Radix2(Radix2::new(len))
        } else {
            Kernel::Bluestein(Bluestein::new(len))
        };
        Self { len, kernel }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// In-place `X_j = sum_m x_m exp(-2 pi i j m / n)`.
    pub fn forward(&self, data: &mut [Complex64]) {
        assert_eq!(data.len(), self.len);
        match &self.kernel {
            Kernel::Radix2(r) => r.run(data),
            Kernel::Bluestein(b) => b.run(data),
        }
    }

    /// In-place inverse, including the `1/n` normalization.
    pub fn inverse(&self, data: &mut [Complex64]) {
        for z in data.iter_mut() {
            *z = z.conj();
        }
        self.forward(data);
        let scale = 1.0 / self.len as f64;
        for z in data.iter_mut() {
            *z = z.conj() * scale;
        }
    }
}

#[derive(Debug, Clone)]
struct Radix2 {
    len: usize,
    twiddles: Vec<Complex64>,
    bitrev: Vec<u32>,
}

impl Radix2 {
    fn new(len: usize) -> Self {
        let twiddles = (0..len / 2)
            .map(|k| cis(-2.0 * PI * k as f64 / len as f64))
            .collect();
        let bits = len.trailing_zeros();
        let bitrev = (0..len as u32)
            .map(|i| if bits == 0 { 0 } else { i.reverse_bits() >> (32 - bits) })
            .collect();
        Self { len, twiddles, bitrev }
    }

    fn run(&self, data: &mut [Complex64]) {
        let n = self.len;
        for (i, &j) in self.bitrev.iter().enumerate() {
            let j = j as usize;
            if i < j {
                data.swap(i, j);
            }
        }
        let mut half = 1;
        while half < n {
            let stride = n / (2 * half);
            for block in data.chunks_exact_mut(2 * half) {
                let (lo, hi) = block.split_at_mut(half);
                for (k, (a, b)) in lo.iter_mut().zip(hi.iter_mut()).enumerate() {
                    let t = *b * self.twiddles[k * stride];
                    *b = *a - t;
                    *a += t;
                }
            }
            half *= 2;
        }
    }
}

#[derive(Debug, Clone)]
struct Bluestein {
    len: usize,
    inner: Radix2,
    chirp: Vec<Complex64>,
    kernel_spectrum: Vec<Complex64>,
}

impl Bluestein {
    fn new(len: usize) -> Self {
        let padded = (2 * len - 1).next_power_of_two();
        let inner = Radix2::new(padded);
        // k^2 is reduced mod 2n before forming the angle.
        let two_n = 2 * len as u64;
        let chirp: Vec<Complex64> = (0..len as u64)
            .map(|k| cis(-PI * ((k * k) % two_n) as f64 / len as f64))
            .collect();
        let mut kernel = vec![Complex64::new(0.0, 0.0); padded];
        kernel[0] = chirp[0].conj();
        for k in 1..len {
            kernel[k] = chirp[k].conj();
            kernel[padded - k] = chirp[k].conj();
        }
        inner.run(&mut kernel);
        Self {
            len,
            inner,
            chirp,
            kernel_spectrum: kernel,
        }
    }

    fn run(&self, data: &mut [Complex64]) {
        let padded = self.inner.len;
        let mut work = vec![Complex64::new(0.0, 0.0); padded];
        for k in 0..self.len {
            work[k] = data[k] * self.chirp[k];
        }
        self.inner.run(&mut work);
        for (w, h) in work.iter_mut().zip(&self.kernel_spectrum) {
            *w = (*w * h).conj();
        }
        // inverse via conjugation
        self.inner.run(&mut work);
        let scale = 1.0 / padded as f64;
        for k in 0..self.len {
            data[k] = work[k].conj() * scale * self.chirp[k];
        }
    }
}

#[inline]
pub(crate) fn cis(angle: f64) -> Complex64 {
    let (s, c) = libm::sincos(angle);
    Complex64::new(c, s)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_dft(x: &[Complex64]) -> Vec<Complex64> {
        let n = x.len();
        (0..n)
            .map(|j| {
                x.iter()
                    .enumerate()
                    .map(|(m, &v)| v * cis(-2.0 * PI * ((j * m) % n) as f64 / n as f64))
                    .sum()
            })
            .collect()
    }

    fn sample(n: usize) -> Vec<Complex64> {
        (0..n)
            .map(|m| {
                let t = m as f64;
                Complex64::new(libm::sin(0.37 * t * t) + 0.1 * t, libm::cos(1.3 * t) - 0.5)
            })
            .collect()
    }

    #[test]
    fn matches_naive_dft_for_mixed_lengths() {
        for &n in &[1usize, 2, 8, 16, 18, 48, 100, 128, 250] {
            let x = sample(n);
            let expected = naive_dft(&x);
            let mut got = x.clone();
            Fft::new(n).forward(&mut got);
            for (a, b) in got.iter().zip(&expected) {
                assert!((a - b).norm() < 1e-9 * (1.0 + n as f64), "n = {n}");
            }
        }
    }

    #[test]
    fn inverse_round_trip() {
        for &n in &[16usize, 30, 512] {
            let x = sample(n);
            let plan = Fft::new(n);
            let mut y = x.clone();
            plan.forward(&mut y);
            plan.inverse(&mut y);
            for (a, b) in x.iter().zip(&y) {
                assert!((a - b).norm() < 1e-12 * n as f64);
            }
        }
    }
}
