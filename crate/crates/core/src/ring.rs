//! Ring discretization, potentials and single-particle wavefunctions.

use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

use crate::fft::{cis, Fft};
use crate::{Error, Result};

/// Uniform periodic grid `x_m = -1/2 + m/M` on a ring of unit circumference.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RingGrid {
    points: usize,
}

impl RingGrid {
    pub const MIN_POINTS: usize = 16;
    pub const MAX_POINTS: usize = 1 << 16;

    pub fn new(points: usize) -> Result<Self> {
        if points % 2 != 0 || !(Self::MIN_POINTS..=Self::MAX_POINTS).contains(&points) {
            return Err(Error::InvalidGrid(points));
        }
        Ok(Self { points })
    }

    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> usize {
        self.points
    }

    pub fn dx(&self) -> f64 {
        1.0 / self.points as f64
    }

    pub fn x(&self, m: usize) -> f64 {
        -0.5 + m as f64 * self.dx()
    }

    pub fn positions(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.points).map(move |m| self.x(m))
    }

    /// Signed wavenumber carried by FFT bin `j` (`-M/2..M/2-1`).
    pub fn wavenumber(&self, bin: usize) -> i64 {
        let m = self.points as i64;
        let j = bin as i64;
        if j < m / 2 {
            j
        } else {
            j - m
        }
    }

    /// FFT bin holding wavenumber `k`, if it is representable.
    pub fn bin(&self, k: i64) -> Option<usize> {
        let m = self.points as i64;
        if k >= -m / 2 && k < m / 2 {
            Some(k.rem_euclid(m) as usize)
        } else {
            None
        }
    }

    /// Grid index closest to `x` on the ring.
    pub fn nearest_index(&self, x: f64) -> usize {
        let u = (x + 0.5) - libm::floor(x + 0.5);
        let m = libm::round(u * self.points as f64) as usize;
        m % self.points
    }
}

/// Signed ring displacement from `x0` to `x`, `(x - x0 + 1/2) mod 1 - 1/2`.
pub fn wrap_displacement(x: f64, x0: f64) -> f64 {
    let u = x - x0 + 0.5;
    let mut r = u - libm::floor(u);
    // floor can round r up to exactly 1 for tiny negative u
    if r >= 1.0 {
        r -= 1.0;
    }
    r - 0.5
}

/// External potential on the ring.
///
/// `omega2` is the squared trap frequency and may be negative (inverted trap).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Potential {
    #[default]
    None,
    DeltaBarrier { height: f64, position: f64 },
    /// `omega2/2 * d^2` with `d` the wrapped displacement from `center`.
    Harmonic { omega2: f64, center: f64 },
    /// `omega2/(2 pi^2) * sin^2(pi (x - center))`.
    Sinusoidal { omega2: f64, center: f64 },
}

impl Potential {
    pub fn harmonic(omega: f64, center: f64) -> Self {
        Potential::Harmonic {
            omega2: omega * omega,
            center,
        }
    }

    pub fn sinusoidal(omega: f64, center: f64) -> Self {
        Potential::Sinusoidal {
            omega2: omega * omega,
            center,
        }
    }

    pub fn barrier(height: f64) -> Self {
        Potential::DeltaBarrier {
            height,
            position: 0.0,
        }
    }

    /// Pointwise value of a smooth potential; zero for `None` and the barrier.
    pub fn smooth_value(&self, x: f64) -> f64 {
        match *self {
            Potential::None | Potential::DeltaBarrier { .. } => 0.0,
            Potential::Harmonic { omega2, center } => {
                let d = wrap_displacement(x, center);
                0.5 * omega2 * d * d
            }
            Potential::Sinusoidal { omega2, center } => {
                let s = libm::sin(PI * (x - center));
                omega2 / (2.0 * PI * PI) * s * s
            }
        }
    }

    /// Samples on `grid`. The barrier becomes a Kronecker spike of weight
    /// `height/dx` on the grid point nearest its position.
    pub fn sample(&self, grid: &RingGrid) -> Vec<f64> {
        let mut out = alloc::vec![0.0; grid.len()];
        self.sample_into(grid, &mut out);
        out
    }

    pub fn sample_into(&self, grid: &RingGrid, out: &mut [f64]) {
        assert_eq!(out.len(), grid.len());
        match *self {
            Potential::None => out.fill(0.0),
            Potential::DeltaBarrier { height, position } => {
                out.fill(0.0);
                out[grid.nearest_index(position)] = height / grid.dx();
            }
            _ => {
                for (m, v) in out.iter_mut().enumerate() {
                    *v = self.smooth_value(grid.x(m));
                }
            }
        }
    }
}

/// Complex amplitudes of a single-particle state sampled on a [`RingGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct Wavefunction {
    grid: RingGrid,
    amps: Vec<Complex64>,
}

impl Wavefunction {
    /// Builds a normalized state from raw samples.
    pub fn new(grid: RingGrid, amps: Vec<Complex64>) -> Result<Self> {
        let mut psi = Self::from_raw(grid, amps)?;
        psi.normalize()?;
        Ok(psi)
    }

    /// Wraps samples without normalizing them.
    pub fn from_raw(grid: RingGrid, amps: Vec<Complex64>) -> Result<Self> {
        if amps.len() != grid.len() {
            return Err(Error::SizeMismatch {
                expected: grid.len(),
                found: amps.len(),
            });
        }
        Ok(Self { grid, amps })
    }

    pub fn from_fn(grid: RingGrid, f: impl Fn(f64) -> Complex64) -> Result<Self> {
        let amps = grid.positions().map(f).collect();
        Self::new(grid, amps)
    }

    /// `exp(2 pi i k x)`, normalized.
    pub fn plane_wave(k: i64, grid: RingGrid) -> Result<Self> {
        if grid.bin(k).is_none() || k == -(grid.len() as i64) / 2 {
            return Err(Error::Aliasing {
                k,
                points: grid.len(),
            });
        }
        let amps = grid.positions().map(|x| cis(2.0 * PI * k as f64 * x)).collect();
        Ok(Self { grid, amps })
    }

    /// Synthesizes `sum_k c_k exp(2 pi i k x)` and normalizes.
    pub fn from_momentum(grid: RingGrid, coefficients: &[(i64, Complex64)]) -> Result<Self> {
        let mut psi = Self::from_momentum_raw(grid, coefficients)?;
        psi.normalize()?;
        Ok(psi)
    }

    /// Like [`Wavefunction::from_momentum`] without normalizing.
    pub fn from_momentum_raw(grid: RingGrid, coefficients: &[(i64, Complex64)]) -> Result<Self> {
        let mut spectrum = alloc::vec![Complex64::new(0.0, 0.0); grid.len()];
        let n = grid.len() as f64;
        for &(k, c) in coefficients {
            let bin = match grid.bin(k) {
                Some(b) if k != -(grid.len() as i64) / 2 => b,
                _ => {
                    return Err(Error::Aliasing {
                        k,
                        points: grid.len(),
                    })
                }
            };
            // x_m = -1/2 + m/M contributes exp(-i pi k) on top of the DFT kernel
            spectrum[bin] += c * cis(-PI * k as f64) * n;
        }
        Fft::new(grid.len()).inverse(&mut spectrum);
        Ok(Self {
            grid,
            amps: spectrum,
        })
    }

    pub fn grid(&self) -> &RingGrid {
        &self.grid
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amps
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.grid.dx()
    }

    pub fn norm(&self) -> f64 {
        libm::sqrt(self.norm_sqr())
    }

    pub fn normalize(&mut self) -> Result<()> {
        let n = self.norm();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::ZeroNorm);
        }
        let inv = 1.0 / n;
        for z in &mut self.amps {
            *z *= inv;
        }
        Ok(())
    }

    /// `<self|other> = sum conj(a) b dx`.
    pub fn inner(&self, other: &Wavefunction) -> Result<Complex64> {
        self.check_grid(other)?;
        let s: Complex64 = self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum();
        Ok(s * self.grid.dx())
    }

    /// `|<self|other>|^2`.
    pub fn fidelity(&self, other: &Wavefunction) -> Result<f64> {
        Ok(self.inner(other)?.norm_sqr())
    }

    /// Coefficients `c_k` of `psi(x) = sum_k c_k exp(2 pi i k x)`, in FFT bin
    /// order (see [`RingGrid::wavenumber`]). `sum |c_k|^2` equals the norm squared.
    pub fn momentum_coefficients(&self) -> Vec<Complex64> {
        let mut spec = self.amps.clone();
        Fft::new(self.grid.len()).forward(&mut spec);
        let inv = 1.0 / self.grid.len() as f64;
        for (j, c) in spec.iter_mut().enumerate() {
            let k = self.grid.wavenumber(j);
            *c *= cis(PI * k as f64) * inv;
        }
        spec
    }

    /// Expected momentum `sum_k 2 pi k |c_k|^2`.
    pub fn mean_momentum(&self) -> f64 {
        self.momentum_coefficients()
            .iter()
            .enumerate()
            .map(|(j, c)| 2.0 * PI * self.grid.wavenumber(j) as f64 * c.norm_sqr())
            .sum()
    }

    /// `psi(x - s)`, computed spectrally.
    pub fn shifted(&self, s: f64) -> Wavefunction {
        let plan = Fft::new(self.grid.len());
        let mut spec = self.amps.clone();
        plan.forward(&mut spec);
        for (j, c) in spec.iter_mut().enumerate() {
            let k = self.grid.wavenumber(j) as f64;
            *c *= cis(-2.0 * PI * k * s);
        }
        plan.inverse(&mut spec);
        Wavefunction {
            grid: self.grid,
            amps: spec,
        }
    }

    /// Multiplies by `exp(i p x)`. Periodicity requires `p` to be a multiple
    /// of `2 pi`; other values leave a seam at `x = +-1/2`.
    pub fn boosted(&self, momentum: f64) -> Wavefunction {
        let amps = self
            .amps
            .iter()
            .enumerate()
            .map(|(m, z)| z * cis(momentum * self.grid.x(m)))
            .collect();
        Wavefunction {
            grid: self.grid,
            amps,
        }
    }

    fn check_grid(&self, other: &Wavefunction) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch {
                left: self.grid.len(),
                right: other.grid.len(),
            });
        }
        Ok(())
    }
}

/// Reference frame of a single-particle state.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Frame {
    #[default]
    Lab,
    /// Frame translating with the barrier; carries the accumulated barrier
    /// position `X(t) = int Omega dt` reduced mod 1.
    Comoving { position: f64 },
}

impl Frame {
    /// Converts a state held in this frame back to the lab frame.
    pub fn to_lab(&self, psi: &Wavefunction) -> Wavefunction {
        match *self {
            Frame::Lab => psi.clone(),
            Frame::Comoving { position } => psi.shifted(position),
        }
    }

    /// Converts a lab-frame state into this frame.
    pub fn from_lab(&self, psi: &Wavefunction) -> Wavefunction {
        match *self {
            Frame::Lab => psi.clone(),
            Frame::Comoving { position } => psi.shifted(-position),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn grid(m: usize) -> RingGrid {
        RingGrid::new(m).unwrap()
    }

    #[test]
    fn grid_layout() {
        let g = grid(16);
        assert_eq!(g.x(0), -0.5);
        assert_eq!(g.dx(), 0.0625);
        assert_eq!(g.x(15), 0.5 - 0.0625);
        let g = grid(256);
        assert_eq!(g.len(), 256);
        assert_eq!(g.x(128), 0.0);
    }

    #[test]
    fn grid_rejects_bad_sizes() {
        assert_eq!(RingGrid::new(15), Err(Error::InvalidGrid(15)));
        assert!(RingGrid::new(14).is_err());
        assert!(RingGrid::new(1 << 17).is_err());
        assert!(RingGrid::new(18).is_ok());
    }

    #[test]
    fn wrap_examples() {
        assert!((wrap_displacement(0.4, -0.4) + 0.2).abs() < 1e-15);
        assert_eq!(wrap_displacement(0.3, 0.3), 0.0);
        assert!((wrap_displacement(0.25, 0.0) - 0.25).abs() < 1e-15);
        assert_eq!(wrap_displacement(0.5, 0.0), -0.5);
        assert!((wrap_displacement(103.25, 0.0) - 0.25).abs() < 1e-12);
    }

    #[test]
    fn potential_samples() {
        let h = Potential::Harmonic {
            omega2: 4.0,
            center: 0.0,
        };
        assert!((h.smooth_value(0.25) - 0.125).abs() < 1e-15);
        let s = Potential::Sinusoidal {
            omega2: 2.0 * PI * PI,
            center: 0.0,
        };
        assert!((s.smooth_value(0.25) - 0.5).abs() < 1e-15);

        let g = grid(256);
        let v = Potential::barrier(2.0).sample(&g);
        assert_eq!(v[128], 512.0);
        assert_eq!(v.iter().filter(|&&x| x != 0.0).count(), 1);
        assert!((v.iter().sum::<f64>() * g.dx() - 2.0).abs() < 1e-15);
        assert!(Potential::None.sample(&g).iter().all(|&x| x == 0.0));
    }

    #[test]
    fn harmonic_has_single_minimum_near_center() {
        let g = grid(128);
        for &c in &[0.0, 0.1234, -0.49, 0.5, 3.77] {
            let v = Potential::harmonic(3.0, c).sample(&g);
            let (imin, _) = v
                .iter()
                .enumerate()
                .fold((0, f64::INFINITY), |acc, (i, &x)| if x < acc.1 { (i, x) } else { acc });
            assert_eq!(imin, g.nearest_index(c));
            assert!(v.iter().all(|&x| x >= 0.0));
        }
    }

    #[test]
    fn plane_waves_orthonormal() {
        let g = grid(64);
        let p1 = Wavefunction::plane_wave(1, g).unwrap();
        let p2 = Wavefunction::plane_wave(2, g).unwrap();
        assert!((p1.inner(&p1).unwrap() - 1.0).norm() < 1e-13);
        assert!(p1.inner(&p2).unwrap().norm() < 1e-13);
        let p0 = Wavefunction::plane_wave(0, g).unwrap();
        assert!(p0.amplitudes().iter().all(|z| (z - 1.0).norm() < 1e-15));
        assert!(Wavefunction::plane_wave(32, g).is_err());
        assert!(Wavefunction::plane_wave(-32, g).is_err());
        assert!(Wavefunction::plane_wave(31, g).is_ok());
    }

    #[test]
    fn plane_wave_matches_definition_on_tiny_grid() {
        // The grid type needs M >= 16; check the first four samples directly.
        let g = grid(16);
        let p = Wavefunction::plane_wave(1, g).unwrap();
        for m in 0..4 {
            let expected = cis(2.0 * PI * g.x(m));
            assert!((p.amplitudes()[m] - expected).norm() < 1e-15);
        }
    }

    #[test]
    fn constant_orthogonal_to_cos_orbital() {
        // analytic: int_{-1/2}^{1/2} sqrt(2) cos(2 pi x) dx = 0
        let g = grid(256);
        let c = Wavefunction::from_fn(g, |x| Complex64::new(libm::sqrt(2.0) * libm::cos(2.0 * PI * x), 0.0))
            .unwrap();
        let p0 = Wavefunction::plane_wave(0, g).unwrap();
        assert!(p0.inner(&c).unwrap().norm() < 1e-14);
    }

    #[test]
    fn inner_rejects_grid_mismatch() {
        let a = Wavefunction::plane_wave(0, grid(16)).unwrap();
        let b = Wavefunction::plane_wave(0, grid(32)).unwrap();
        assert!(matches!(a.inner(&b), Err(Error::GridMismatch { .. })));
    }

    #[test]
    fn shift_of_plane_wave_is_a_phase() {
        let g = grid(64);
        let p = Wavefunction::plane_wave(3, g).unwrap();
        let s = 0.137;
        let shifted = p.shifted(s);
        let phase = cis(-2.0 * PI * 3.0 * s);
        for (a, b) in shifted.amplitudes().iter().zip(p.amplitudes()) {
            assert!((a - b * phase).norm() < 1e-12);
        }
        assert_eq!(p.shifted(0.0).amplitudes().len(), 64);
        for (a, b) in p.shifted(0.0).amplitudes().iter().zip(p.amplitudes()) {
            assert!((a - b).norm() < 1e-13);
        }
    }

    #[test]
    fn shift_by_one_cell_is_rotation() {
        let g = grid(48);
        let amps: Vec<Complex64> = (0..48)
            .map(|m| Complex64::new(libm::sin(m as f64 * 0.7), libm::cos(m as f64 * m as f64 * 0.01)))
            .collect();
        let psi = Wavefunction::new(g, amps).unwrap();
        let shifted = psi.shifted(g.dx());
        let n = g.len();
        for m in 0..n {
            let expected = psi.amplitudes()[(m + n - 1) % n];
            assert!((shifted.amplitudes()[m] - expected).norm() < 1e-12);
        }
    }

    #[test]
    fn momentum_round_trip() {
        let g = grid(32);
        let coeffs = vec![(0, Complex64::new(0.5, 0.0)), (-3, Complex64::new(0.0, 0.5)), (5, Complex64::new(0.5, 0.5))];
        let psi = Wavefunction::from_momentum(g, &coeffs).unwrap();
        let c = psi.momentum_coefficients();
        let norm: f64 = coeffs.iter().map(|(_, c)| c.norm_sqr()).sum::<f64>().sqrt();
        for &(k, ck) in &coeffs {
            let got = c[g.bin(k).unwrap()];
            assert!((got - ck / norm).norm() < 1e-13);
        }
        assert!(Wavefunction::from_momentum(g, &[(16, Complex64::new(1.0, 0.0))]).is_err());
        let expected_p = 2.0 * PI * (0.0 * 0.25 - 3.0 * 0.25 + 5.0 * 0.5) / 1.0;
        assert!((psi.mean_momentum() - expected_p).abs() < 1e-12);
    }

    #[test]
    fn frame_round_trip() {
        let g = grid(64);
        let psi = Wavefunction::from_fn(g, |x| Complex64::new(libm::exp(-40.0 * x * x), 0.3 * x)).unwrap();
        let frame = Frame::Comoving { position: 0.31 };
        let back = frame.to_lab(&frame.from_lab(&psi));
        assert!((back.fidelity(&psi).unwrap() - 1.0).abs() < 1e-12);
    }
}
