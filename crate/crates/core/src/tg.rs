//! Tonks-Girardeau many-body layer.
//!
//! Through the Bose-Fermi mapping a TG state is fixed by its occupied
//! orbitals, and the overlap of two such states is the determinant of the
//! orbital overlap matrix. [`tg_bruteforce_overlap`] rebuilds the N-body
//! wavefunctions explicitly and serves as an independent check of that
//! identity for small N.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{PI, SQRT_2};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::fft::cis;
use crate::ring::{Potential, RingGrid, Wavefunction};
use crate::spectra::{self, MomentumHamiltonian, SweepBase, SweepParameter};
use crate::{Error, Result};

/// Ordered occupied orbitals on a common grid.
#[derive(Debug, Clone, PartialEq)]
pub struct OrbitalSet {
    orbitals: Vec<Wavefunction>,
}

impl OrbitalSet {
    pub const ORTHONORMAL_TOL: f64 = 1e-8;

    /// Validates that the orbitals share a grid and are orthonormal.
    pub fn new(orbitals: Vec<Wavefunction>) -> Result<Self> {
        let set = Self::new_unchecked(orbitals)?;
        for (i, a) in set.orbitals.iter().enumerate() {
            for (j, b) in set.orbitals.iter().enumerate().skip(i) {
                let o = a.inner(b)?;
                let expected = if i == j { 1.0 } else { 0.0 };
                if (o - expected).norm() > Self::ORTHONORMAL_TOL {
                    return Err(Error::invalid("orbitals are not orthonormal"));
                }
            }
        }
        Ok(set)
    }

    /// Skips the orthonormality check (used for propagated orbitals, whose
    /// drift is governed by the propagator's norm tolerance).
    pub fn new_unchecked(orbitals: Vec<Wavefunction>) -> Result<Self> {
        let Some(first) = orbitals.first() else {
            return Err(Error::invalid("orbital set is empty"));
        };
        let grid = *first.grid();
        if let Some(bad) = orbitals.iter().find(|o| *o.grid() != grid) {
            return Err(Error::GridMismatch {
                left: grid.len(),
                right: bad.grid().len(),
            });
        }
        Ok(Self { orbitals })
    }

    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> usize {
        self.orbitals.len()
    }

    pub fn grid(&self) -> &RingGrid {
        self.orbitals[0].grid()
    }

    pub fn orbitals(&self) -> &[Wavefunction] {
        &self.orbitals
    }

    pub fn into_orbitals(self) -> Vec<Wavefunction> {
        self.orbitals
    }

    /// Every orbital translated by `s`.
    pub fn shifted(&self, s: f64) -> Self {
        Self {
            orbitals: self.orbitals.iter().map(|o| o.shifted(s)).collect(),
        }
    }

    /// Every orbital multiplied by `exp(i p x)`.
    pub fn boosted(&self, momentum: f64) -> Self {
        Self {
            orbitals: self.orbitals.iter().map(|o| o.boosted(momentum)).collect(),
        }
    }
}

/// `(i, j) = <a_i|b_j>`.
pub fn overlap_matrix(a: &OrbitalSet, b: &OrbitalSet) -> Result<DMatrix<Complex64>> {
    check_compatible(a, b)?;
    let n = a.len();
    let mut m = DMatrix::zeros(n, n);
    for (i, ai) in a.orbitals.iter().enumerate() {
        for (j, bj) in b.orbitals.iter().enumerate() {
            m[(i, j)] = ai.inner(bj)?;
        }
    }
    Ok(m)
}

fn check_compatible(a: &OrbitalSet, b: &OrbitalSet) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::SizeMismatch {
            expected: a.len(),
            found: b.len(),
        });
    }
    if a.grid() != b.grid() {
        return Err(Error::GridMismatch {
            left: a.grid().len(),
            right: b.grid().len(),
        });
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct FidelityReport {
    /// `|det <a_i|b_j>|^2`.
    pub fidelity: f64,
    /// `|<a_i|b_i>|^2` for matched orbitals.
    pub per_orbital: Vec<f64>,
    /// Per-orbital fidelity of the highest occupied orbital.
    pub fermi_edge: f64,
    /// Translation applied to the first set when the fidelity was maximized.
    pub shift: Option<f64>,
}

impl FidelityReport {
    pub fn infidelity(&self) -> f64 {
        1.0 - self.fidelity
    }

    fn from_matrix(m: &DMatrix<Complex64>, shift: Option<f64>) -> Self {
        let per_orbital: Vec<f64> = (0..m.nrows()).map(|i| m[(i, i)].norm_sqr()).collect();
        Self {
            fidelity: m.determinant().norm_sqr(),
            fermi_edge: *per_orbital.last().unwrap_or(&0.0),
            per_orbital,
            shift,
        }
    }
}

/// Figure of merit for many-body runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Metric {
    /// Fidelity of the highest occupied orbital only.
    FermiEdge,
    /// Full determinant fidelity.
    #[default]
    FullTg,
}

impl Metric {
    pub fn of(&self, report: &FidelityReport) -> f64 {
        match self {
            Metric::FermiEdge => report.fermi_edge,
            Metric::FullTg => report.fidelity,
        }
    }
}

pub fn tg_fidelity(a: &OrbitalSet, b: &OrbitalSet) -> Result<FidelityReport> {
    Ok(FidelityReport::from_matrix(&overlap_matrix(a, b)?, None))
}

pub const BRUTE_FORCE_MAX_PARTICLES: usize = 3;
pub const BRUTE_FORCE_MAX_POINTS: usize = 64;

/// `<Psi_A|Phi_B>` from the explicit symmetrized N-body wavefunctions on a
/// product grid of `coarse^N` points.
pub fn tg_bruteforce_overlap(a: &OrbitalSet, b: &OrbitalSet, coarse: usize) -> Result<Complex64> {
    check_compatible(a, b)?;
    let n = a.len();
    if n > BRUTE_FORCE_MAX_PARTICLES {
        return Err(Error::TooManyParticles {
            max: BRUTE_FORCE_MAX_PARTICLES,
            found: n,
        });
    }
    if coarse == 0 || coarse > BRUTE_FORCE_MAX_POINTS {
        return Err(Error::invalid("coarse grid must have 1..=64 points"));
    }
    let xs: Vec<f64> = (0..coarse).map(|m| -0.5 + m as f64 / coarse as f64).collect();
    let sample = |set: &OrbitalSet| -> Vec<Vec<Complex64>> {
        set.orbitals.iter().map(|o| resample(o, &xs)).collect()
    };
    let psi = sample(a);
    let phi = sample(b);
    let perms = permutations(n);
    let norm = 1.0 / libm::sqrt(factorial(n) as f64);

    let many_body = |orbs: &[Vec<Complex64>], idx: &[usize]| -> Complex64 {
        let mut sign = 1.0;
        for i in 0..n {
            for j in i + 1..n {
                let d = xs[idx[i]] - xs[idx[j]];
                sign *= if d > 0.0 {
                    1.0
                } else if d < 0.0 {
                    -1.0
                } else {
                    0.0
                };
            }
        }
        if sign == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        let sum: Complex64 = perms
            .iter()
            .map(|(p, eps)| {
                let prod: Complex64 = (0..n).map(|i| orbs[p[i]][idx[i]]).product();
                prod * *eps
            })
            .sum();
        sum * sign * norm
    };

    let total = coarse.pow(n as u32);
    let mut idx = vec![0usize; n];
    let mut acc = Complex64::new(0.0, 0.0);
    for flat in 0..total {
        let mut r = flat;
        for slot in idx.iter_mut() {
            *slot = r % coarse;
            r /= coarse;
        }
        acc += many_body(&psi, &idx).conj() * many_body(&phi, &idx);
    }
    Ok(acc * libm::pow(1.0 / coarse as f64, n as f64))
}

/// Evaluates the Fourier series of `psi` at arbitrary positions.
fn resample(psi: &Wavefunction, xs: &[f64]) -> Vec<Complex64> {
    let grid = psi.grid();
    if grid.len() == xs.len() {
        return psi.amplitudes().to_vec();
    }
    let coeffs = psi.momentum_coefficients();
    xs.iter()
        .map(|&x| {
            coeffs
                .iter()
                .enumerate()
                .map(|(j, c)| c * cis(2.0 * PI * grid.wavenumber(j) as f64 * x))
                .sum()
        })
        .collect()
}

fn factorial(n: usize) -> usize {
    (1..=n).product()
}

/// All permutations of `0..n` with their signs.
fn permutations(n: usize) -> Vec<(Vec<usize>, f64)> {
    fn rec(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<(Vec<usize>, f64)>) {
        let n = used.len();
        if prefix.len() == n {
            let mut inversions = 0;
            for i in 0..n {
                for j in i + 1..n {
                    if prefix[i] > prefix[j] {
                        inversions += 1;
                    }
                }
            }
            let sign = if inversions % 2 == 0 { 1.0 } else { -1.0 };
            out.push((prefix.clone(), sign));
            return;
        }
        for v in 0..n {
            if !used[v] {
                used[v] = true;
                prefix.push(v);
                rec(prefix, used, out);
                prefix.pop();
                used[v] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut vec![false; n], &mut out);
    out
}

fn require_odd(n: usize) -> Result<()> {
    if n == 0 || n % 2 == 0 {
        return Err(Error::EvenParticleNumber(n));
    }
    Ok(())
}

/// Zero-momentum free-ring orbitals: `1`, then `i sqrt2 sin(2 pi l x)` and
/// `sqrt2 cos(2 pi l x)` for `l = 1, 2, ...`.
pub fn sta_initial_orbitals(n: usize, grid: RingGrid) -> Result<OrbitalSet> {
    require_odd(n)?;
    let orbitals = (0..n)
        .map(|j| {
            let l = j.div_ceil(2) as f64;
            Wavefunction::from_fn(grid, move |x| {
                if j == 0 {
                    Complex64::new(1.0, 0.0)
                } else if j % 2 == 1 {
                    Complex64::new(0.0, SQRT_2 * libm::sin(2.0 * PI * l * x))
                } else {
                    Complex64::new(SQRT_2 * libm::cos(2.0 * PI * l * x), 0.0)
                }
            })
        })
        .collect::<Result<Vec<_>>>()?;
    OrbitalSet::new(orbitals)
}

/// Orbitals of total momentum `pi` each: `sqrt2 cos((2l+1) pi x) e^{i pi x}`
/// and `i sqrt2 sin((2l+1) pi x) e^{i pi x}` for `l = 0, 1, ...`.
pub fn sta_target_orbitals(n: usize, grid: RingGrid) -> Result<OrbitalSet> {
    require_odd(n)?;
    let orbitals = (0..n)
        .map(|j| {
            let q = (2 * (j / 2) + 1) as f64 * PI;
            Wavefunction::from_fn(grid, move |x| {
                let carrier = cis(PI * x);
                if j % 2 == 0 {
                    carrier * (SQRT_2 * libm::cos(q * x))
                } else {
                    carrier * Complex64::new(0.0, SQRT_2 * libm::sin(q * x))
                }
            })
        })
        .collect::<Result<Vec<_>>>()?;
    OrbitalSet::new(orbitals)
}

/// Lowest `n` orbitals of the rotating-barrier Hamiltonian at `(omega, b)`.
///
/// At `omega = 0` the Hamiltonian commutes with parity about the barrier;
/// degenerate levels are rotated onto parity eigenstates (even first) and
/// each orbital's largest coefficient is made real and positive.
pub fn crab_orbitals(n: usize, b: f64, omega: f64, grid: RingGrid, cutoff: usize) -> Result<OrbitalSet> {
    if n == 0 {
        return Err(Error::invalid("need at least one particle"));
    }
    let h = MomentumHamiltonian::new(omega, Potential::barrier(b), cutoff)?;
    let basis = h.diagonalize();
    let mut vectors: Vec<Vec<Complex64>> = (0..h.dim())
        .map(|j| basis.vectors.column(j).iter().copied().collect())
        .collect();
    if omega == 0.0 {
        canonicalize_parity(&basis.values, &mut vectors, n);
    }
    let orbitals = vectors
        .into_iter()
        .take(n)
        .map(|mut v| {
            fix_gauge(&mut v);
            spectra::orbital_from_coefficients(v, basis.lowest_wavenumber(), grid)
        })
        .collect::<Result<Vec<_>>>()?;
    OrbitalSet::new(orbitals)
}

/// Target orbitals at `omega_final`, reached by adiabatic continuation of
/// the `omega = 0` orbitals at fixed barrier height.
pub fn crab_targets(
    n: usize,
    b: f64,
    omega_final: f64,
    grid: RingGrid,
    cutoff: usize,
) -> Result<OrbitalSet> {
    if n == 0 {
        return Err(Error::invalid("need at least one particle"));
    }
    let base = SweepBase {
        omega: 0.0,
        potential: Potential::barrier(b),
        cutoff,
    };
    let levels: Vec<usize> = (0..n).collect();
    let tracks = spectra::continue_levels(
        &base,
        SweepParameter::Omega,
        0.0,
        omega_final,
        &levels,
        PI / 200.0,
    )?;
    let orbitals = tracks
        .into_iter()
        .map(|c| {
            let mut v: Vec<Complex64> = c.vector.iter().copied().collect();
            fix_gauge(&mut v);
            spectra::orbital_from_coefficients(v, c.lowest_wavenumber, grid)
        })
        .collect::<Result<Vec<_>>>()?;
    OrbitalSet::new(orbitals)
}

/// Rotates exactly degenerate clusters among the lowest `n` levels onto
/// eigenvectors of `c_k -> c_{-k}`. Assumes a window symmetric about `k = 0`.
fn canonicalize_parity(values: &[f64], vectors: &mut [Vec<Complex64>], n: usize) {
    let mut start = 0;
    while start < n.min(values.len()) {
        let mut end = start + 1;
        while end < values.len() && (values[end] - values[start]).abs() < 1e-8 * (1.0 + values[start].abs()) {
            end += 1;
        }
        if end - start > 1 {
            let size = end - start;
            let parity = |v: &[Complex64]| -> Vec<Complex64> { v.iter().rev().copied().collect() };
            let pm = DMatrix::from_fn(size, size, |i, j| {
                let pv = parity(&vectors[start + j]);
                vectors[start + i]
                    .iter()
                    .zip(&pv)
                    .map(|(a, b)| a.conj() * b)
                    .sum::<Complex64>()
            });
            let eig = pm.symmetric_eigen();
            let mut order: Vec<usize> = (0..size).collect();
            // even parity first
            order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
            let old: Vec<Vec<Complex64>> = vectors[start..end].to_vec();
            for (slot, &col) in order.iter().enumerate() {
                let dim = old[0].len();
                let mut v = vec![Complex64::new(0.0, 0.0); dim];
                for (r, o) in old.iter().enumerate() {
                    let w = eig.eigenvectors[(r, col)];
                    for (x, y) in v.iter_mut().zip(o) {
                        *x += w * y;
                    }
                }
                vectors[start + slot] = v;
            }
        }
        start = end;
    }
}

/// Makes the largest-magnitude coefficient real and positive.
fn fix_gauge(v: &mut [Complex64]) {
    let Some(big) = v
        .iter()
        .copied()
        .max_by(|a, b| a.norm_sqr().total_cmp(&b.norm_sqr()))
    else {
        return;
    };
    if big.norm() > 0.0 {
        let phase = big.conj() / big.norm();
        for z in v.iter_mut() {
            *z *= phase;
        }
    }
}

const SHIFT_SCAN_SAMPLES: usize = 256;
const SHIFT_TOL: f64 = 1e-6;

/// Maximizes `|det <shift(a, s)|b>|^2` over `s in [0, 1)`: a uniform scan of
/// 256 shifts followed by golden-section refinement around the best sample.
/// The report's `shift` is `s*`, so `b ~ shift(a, s*)`.
pub fn shift_maximized_fidelity(a: &OrbitalSet, b: &OrbitalSet) -> Result<FidelityReport> {
    check_compatible(a, b)?;
    let grid = *a.grid();
    let ca: Vec<Vec<Complex64>> = a.orbitals.iter().map(|o| o.momentum_coefficients()).collect();
    let cb: Vec<Vec<Complex64>> = b.orbitals.iter().map(|o| o.momentum_coefficients()).collect();
    let n = a.len();
    let wavenumbers: Vec<f64> = (0..grid.len()).map(|j| grid.wavenumber(j) as f64).collect();

    // <shift(a_i, s)|b_j> = sum_k conj(a_ik) b_jk exp(2 pi i k s)
    let matrix_at = |s: f64| -> DMatrix<Complex64> {
        let phases: Vec<Complex64> = wavenumbers.iter().map(|&k| cis(2.0 * PI * k * s)).collect();
        DMatrix::from_fn(n, n, |i, j| {
            ca[i]
                .iter()
                .zip(&cb[j])
                .zip(&phases)
                .map(|((x, y), p)| x.conj() * y * p)
                .sum()
        })
    };
    let fidelity_at = |s: f64| matrix_at(s).determinant().norm_sqr();

    let h = 1.0 / SHIFT_SCAN_SAMPLES as f64;
    let (mut best_s, mut best_f) = (0.0, f64::NEG_INFINITY);
    for i in 0..SHIFT_SCAN_SAMPLES {
        let s = i as f64 * h;
        let f = fidelity_at(s);
        if f > best_f {
            best_s = s;
            best_f = f;
        }
    }

    let inv_phi = (libm::sqrt(5.0) - 1.0) / 2.0;
    let (mut lo, mut hi) = (best_s - h, best_s + h);
    let mut c = hi - inv_phi * (hi - lo);
    let mut d = lo + inv_phi * (hi - lo);
    let (mut fc, mut fd) = (fidelity_at(c), fidelity_at(d));
    while hi - lo > SHIFT_TOL {
        if fc > fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - inv_phi * (hi - lo);
            fc = fidelity_at(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + inv_phi * (hi - lo);
            fd = fidelity_at(d);
        }
    }
    let refined = 0.5 * (lo + hi);
    let s_star = if fidelity_at(refined) >= best_f { refined } else { best_s };
    let s_star = s_star - libm::floor(s_star);
    let s_star = if s_star >= 1.0 { 0.0 } else { s_star };
    Ok(FidelityReport::from_matrix(&matrix_at(s_star), Some(s_star)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{SeededRng, Stream};

    fn grid(m: usize) -> RingGrid {
        RingGrid::new(m).unwrap()
    }

    pub(crate) fn random_orthonormal(n: usize, g: RingGrid, seed: u64) -> OrbitalSet {
        let mut rng = SeededRng::new(seed, Stream::TestOrbitals);
        let mut out: Vec<Wavefunction> = Vec::new();
        while out.len() < n {
            let amps = (0..g.len())
                .map(|_| Complex64::new(rng.normal(), rng.normal()))
                .collect();
            let mut v = Wavefunction::new(g, amps).unwrap();
            for _ in 0..2 {
                for u in &out {
                    let c = u.inner(&v).unwrap();
                    for (x, y) in v.amplitudes_mut().iter_mut().zip(u.amplitudes()) {
                        *x -= c * y;
                    }
                }
                v.normalize().unwrap();
            }
            out.push(v);
        }
        OrbitalSet::new(out).unwrap()
    }

    #[test]
    fn identity_and_permutation_overlaps() {
        let g = grid(64);
        let a = sta_initial_orbitals(3, g).unwrap();
        let m = overlap_matrix(&a, &a).unwrap();
        assert!((m - DMatrix::<Complex64>::identity(3, 3)).norm() < 1e-12);
        let mut swapped = a.orbitals().to_vec();
        swapped.swap(0, 2);
        let b = OrbitalSet::new(swapped).unwrap();
        let p = overlap_matrix(&a, &b).unwrap();
        assert!((p[(0, 2)] - 1.0).norm() < 1e-12);
        assert!((p[(2, 0)] - 1.0).norm() < 1e-12);
        assert!((p[(1, 1)] - 1.0).norm() < 1e-12);
        assert!((tg_fidelity(&a, &b).unwrap().fidelity - 1.0).abs() < 1e-12);
    }

    #[test]
    fn initial_vs_target_overlaps_match_analytic_integrals() {
        // <phi_i|phi_t> over [-1/2, 1/2] computed by hand:
        // <1|sqrt2 cos(pi x) e^{i pi x}> = sqrt2/2, <1|i sqrt2 sin(pi x) e^{i pi x}> = -sqrt2/2
        // since cos(pi x) e^{i pi x} = (e^{2 pi i x} + 1)/2 and
        // i sin(pi x) e^{i pi x} = (e^{2 pi i x} - 1)/2.
        let g = grid(256);
        let a = sta_initial_orbitals(3, g).unwrap();
        let b = sta_target_orbitals(3, g).unwrap();
        let m = overlap_matrix(&a, &b).unwrap();
        let h = SQRT_2 / 2.0;
        // rows: 1, i sqrt2 sin(2 pi x) = (e^{2pi i x} - e^{-2 pi i x})/sqrt2,
        //       sqrt2 cos(2 pi x) = (e^{2pi i x} + e^{-2 pi i x})/sqrt2
        // cols: (e1 + e0)/sqrt2, (e1 - e0)/sqrt2, (e2 + e_{-1})/sqrt2
        let expected = [
            [h, -h, 0.0],
            [0.5, 0.5, -0.5],
            [0.5, 0.5, 0.5],
        ];
        for i in 0..3 {
            for j in 0..3 {
                assert!(
                    (m[(i, j)] - expected[i][j]).norm() < 1e-12,
                    "({i},{j}) = {}",
                    m[(i, j)]
                );
            }
        }
    }

    #[test]
    fn singular_overlap_gives_zero() {
        let g = grid(64);
        let a = sta_initial_orbitals(3, g).unwrap();
        let mut orbs = a.orbitals()[..2].to_vec();
        orbs.push(Wavefunction::plane_wave(5, g).unwrap());
        let b = OrbitalSet::new(orbs).unwrap();
        assert!(tg_fidelity(&a, &b).unwrap().fidelity < 1e-24);
    }

    #[test]
    fn determinant_matches_brute_force() {
        let g = grid(64);
        for n in 1..=3 {
            let a = random_orthonormal(n, g, 10 + n as u64);
            let b = random_orthonormal(n, g, 20 + n as u64);
            let det = tg_fidelity(&a, &b).unwrap().fidelity;
            let brute = tg_bruteforce_overlap(&a, &b, 64).unwrap().norm_sqr();
            assert!((det - brute).abs() < 1e-10, "n={n}: {det} vs {brute}");
            let selfo = tg_bruteforce_overlap(&a, &a, 64).unwrap();
            assert!((selfo - 1.0).norm() < 1e-6);
        }
        let a = random_orthonormal(1, g, 5);
        let b = random_orthonormal(1, g, 6);
        let direct = a.orbitals()[0].inner(&b.orbitals()[0]).unwrap();
        assert!((tg_bruteforce_overlap(&a, &b, 64).unwrap() - direct).norm() < 1e-12);
    }

    #[test]
    fn brute_force_on_resampled_free_orbitals() {
        let g = grid(256);
        let a = sta_initial_orbitals(3, g).unwrap();
        let o = tg_bruteforce_overlap(&a, &a, 64).unwrap();
        assert!((o - 1.0).norm() < 1e-5);
        let b = sta_target_orbitals(3, g).unwrap();
        let det = tg_fidelity(&a, &b).unwrap().fidelity;
        let brute = tg_bruteforce_overlap(&a, &b, 32).unwrap().norm_sqr();
        assert!((det - brute).abs() < 1e-10);
    }

    #[test]
    fn brute_force_limits() {
        let g = grid(64);
        let a = sta_initial_orbitals(5, g).unwrap();
        assert!(matches!(
            tg_bruteforce_overlap(&a, &a, 16),
            Err(Error::TooManyParticles { .. })
        ));
        let b = sta_initial_orbitals(3, g).unwrap();
        assert!(tg_bruteforce_overlap(&b, &b, 65).is_err());
        assert!(tg_fidelity(&a, &b).is_err());
    }

    #[test]
    fn sta_sets() {
        let g = grid(256);
        assert!(sta_initial_orbitals(2, g).is_err());
        assert!(sta_target_orbitals(4, g).is_err());
        let one = sta_initial_orbitals(1, g).unwrap();
        assert!(one.orbitals()[0].amplitudes().iter().all(|z| (z - 1.0).norm() < 1e-12));
        let t1 = sta_target_orbitals(1, g).unwrap();
        let expected = Wavefunction::from_fn(g, |x| (cis(2.0 * PI * x) + 1.0) / SQRT_2).unwrap();
        assert!((t1.orbitals()[0].inner(&expected).unwrap() - 1.0).norm() < 1e-12);
        for n in [1, 3, 5, 7, 9] {
            let i = sta_initial_orbitals(n, g).unwrap();
            let t = sta_target_orbitals(n, g).unwrap();
            let pi: f64 = i.orbitals().iter().map(|o| o.mean_momentum()).sum();
            let pt: f64 = t.orbitals().iter().map(|o| o.mean_momentum()).sum();
            assert!(pi.abs() < 1e-8);
            assert!((pt - n as f64 * PI).abs() < 1e-8);
            for o in t.orbitals() {
                let c = o.momentum_coefficients();
                let big: Vec<f64> = c.iter().map(|z| z.norm_sqr()).filter(|&p| p > 1e-12).collect();
                assert_eq!(big.len(), 2);
                assert!(big.iter().all(|p| (p - 0.5).abs() < 1e-12));
            }
        }
    }

    #[test]
    fn crab_orbitals_have_alternating_parity() {
        let g = grid(256);
        let set = crab_orbitals(3, 1.0, 0.0, g, 64).unwrap();
        let parity = |o: &Wavefunction| {
            let n = g.len();
            let a = o.amplitudes();
            // x_m -> -x_m maps index m to (n - m) mod n
            let mirrored: Vec<Complex64> = (0..n).map(|m| a[(n - m) % n]).collect();
            let m = Wavefunction::from_raw(g, mirrored).unwrap();
            o.inner(&m).unwrap().re
        };
        let p: Vec<f64> = set.orbitals().iter().map(parity).collect();
        assert!((p[0] - 1.0).abs() < 1e-8 && (p[1] + 1.0).abs() < 1e-8 && (p[2] - 1.0).abs() < 1e-8, "{p:?}");
        // ground state is nodeless
        let ground = &set.orbitals()[0];
        assert!(ground.amplitudes().iter().all(|z| z.re > 0.0));

        let free = crab_orbitals(3, 0.0, 0.0, g, 16).unwrap();
        let pf: Vec<f64> = free.orbitals().iter().map(parity).collect();
        assert!((pf[1] - 1.0).abs() < 1e-8 && (pf[2] + 1.0).abs() < 1e-8, "{pf:?}");
    }

    #[test]
    fn crab_targets_are_tracked_eigenstates() {
        let g = grid(256);
        let t = crab_targets(2, 1.0, PI, g, 32).unwrap();
        let direct = crab_orbitals(2, 1.0, PI, g, 32).unwrap();
        let f = tg_fidelity(&t, &direct).unwrap();
        assert!(f.per_orbital.iter().all(|&p| (p - 1.0).abs() < 1e-8));
    }

    #[test]
    fn shift_maximization_recovers_translation() {
        let g = grid(128);
        let a = OrbitalSet::new(
            crab_orbitals(3, 2.0, 0.0, g, 32).unwrap().into_orbitals(),
        )
        .unwrap();
        let b = a.shifted(0.3);
        let r = shift_maximized_fidelity(&a, &b).unwrap();
        assert!((r.fidelity - 1.0).abs() < 1e-9);
        let s = r.shift.unwrap();
        assert!((s - 0.3).abs() < 1e-5, "s* = {s}");
        assert!(tg_fidelity(&a, &b).unwrap().fidelity < r.fidelity);
    }

    #[test]
    fn plane_wave_sets_are_shift_invariant() {
        let g = grid(64);
        let a = OrbitalSet::new(vec![
            Wavefunction::plane_wave(0, g).unwrap(),
            Wavefunction::plane_wave(1, g).unwrap(),
        ])
        .unwrap();
        let b = a.shifted(0.123);
        let r = shift_maximized_fidelity(&a, &b).unwrap();
        assert!((r.fidelity - 1.0).abs() < 1e-12);
        assert!((tg_fidelity(&a, &b).unwrap().fidelity - 1.0).abs() < 1e-12);
    }

    #[test]
    fn permutation_helpers() {
        let p = permutations(3);
        assert_eq!(p.len(), 6);
        assert_eq!(p.iter().map(|(_, s)| s).sum::<f64>(), 0.0);
        assert_eq!(factorial(4), 24);
    }
}
