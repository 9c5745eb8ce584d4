//! Single-particle spectra in a truncated plane-wave basis.
//!
//! The basis is `exp(2 pi i k x)` for `k = -K..=K`. Matrix elements of every
//! supported potential are analytic Fourier coefficients, which makes the
//! delta barrier exact (a constant coupling `b` between all modes).

use alloc::vec::Vec;
use core::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::fft::cis;
use crate::ring::{Potential, RingGrid, Wavefunction};
use crate::{Error, Result};

pub const DEFAULT_CUTOFF: usize = 64;
pub const MIN_CUTOFF: usize = 8;

/// Fourier coefficient `V_n = int V(x) exp(-2 pi i n x) dx`.
pub fn potential_fourier(potential: &Potential, n: i64) -> Complex64 {
    let nf = n as f64;
    match *potential {
        Potential::None => Complex64::new(0.0, 0.0),
        Potential::DeltaBarrier { height, position } => height * cis(-2.0 * PI * nf * position),
        Potential::Harmonic { omega2, center } => {
            if n == 0 {
                Complex64::new(omega2 / 24.0, 0.0)
            } else {
                let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
                let q = 2.0 * PI * nf;
                omega2 * sign / (q * q) * cis(-2.0 * PI * nf * center)
            }
        }
        Potential::Sinusoidal { omega2, center } => match n {
            0 => Complex64::new(omega2 / (4.0 * PI * PI), 0.0),
            1 | -1 => -omega2 / (8.0 * PI * PI) * cis(-2.0 * PI * nf * center),
            _ => Complex64::new(0.0, 0.0),
        },
    }
}

/// Rotating-frame Hamiltonian `(p - Omega)^2 / 2 + V` in the plane-wave basis.
///
/// The basis window is `k = c-K..=c+K`; [`MomentumHamiltonian::new`] centers it
/// on `c = round(Omega / 2 pi)` so that the spectrum is exactly periodic in
/// `Omega`.
#[derive(Debug, Clone)]
pub struct MomentumHamiltonian {
    cutoff: usize,
    center: i64,
    omega: f64,
    potential: Potential,
    matrix: DMatrix<Complex64>,
}

impl MomentumHamiltonian {
    pub fn new(omega: f64, potential: Potential, cutoff: usize) -> Result<Self> {
        let center = libm::round(omega / (2.0 * PI)) as i64;
        Self::with_window(omega, potential, cutoff, center)
    }

    /// Hamiltonian on the fixed window `k = center-K..=center+K`.
    pub fn with_window(omega: f64, potential: Potential, cutoff: usize, center: i64) -> Result<Self> {
        if cutoff < MIN_CUTOFF {
            return Err(Error::invalid("momentum cutoff must be at least 8"));
        }
        let dim = 2 * cutoff + 1;
        let k = |i: usize| center + i as i64 - cutoff as i64;
        let fourier: Vec<Complex64> = (0..2 * dim - 1)
            .map(|n| potential_fourier(&potential, n as i64 - (dim as i64 - 1)))
            .collect();
        let matrix = DMatrix::from_fn(dim, dim, |i, j| {
            let n = k(i) - k(j);
            let mut h = fourier[(n + dim as i64 - 1) as usize];
            if i == j {
                let p = 2.0 * PI * k(i) as f64 - omega;
                h += 0.5 * p * p;
            }
            h
        });
        Ok(Self {
            cutoff,
            center,
            omega,
            potential,
            matrix,
        })
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn dim(&self) -> usize {
        2 * self.cutoff + 1
    }

    pub fn center(&self) -> i64 {
        self.center
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn potential(&self) -> &Potential {
        &self.potential
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    /// Wavenumber of basis index `i`.
    pub fn wavenumber(&self, i: usize) -> i64 {
        self.lowest_wavenumber() + i as i64
    }

    pub fn lowest_wavenumber(&self) -> i64 {
        self.center - self.cutoff as i64
    }

    /// Full eigendecomposition with ascending eigenvalues.
    pub fn diagonalize(&self) -> Eigenbasis {
        let eig = self.matrix.clone().symmetric_eigen();
        let mut order: Vec<usize> = (0..self.dim()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let vectors = DMatrix::from_fn(self.dim(), self.dim(), |r, c| eig.eigenvectors[(r, order[c])]);
        Eigenbasis {
            lowest_wavenumber: self.lowest_wavenumber(),
            values,
            vectors,
        }
    }

    /// Lowest `n` eigenvalues and the matching orbitals synthesized on `grid`.
    pub fn eigensystem(&self, n: usize, grid: RingGrid) -> Result<(Vec<f64>, Vec<Wavefunction>)> {
        if n > self.dim() {
            return Err(Error::invalid("more levels requested than basis states"));
        }
        let basis = self.diagonalize();
        let orbitals = (0..n)
            .map(|j| basis.orbital(j, grid))
            .collect::<Result<Vec<_>>>()?;
        Ok((basis.values[..n].to_vec(), orbitals))
    }
}

pub fn build_hamiltonian(omega: f64, potential: Potential, cutoff: usize) -> Result<MomentumHamiltonian> {
    MomentumHamiltonian::new(omega, potential, cutoff)
}

#[derive(Debug, Clone)]
pub struct Eigenbasis {
    lowest_wavenumber: i64,
    pub values: Vec<f64>,
    /// Eigenvectors as columns, in the order of `values`.
    pub vectors: DMatrix<Complex64>,
}

impl Eigenbasis {
    pub fn lowest_wavenumber(&self) -> i64 {
        self.lowest_wavenumber
    }

    pub fn vector(&self, j: usize) -> DVector<Complex64> {
        self.vectors.column(j).into_owned()
    }

    pub fn orbital(&self, j: usize, grid: RingGrid) -> Result<Wavefunction> {
        orbital_from_coefficients(self.vectors.column(j).iter().copied(), self.lowest_wavenumber, grid)
    }
}

/// Synthesizes a grid orbital from plane-wave coefficients for consecutive
/// wavenumbers starting at `lowest_wavenumber`.
pub fn orbital_from_coefficients(
    coefficients: impl IntoIterator<Item = Complex64>,
    lowest_wavenumber: i64,
    grid: RingGrid,
) -> Result<Wavefunction> {
    let pairs: Vec<(i64, Complex64)> = coefficients
        .into_iter()
        .enumerate()
        .map(|(i, c)| (lowest_wavenumber + i as i64, c))
        .collect();
    Wavefunction::from_momentum(grid, &pairs)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParameter {
    /// Rotation velocity `Omega`.
    Omega,
    /// Delta barrier height `b`.
    BarrierHeight,
    /// Trap frequency `omega` (the potential carries `omega^2`).
    TrapFrequency,
}

impl SweepParameter {
    pub fn column_name(&self) -> &'static str {
        match self {
            SweepParameter::Omega => "omega",
            SweepParameter::BarrierHeight => "b",
            SweepParameter::TrapFrequency => "trap_omega",
        }
    }
}

/// Parameters held fixed during a sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepBase {
    pub omega: f64,
    pub potential: Potential,
    pub cutoff: usize,
}

impl SweepBase {
    pub fn new(omega: f64, potential: Potential) -> Self {
        Self {
            omega,
            potential,
            cutoff: DEFAULT_CUTOFF,
        }
    }
}

impl SweepBase {
    /// Hamiltonian with the swept parameter set to `value`; `window` pins the
    /// basis center, otherwise it follows `Omega`.
    pub fn hamiltonian(
        &self,
        parameter: SweepParameter,
        value: f64,
        window: Option<i64>,
    ) -> Result<MomentumHamiltonian> {
        let mut omega = self.omega;
        let mut potential = self.potential;
        match (parameter, &mut potential) {
            (SweepParameter::Omega, _) => omega = value,
            (SweepParameter::BarrierHeight, Potential::DeltaBarrier { height, .. }) => *height = value,
            (SweepParameter::TrapFrequency, Potential::Harmonic { omega2, .. })
            | (SweepParameter::TrapFrequency, Potential::Sinusoidal { omega2, .. }) => {
                *omega2 = value * value
            }
            _ => {
                return Err(Error::invalid(
                    "sweep parameter does not match the base potential",
                ))
            }
        }
        match window {
            Some(center) => MomentumHamiltonian::with_window(omega, potential, self.cutoff, center),
            None => MomentumHamiltonian::new(omega, potential, self.cutoff),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SpectrumTable {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
    /// `eigenvalues[i][j]` is level `j` at `values[i]`, ascending in `j`.
    pub eigenvalues: Vec<Vec<f64>>,
    /// Full eigenvector matrices, one per parameter value, when requested.
    /// They share one basis window starting at `lowest_wavenumber`.
    pub eigenvectors: Option<Vec<DMatrix<Complex64>>>,
    pub lowest_wavenumber: Option<i64>,
}

/// Diagonalizes at a single parameter value.
pub fn spectrum_point(
    parameter: SweepParameter,
    value: f64,
    base: &SweepBase,
    window: Option<i64>,
) -> Result<Eigenbasis> {
    Ok(base.hamiltonian(parameter, value, window)?.diagonalize())
}

/// Basis center shared by every point of a sweep that keeps eigenvectors.
fn sweep_window(parameter: SweepParameter, values: &[f64], base: &SweepBase) -> i64 {
    let omega = match parameter {
        SweepParameter::Omega => values[0],
        _ => base.omega,
    };
    libm::round(omega / (2.0 * PI)) as i64
}

pub fn sweep_spectrum(
    parameter: SweepParameter,
    values: &[f64],
    base: &SweepBase,
    n_levels: usize,
    keep_vectors: bool,
) -> Result<SpectrumTable> {
    if values.is_empty() {
        return Err(Error::invalid("sweep needs at least one parameter value"));
    }
    let dim = 2 * base.cutoff + 1;
    if n_levels > dim {
        return Err(Error::invalid("more levels requested than basis states"));
    }
    let window = keep_vectors.then(|| sweep_window(parameter, values, base));
    let mut eigenvalues = Vec::with_capacity(values.len());
    let mut vectors = Vec::new();
    for &v in values {
        let basis = spectrum_point(parameter, v, base, window)?;
        eigenvalues.push(basis.values[..n_levels].to_vec());
        if keep_vectors {
            vectors.push(basis.vectors);
        }
    }
    Ok(SpectrumTable {
        parameter,
        values: values.to_vec(),
        eigenvalues,
        eigenvectors: keep_vectors.then_some(vectors),
        lowest_wavenumber: window.map(|c| c - base.cutoff as i64),
    })
}

/// Result of following one eigenvector branch through a sweep.
#[derive(Debug, Clone)]
pub struct Continuation {
    pub lowest_wavenumber: i64,
    /// Level index of the branch at every parameter value.
    pub levels: Vec<usize>,
    /// Smallest successive overlap `|<v_prev|v_next>|` encountered.
    pub min_overlap: f64,
    /// Tracked eigenvector at the final parameter value.
    pub vector: DVector<Complex64>,
}

const DEGENERACY_TOL: f64 = 1e-9;

/// Follows level `level` at the first parameter value by maximal overlap.
///
/// Fails when the best overlap drops to 0.5 or below, when the branch jumps
/// to a different level index (a true crossing), or when the branch lands on
/// an exactly degenerate level where its orientation is undefined.
pub fn adiabatic_continuation(table: &SpectrumTable, level: usize) -> Result<Continuation> {
    let vectors = table
        .eigenvectors
        .as_ref()
        .ok_or_else(|| Error::invalid("continuation needs a table with eigenvectors"))?;
    let mut tracked: DVector<Complex64> = vectors[0].column(level).into_owned();
    let mut levels = Vec::with_capacity(vectors.len());
    levels.push(level);
    let mut min_overlap = 1.0f64;
    let mut current = level;
    let lowest_wavenumber = table.lowest_wavenumber.unwrap_or(0);

    for i in 1..vectors.len() {
        let m = &vectors[i];
        let (best, overlap) = (0..m.ncols())
            .map(|c| (c, m.column(c).dotc(&tracked).norm()))
            .fold((0, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        let ambiguous = || Error::AmbiguousTracking {
            from: table.values[i - 1],
            to: table.values[i],
            overlap,
        };
        if overlap <= 0.5 || best != current {
            return Err(ambiguous());
        }
        let energies = &table.eigenvalues[i];
        let e = energies[best];
        let scale = DEGENERACY_TOL * (1.0 + e.abs());
        let degenerate = [best.checked_sub(1), Some(best + 1)]
            .into_iter()
            .flatten()
            .filter(|&j| j < energies.len())
            .any(|j| (energies[j] - e).abs() < scale);
        if degenerate {
            return Err(ambiguous());
        }
        min_overlap = min_overlap.min(overlap);
        let mut next = m.column(best).into_owned();
        // keep a continuous gauge along the branch
        let phase = next.dotc(&tracked);
        if phase.norm() > 0.0 {
            next *= phase / phase.norm();
        }
        tracked = next;
        current = best;
        levels.push(best);
    }
    Ok(Continuation {
        lowest_wavenumber,
        levels,
        min_overlap,
        vector: tracked,
    })
}

/// Tracks `level` from `from` to `to`, starting with step `max_step` and
/// halving it until every successive overlap exceeds 0.9.
pub fn continue_level(
    base: &SweepBase,
    parameter: SweepParameter,
    from: f64,
    to: f64,
    level: usize,
    max_step: f64,
) -> Result<Continuation> {
    continue_levels(base, parameter, from, to, &[level], max_step).map(|mut v| v.remove(0))
}

/// [`continue_level`] for several levels sharing the same sweeps.
pub fn continue_levels(
    base: &SweepBase,
    parameter: SweepParameter,
    from: f64,
    to: f64,
    levels: &[usize],
    max_step: f64,
) -> Result<Vec<Continuation>> {
    const MAX_HALVINGS: usize = 8;
    if !(max_step > 0.0) {
        return Err(Error::invalid("continuation step must be positive"));
    }
    let span = to - from;
    let mut intervals = libm::ceil(span.abs() / max_step) as usize;
    let dim = 2 * base.cutoff + 1;
    let mut last = None;
    for _ in 0..=MAX_HALVINGS {
        let values: Vec<f64> = if intervals == 0 {
            alloc::vec![from]
        } else {
            (0..=intervals)
                .map(|i| from + span * i as f64 / intervals as f64)
                .collect()
        };
        let table = sweep_spectrum(parameter, &values, base, dim, true)?;
        let tracked: Result<Vec<Continuation>> = levels
            .iter()
            .map(|&l| adiabatic_continuation(&table, l))
            .collect();
        match tracked {
            Ok(c) if intervals == 0 || c.iter().all(|c| c.min_overlap > 0.9) => return Ok(c),
            // a sharp overlap means a real crossing, refining cannot help
            Err(e @ Error::AmbiguousTracking { overlap, .. }) if overlap > 0.9 => return Err(e),
            other => last = Some(other),
        }
        intervals *= 2;
    }
    last.expect("at least one attempt")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn free(omega: f64, b: f64) -> MomentumHamiltonian {
        MomentumHamiltonian::new(omega, Potential::barrier(b), DEFAULT_CUTOFF).unwrap()
    }

    /// Midpoint quadrature of `V(x) exp(-2 pi i n x)`.
    fn fourier_by_quadrature(p: &Potential, n: i64) -> Complex64 {
        let samples = 20000;
        (0..samples)
            .map(|i| {
                let x = -0.5 + (i as f64 + 0.5) / samples as f64;
                p.smooth_value(x) * cis(-2.0 * PI * n as f64 * x)
            })
            .sum::<Complex64>()
            / samples as f64
    }

    #[test]
    fn analytic_fourier_matches_quadrature() {
        let pots = [
            Potential::harmonic(7.0, 0.0),
            Potential::harmonic(3.0, 0.21),
            Potential::sinusoidal(5.0, -0.33),
        ];
        for p in &pots {
            for n in -4..=4 {
                let a = potential_fourier(p, n);
                let q = fourier_by_quadrature(p, n);
                assert!((a - q).norm() < 1e-7, "{p:?} n={n}: {a} vs {q}");
            }
        }
    }

    #[test]
    fn hermitian_with_kinetic_diagonal() {
        let h = MomentumHamiltonian::new(1.3, Potential::harmonic(20.0, 0.17), 16).unwrap();
        let m = h.matrix();
        let herm = (m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(herm < 1e-12);
        let h0 = free(0.7, 0.0);
        for i in 0..h0.dim() {
            let p = 2.0 * PI * h0.wavenumber(i) as f64 - 0.7;
            assert!((h0.matrix()[(i, i)].re - 0.5 * p * p).abs() < 1e-12);
        }
        let hb = free(0.0, 2.0);
        assert!((hb.matrix()[(0, 5)] - 2.0).norm() < 1e-15);
        assert!(MomentumHamiltonian::new(0.0, Potential::None, 7).is_err());
    }

    #[test]
    fn free_ring_levels() {
        let basis = free(0.0, 0.0).diagonalize();
        let expected = [0.0, 1.0, 1.0, 4.0, 4.0, 9.0, 9.0, 16.0, 16.0];
        for (e, k2) in basis.values.iter().zip(expected) {
            let target = 2.0 * PI * PI * k2;
            assert!((e - target).abs() <= 1e-10 * target.max(1e-300) + 1e-12);
        }
    }

    #[test]
    fn avoided_crossing_gap_matches_two_level_oracle() {
        // k = 0 and k = 1 are degenerate at Omega = pi; the barrier adds b to
        // both diagonal entries and couples them with b, so the gap is 2b.
        let b = 0.05;
        let v = free(PI, b).diagonalize().values;
        let gap = v[1] - v[0];
        assert!((gap - 2.0 * b).abs() < 0.05 * 2.0 * b, "gap {gap}");
    }

    #[test]
    fn gap_grows_with_barrier() {
        let gaps: Vec<f64> = [0.0, 0.05, 0.5, 1.0, 1.5, 2.0]
            .iter()
            .map(|&b| {
                let v = free(PI, b).diagonalize().values;
                v[1] - v[0]
            })
            .collect();
        assert!(gaps.windows(2).all(|w| w[1] > w[0]), "{gaps:?}");
    }

    #[test]
    fn periodic_in_omega() {
        for &(omega, b) in &[(0.3, 1.0), (1.9, 2.0)] {
            let a = free(omega, b).diagonalize().values;
            let c = free(omega + 2.0 * PI, b).diagonalize().values;
            for j in 0..25 {
                assert!((a[j] - c[j]).abs() < 1e-8 * (1.0 + a[j].abs()));
            }
        }
    }

    #[test]
    fn harmonic_limit() {
        let h = MomentumHamiltonian::new(0.0, Potential::harmonic(200.0, 0.0), DEFAULT_CUTOFF).unwrap();
        let v = h.diagonalize().values;
        assert!(((v[1] - v[0]) - 200.0).abs() < 0.02 * 200.0);
        assert!((v[0] - 100.0).abs() < 2.0);
        let s = MomentumHamiltonian::new(0.4, Potential::sinusoidal(0.0, 0.2), 16).unwrap();
        let f = MomentumHamiltonian::new(0.4, Potential::None, 16).unwrap();
        assert_eq!(s.diagonalize().values, f.diagonalize().values);
    }

    #[test]
    fn eigensystem_orbitals_are_normalized() {
        let grid = RingGrid::new(256).unwrap();
        let (values, orbitals) = free(0.0, 1.0).eigensystem(4, grid).unwrap();
        assert_eq!(values.len(), 4);
        for (i, a) in orbitals.iter().enumerate() {
            for (j, b) in orbitals.iter().enumerate() {
                let o = a.inner(b).unwrap().norm();
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((o - expected).abs() < 1e-10);
            }
        }
        let coarse = RingGrid::new(64).unwrap();
        assert!(free(0.0, 1.0).eigensystem(2, coarse).is_err());
    }

    #[test]
    fn sweep_tables() {
        let base = SweepBase {
            omega: 0.0,
            potential: Potential::barrier(2.0),
            cutoff: 16,
        };
        let values = [0.0, 1.0, 2.0];
        let t = sweep_spectrum(SweepParameter::Omega, &values, &base, 8, false).unwrap();
        assert_eq!(t.eigenvalues.len(), 3);
        assert!(t.eigenvalues.iter().all(|row| row.windows(2).all(|w| w[0] <= w[1])));
        assert!(sweep_spectrum(SweepParameter::Omega, &[], &base, 8, false).is_err());
        assert!(sweep_spectrum(SweepParameter::TrapFrequency, &values, &base, 8, false).is_err());
    }

    #[test]
    fn continuation_reaches_equal_superposition() {
        let base = SweepBase {
            omega: 0.0,
            potential: Potential::barrier(1.0),
            cutoff: DEFAULT_CUTOFF,
        };
        let c = continue_level(&base, SweepParameter::Omega, 0.0, PI, 0, PI / 200.0).unwrap();
        assert!(c.min_overlap > 0.9);
        assert!(c.levels.iter().all(|&l| l == 0));
        let at = |k: i64| (k - c.lowest_wavenumber) as usize;
        let k0 = c.vector[at(0)].norm_sqr();
        let k1 = c.vector[at(1)].norm_sqr();
        // symmetry about Omega = pi forces equal weights; the remaining
        // weight sits in the barrier-induced tails
        assert!((k0 - k1).abs() < 1e-3, "{k0} {k1}");
        assert!((k0 - 0.5).abs() < 0.05);
    }

    #[test]
    fn zero_length_continuation_is_identity() {
        let base = SweepBase {
            omega: 0.0,
            potential: Potential::barrier(1.0),
            cutoff: 16,
        };
        let h = base.hamiltonian(SweepParameter::Omega, 0.0, Some(0)).unwrap().diagonalize();
        let c = continue_level(&base, SweepParameter::Omega, 0.0, 0.0, 2, 0.1).unwrap();
        assert_eq!(c.levels, alloc::vec![2]);
        assert!((c.vector.dotc(&h.vector(2)).norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn true_crossing_is_flagged() {
        let base = SweepBase {
            omega: 0.0,
            potential: Potential::barrier(0.0),
            cutoff: 16,
        };
        let err = continue_level(&base, SweepParameter::Omega, 0.0, 1.5 * PI, 0, PI / 200.0).unwrap_err();
        assert!(matches!(err, Error::AmbiguousTracking { .. }));
    }
}
