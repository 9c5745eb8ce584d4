//! Second-order split-step propagation of ring wavefunctions.
//!
//! One step is `exp(-i V dt/2) exp(-i (p - Omega)^2 dt/2) exp(-i V dt/2)` with
//! the kinetic factor applied on FFT bins. Drive parameters are sampled at
//! the step midpoint. A barrier is a single Kronecker spike, so its kick is a
//! rank-one update that can be applied directly on momentum coefficients;
//! barrier-only runs therefore never leave momentum space.

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

use crate::fft::{cis, Fft};
use crate::ring::{Frame, Potential, RingGrid, Wavefunction};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropagationConfig {
    pub dt: f64,
    /// Largest tolerated `|1 - ||psi|||` before the run aborts.
    pub norm_tol: f64,
    /// Record a snapshot every `record_stride` steps; 0 keeps only the final state.
    pub record_stride: usize,
    pub integrator: Integrator,
}

/// Time-stepping scheme used by [`propagate_many`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Integrator {
    /// Strang splitting on the position grid.
    #[default]
    SplitStep,
    /// Barrier-only drives integrated on the momenta `|k| <= cutoff`, with
    /// the exact exponential of the midpoint Hamiltonian in every step. A
    /// delta spike couples all momenta equally, so splitting errors on the
    /// fast high-`k` phases leak into the low levels unless `dt` is tiny;
    /// this scheme has no splitting error and matches the truncated
    /// momentum Hamiltonian that defines the eigenstates.
    MomentumWindow { cutoff: usize },
}

impl Default for PropagationConfig {
    fn default() -> Self {
        Self {
            dt: 2e-4,
            norm_tol: 1e-10,
            record_stride: 0,
            integrator: Integrator::SplitStep,
        }
    }
}

impl PropagationConfig {
    pub fn with_dt(dt: f64) -> Self {
        Self {
            dt,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrameKind {
    Lab,
    /// Barrier held fixed, kinetic momentum shifted by `Omega(t)`.
    Comoving,
}

/// Time-dependent drive: rotation velocity and external potential.
pub struct DriveSchedule<'a> {
    duration: f64,
    frame: FrameKind,
    omega: Box<dyn Fn(f64) -> f64 + 'a>,
    potential: Box<dyn Fn(f64) -> Potential + 'a>,
}

impl<'a> DriveSchedule<'a> {
    pub fn new(
        duration: f64,
        frame: FrameKind,
        omega: impl Fn(f64) -> f64 + 'a,
        potential: impl Fn(f64) -> Potential + 'a,
    ) -> Self {
        Self {
            duration,
            frame,
            omega: Box::new(omega),
            potential: Box::new(potential),
        }
    }

    /// Rotating delta barrier seen from its own frame (barrier at `x = 0`).
    pub fn comoving_barrier(
        duration: f64,
        omega: impl Fn(f64) -> f64 + 'a,
        barrier: impl Fn(f64) -> f64 + 'a,
    ) -> Self {
        Self::new(duration, FrameKind::Comoving, omega, move |t| {
            Potential::barrier(barrier(t))
        })
    }

    /// Lab-frame drive by a (possibly moving) potential.
    pub fn lab(duration: f64, potential: impl Fn(f64) -> Potential + 'a) -> Self {
        Self::new(duration, FrameKind::Lab, |_| 0.0, potential)
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }

    pub fn frame(&self) -> FrameKind {
        self.frame
    }

    pub fn omega_at(&self, t: f64) -> f64 {
        (self.omega)(t)
    }

    pub fn potential_at(&self, t: f64) -> Potential {
        (self.potential)(t)
    }
}

/// Reusable split-step kernel for one grid and time step.
#[derive(Debug, Clone)]
pub struct SplitStep {
    grid: RingGrid,
    fft: Fft,
    dt: f64,
    free_phase: Vec<Complex64>,
    kinetic: Vec<Complex64>,
    samples: Vec<f64>,
    kick: Vec<Complex64>,
    spike_index: Option<usize>,
    spike_kernel: Vec<Complex64>,
    in_momentum: bool,
}

impl SplitStep {
    pub fn new(grid: RingGrid, dt: f64) -> Self {
        let n = grid.len();
        let free_phase = (0..n)
            .map(|j| {
                let p = 2.0 * PI * grid.wavenumber(j) as f64;
                cis(-0.5 * p * p * dt)
            })
            .collect();
        Self {
            grid,
            fft: Fft::new(n),
            dt,
            free_phase,
            kinetic: vec![Complex64::new(0.0, 0.0); n],
            samples: vec![0.0; n],
            kick: vec![Complex64::new(0.0, 0.0); n],
            spike_index: None,
            spike_kernel: Vec::new(),
            in_momentum: false,
        }
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Advances every state by one step under `potential`.
    pub fn step(&mut self, states: &mut [Vec<Complex64>], omega: f64, potential: &Potential) {
        match *potential {
            Potential::None => self.kinetic_step(states, omega),
            Potential::DeltaBarrier { height, position } => {
                let index = self.grid.nearest_index(position);
                let strength = height / self.grid.dx();
                self.spike_kick(states, index, strength);
                self.kinetic_step(states, omega);
                self.spike_kick(states, index, strength);
            }
            _ => {
                potential.sample_into(&self.grid, &mut self.samples);
                self.fill_kick();
                self.dense_step(states, omega);
            }
        }
    }

    /// Advances every state by one step under sampled potential values.
    pub fn step_sampled(&mut self, states: &mut [Vec<Complex64>], omega: f64, samples: &[f64]) {
        assert_eq!(samples.len(), self.grid.len());
        self.samples.copy_from_slice(samples);
        self.fill_kick();
        self.dense_step(states, omega);
    }

    /// Brings the batch back to position amplitudes.
    pub fn to_position(&mut self, states: &mut [Vec<Complex64>]) {
        if self.in_momentum {
            for s in states.iter_mut() {
                self.fft.inverse(s);
            }
            self.in_momentum = false;
        }
    }

    fn to_momentum(&mut self, states: &mut [Vec<Complex64>]) {
        if !self.in_momentum {
            for s in states.iter_mut() {
                self.fft.forward(s);
            }
            self.in_momentum = true;
        }
    }

    /// `||psi||^2` in whatever representation the batch currently holds.
    fn norm_sqr(&self, state: &[Complex64]) -> f64 {
        let sum: f64 = state.iter().map(|z| z.norm_sqr()).sum();
        let n = self.grid.len() as f64;
        if self.in_momentum {
            sum / (n * n)
        } else {
            sum / n
        }
    }

    fn fill_kick(&mut self) {
        let half = 0.5 * self.dt;
        for (k, &v) in self.kick.iter_mut().zip(&self.samples) {
            *k = cis(-v * half);
        }
    }

    fn dense_step(&mut self, states: &mut [Vec<Complex64>], omega: f64) {
        self.to_position(states);
        for s in states.iter_mut() {
            for (z, k) in s.iter_mut().zip(&self.kick) {
                *z *= k;
            }
        }
        self.kinetic_step(states, omega);
        self.to_position(states);
        for s in states.iter_mut() {
            for (z, k) in s.iter_mut().zip(&self.kick) {
                *z *= k;
            }
        }
    }

    fn kinetic_step(&mut self, states: &mut [Vec<Complex64>], omega: f64) {
        self.to_momentum(states);
        let phases: &[Complex64] = if omega == 0.0 {
            &self.free_phase
        } else {
            self.fill_kinetic(omega);
            &self.kinetic
        };
        for s in states.iter_mut() {
            for (z, p) in s.iter_mut().zip(phases) {
                *z *= p;
            }
        }
    }

    /// `(2 pi k - Omega)^2 = (2 pi k)^2 - 4 pi k Omega + Omega^2`; the middle
    /// factor is a power of a single phase and is built by recurrence.
    fn fill_kinetic(&mut self, omega: f64) {
        let n = self.grid.len();
        let z = cis(2.0 * PI * omega * self.dt);
        let global = cis(-0.5 * omega * omega * self.dt);
        let mut p = global;
        for j in 0..n / 2 {
            self.kinetic[j] = self.free_phase[j] * p;
            p *= z;
        }
        let zc = z.conj();
        let mut p = global * zc;
        for j in (n / 2..n).rev() {
            self.kinetic[j] = self.free_phase[j] * p;
            p *= zc;
        }
    }

    /// Multiplies grid point `index` by `exp(-i strength dt/2)`, acting on
    /// momentum coefficients as a rank-one update.
    fn spike_kick(&mut self, states: &mut [Vec<Complex64>], index: usize, strength: f64) {
        if strength == 0.0 {
            return;
        }
        self.to_momentum(states);
        let n = self.grid.len();
        if self.spike_index != Some(index) {
            self.spike_kernel = (0..n)
                .map(|j| cis(-2.0 * PI * ((j * index) % n) as f64 / n as f64))
                .collect();
            self.spike_index = Some(index);
        }
        let factor = cis(-0.5 * strength * self.dt) - 1.0;
        let inv_n = 1.0 / n as f64;
        for s in states.iter_mut() {
            let value: Complex64 = s
                .iter()
                .zip(&self.spike_kernel)
                .map(|(a, e)| a * e.conj())
                .sum::<Complex64>()
                * inv_n;
            let delta = value * factor;
            for (a, e) in s.iter_mut().zip(&self.spike_kernel) {
                *a += delta * e;
            }
        }
    }
}

/// Exact-exponential stepper for `H = diag((2 pi k - Omega)^2 / 2) + b u u^dag`
/// on the window `k = -K..=K`, with `u_k = exp(-2 pi i k x0)`.
///
/// `exp(-i H dt)` is expanded in Chebyshev polynomials of the rescaled
/// Hamiltonian; each term costs one diagonal-plus-rank-one product.
#[derive(Debug, Clone)]
pub struct WindowStep {
    cutoff: usize,
    dt: f64,
    /// `(d_k - center) / radius` for the current step.
    scaled: Vec<f64>,
    barrier_re: Vec<f64>,
    barrier_im: Vec<f64>,
    barrier_position: Option<f64>,
    bessel: Vec<f64>,
    // split real and imaginary parts keep the recurrence vectorizable
    prev: [Vec<f64>; 2],
    cur: [Vec<f64>; 2],
    next: [Vec<f64>; 2],
    acc: [Vec<f64>; 2],
}

const BESSEL_FLOOR: f64 = 1e-17;

impl WindowStep {
    pub fn new(cutoff: usize, dt: f64) -> Self {
        let dim = 2 * cutoff + 1;
        let zero = vec![0.0; dim];
        let pair = || [zero.clone(), zero.clone()];
        Self {
            cutoff,
            dt,
            scaled: zero.clone(),
            barrier_re: zero.clone(),
            barrier_im: zero.clone(),
            barrier_position: None,
            bessel: Vec::new(),
            prev: pair(),
            cur: pair(),
            next: pair(),
            acc: pair(),
        }
    }

    pub fn dim(&self) -> usize {
        2 * self.cutoff + 1
    }

    /// Wavenumber of window index `i`.
    pub fn wavenumber(&self, i: usize) -> i64 {
        i as i64 - self.cutoff as i64
    }

    /// Advances window coefficients by one step with a barrier of `height`
    /// at `position`.
    pub fn step(&mut self, states: &mut [Vec<Complex64>], omega: f64, height: f64, position: f64) {
        let dim = self.dim();
        let (mut dmin, mut dmax) = (f64::INFINITY, f64::NEG_INFINITY);
        for i in 0..dim {
            let p = 2.0 * PI * self.wavenumber(i) as f64 - omega;
            let d = 0.5 * p * p;
            self.scaled[i] = d;
            dmin = dmin.min(d);
            dmax = dmax.max(d);
        }
        if height != 0.0 && self.barrier_position != Some(position) {
            for i in 0..dim {
                let u = cis(-2.0 * PI * self.wavenumber(i) as f64 * position);
                self.barrier_re[i] = u.re;
                self.barrier_im[i] = u.im;
            }
            self.barrier_position = Some(position);
        }
        // u u^dag has the single nonzero eigenvalue |u|^2 = dim
        let rank_one = height * dim as f64;
        let emin = dmin + rank_one.min(0.0);
        let emax = dmax + rank_one.max(0.0);
        let center = 0.5 * (emax + emin);
        let radius = 0.5 * (emax - emin) * (1.0 + 1e-12) + 1e-300;
        for d in self.scaled.iter_mut() {
            *d = (*d - center) / radius;
        }
        bessel_sequence(radius * self.dt, &mut self.bessel);
        let global = cis(-center * self.dt);
        let scaled_height = height / radius;
        for state in states.iter_mut() {
            for (i, z) in state.iter().enumerate() {
                self.prev[0][i] = z.re;
                self.prev[1][i] = z.im;
            }
            self.expm(scaled_height);
            for (i, z) in state.iter_mut().enumerate() {
                *z = Complex64::new(self.acc[0][i], self.acc[1][i]) * global;
            }
        }
    }

    /// `acc <- sum_n c_n T_n(Hs) prev` with `Hs = (H - center) / radius`,
    /// `c_0 = J_0` and `c_n = 2 (-i)^n J_n`.
    fn expm(&mut self, height: f64) {
        let j0 = self.bessel[0];
        for k in 0..2 {
            for (a, p) in self.acc[k].iter_mut().zip(&self.prev[k]) {
                *a = j0 * p;
            }
        }
        for n in 1..self.bessel.len() {
            let first = n == 1;
            let src = if first { &self.prev } else { &self.cur };
            let (mut or, mut oi) = (0.0, 0.0);
            if height != 0.0 {
                // <u|src> = sum (ur - i ui)(sr + i si)
                for (((ur, ui), sr), si) in self
                    .barrier_re
                    .iter()
                    .zip(&self.barrier_im)
                    .zip(&src[0])
                    .zip(&src[1])
                {
                    or += ur * sr + ui * si;
                    oi += ur * si - ui * sr;
                }
                or *= height;
                oi *= height;
            }
            let scale = if first { 1.0 } else { 2.0 };
            let [next_re, next_im] = &mut self.next;
            for (i, ((nr, ni), d)) in next_re.iter_mut().zip(next_im.iter_mut()).zip(&self.scaled).enumerate() {
                let (ur, ui) = (self.barrier_re[i], self.barrier_im[i]);
                *nr = scale * (d * src[0][i] + ur * or - ui * oi);
                *ni = scale * (d * src[1][i] + ur * oi + ui * or);
            }
            if first {
                core::mem::swap(&mut self.cur, &mut self.next);
            } else {
                for k in 0..2 {
                    for (nx, p) in self.next[k].iter_mut().zip(&self.prev[k]) {
                        *nx -= p;
                    }
                }
                core::mem::swap(&mut self.prev, &mut self.cur);
                core::mem::swap(&mut self.cur, &mut self.next);
            }
            // (-i)^n cycles through 1, -i, -1, i
            let c = 2.0 * self.bessel[n];
            let [acc_re, acc_im] = &mut self.acc;
            let [cur_re, cur_im] = &self.cur;
            match n % 4 {
                0 | 2 => {
                    let c = if n % 4 == 0 { c } else { -c };
                    for (a, v) in acc_re.iter_mut().zip(cur_re) {
                        *a += c * v;
                    }
                    for (a, v) in acc_im.iter_mut().zip(cur_im) {
                        *a += c * v;
                    }
                }
                _ => {
                    // c (-i) or c (i): real part picks up the imaginary input
                    let c = if n % 4 == 1 { c } else { -c };
                    for (a, v) in acc_re.iter_mut().zip(cur_im) {
                        *a += c * v;
                    }
                    for (a, v) in acc_im.iter_mut().zip(cur_re) {
                        *a -= c * v;
                    }
                }
            }
        }
    }
}

/// `J_0(x), J_1(x), ...` up to the first order beyond `x` whose magnitude
/// falls under the floor, by Miller's downward recurrence normalized with
/// `J_0 + 2 sum J_2k = 1`.
fn bessel_sequence(x: f64, out: &mut Vec<f64>) {
    out.clear();
    if x < 1e-300 {
        out.push(1.0);
        return;
    }
    let start = (x + 30.0 + 10.0 * libm::cbrt(x)) as usize;
    out.resize(start + 2, 0.0);
    let (mut above, mut here) = (0.0f64, 1e-250f64);
    out[start] = here;
    for n in (1..=start).rev() {
        let below = 2.0 * n as f64 / x * here - above;
        above = here;
        here = below;
        out[n - 1] = here;
        if here.abs() > 1e250 {
            for v in out[n - 1..].iter_mut() {
                *v *= 1e-250;
            }
            above *= 1e-250;
            here *= 1e-250;
        }
    }
    let norm = out[0] + 2.0 * out.iter().skip(2).step_by(2).sum::<f64>();
    for v in out.iter_mut() {
        *v /= norm;
    }
    let keep = out
        .iter()
        .enumerate()
        .position(|(n, v)| n as f64 > x && v.abs() < BESSEL_FLOOR)
        .map_or(out.len(), |n| n + 1);
    out.truncate(keep);
}

/// One Strang step under sampled potential `v`.
pub fn strang_step(psi: &Wavefunction, omega: f64, v: &[f64], dt: f64) -> Result<Wavefunction> {
    let grid = *psi.grid();
    if v.len() != grid.len() {
        return Err(Error::SizeMismatch {
            expected: grid.len(),
            found: v.len(),
        });
    }
    let mut stepper = SplitStep::new(grid, dt);
    let mut batch = [psi.amplitudes().to_vec()];
    stepper.step_sampled(&mut batch, omega, v);
    stepper.to_position(&mut batch);
    let [amps] = batch;
    Wavefunction::from_raw(grid, amps)
}

/// `psi~(x) = psi_lab(x + X)`.
pub fn comoving_transform(psi_lab: &Wavefunction, position: f64) -> Wavefunction {
    psi_lab.shifted(-position)
}

#[derive(Debug, Clone)]
pub struct Snapshot {
    pub time: f64,
    pub states: Vec<Wavefunction>,
}

#[derive(Debug, Clone)]
pub struct Propagation {
    pub states: Vec<Wavefunction>,
    /// Frame of the returned states; comoving runs report the accumulated
    /// barrier position.
    pub frame: Frame,
    pub steps: usize,
    pub dt: f64,
    pub snapshots: Vec<Snapshot>,
}

const NORM_CHECK_INTERVAL: usize = 1024;

/// Propagates a batch of orbitals through `drive`. The potential phases are
/// computed once per step and shared across the batch.
pub fn propagate_many(
    initial: &[Wavefunction],
    drive: &DriveSchedule<'_>,
    cfg: &PropagationConfig,
) -> Result<Propagation> {
    let duration = drive.duration();
    if !(duration > 0.0) || !duration.is_finite() {
        return Err(Error::invalid("drive duration must be positive"));
    }
    if !(cfg.dt > 0.0) || cfg.dt > duration {
        return Err(Error::invalid("time step must satisfy 0 < dt <= T"));
    }
    let Some(first) = initial.first() else {
        return Err(Error::invalid("no states to propagate"));
    };
    let grid = *first.grid();
    for psi in initial {
        if *psi.grid() != grid {
            return Err(Error::GridMismatch {
                left: grid.len(),
                right: psi.grid().len(),
            });
        }
    }

    let steps = libm::ceil(duration / cfg.dt - 1e-9).max(1.0) as usize;
    let dt = duration / steps as f64;
    let mut engine = Engine::new(grid, dt, cfg)?;
    let mut batch = engine.load(initial, cfg.norm_tol)?;
    let comoving = drive.frame() == FrameKind::Comoving;
    let mut position = 0.0;
    let mut snapshots = Vec::new();
    if cfg.record_stride > 0 {
        snapshots.push(Snapshot {
            time: 0.0,
            states: engine.states(&mut batch)?,
        });
    }

    for i in 0..steps {
        let t_mid = (i as f64 + 0.5) * dt;
        let omega = if comoving { drive.omega_at(t_mid) } else { 0.0 };
        if comoving {
            position += omega * dt;
        }
        let potential = drive.potential_at(t_mid);
        engine.step(&mut batch, omega, &potential)?;

        let done = i + 1;
        if done % NORM_CHECK_INTERVAL == 0 || done == steps {
            engine.check_norms(&batch, done as f64 * dt, cfg.norm_tol)?;
        }
        if cfg.record_stride > 0 && (done % cfg.record_stride == 0 || done == steps) {
            snapshots.push(Snapshot {
                time: done as f64 * dt,
                states: engine.states(&mut batch)?,
            });
        }
    }
    let states = engine.states(&mut batch)?;
    let frame = if comoving {
        Frame::Comoving {
            position: position - libm::floor(position),
        }
    } else {
        Frame::Lab
    };
    Ok(Propagation {
        states,
        frame,
        steps,
        dt,
        snapshots,
    })
}

pub fn propagate(
    initial: &Wavefunction,
    drive: &DriveSchedule<'_>,
    cfg: &PropagationConfig,
) -> Result<Propagation> {
    propagate_many(core::slice::from_ref(initial), drive, cfg)
}

enum Engine {
    Grid(SplitStep),
    Window { grid: RingGrid, stepper: WindowStep },
}

impl Engine {
    fn new(grid: RingGrid, dt: f64, cfg: &PropagationConfig) -> Result<Self> {
        match cfg.integrator {
            Integrator::SplitStep => Ok(Engine::Grid(SplitStep::new(grid, dt))),
            Integrator::MomentumWindow { cutoff } => {
                if cutoff == 0 || 2 * cutoff + 1 >= grid.len() {
                    return Err(Error::Aliasing {
                        k: cutoff as i64,
                        points: grid.len(),
                    });
                }
                Ok(Engine::Window {
                    grid,
                    stepper: WindowStep::new(cutoff, dt),
                })
            }
        }
    }

    fn load(&self, initial: &[Wavefunction], tol: f64) -> Result<Vec<Vec<Complex64>>> {
        match self {
            Engine::Grid(_) => Ok(initial.iter().map(|p| p.amplitudes().to_vec()).collect()),
            Engine::Window { grid, stepper } => initial
                .iter()
                .map(|psi| {
                    let coeffs = psi.momentum_coefficients();
                    let window: Vec<Complex64> = (0..stepper.dim())
                        .map(|i| coeffs[grid.bin(stepper.wavenumber(i)).unwrap_or(0)])
                        .collect();
                    let kept: f64 = window.iter().map(|c| c.norm_sqr()).sum();
                    let total: f64 = coeffs.iter().map(|c| c.norm_sqr()).sum();
                    if total - kept > tol {
                        return Err(Error::invalid("state has weight outside the momentum window"));
                    }
                    Ok(window)
                })
                .collect(),
        }
    }

    fn step(&mut self, batch: &mut [Vec<Complex64>], omega: f64, potential: &Potential) -> Result<()> {
        match self {
            Engine::Grid(stepper) => stepper.step(batch, omega, potential),
            Engine::Window { stepper, .. } => match *potential {
                Potential::None => stepper.step(batch, omega, 0.0, 0.0),
                Potential::DeltaBarrier { height, position } => stepper.step(batch, omega, height, position),
                _ => {
                    return Err(Error::invalid(
                        "momentum-window integration supports only barrier drives",
                    ))
                }
            },
        }
        Ok(())
    }

    fn norm_sqr(&self, state: &[Complex64]) -> f64 {
        match self {
            Engine::Grid(stepper) => stepper.norm_sqr(state),
            Engine::Window { .. } => state.iter().map(|z| z.norm_sqr()).sum(),
        }
    }

    fn check_norms(&self, batch: &[Vec<Complex64>], time: f64, tol: f64) -> Result<()> {
        for s in batch {
            let norm = libm::sqrt(self.norm_sqr(s));
            if !((1.0 - norm).abs() <= tol) {
                return Err(Error::NormDrift {
                    time,
                    norm,
                    tolerance: tol,
                });
            }
        }
        Ok(())
    }

    fn states(&mut self, batch: &mut [Vec<Complex64>]) -> Result<Vec<Wavefunction>> {
        match self {
            Engine::Grid(stepper) => {
                stepper.to_position(batch);
                let grid = stepper.grid;
                batch
                    .iter()
                    .map(|a| Wavefunction::from_raw(grid, a.clone()))
                    .collect()
            }
            Engine::Window { grid, stepper } => batch
                .iter()
                .map(|c| {
                    let pairs: Vec<(i64, Complex64)> = c
                        .iter()
                        .enumerate()
                        .map(|(i, z)| (stepper.wavenumber(i), *z))
                        .collect();
                    Wavefunction::from_momentum_raw(*grid, &pairs)
                })
                .collect(),
        }
    }
}

/// `<psi|H|psi> / <psi|psi>` for the grid Hamiltonian used by the propagator
/// (spectral kinetic term, sampled potential).
pub fn energy_expectation(psi: &Wavefunction, omega: f64, potential: &Potential) -> f64 {
    let grid = psi.grid();
    let coeffs = psi.momentum_coefficients();
    let kinetic: f64 = coeffs
        .iter()
        .enumerate()
        .map(|(j, c)| {
            let p = 2.0 * PI * grid.wavenumber(j) as f64 - omega;
            0.5 * p * p * c.norm_sqr()
        })
        .sum();
    let v = potential.sample(grid);
    let pot: f64 = v
        .iter()
        .zip(psi.amplitudes())
        .map(|(v, z)| v * z.norm_sqr())
        .sum::<f64>()
        * grid.dx();
    (kinetic + pot) / psi.norm_sqr()
}
