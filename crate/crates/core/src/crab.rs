//! CRAB optimal control: a guess pulse dressed with a randomized sinusoidal
//! correction, searched with Nelder-Mead.
//!
//! The correction is `Gamma(t) = Gamma0(t) * gamma(t)` with
//! `gamma = 1 + sum_j (A_j sin(nu_j t) + B_j cos(nu_j t)) / lambda(t)` and
//! `lambda(t) = T^2 / (4 t (t - T))`, which pins the pulse to the guess at
//! both ends.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::propagator::{propagate_many, DriveSchedule, Integrator, PropagationConfig};
use crate::ring::{RingGrid, Wavefunction};
use crate::rng::{SeededRng, Stream};
use crate::tg::{self, Metric, OrbitalSet};
use crate::{Error, Result};

pub fn lambda_weight(t: f64, duration: f64) -> f64 {
    duration * duration / (4.0 * t * (t - duration))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrabCoefficients {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    /// Angular frequencies, `j = 0..=J`.
    pub nu: Vec<f64>,
}

impl CrabCoefficients {
    /// Zero amplitudes with the given frequencies.
    pub fn with_frequencies(nu: Vec<f64>) -> Self {
        let n = nu.len();
        Self {
            a: vec![0.0; n],
            b: vec![0.0; n],
            nu,
        }
    }

    /// `nu_j = (2 pi j / T)(1 + r_j)` with `r_j` uniform in `[-1/2, 1/2]`,
    /// and `nu_0 = (2 pi / T) r` with `r` uniform in `(0, 1/2]`.
    pub fn random_frequencies(j_max: usize, duration: f64, rng: &mut SeededRng) -> Vec<f64> {
        let base = 2.0 * PI / duration;
        (0..=j_max)
            .map(|j| {
                if j == 0 {
                    base * (0.5 - 0.5 * rng.uniform())
                } else {
                    base * j as f64 * (1.0 + rng.uniform_in(-0.5, 0.5))
                }
            })
            .collect()
    }

    /// Highest term index `J`.
    pub fn j_max(&self) -> usize {
        self.nu.len().saturating_sub(1)
    }

    pub fn validate(&self) -> Result<()> {
        if self.nu.is_empty() || self.a.len() != self.nu.len() || self.b.len() != self.nu.len() {
            return Err(Error::invalid("CRAB arrays must all have length J + 1"));
        }
        let finite = self.a.iter().chain(&self.b).chain(&self.nu).all(|v| v.is_finite());
        if !finite || self.nu.iter().any(|&v| v <= 0.0) {
            return Err(Error::invalid("CRAB coefficients must be finite with nu_j > 0"));
        }
        Ok(())
    }

    fn correction(&self, t: f64) -> f64 {
        self.a
            .iter()
            .zip(&self.b)
            .zip(&self.nu)
            .map(|((a, b), nu)| {
                let (s, c) = libm::sincos(nu * t);
                a * s + b * c
            })
            .sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GuessPulse {
    /// Straight line from `start` at `t = 0` to `end` at `t = T`.
    Linear { start: f64, end: f64 },
    Constant(f64),
}

impl GuessPulse {
    pub fn eval(&self, t: f64, duration: f64) -> f64 {
        match *self {
            GuessPulse::Linear { start, end } => start + (end - start) * t / duration,
            GuessPulse::Constant(v) => v,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrabPulse {
    pub guess: GuessPulse,
    pub coeffs: CrabCoefficients,
    pub duration: f64,
}

impl CrabPulse {
    pub fn gamma(&self, t: f64) -> f64 {
        if t <= 0.0 || t >= self.duration {
            return 1.0;
        }
        1.0 + self.coeffs.correction(t) / lambda_weight(t, self.duration)
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.guess.eval(t, self.duration) * self.gamma(t)
    }
}

pub fn eval_pulse(pulse: &CrabPulse, t: f64) -> f64 {
    pulse.eval(t)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NelderMeadOptions {
    /// Evaluation budget per simplex run.
    pub max_evals: usize,
    pub xtol: f64,
    pub ftol: f64,
    /// Number of simplex runs; runs after the first start from a randomized
    /// simplex around the incumbent.
    pub restarts: usize,
    pub seed: u64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self {
            max_evals: 2000,
            xtol: 1e-8,
            ftol: 1e-12,
            restarts: 3,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
    /// `(evaluation, best so far)` after every evaluation.
    pub trace: Vec<(usize, f64)>,
    pub seed: u64,
}

struct Tracker<F> {
    f: F,
    evaluations: usize,
    best_x: Vec<f64>,
    best: f64,
    trace: Vec<(usize, f64)>,
}

impl<F: FnMut(&[f64]) -> f64> Tracker<F> {
    fn eval(&mut self, x: &[f64]) -> f64 {
        let mut v = (self.f)(x);
        if v.is_nan() {
            v = f64::INFINITY;
        }
        self.evaluations += 1;
        if v < self.best {
            self.best = v;
            self.best_x.clear();
            self.best_x.extend_from_slice(x);
        }
        self.trace.push((self.evaluations, self.best));
        v
    }
}

fn initial_step(x: f64) -> f64 {
    (0.1 * x.abs()).max(0.1)
}

/// Derivative-free minimization with reflection 1, expansion 2,
/// contraction 1/2 and shrink 1/2. A run stops when the spread of simplex
/// values drops to `ftol`, its diameter to `xtol`, or its budget is spent.
pub fn nelder_mead(
    objective: impl FnMut(&[f64]) -> f64,
    x0: &[f64],
    opts: &NelderMeadOptions,
) -> Result<OptimizationResult> {
    if x0.is_empty() || x0.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("starting point must be finite and non-empty"));
    }
    let mut tracker = Tracker {
        f: objective,
        evaluations: 0,
        best_x: x0.to_vec(),
        best: f64::INFINITY,
        trace: Vec::new(),
    };
    let mut rng = SeededRng::new(opts.seed, Stream::SimplexRestarts);
    let n = x0.len();

    for run in 0..opts.restarts.max(1) {
        let center = tracker.best_x.clone();
        let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
        let f_center = if run == 0 { tracker.eval(&center) } else { tracker.best };
        simplex.push((center.clone(), f_center));
        for i in 0..n {
            let mut v = center.clone();
            let scale = if run == 0 {
                1.0
            } else {
                let sign = if rng.uniform() < 0.5 { -1.0 } else { 1.0 };
                sign * rng.uniform_in(0.5, 1.5)
            };
            v[i] += scale * initial_step(center[i]);
            let fv = tracker.eval(&v);
            simplex.push((v, fv));
        }
        let budget_end = tracker.evaluations - (n + usize::from(run == 0)) + opts.max_evals;
        run_simplex(&mut tracker, &mut simplex, opts, budget_end);
    }

    Ok(OptimizationResult {
        x: tracker.best_x,
        value: tracker.best,
        evaluations: tracker.evaluations,
        trace: tracker.trace,
        seed: opts.seed,
    })
}

fn run_simplex<F: FnMut(&[f64]) -> f64>(
    tracker: &mut Tracker<F>,
    simplex: &mut [(Vec<f64>, f64)],
    opts: &NelderMeadOptions,
    budget_end: usize,
) {
    let n = simplex.len() - 1;
    let along = |c: &[f64], w: &[f64], coef: f64| -> Vec<f64> {
        c.iter().zip(w).map(|(ci, wi)| ci + coef * (ci - wi)).collect()
    };
    loop {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let spread = simplex[n].1 - simplex[0].1;
        let diameter = simplex[1..]
            .iter()
            .map(|(v, _)| {
                v.iter()
                    .zip(&simplex[0].0)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        if spread <= opts.ftol || diameter <= opts.xtol || tracker.evaluations >= budget_end {
            return;
        }

        let mut centroid = vec![0.0; simplex[0].0.len()];
        for (v, _) in &simplex[..n] {
            for (c, x) in centroid.iter_mut().zip(v) {
                *c += x / n as f64;
            }
        }
        let worst = simplex[n].0.clone();
        let (f_best, f_second, f_worst) = (simplex[0].1, simplex[n - 1].1, simplex[n].1);

        let xr = along(&centroid, &worst, 1.0);
        let fr = tracker.eval(&xr);
        if fr < f_best {
            let xe = along(&centroid, &worst, 2.0);
            let fe = tracker.eval(&xe);
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < f_second {
            simplex[n] = (xr, fr);
            continue;
        }
        let contracted = if fr < f_worst {
            let xc = along(&centroid, &worst, 0.5);
            let fc = tracker.eval(&xc);
            (fc <= fr).then_some((xc, fc))
        } else {
            let xc = along(&centroid, &worst, -0.5);
            let fc = tracker.eval(&xc);
            (fc < f_worst).then_some((xc, fc))
        };
        if let Some(point) = contracted {
            simplex[n] = point;
            continue;
        }
        let best = simplex[0].0.clone();
        for (v, fv) in simplex[1..].iter_mut() {
            for (x, b) in v.iter_mut().zip(&best) {
                *x = b + 0.5 * (*x - b);
            }
            *fv = tracker.eval(v);
            if tracker.evaluations >= budget_end {
                break;
            }
        }
    }
}

/// Which pulses the optimizer controls.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ControlKind {
    /// Rotation `Omega(t)`, barrier fixed.
    Omega,
    /// Barrier height `b(t)`, rotation on its linear guess.
    Barrier,
    /// Both pulses.
    Both,
}

impl ControlKind {
    pub fn name(&self) -> &'static str {
        match self {
            ControlKind::Omega => "omega",
            ControlKind::Barrier => "b",
            ControlKind::Both => "both",
        }
    }

    fn controls_omega(&self) -> bool {
        matches!(self, ControlKind::Omega | ControlKind::Both)
    }

    fn controls_barrier(&self) -> bool {
        matches!(self, ControlKind::Barrier | ControlKind::Both)
    }

    fn pulses(&self) -> usize {
        match self {
            ControlKind::Both => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrabProblem {
    pub kind: ControlKind,
    pub particles: usize,
    pub barrier: f64,
    pub duration: f64,
    pub omega_final: f64,
    /// Highest CRAB term index `J`.
    pub terms: usize,
    pub metric: Metric,
    pub allow_negative_b: bool,
    pub grid_points: usize,
    pub dt: f64,
    /// Momentum cutoff for the eigenstates and the windowed integrator.
    pub cutoff: usize,
    pub seed: u64,
}

impl Default for CrabProblem {
    fn default() -> Self {
        Self {
            kind: ControlKind::Omega,
            particles: 1,
            barrier: 1.0,
            duration: 10.0,
            omega_final: PI,
            terms: 15,
            metric: Metric::FullTg,
            allow_negative_b: false,
            grid_points: 512,
            dt: 1e-3,
            cutoff: 32,
            seed: 42,
        }
    }
}

/// Infidelity of a CRAB-driven rotation as a function of the packed
/// coefficient vector `(A, B, nu)` per controlled pulse (Omega first).
#[derive(Debug, Clone)]
pub struct CrabObjective {
    problem: CrabProblem,
    initial: OrbitalSet,
    targets: OrbitalSet,
    frequencies: Vec<Vec<f64>>,
}

pub fn make_objective(problem: &CrabProblem) -> Result<CrabObjective> {
    if problem.particles == 0 {
        return Err(Error::invalid("need at least one particle"));
    }
    if !(problem.duration > 0.0) || problem.terms == 0 {
        return Err(Error::invalid("CRAB needs T > 0 and J >= 1"));
    }
    let grid = RingGrid::new(problem.grid_points)?;
    let initial = tg::crab_orbitals(problem.particles, problem.barrier, 0.0, grid, problem.cutoff)?;
    let targets = tg::crab_targets(
        problem.particles,
        problem.barrier,
        problem.omega_final,
        grid,
        problem.cutoff,
    )?;
    let mut rng = SeededRng::new(problem.seed, Stream::CrabFrequencies);
    let frequencies = (0..problem.kind.pulses())
        .map(|_| CrabCoefficients::random_frequencies(problem.terms, problem.duration, &mut rng))
        .collect();
    Ok(CrabObjective {
        problem: problem.clone(),
        initial,
        targets,
        frequencies,
    })
}

/// Decoded drive: rotation and barrier pulses.
#[derive(Debug, Clone, PartialEq)]
pub struct CrabDrive {
    pub omega: CrabPulse,
    pub barrier: CrabPulse,
    pub allow_negative_b: bool,
}

impl CrabDrive {
    pub fn omega_at(&self, t: f64) -> f64 {
        self.omega.eval(t)
    }

    pub fn barrier_at(&self, t: f64) -> f64 {
        let b = self.barrier.eval(t);
        if self.allow_negative_b {
            b
        } else {
            b.max(0.0)
        }
    }
}

impl CrabObjective {
    pub fn problem(&self) -> &CrabProblem {
        &self.problem
    }

    pub fn initial(&self) -> &OrbitalSet {
        &self.initial
    }

    pub fn targets(&self) -> &OrbitalSet {
        &self.targets
    }

    pub fn dim(&self) -> usize {
        3 * (self.problem.terms + 1) * self.problem.kind.pulses()
    }

    /// Starting point: zero amplitudes and the seeded frequencies.
    pub fn initial_vector(&self) -> Vec<f64> {
        let j = self.problem.terms + 1;
        let mut x = Vec::with_capacity(self.dim());
        for nu in &self.frequencies {
            x.extend(core::iter::repeat_n(0.0, 2 * j));
            x.extend_from_slice(nu);
        }
        x
    }

    pub fn decode(&self, x: &[f64]) -> Result<CrabDrive> {
        if x.len() != self.dim() {
            return Err(Error::SizeMismatch {
                expected: self.dim(),
                found: x.len(),
            });
        }
        let p = &self.problem;
        let j = p.terms + 1;
        let unpack = |chunk: &[f64]| CrabCoefficients {
            a: chunk[..j].to_vec(),
            b: chunk[j..2 * j].to_vec(),
            nu: chunk[2 * j..].iter().map(|v| v.abs()).collect(),
        };
        let mut chunks = x.chunks(3 * j);
        // an empty sum leaves the guess untouched
        let zero = || CrabCoefficients::with_frequencies(Vec::new());
        let omega_coeffs = if p.kind.controls_omega() {
            unpack(chunks.next().unwrap_or_default())
        } else {
            zero()
        };
        let barrier_coeffs = if p.kind.controls_barrier() {
            unpack(chunks.next().unwrap_or_default())
        } else {
            zero()
        };
        Ok(CrabDrive {
            omega: CrabPulse {
                guess: GuessPulse::Linear {
                    start: 0.0,
                    end: p.omega_final,
                },
                coeffs: omega_coeffs,
                duration: p.duration,
            },
            barrier: CrabPulse {
                guess: GuessPulse::Constant(p.barrier),
                coeffs: barrier_coeffs,
                duration: p.duration,
            },
            allow_negative_b: p.allow_negative_b,
        })
    }

    /// Orbitals at `T` in the barrier frame.
    pub fn evolve(&self, drive: &CrabDrive, which: &[usize]) -> Result<Vec<Wavefunction>> {
        let initial: Vec<Wavefunction> = which.iter().map(|&i| self.initial.orbitals()[i].clone()).collect();
        let schedule = DriveSchedule::comoving_barrier(
            self.problem.duration,
            |t| drive.omega_at(t),
            |t| drive.barrier_at(t),
        );
        let cfg = PropagationConfig {
            integrator: Integrator::MomentumWindow {
                cutoff: self.problem.cutoff,
            },
            ..PropagationConfig::with_dt(self.problem.dt)
        };
        Ok(propagate_many(&initial, &schedule, &cfg)?.states)
    }

    /// Full report of the drive encoded by `x`.
    pub fn report(&self, x: &[f64]) -> Result<tg::FidelityReport> {
        let drive = self.decode(x)?;
        let all: Vec<usize> = (0..self.problem.particles).collect();
        let finals = OrbitalSet::new_unchecked(self.evolve(&drive, &all)?)?;
        tg::tg_fidelity(&finals, &self.targets)
    }

    /// `1 - fidelity` under the problem's metric. The Fermi-edge metric only
    /// propagates the highest orbital. Numerical failures score 1.
    pub fn evaluate(&self, x: &[f64]) -> f64 {
        let value = match self.problem.metric {
            Metric::FullTg => self.report(x).map(|r| r.infidelity()),
            Metric::FermiEdge => self.fermi_edge_infidelity(x),
        };
        match value {
            Ok(v) => v,
            Err(e) => {
                log::warn!("CRAB objective failed: {e}");
                1.0
            }
        }
    }

    fn fermi_edge_infidelity(&self, x: &[f64]) -> Result<f64> {
        let drive = self.decode(x)?;
        let edge = self.problem.particles - 1;
        let finals = self.evolve(&drive, &[edge])?;
        Ok(1.0 - finals[0].fidelity(&self.targets.orbitals()[edge])?)
    }

    /// `(t, Omega, b)` on the propagation time grid.
    pub fn pulse_table(&self, x: &[f64]) -> Result<Vec<(f64, f64, f64)>> {
        let drive = self.decode(x)?;
        let duration = self.problem.duration;
        let steps = libm::ceil(duration / self.problem.dt - 1e-9).max(1.0) as usize;
        Ok((0..=steps)
            .map(|i| {
                let t = duration * i as f64 / steps as f64;
                (t, drive.omega_at(t), drive.barrier_at(t))
            })
            .collect())
    }
}

#[derive(Debug, Clone)]
pub struct CrabOutcome {
    pub result: OptimizationResult,
    /// Objective at the unmodified guess pulses.
    pub baseline: f64,
    /// Full many-body report of the optimized pulse.
    pub report: tg::FidelityReport,
    pub pulse: Vec<(f64, f64, f64)>,
}

pub fn optimize_experiment(problem: &CrabProblem, opts: &NelderMeadOptions) -> Result<CrabOutcome> {
    let objective = make_objective(problem)?;
    let x0 = objective.initial_vector();
    let opts = NelderMeadOptions {
        seed: problem.seed,
        ..*opts
    };
    let result = nelder_mead(|x| objective.evaluate(x), &x0, &opts)?;
    let baseline = result.trace.first().map_or(f64::NAN, |t| t.1);
    let report = objective.report(&result.x)?;
    let pulse = objective.pulse_table(&result.x)?;
    Ok(CrabOutcome {
        result,
        baseline,
        report,
        pulse,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pulse(guess: GuessPulse, coeffs: CrabCoefficients, duration: f64) -> CrabPulse {
        CrabPulse {
            guess,
            coeffs,
            duration,
        }
    }

    #[test]
    fn lambda_examples() {
        assert!((lambda_weight(5.0, 10.0) + 1.0).abs() < 1e-15);
        assert!((lambda_weight(2.5, 10.0) + 4.0 / 3.0).abs() < 1e-15);
        assert!(lambda_weight(1e-9, 10.0) < -1e8);
    }

    #[test]
    fn pulse_examples() {
        let t = 10.0;
        let guess = GuessPulse::Linear { start: 0.0, end: PI };
        let zero = pulse(guess, CrabCoefficients::with_frequencies(vec![1.0; 4]), t);
        for i in 0..=20 {
            let s = t * i as f64 / 20.0;
            assert!((zero.eval(s) - PI * s / t).abs() < 1e-15);
        }
        let mut c = CrabCoefficients::with_frequencies(vec![0.3, 2.0 * PI / t]);
        c.a[1] = 1.0;
        let single = pulse(GuessPulse::Constant(2.0), c, t);
        assert!((single.gamma(t / 2.0) - 1.0).abs() < 1e-14);
        assert_eq!(single.eval(0.0), 2.0);
        assert_eq!(single.eval(t), 2.0);
    }

    #[test]
    fn random_frequencies_follow_the_rule() {
        let mut rng = SeededRng::new(7, Stream::CrabFrequencies);
        let t = 10.0;
        let nu = CrabCoefficients::random_frequencies(15, t, &mut rng);
        assert_eq!(nu.len(), 16);
        let base = 2.0 * PI / t;
        assert!(nu[0] > 0.0 && nu[0] <= 0.5 * base);
        for (j, v) in nu.iter().enumerate().skip(1) {
            let r = v / (base * j as f64) - 1.0;
            assert!((-0.5..=0.5).contains(&r));
        }
        CrabCoefficients::with_frequencies(nu).validate().unwrap();
        assert!(CrabCoefficients::with_frequencies(vec![0.0]).validate().is_err());
    }

    proptest! {
        #[test]
        fn boundary_pinning(
            amps in proptest::collection::vec(-5.0f64..5.0, 8),
            nus in proptest::collection::vec(0.01f64..20.0, 4),
            g0 in -3.0f64..3.0,
            g1 in -3.0f64..3.0,
            t in 0.5f64..100.0,
        ) {
            let c = CrabCoefficients { a: amps[..4].to_vec(), b: amps[4..].to_vec(), nu: nus };
            let p = pulse(GuessPulse::Linear { start: g0, end: g1 }, c, t);
            for s in [1e-6 * t, (1.0 - 1e-6) * t] {
                let guess = p.guess.eval(s, t);
                prop_assert!((p.eval(s) - guess).abs() <= 1e-3 * guess.abs() + 1e-6);
            }
        }
    }

    fn opts(max_evals: usize, restarts: usize) -> NelderMeadOptions {
        NelderMeadOptions {
            max_evals,
            xtol: 1e-10,
            ftol: 1e-16,
            restarts,
            seed: 3,
        }
    }

    #[test]
    fn sphere_converges() {
        let sphere = |x: &[f64]| x.iter().map(|v| v * v).sum::<f64>();
        let r = nelder_mead(sphere, &[1.0, 1.0], &opts(500, 1)).unwrap();
        assert!(r.evaluations <= 500);
        let norm = libm::sqrt(sphere(&r.x));
        assert!(norm < 1e-6, "|x| = {norm}");
    }

    #[test]
    fn constant_objective_returns_start() {
        let r = nelder_mead(|_| 4.0, &[1.5, -2.0, 0.25], &NelderMeadOptions::default()).unwrap();
        assert_eq!(r.x, vec![1.5, -2.0, 0.25]);
        assert_eq!(r.value, 4.0);
        assert!(r.evaluations < 20);
    }

    #[test]
    fn one_dimensional_kink() {
        let f = |x: &[f64]| (x[0] - 3.0).abs();
        let r = nelder_mead(f, &[0.0], &opts(500, 1)).unwrap();
        // brute-force scan oracle for the minimizer
        let scan = (0..=6000)
            .map(|i| i as f64 * 1e-3)
            .min_by(|a, b| f(&[*a]).total_cmp(&f(&[*b])))
            .unwrap();
        assert!((r.x[0] - scan).abs() < 1e-6, "{} vs {scan}", r.x[0]);
    }

    #[test]
    fn trace_is_monotone_and_deterministic() {
        let rosen = |x: &[f64]| {
            let (a, b) = (x[0], x[1]);
            (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2)
        };
        let o = opts(200, 3);
        let r1 = nelder_mead(rosen, &[-1.2, 1.0], &o).unwrap();
        let r2 = nelder_mead(rosen, &[-1.2, 1.0], &o).unwrap();
        assert_eq!(r1, r2);
        assert!(r1.trace.windows(2).all(|w| w[1].1 <= w[0].1));
        assert_eq!(r1.trace.len(), r1.evaluations);
        assert!(r1.value <= rosen(&[-1.2, 1.0]));
        let r3 = nelder_mead(rosen, &[-1.2, 1.0], &NelderMeadOptions { seed: 4, ..o }).unwrap();
        assert_ne!(r1.trace, r3.trace);
    }

    #[test]
    fn nan_is_worst() {
        let f = |x: &[f64]| if x[0] > 0.5 { f64::NAN } else { (x[0] + 1.0).powi(2) };
        let r = nelder_mead(f, &[0.0], &opts(300, 1)).unwrap();
        assert!((r.x[0] + 1.0).abs() < 1e-4);
    }

    fn small_problem(metric: Metric, particles: usize, duration: f64) -> CrabProblem {
        CrabProblem {
            particles,
            duration,
            metric,
            terms: 3,
            grid_points: 128,
            dt: 1e-3,
            cutoff: 24,
            ..CrabProblem::default()
        }
    }

    #[test]
    fn objective_layout_and_baseline() {
        let p = CrabProblem {
            kind: ControlKind::Both,
            ..small_problem(Metric::FullTg, 1, 1.0)
        };
        let obj = make_objective(&p).unwrap();
        assert_eq!(obj.dim(), 24);
        let x0 = obj.initial_vector();
        let drive = obj.decode(&x0).unwrap();
        assert_eq!(drive.omega_at(0.5), PI * 0.5);
        assert_eq!(drive.barrier_at(0.3), 1.0);
        assert!(obj.decode(&x0[1..]).is_err());

        let fast = obj.evaluate(&x0);
        assert!(fast > 0.1, "sudden rotation should be far from adiabatic: {fast}");
    }

    #[test]
    fn fermi_edge_equals_full_for_one_particle() {
        let full = make_objective(&small_problem(Metric::FullTg, 1, 2.0)).unwrap();
        let edge = make_objective(&small_problem(Metric::FermiEdge, 1, 2.0)).unwrap();
        let mut x = full.initial_vector();
        x[1] = 0.2;
        assert!((full.evaluate(&x) - edge.evaluate(&x)).abs() < 1e-12);
    }

    #[test]
    fn negative_barrier_is_clamped() {
        let p = CrabProblem {
            kind: ControlKind::Barrier,
            ..small_problem(Metric::FullTg, 1, 1.0)
        };
        let obj = make_objective(&p).unwrap();
        let mut x = obj.initial_vector();
        x[4] = 50.0; // B_0: large constant correction
        let drive = obj.decode(&x).unwrap();
        let low = (1..100).map(|i| drive.barrier_at(i as f64 / 100.0)).fold(f64::INFINITY, f64::min);
        assert_eq!(low, 0.0);
        let free = make_objective(&CrabProblem { allow_negative_b: true, ..p }).unwrap();
        let drive = free.decode(&x).unwrap();
        assert!(drive.barrier_at(0.5) < 0.0);
    }

    #[test]
    fn short_optimization_improves_on_baseline() {
        let p = small_problem(Metric::FullTg, 1, 1.0);
        let out = optimize_experiment(&p, &NelderMeadOptions { max_evals: 60, restarts: 1, ..Default::default() }).unwrap();
        assert!(out.result.value <= out.baseline);
        assert!(out.result.value < out.baseline);
        assert!((out.report.infidelity() - out.result.value).abs() < 1e-12);
        assert_eq!(out.pulse.first().unwrap().1, 0.0);
        assert!((out.pulse.last().unwrap().1 - PI).abs() < 1e-12);
        assert_eq!(out.pulse.len(), 1001);
    }
}
