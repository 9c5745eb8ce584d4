use std::thread;

use tgnoon_core::crab::{
    make_objective, optimize_experiment, ControlKind, CrabProblem, NelderMeadOptions,
};
use tgnoon_core::propagator::{
    energy_expectation, propagate, DriveSchedule, FrameKind, Integrator, PropagationConfig,
};
use tgnoon_core::spectra::{sweep_spectrum, MomentumHamiltonian, SweepBase, SweepParameter};
use tgnoon_core::sta::{build_protocol, run_protocol, StaParams, TrapKind};
use tgnoon_core::tg::{self, Metric, OrbitalSet};
use tgnoon_core::{Potential, RingGrid, Wavefunction};

use crate::output::{num, Artifact, Csv};
use crate::{Experiment, ExperimentConfig, RunError};

/// Runs the configured experiment and returns its CSV artifacts; nothing
/// is written to disk here.
pub fn run_experiment(cfg: &ExperimentConfig, threads: usize) -> Result<Vec<Artifact>, RunError> {
    match cfg.kind {
        Experiment::Spectrum => spectrum(cfg),
        Experiment::Crab => crab(cfg),
        Experiment::Sta => sta(cfg, threads.max(1)),
        Experiment::TgFidelity => tg_fidelity(cfg),
        Experiment::Propagate => propagate_run(cfg),
    }
}

fn config_err(msg: impl Into<String>) -> RunError {
    RunError::Config(msg.into())
}

fn grid(cfg: &ExperimentConfig) -> Result<RingGrid, RunError> {
    Ok(RingGrid::new(cfg.usize("grid_points"))?)
}

fn potential(cfg: &ExperimentConfig) -> Potential {
    let center = if cfg.kind == Experiment::Spectrum { cfg.float("center") } else { 0.0 };
    match cfg.string("potential") {
        "none" => Potential::None,
        "barrier" => Potential::DeltaBarrier {
            height: cfg.float("b"),
            position: center,
        },
        "harmonic" => Potential::harmonic(cfg.float("trap_omega"), center),
        _ => Potential::sinusoidal(cfg.float("trap_omega"), center),
    }
}

/// Odd particle numbers from `particles` to `particles_max`.
fn particle_numbers(cfg: &ExperimentConfig) -> Vec<usize> {
    let lo = cfg.usize("particles");
    let hi = cfg.usize("particles_max").max(lo);
    (lo..=hi).step_by(2).collect()
}

fn spectrum(cfg: &ExperimentConfig) -> Result<Vec<Artifact>, RunError> {
    let parameter = match cfg.string("sweep") {
        "omega" => SweepParameter::Omega,
        "b" => SweepParameter::BarrierHeight,
        _ => SweepParameter::TrapFrequency,
    };
    let points = cfg.usize("points");
    if points == 0 {
        return Err(config_err("points must be positive"));
    }
    let (start, stop) = (cfg.float("start"), cfg.float("stop"));
    let values: Vec<f64> = (0..points)
        .map(|i| match points {
            1 => start,
            _ => start + (stop - start) * i as f64 / (points - 1) as f64,
        })
        .collect();
    let base = SweepBase {
        omega: cfg.float("omega"),
        potential: potential(cfg),
        cutoff: cfg.usize("cutoff"),
    };
    let levels = cfg.usize("levels");
    let table = sweep_spectrum(parameter, &values, &base, levels, false)?;

    let mut header = vec![parameter.column_name().to_string()];
    header.extend((0..levels).map(|j| format!("E{j}")));
    let mut csv = Csv::new(&header);
    for (v, row) in table.values.iter().zip(&table.eigenvalues) {
        let mut fields = vec![num(*v)];
        fields.extend(row.iter().map(|e| num(*e)));
        csv.row(&fields);
    }
    Ok(vec![csv.finish("spectrum.csv")])
}

pub fn crab_problem(cfg: &ExperimentConfig) -> CrabProblem {
    CrabProblem {
        kind: match cfg.string("control") {
            "omega" => ControlKind::Omega,
            "b" => ControlKind::Barrier,
            _ => ControlKind::Both,
        },
        particles: cfg.usize("particles"),
        barrier: cfg.float("b"),
        duration: cfg.float("duration"),
        omega_final: cfg.float("omega_final"),
        terms: cfg.usize("terms"),
        metric: match cfg.string("metric") {
            "fermi_edge" => Metric::FermiEdge,
            _ => Metric::FullTg,
        },
        allow_negative_b: cfg.flag("allow_negative_b"),
        grid_points: cfg.usize("grid_points"),
        dt: cfg.float("dt"),
        cutoff: cfg.usize("cutoff"),
        seed: cfg.seed(),
    }
}

fn crab(cfg: &ExperimentConfig) -> Result<Vec<Artifact>, RunError> {
    let problem = crab_problem(cfg);
    let opts = NelderMeadOptions {
        max_evals: cfg.usize("max_evals"),
        xtol: cfg.float("xtol"),
        ftol: cfg.float("ftol"),
        restarts: cfg.usize("restarts").max(1),
        seed: cfg.seed(),
    };
    let objective = make_objective(&problem)?;
    let baseline_report = objective.report(&objective.initial_vector())?;
    let out = optimize_experiment(&problem, &opts)?;

    let mut pulse = Csv::new(&["t", "omega", "b"]);
    for (t, omega, b) in &out.pulse {
        pulse.row(&[num(*t), num(*omega), num(*b)]);
    }
    let mut trace = Csv::new(&["eval", "best_infidelity"]);
    for (i, v) in &out.result.trace {
        trace.row(&[i.to_string(), num(*v)]);
    }
    let mut summary = Csv::new(&[
        "kind",
        "N",
        "T",
        "J",
        "seed",
        "final_infidelity",
        "baseline_infidelity",
        "metric",
        "evaluations",
        "final_tg_infidelity",
        "baseline_tg_infidelity",
    ]);
    summary.row(&[
        problem.kind.name().to_string(),
        problem.particles.to_string(),
        num(problem.duration),
        problem.terms.to_string(),
        problem.seed.to_string(),
        num(out.result.value),
        num(out.baseline),
        cfg.string("metric").to_string(),
        out.result.evaluations.to_string(),
        num(out.report.infidelity()),
        num(baseline_report.infidelity()),
    ]);
    Ok(vec![
        pulse.finish("pulse.csv"),
        trace.finish("trace.csv"),
        summary.finish("summary.csv"),
    ])
}

pub fn sta_params(cfg: &ExperimentConfig) -> StaParams {
    StaParams {
        omega0: cfg.float("omega0"),
        omega_f: cfg.float("omega_f"),
        distance: cfg.float("distance"),
        omega_final: cfg.float("omega_final"),
        raise: cfg.float("raise"),
        squeeze: cfg.float("squeeze"),
        transport: cfg.float("transport"),
        unsqueeze: cfg.float("unsqueeze"),
        lower: cfg.float("lower"),
        drift: cfg.float("drift"),
        trap: match cfg.string("trap") {
            "sinusoidal" => TrapKind::Sinusoidal,
            _ => TrapKind::Harmonic,
        },
        transport_omega: cfg.opt_float("transport_omega"),
    }
}

/// Maps `f` over `items` on up to `threads` scoped threads, keeping order.
fn parallel_map<T: Sync, R: Send>(
    items: &[T],
    threads: usize,
    f: impl Fn(&T) -> R + Sync,
) -> Vec<R> {
    if threads <= 1 || items.len() <= 1 {
        return items.iter().map(&f).collect();
    }
    let chunk = items.len().div_ceil(threads);
    thread::scope(|s| {
        let handles: Vec<_> = items
            .chunks(chunk)
            .map(|c| s.spawn(|| c.iter().map(&f).collect::<Vec<R>>()))
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("worker panicked"))
            .collect()
    })
}

fn sta(cfg: &ExperimentConfig, threads: usize) -> Result<Vec<Artifact>, RunError> {
    let params = sta_params(cfg);
    let schedule = build_protocol(&params)?;
    let grid = grid(cfg)?;
    let prop = PropagationConfig::with_dt(cfg.float("dt"));
    // fail fast on bad N or Omega_f before the long runs
    for n in particle_numbers(cfg) {
        tgnoon_core::sta::rotating_targets(n, params.omega_final, grid)?;
    }
    if schedule.min_omega2() < 0.0 {
        log::warn!("squeeze inverts the trap: min omega^2 = {:e}", schedule.min_omega2());
    }

    let samples = cfg.usize("schedule_samples").max(1);
    let mut sched = Csv::new(&["t", "omega2", "Omega", "x0"]);
    for (t, w2, v, x0) in schedule.trace(samples) {
        sched.row(&[num(t), num(w2), num(v), num(x0)]);
    }

    let ns = particle_numbers(cfg);
    let runs = parallel_map(&ns, threads, |&n| run_protocol(n, &schedule, grid, &prop));
    let mut fid = Csv::new(&[
        "N",
        "trap_kind",
        "omega_f",
        "F",
        "s_star",
        "infidelity",
        "F_unshifted",
        "min_omega2",
    ]);
    for (n, run) in ns.iter().zip(runs) {
        let run = run?;
        fid.row(&[
            n.to_string(),
            params.trap.name().to_string(),
            num(params.omega_f),
            num(run.report.fidelity),
            run.report.shift.map(num).unwrap_or_default(),
            num(run.report.infidelity()),
            num(run.unshifted.fidelity),
            num(run.min_omega2),
        ]);
    }
    Ok(vec![sched.finish("schedule.csv"), fid.finish("fidelity.csv")])
}

fn orbital_set(cfg: &ExperimentConfig, which: &str, n: usize, grid: RingGrid) -> Result<OrbitalSet, RunError> {
    let b = cfg.float("b");
    let cutoff = cfg.usize("cutoff");
    Ok(match which {
        "sta_initial" => tg::sta_initial_orbitals(n, grid)?,
        "sta_target" => tg::sta_target_orbitals(n, grid)?,
        "crab_initial" => tg::crab_orbitals(n, b, 0.0, grid, cutoff)?,
        _ => tg::crab_targets(n, b, cfg.float("omega_final"), grid, cutoff)?,
    })
}

fn tg_fidelity(cfg: &ExperimentConfig) -> Result<Vec<Artifact>, RunError> {
    let grid = grid(cfg)?;
    let mut csv = Csv::new(&["N", "F", "fermi_edge_F", "s_star"]);
    for n in particle_numbers(cfg) {
        let left = orbital_set(cfg, cfg.string("left"), n, grid)?;
        let right = orbital_set(cfg, cfg.string("right"), n, grid)?;
        let report = if cfg.flag("shift") {
            tg::shift_maximized_fidelity(&left, &right)?
        } else {
            tg::tg_fidelity(&left, &right)?
        };
        csv.row(&[
            n.to_string(),
            num(report.fidelity),
            num(report.fermi_edge),
            report.shift.map(num).unwrap_or_default(),
        ]);
    }
    Ok(vec![csv.finish("fidelity.csv")])
}

fn propagate_run(cfg: &ExperimentConfig) -> Result<Vec<Artifact>, RunError> {
    let grid = grid(cfg)?;
    let pot = potential(cfg);
    let cutoff = cfg.usize("cutoff");
    let (w0, w1, duration) = (cfg.float("omega_start"), cfg.float("omega_end"), cfg.float("duration"));
    let integrator = match cfg.string("integrator") {
        "window" => {
            if !matches!(pot, Potential::None | Potential::DeltaBarrier { .. }) {
                return Err(config_err("the window integrator handles only barrier drives"));
            }
            Integrator::MomentumWindow { cutoff }
        }
        _ => Integrator::SplitStep,
    };
    let initial = match cfg.string("initial") {
        "plane_wave" => {
            let k = cfg.float("k");
            if k.fract() != 0.0 {
                return Err(config_err("k must be an integer"));
            }
            Wavefunction::plane_wave(k as i64, grid)?
        }
        _ => {
            let level = cfg.usize("level");
            let h = MomentumHamiltonian::new(w0, pot, cutoff)?;
            h.eigensystem(level + 1, grid)?.1.swap_remove(level)
        }
    };
    let drive = DriveSchedule::new(
        duration,
        FrameKind::Comoving,
        move |t| w0 + (w1 - w0) * t / duration,
        move |_| pot,
    );
    let prop = PropagationConfig {
        dt: cfg.float("dt"),
        record_stride: cfg.usize("record_stride"),
        integrator,
        ..PropagationConfig::default()
    };
    let out = propagate(&initial, &drive, &prop)?;

    let mut snaps = Csv::new(&["t", "x", "re_psi", "im_psi"]);
    let mut summary = Csv::new(&["t", "norm", "energy", "fidelity_initial"]);
    let mut frames: Vec<(f64, &Wavefunction)> =
        out.snapshots.iter().map(|s| (s.time, &s.states[0])).collect();
    if frames.is_empty() {
        frames.push((duration, &out.states[0]));
    }
    for (t, psi) in frames {
        for (x, a) in grid.positions().zip(psi.amplitudes()) {
            snaps.row(&[num(t), num(x), num(a.re), num(a.im)]);
        }
        let omega = w0 + (w1 - w0) * t / duration;
        summary.row(&[
            num(t),
            num(psi.norm()),
            num(energy_expectation(psi, omega, &pot)),
            num(psi.fidelity(&initial)?),
        ]);
    }
    Ok(vec![snaps.finish("snapshots.csv"), summary.finish("summary.csv")])
}
