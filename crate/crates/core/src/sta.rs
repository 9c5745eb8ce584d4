//! Invariant-based shortcuts: Ermakov squeezes, harmonic transport, and the
//! five-step protocol that spins a trapped gas up to `Omega_f` and releases
//! it onto the ring.
//!
//! Segment order: raise the trap (free ring to `omega0`), squeeze to
//! `omega_f`, transport at `omega_f` over a distance `d` ending at velocity
//! `Omega_f`, unsqueeze back to `omega0` while co-moving, lower the trap to
//! zero, then drift freely.

use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::propagator::{propagate_many, DriveSchedule, PropagationConfig};
use crate::ring::{Potential, RingGrid, Wavefunction};
use crate::spectra::MomentumHamiltonian;
use crate::tg::{self, FidelityReport, OrbitalSet};
use crate::{Error, Result};

/// `10 s^3 - 15 s^4 + 6 s^5` and its first three derivatives.
fn smootherstep(s: f64) -> [f64; 4] {
    let s2 = s * s;
    [
        s2 * s * (10.0 - 15.0 * s + 6.0 * s2),
        30.0 * s2 * (1.0 - 2.0 * s + s2),
        60.0 * s - 180.0 * s2 + 120.0 * s2 * s,
        60.0 - 360.0 * s + 360.0 * s2,
    ]
}

/// `-3 s^5 + 7 s^4 - 4 s^3`: zero value, unit slope and zero curvature at 1.
fn velocity_profile(s: f64) -> [f64; 4] {
    let s2 = s * s;
    [
        s2 * s * (-4.0 + 7.0 * s - 3.0 * s2),
        -12.0 * s2 + 28.0 * s2 * s - 15.0 * s2 * s2,
        -24.0 * s + 84.0 * s2 - 60.0 * s2 * s,
        -24.0 + 168.0 * s - 180.0 * s2,
    ]
}

/// Smoothstep `s^2 (3 - 2 s)` used for the adiabatic ramps.
pub fn smoothstep(s: f64) -> f64 {
    let s = s.clamp(0.0, 1.0);
    s * s * (3.0 - 2.0 * s)
}

pub fn rho_polynomial(s: f64, gamma: f64) -> f64 {
    1.0 + (gamma - 1.0) * smootherstep(s)[0]
}

/// `omega^2 = omega0^2 / rho^4 - rho'' / rho` from `(rho, rho'')` at `time`.
pub fn omega2_from_ermakov(rho: f64, rho_ddot: f64, omega0: f64, time: f64) -> Result<f64> {
    if !(rho > 0.0) {
        return Err(Error::UnphysicalScaling { time, rho });
    }
    Ok(omega0 * omega0 / (rho * rho * rho * rho) - rho_ddot / rho)
}

/// Ermakov-engineered frequency ramp from `omega_start` to `omega_end`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SqueezeSchedule {
    pub omega_start: f64,
    pub omega_end: f64,
    pub duration: f64,
}

impl SqueezeSchedule {
    pub fn new(omega_start: f64, omega_end: f64, duration: f64) -> Result<Self> {
        if !(omega_start > 0.0 && omega_end > 0.0 && duration > 0.0) {
            return Err(Error::invalid("squeeze needs positive frequencies and duration"));
        }
        Ok(Self {
            omega_start,
            omega_end,
            duration,
        })
    }

    /// `sqrt(omega_start / omega_end)`.
    pub fn gamma(&self) -> f64 {
        libm::sqrt(self.omega_start / self.omega_end)
    }

    /// `(rho, rho_dot, rho_ddot)` in real time.
    pub fn rho(&self, t: f64) -> [f64; 3] {
        let s = (t / self.duration).clamp(0.0, 1.0);
        let p = smootherstep(s);
        let g = self.gamma() - 1.0;
        [
            1.0 + g * p[0],
            g * p[1] / self.duration,
            g * p[2] / (self.duration * self.duration),
        ]
    }

    pub fn omega2(&self, t: f64) -> f64 {
        let [rho, _, rho_ddot] = self.rho(t);
        // rho stays between 1 and gamma > 0
        omega2_from_ermakov(rho, rho_ddot, self.omega_start, t).unwrap_or(f64::NAN)
    }

    /// Smallest `omega^2` on a dense sample; negative means the trap inverts.
    pub fn min_omega2(&self) -> f64 {
        (0..=4000)
            .map(|i| self.omega2(self.duration * i as f64 / 4000.0))
            .fold(f64::INFINITY, f64::min)
    }
}

/// Invariant-based transport of a harmonic trap of frequency `omega` from
/// `x_start` to `distance`, arriving with velocity `omega_final`.
///
/// The classical trajectory is
/// `q_c(s) = (6d - 3W) s^5 - (15d - 7W) s^4 + (10d - 4W) s^3 + x_start` with
/// `d = distance - x_start` and `W = omega_final * duration`, and the trap
/// center follows `x0 = q_c + q_c'' / omega^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransportSchedule {
    pub omega: f64,
    pub duration: f64,
    pub x_start: f64,
    pub distance: f64,
    pub omega_final: f64,
}

impl TransportSchedule {
    pub fn new(omega: f64, duration: f64, x_start: f64, distance: f64, omega_final: f64) -> Result<Self> {
        if !(omega > 0.0 && duration > 0.0) {
            return Err(Error::invalid("transport needs positive frequency and duration"));
        }
        if ![x_start, distance, omega_final].iter().all(|v| v.is_finite()) {
            return Err(Error::invalid("transport parameters must be finite"));
        }
        Ok(Self {
            omega,
            duration,
            x_start,
            distance,
            omega_final,
        })
    }

    /// `q_c` and its first three real-time derivatives.
    pub fn qc(&self, t: f64) -> [f64; 4] {
        let tau = self.duration;
        let s = (t / tau).clamp(0.0, 1.0);
        let p = smootherstep(s);
        let v = velocity_profile(s);
        let d = self.distance - self.x_start;
        let w = self.omega_final * tau;
        let mut out = [0.0; 4];
        let mut scale = 1.0;
        for i in 0..4 {
            out[i] = (d * p[i] + w * v[i]) * scale;
            scale /= tau;
        }
        out[0] += self.x_start;
        out
    }

    /// Trap center `x0 = q_c + q_c'' / omega^2`.
    pub fn center(&self, t: f64) -> f64 {
        trap_center_from_qc(&self.qc(t), self.omega)
    }

    /// `dx0/dt = q_c' + q_c''' / omega^2`.
    pub fn center_velocity(&self, t: f64) -> f64 {
        let q = self.qc(t);
        q[1] + q[3] / (self.omega * self.omega)
    }
}

pub fn qc_polynomial(s: f64, distance: f64, omega_final: f64, duration: f64, x_start: f64) -> f64 {
    let d = distance - x_start;
    let w = omega_final * duration;
    (6.0 * d - 3.0 * w) * libm::pow(s, 5.0) - (15.0 * d - 7.0 * w) * libm::pow(s, 4.0)
        + (10.0 * d - 4.0 * w) * s * s * s
        + x_start
}

/// `x0 = q_c + q_c'' / omega^2` from `[q_c, q_c', q_c'', ..]`.
pub fn trap_center_from_qc(qc: &[f64], omega: f64) -> f64 {
    qc[0] + qc[2] / (omega * omega)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TrapKind {
    /// Wrapped parabola `omega^2 (x - x0)^2 / 2`.
    #[default]
    Harmonic,
    /// `omega^2 / (4 pi^2) (1 - cos 2 pi (x - x0))`.
    Sinusoidal,
}

impl TrapKind {
    pub fn name(&self) -> &'static str {
        match self {
            TrapKind::Harmonic => "harmonic",
            TrapKind::Sinusoidal => "sinusoidal",
        }
    }

    pub fn potential(&self, omega2: f64, center: f64) -> Potential {
        if omega2 == 0.0 {
            return Potential::None;
        }
        match self {
            TrapKind::Harmonic => Potential::Harmonic { omega2, center },
            TrapKind::Sinusoidal => Potential::Sinusoidal { omega2, center },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StaParams {
    pub omega0: f64,
    pub omega_f: f64,
    /// Transport distance; may exceed 1 (several windings).
    pub distance: f64,
    pub omega_final: f64,
    pub raise: f64,
    pub squeeze: f64,
    pub transport: f64,
    pub unsqueeze: f64,
    pub lower: f64,
    /// Free evolution after the trap is gone.
    pub drift: f64,
    pub trap: TrapKind,
    /// Frequency entering the transport shortcut; the trap itself stays at
    /// `omega_f`. Defaults to `omega_f`, for which the shortcut is exact.
    pub transport_omega: Option<f64>,
}

impl Default for StaParams {
    fn default() -> Self {
        Self {
            omega0: 2.0,
            omega_f: 100.0,
            distance: 100.0,
            omega_final: 10.0 * PI,
            raise: 10.0,
            squeeze: 10.0,
            transport: 10.0,
            unsqueeze: 10.0,
            lower: 10.0,
            drift: 0.0,
            trap: TrapKind::Harmonic,
            transport_omega: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SegmentKind {
    Raise,
    Squeeze(SqueezeSchedule),
    Transport(TransportSchedule),
    Unsqueeze(SqueezeSchedule),
    Lower,
    Drift,
}

impl SegmentKind {
    pub fn name(&self) -> &'static str {
        match self {
            SegmentKind::Raise => "raise",
            SegmentKind::Squeeze(_) => "squeeze",
            SegmentKind::Transport(_) => "transport",
            SegmentKind::Unsqueeze(_) => "unsqueeze",
            SegmentKind::Lower => "lower",
            SegmentKind::Drift => "drift",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub kind: SegmentKind,
    pub start: f64,
    pub duration: f64,
}

/// Trap parameters at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrapState {
    pub omega2: f64,
    /// Unwrapped center; reduced onto the ring only inside the potential.
    pub center: f64,
    pub velocity: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StaSchedule {
    pub params: StaParams,
    pub segments: Vec<Segment>,
}

pub fn build_protocol(params: &StaParams) -> Result<StaSchedule> {
    let p = *params;
    let durations = [p.raise, p.squeeze, p.transport, p.unsqueeze, p.lower];
    if durations.iter().any(|d| !(*d > 0.0) || !d.is_finite()) || !(p.drift >= 0.0) {
        return Err(Error::invalid("segment durations must be positive"));
    }
    if !(p.omega0 > 0.0 && p.omega_f > 0.0) {
        return Err(Error::invalid("trap frequencies must be positive"));
    }
    let transport_omega = p.transport_omega.unwrap_or(p.omega_f);
    let kinds = [
        SegmentKind::Raise,
        SegmentKind::Squeeze(SqueezeSchedule::new(p.omega0, p.omega_f, p.squeeze)?),
        SegmentKind::Transport(TransportSchedule::new(
            transport_omega,
            p.transport,
            0.0,
            p.distance,
            p.omega_final,
        )?),
        SegmentKind::Unsqueeze(SqueezeSchedule::new(p.omega_f, p.omega0, p.unsqueeze)?),
        SegmentKind::Lower,
    ];
    let mut segments = Vec::with_capacity(6);
    let mut start = 0.0;
    for (kind, duration) in kinds.into_iter().zip(durations) {
        segments.push(Segment { kind, start, duration });
        start += duration;
    }
    if p.drift > 0.0 {
        segments.push(Segment {
            kind: SegmentKind::Drift,
            start,
            duration: p.drift,
        });
    }
    Ok(StaSchedule {
        params: p,
        segments,
    })
}

impl StaSchedule {
    pub fn duration(&self) -> f64 {
        self.segments.last().map_or(0.0, |s| s.start + s.duration)
    }

    pub fn segment_at(&self, t: f64) -> &Segment {
        self.segments
            .iter()
            .find(|s| t < s.start + s.duration)
            .unwrap_or_else(|| self.segments.last().expect("schedule has segments"))
    }

    /// Time at which the transport ends and the co-moving phase starts.
    fn release_time(&self) -> f64 {
        self.segments
            .iter()
            .find(|s| matches!(s.kind, SegmentKind::Unsqueeze(_)))
            .map_or(0.0, |s| s.start)
    }

    pub fn trap_at(&self, t: f64) -> TrapState {
        let p = &self.params;
        let seg = self.segment_at(t);
        let local = (t - seg.start).clamp(0.0, seg.duration);
        let s = local / seg.duration;
        let cruising = |omega2: f64| TrapState {
            omega2,
            center: p.distance + p.omega_final * (t - self.release_time()),
            velocity: p.omega_final,
        };
        match seg.kind {
            SegmentKind::Raise => {
                let w = p.omega0 * smoothstep(s);
                TrapState {
                    omega2: w * w,
                    center: 0.0,
                    velocity: 0.0,
                }
            }
            SegmentKind::Squeeze(sq) => TrapState {
                omega2: sq.omega2(local),
                center: 0.0,
                velocity: 0.0,
            },
            SegmentKind::Transport(tr) => TrapState {
                omega2: p.omega_f * p.omega_f,
                center: tr.center(local),
                velocity: tr.center_velocity(local),
            },
            SegmentKind::Unsqueeze(sq) => cruising(sq.omega2(local)),
            SegmentKind::Lower => {
                let w = p.omega0 * (1.0 - smoothstep(s));
                cruising(w * w)
            }
            SegmentKind::Drift => cruising(0.0),
        }
    }

    pub fn potential_at(&self, t: f64) -> Potential {
        let trap = self.trap_at(t);
        self.params.trap.potential(trap.omega2, trap.center)
    }

    /// `(t, omega^2, Omega, x0)` at `samples + 1` evenly spaced times.
    pub fn trace(&self, samples: usize) -> Vec<(f64, f64, f64, f64)> {
        let total = self.duration();
        (0..=samples)
            .map(|i| {
                let t = total * i as f64 / samples.max(1) as f64;
                let trap = self.trap_at(t);
                (t, trap.omega2, trap.velocity, trap.center)
            })
            .collect()
    }

    /// Smallest `omega^2` over the squeeze segments.
    pub fn min_omega2(&self) -> f64 {
        self.segments
            .iter()
            .filter_map(|s| match s.kind {
                SegmentKind::Squeeze(sq) | SegmentKind::Unsqueeze(sq) => Some(sq.min_omega2()),
                _ => None,
            })
            .fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone)]
pub struct StaOutcome {
    /// Shift-maximized fidelity against the rotating target.
    pub report: FidelityReport,
    /// Fidelity against the target as placed, without translation.
    pub unshifted: FidelityReport,
    pub min_omega2: f64,
    pub final_states: OrbitalSet,
}

impl StaOutcome {
    pub fn inverted_trap(&self) -> bool {
        self.min_omega2 < 0.0
    }
}

/// Ideal end state: the ring ground state boosted to `Omega_f` when that
/// is an even multiple of pi, the NOON-type superposition orbitals when odd.
pub fn rotating_targets(n: usize, omega_final: f64, grid: RingGrid) -> Result<OrbitalSet> {
    let m = omega_final / PI;
    let rounded = libm::round(m);
    if (m - rounded).abs() > 1e-9 {
        return Err(Error::invalid("Omega_f must be a multiple of pi"));
    }
    let winding = rounded as i64;
    if winding % 2 == 0 {
        Ok(tg::sta_initial_orbitals(n, grid)?.boosted(omega_final))
    } else {
        Ok(tg::sta_target_orbitals(n, grid)?.boosted(omega_final - PI))
    }
}

pub fn run_protocol(
    n: usize,
    schedule: &StaSchedule,
    grid: RingGrid,
    cfg: &PropagationConfig,
) -> Result<StaOutcome> {
    let initial = tg::sta_initial_orbitals(n, grid)?;
    let targets = rotating_targets(n, schedule.params.omega_final, grid)?;
    let drive = DriveSchedule::lab(schedule.duration(), |t| schedule.potential_at(t));
    let out = propagate_many(initial.orbitals(), &drive, cfg)?;
    let final_states = OrbitalSet::new_unchecked(out.states)?;
    let report = tg::shift_maximized_fidelity(&targets, &final_states)?;
    let unshifted = tg::tg_fidelity(&targets, &final_states)?;
    Ok(StaOutcome {
        report,
        unshifted,
        min_omega2: schedule.min_omega2(),
        final_states,
    })
}

/// Lowest `n` trap eigenstates at frequency `omega` centered at `center`.
pub fn trap_eigenstates(
    n: usize,
    trap: TrapKind,
    omega: f64,
    center: f64,
    grid: RingGrid,
    cutoff: usize,
) -> Result<OrbitalSet> {
    let h = MomentumHamiltonian::with_window(0.0, trap.potential(omega * omega, center), cutoff, 0)?;
    let (_, orbitals) = h.eigensystem(n, grid)?;
    OrbitalSet::new(orbitals)
}

/// Infidelity of the squeeze segment alone: the `n` lowest trap states at
/// `omega_start` evolved under the Ermakov ramp, compared with the `n`
/// lowest states at `omega_end`.
pub fn squeeze_infidelity(
    n: usize,
    trap: TrapKind,
    schedule: &SqueezeSchedule,
    grid: RingGrid,
    cfg: &PropagationConfig,
) -> Result<f64> {
    let cutoff = grid.len() / 2 - 1;
    let start = trap_eigenstates(n, trap, schedule.omega_start, 0.0, grid, cutoff.min(96))?;
    let end = trap_eigenstates(n, trap, schedule.omega_end, 0.0, grid, cutoff.min(96))?;
    let drive = DriveSchedule::lab(schedule.duration, |t| trap.potential(schedule.omega2(t), 0.0));
    let out = propagate_many(start.orbitals(), &drive, cfg)?;
    let finals = OrbitalSet::new_unchecked(out.states)?;
    Ok(tg::tg_fidelity(&end, &finals)?.infidelity())
}

/// Evolves `initial` under a transport schedule with the trap held at
/// `trap_omega`.
pub fn run_transport(
    initial: &[Wavefunction],
    trap: TrapKind,
    trap_omega: f64,
    schedule: &TransportSchedule,
    cfg: &PropagationConfig,
) -> Result<Vec<Wavefunction>> {
    let w2 = trap_omega * trap_omega;
    let drive = DriveSchedule::lab(schedule.duration, |t| trap.potential(w2, schedule.center(t)));
    Ok(propagate_many(initial, &drive, cfg)?.states)
}
