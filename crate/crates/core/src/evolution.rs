//! Strang-splitting time integration with conservation and blow-up monitors.
//!
//! One step of size dt is the composition
//!
//! ```text
//! half linear  (Crank–Nicolson for i∂t u = −Δu and i∂t v = −κΔv)
//! full nonlinear (pointwise ODE  du/dt = 2i v ū, dv/dt = i u²)
//! half linear
//! ```
//!
//! The linear half-steps are Cayley transforms of the symmetric discrete
//! Laplacian and therefore preserve ‖u‖ and ‖v‖ to round-off; on cylindrical
//! grids the two directions commute exactly, so the sweeps factor into
//! independent tridiagonal solves. The nonlinear substep conserves the mass
//! density |u|² + 2|v|² pointwise and is integrated by the classical
//! four-stage explicit rule with at most four substeps.
//!
//! The step size adapts to the kinetic energy (dt ≤ c_adapt / T), which is
//! the natural clock of the focusing mechanism: gradient norm concentration
//! shrinks dt before the solution outruns the grid.

use crate::error::{Error, Result};
use crate::functionals::{evaluate_functionals, FunctionalReport, SystemState};
use crate::grid::Grid;
use crate::virial::{VirialMonitor, VirialReport};
use crate::C64;
use rayon::prelude::*;
use serde::Serialize;

const PAR_THRESHOLD: usize = 1 << 15;

/// Integrator parameters.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct IntegratorConfig {
    /// Initial (and maximal) step.
    pub dt0: f64,
    /// Abort threshold for the adapted step.
    pub dt_min: f64,
    /// Time horizon.
    pub t_end: f64,
    /// Kinetic-energy clock: dt = min(dt0, c_adapt / T). `None` disables
    /// adaptation (fixed dt0; used by convergence-order studies).
    pub c_adapt: Option<f64>,
    /// Steps between monitor samples.
    pub monitor_stride: usize,
    /// Kinetic growth factor declaring blow-up.
    pub blowup_factor: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            dt0: 1e-3,
            dt_min: 1e-12,
            t_end: 1.0,
            c_adapt: Some(0.1),
            monitor_stride: 20,
            blowup_factor: 1e4,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt_min < self.dt0) {
            return Err(Error::InvalidParameter(
                "dt_min must lie below dt0".into(),
            ));
        }
        if !(self.t_end > 0.0) {
            return Err(Error::InvalidParameter("t_end must be positive".into()));
        }
        if self.monitor_stride == 0 {
            return Err(Error::InvalidParameter(
                "monitor_stride must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Why a trajectory stopped.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Termination {
    ReachedHorizon,
    BlowupDetected,
    DtUnderflow,
    BoundaryContamination,
}

/// One monitor sample along a trajectory.
#[derive(Clone, Debug, Serialize)]
pub struct Sample {
    pub t: f64,
    pub functionals: FunctionalReport,
    pub virials: Vec<VirialReport>,
    pub shell_fraction: f64,
    pub mass_drift: f64,
    pub energy_drift: f64,
}

/// Full monitored trajectory.
#[derive(Clone, Debug, Serialize)]
pub struct TrajectoryRecord {
    pub samples: Vec<Sample>,
    pub termination: Termination,
    pub steps: usize,
}

impl TrajectoryRecord {
    pub fn last(&self) -> &Sample {
        self.samples.last().expect("records hold at least one sample")
    }
}

/// One Strang step in place.
pub fn step(state: &mut SystemState, dt: f64) -> Result<()> {
    if !(dt > 0.0) {
        return Err(Error::InvalidParameter(format!("step needs dt > 0, got {dt}")));
    }
    linear_half_step(state, dt)?;
    nonlinear_full_step(state, dt);
    linear_half_step(state, dt)?;
    state.t += dt;
    Ok(())
}

/// Crank–Nicolson over dt/2 for both components.
pub(crate) fn linear_half_step(state: &mut SystemState, dt: f64) -> Result<()> {
    let alpha_u = C64::new(0.0, 0.25 * dt);
    let alpha_v = C64::new(0.0, 0.25 * dt * state.kappa);
    match state.grid.as_ref() {
        Grid::Radial(g) => {
            g.cayley_step(&mut state.u, alpha_u)?;
            g.cayley_step(&mut state.v, alpha_v)?;
        }
        Grid::Cylindrical(g) => {
            g.cayley_step_rho(&mut state.u, alpha_u)?;
            g.cayley_step_z(&mut state.u, alpha_u)?;
            g.cayley_step_rho(&mut state.v, alpha_v)?;
            g.cayley_step_z(&mut state.v, alpha_v)?;
        }
    }
    Ok(())
}

/// Pointwise nonlinear flow over dt: du/dt = 2i v ū, dv/dt = i u².
/// Conserves |u|² + 2|v|² exactly along the continuous substep flow.
pub(crate) fn nonlinear_full_step(state: &mut SystemState, dt: f64) {
    let mut amp2_u: f64 = 0.0;
    let mut amp2_v: f64 = 0.0;
    for z in &state.u {
        amp2_u = amp2_u.max(z.norm_sqr());
    }
    for z in &state.v {
        amp2_v = amp2_v.max(z.norm_sqr());
    }
    let a_max = amp2_u.sqrt() + 2.0 * amp2_v.sqrt();
    let nsub = ((dt * a_max / 0.25).ceil() as usize).clamp(1, 4);
    let h = dt / nsub as f64;

    let kernel = |u: &mut [C64], v: &mut [C64]| {
        let i_unit = C64::new(0.0, 1.0);
        for (uu, vv) in u.iter_mut().zip(v.iter_mut()) {
            let mut a = *uu;
            let mut b = *vv;
            for _ in 0..nsub {
                let f = |a: C64, b: C64| -> (C64, C64) {
                    (2.0 * i_unit * b * a.conj(), i_unit * a * a)
                };
                let (k1a, k1b) = f(a, b);
                let (k2a, k2b) = f(a + 0.5 * h * k1a, b + 0.5 * h * k1b);
                let (k3a, k3b) = f(a + 0.5 * h * k2a, b + 0.5 * h * k2b);
                let (k4a, k4b) = f(a + h * k3a, b + h * k3b);
                a += h / 6.0 * (k1a + 2.0 * k2a + 2.0 * k3a + k4a);
                b += h / 6.0 * (k1b + 2.0 * k2b + 2.0 * k3b + k4b);
            }
            *uu = a;
            *vv = b;
        }
    };

    if state.u.len() >= PAR_THRESHOLD {
        const BLOCK: usize = 4096;
        state
            .u
            .par_chunks_mut(BLOCK)
            .zip(state.v.par_chunks_mut(BLOCK))
            .for_each(|(cu, cv)| kernel(cu, cv));
    } else {
        kernel(&mut state.u, &mut state.v);
    }
}

fn kinetic_of(state: &SystemState) -> Result<f64> {
    let grid = state.grid.as_ref();
    Ok(grid.dirichlet_form_c(&state.u)? + state.kappa * grid.dirichlet_form_c(&state.v)?)
}

/// Integrates from `state0`, recording monitors every `monitor_stride` steps
/// (plus the initial and final states).
pub fn evolve(
    state0: &SystemState,
    config: &IntegratorConfig,
    monitors: &[VirialMonitor],
) -> Result<TrajectoryRecord> {
    config.validate()?;
    let mut state = state0.clone();
    state.t = 0.0;
    let t0_kinetic = kinetic_of(&state)?;
    let rep0 = evaluate_functionals(&state)?;

    let mut samples = Vec::new();
    let take_sample = |state: &SystemState, samples: &mut Vec<Sample>| -> Result<f64> {
        let functionals = evaluate_functionals(state)?;
        let virials: Vec<VirialReport> = monitors
            .iter()
            .map(|m| m.evaluate(state))
            .collect::<Result<_>>()?;
        let shell = state.grid.outer_shell_fraction(&state.u, &state.v)?;
        let mass_drift = if rep0.mass > 0.0 {
            (functionals.mass - rep0.mass).abs() / rep0.mass
        } else {
            0.0
        };
        let energy_drift =
            (functionals.energy - rep0.energy).abs() / rep0.energy.abs().max(1.0);
        samples.push(Sample {
            t: state.t,
            functionals,
            virials,
            shell_fraction: shell,
            mass_drift,
            energy_drift,
        });
        Ok(shell)
    };

    take_sample(&state, &mut samples)?;

    let mut termination = Termination::ReachedHorizon;
    let mut steps = 0usize;
    'main: while state.t < config.t_end - 1e-15 {
        let kin = kinetic_of(&state)?;
        if t0_kinetic > 0.0 && kin >= config.blowup_factor * t0_kinetic {
            termination = Termination::BlowupDetected;
            break 'main;
        }
        let mut dt = config.dt0;
        if let Some(c) = config.c_adapt {
            if kin > 0.0 {
                dt = dt.min(c / kin);
            }
        }
        if dt < config.dt_min {
            termination = Termination::DtUnderflow;
            break 'main;
        }
        dt = dt.min(config.t_end - state.t);
        step(&mut state, dt)?;
        steps += 1;
        if steps % config.monitor_stride == 0 {
            let shell = take_sample(&state, &mut samples)?;
            if shell > 1e-6 {
                termination = Termination::BoundaryContamination;
                break 'main;
            }
        }
    }
    // Final sample if the loop ended off-stride.
    if samples.last().map(|s| s.t) != Some(state.t) {
        take_sample(&state, &mut samples)?;
    }
    Ok(TrajectoryRecord {
        samples,
        termination,
        steps,
    })
}

/// Result of the affine-majorant check for negative-energy radial runs.
#[derive(Clone, Debug, Serialize)]
pub struct MonotoneCheck {
    /// False when the precondition (E₀ < 0, virial monitor present) fails.
    pub applicable: bool,
    pub holds: bool,
    /// (t, excess) pairs where M_φR(t) exceeded the majorant.
    pub violations: Vec<(f64, f64)>,
}

/// Verifies M_φR(t) ≤ M_φR(0) + 8 E₀ t within tolerance 1e-3·|E₀|·t at every
/// sample, using the first virial monitor of the record.
pub fn monotone_bound_check(record: &TrajectoryRecord, e0: f64) -> MonotoneCheck {
    if !(e0 < 0.0) || record.samples.iter().any(|s| s.virials.is_empty()) {
        return MonotoneCheck {
            applicable: false,
            holds: true,
            violations: Vec::new(),
        };
    }
    let m0 = record.samples[0].virials[0].m_phi;
    let mut violations = Vec::new();
    for s in &record.samples {
        let majorant = m0 + 8.0 * e0 * s.t;
        let tol = 1e-3 * e0.abs() * s.t;
        let m = s.virials[0].m_phi;
        if m > majorant + tol {
            violations.push((s.t, m - majorant));
        }
    }
    MonotoneCheck {
        applicable: true,
        holds: violations.is_empty(),
        violations,
    }
}

/// Least-squares fit of T(t) ≈ c t^p over the trailing two decades.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct GrowupFit {
    pub c_fit: f64,
    pub exponent_fit: f64,
}

pub fn growup_rate_fit(record: &TrajectoryRecord) -> Result<GrowupFit> {
    let pts: Vec<(f64, f64)> = record
        .samples
        .iter()
        .filter(|s| s.t > 0.0 && s.functionals.kinetic > 0.0)
        .map(|s| (s.t, s.functionals.kinetic))
        .collect();
    if pts.len() < 8 {
        return Err(Error::InsufficientSamples(format!(
            "{} usable samples",
            pts.len()
        )));
    }
    let t_last = pts.last().unwrap().0;
    let t_first = pts.first().unwrap().0;
    if t_last / t_first < 100.0 {
        return Err(Error::InsufficientSamples(format!(
            "record spans {:.2} decades, need at least 2",
            (t_last / t_first).log10()
        )));
    }
    let window: Vec<(f64, f64)> = pts
        .iter()
        .filter(|(t, _)| *t >= t_last / 100.0)
        .map(|&(t, k)| (t.ln(), k.ln()))
        .collect();
    let n = window.len() as f64;
    let sx: f64 = window.iter().map(|p| p.0).sum();
    let sy: f64 = window.iter().map(|p| p.1).sum();
    let sxx: f64 = window.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = window.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    if denom.abs() < 1e-300 {
        return Err(Error::InsufficientSamples("degenerate fit window".into()));
    }
    let slope = (n * sxy - sx * sy) / denom;
    let intercept = (sy - slope * sx) / n;
    Ok(GrowupFit {
        c_fit: intercept.exp(),
        exponent_fit: slope,
    })
}

/// Output of the first-order ODE blow-up diagnostic.
#[derive(Clone, Debug, Serialize)]
pub struct OdeDiagnostic {
    /// A = 4ε / C², with C the measured Cauchy–Schwarz constant of |M_φR|.
    pub a_const: f64,
    /// First sample time with M_φR < 0.
    pub t0: f64,
    /// (t, z(t)) with z(t) = ∫_{t0}^t |M_φR|² ds by the trapezoid rule.
    pub z_series: Vec<(f64, f64)>,
    /// Projected singular time t* = t₁ + 1/(A² z(t₁)).
    pub projected_t_star: f64,
    /// The uniform bound constant c carried through for reference.
    pub c_bound: f64,
}

/// Projects the singular time from a sampled M_φR series starting at t₀:
/// z by trapezoid, t* = t_last + 1/(a² z(t_last)).
pub fn project_singular_time(times: &[f64], m_series: &[f64], a: f64) -> Result<(Vec<(f64, f64)>, f64)> {
    if times.len() != m_series.len() || times.len() < 2 {
        return Err(Error::InsufficientSamples(
            "need at least two samples past t0".into(),
        ));
    }
    let mut z_series = Vec::with_capacity(times.len());
    let mut z = 0.0;
    z_series.push((times[0], 0.0));
    for i in 1..times.len() {
        let dt = times[i] - times[i - 1];
        if !(dt > 0.0) {
            return Err(Error::MonitorInconsistent(
                "sample times are not strictly increasing".into(),
            ));
        }
        z += 0.5 * dt * (m_series[i - 1] * m_series[i - 1] + m_series[i] * m_series[i]);
        z_series.push((times[i], z));
    }
    if !(z > 0.0) {
        return Err(Error::MonitorInconsistent("z(t) failed to increase".into()));
    }
    let t_star = times[times.len() - 1] + 1.0 / (a * a * z);
    Ok((z_series, t_star))
}

/// Runs the ODE blow-up diagnostic along a record carrying a virial monitor:
/// measures C with |M_φR| ≤ C √T, sets A = 4ε/C², accumulates z(t), and
/// projects the singular time.
pub fn ode_blowup_diagnostic(
    record: &TrajectoryRecord,
    epsilon: f64,
    c_bound: f64,
) -> Result<OdeDiagnostic> {
    if record.samples.iter().any(|s| s.virials.is_empty()) {
        return Err(Error::MonitorInconsistent(
            "record carries no virial monitor".into(),
        ));
    }
    let mut c_meas: f64 = 0.0;
    for s in &record.samples {
        if s.functionals.kinetic > 0.0 {
            c_meas = c_meas.max(s.virials[0].m_phi.abs() / s.functionals.kinetic.sqrt());
        }
    }
    if !(c_meas > 0.0) {
        return Err(Error::MonitorInconsistent(
            "M_φR vanished along the whole record".into(),
        ));
    }
    let a = 4.0 * epsilon / (c_meas * c_meas);
    let start = record
        .samples
        .iter()
        .position(|s| s.virials[0].m_phi < 0.0)
        .ok_or_else(|| {
            Error::MonitorInconsistent("M_φR never became negative".into())
        })?;
    let times: Vec<f64> = record.samples[start..].iter().map(|s| s.t).collect();
    let ms: Vec<f64> = record.samples[start..]
        .iter()
        .map(|s| s.virials[0].m_phi)
        .collect();
    let (z_series, projected_t_star) = project_singular_time(&times, &ms, a)?;
    Ok(OdeDiagnostic {
        a_const: a,
        t0: times[0],
        z_series,
        projected_t_star,
        c_bound,
    })
}
