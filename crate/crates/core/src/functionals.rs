//! Conserved and variational functionals of the quadratic-interaction system,
//! sharp constants, and blow-up condition classifiers.
//!
//! For a state (u, v) with mass ratio κ the report carries
//!
//! ```text
//! M = ‖u‖² + 2‖v‖²           (mass)
//! T = ‖∇u‖² + κ‖∇v‖²         (kinetic energy)
//! P = Re ∫ v ū² dx           (potential energy)
//! E = T/2 − P                (total energy)
//! G = T − (d/2) P            (Pohozaev functional)
//! ```
//!
//! Kinetic terms are evaluated through the Dirichlet quadratic form of the
//! discrete Laplacian, which keeps E = T/2 − P and G = T − (d/2)P exact
//! identities of the report and matches what the Crank–Nicolson integrator
//! conserves.

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::groundstate::GroundStatePair;
use crate::C64;
use serde::Serialize;
use std::sync::Arc;

/// Pair of complex fields on a shared grid at a given time.
#[derive(Clone)]
pub struct SystemState {
    pub grid: Arc<Grid>,
    pub u: Vec<C64>,
    pub v: Vec<C64>,
    pub t: f64,
    pub kappa: f64,
}

impl SystemState {
    pub fn new(grid: Arc<Grid>, u: Vec<C64>, v: Vec<C64>, kappa: f64) -> Result<Self> {
        if u.len() != grid.len() || v.len() != grid.len() {
            return Err(Error::GridMismatch);
        }
        if !(kappa > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "mass ratio kappa must be positive, got {kappa}"
            )));
        }
        Ok(Self {
            grid,
            u,
            v,
            t: 0.0,
            kappa,
        })
    }

    pub fn zero(grid: Arc<Grid>, kappa: f64) -> Result<Self> {
        let n = grid.len();
        Self::new(grid, vec![C64::new(0.0, 0.0); n], vec![C64::new(0.0, 0.0); n], kappa)
    }

    pub fn d(&self) -> u32 {
        self.grid.d()
    }
}

/// All five scalar functionals of a state.
#[derive(Clone, Copy, Debug, Serialize, PartialEq)]
pub struct FunctionalReport {
    pub mass: f64,
    pub energy: f64,
    pub kinetic: f64,
    pub potential: f64,
    pub pohozaev_g: f64,
}

/// Re ∫ v ū² dx by grid quadrature.
pub fn potential_integral(grid: &Grid, u: &[C64], v: &[C64]) -> Result<f64> {
    match grid {
        Grid::Radial(g) => {
            let mut acc = 0.0;
            for (j, w) in g.weights().iter().enumerate() {
                acc += w * (v[j] * u[j].conj() * u[j].conj()).re;
            }
            Ok(acc)
        }
        Grid::Cylindrical(g) => {
            let n_z = g.n_z();
            let mut acc = 0.0;
            for (i, w) in g.rho_weights().iter().enumerate() {
                let mut s = 0.0;
                for k in 0..n_z {
                    let idx = i * n_z + k;
                    s += (v[idx] * u[idx].conj() * u[idx].conj()).re;
                }
                acc += w * s;
            }
            Ok(acc * (2.0 * g.z_max() / g.n_z() as f64))
        }
    }
}

/// Evaluates mass, energy, kinetic, potential, and Pohozaev functionals.
pub fn evaluate_functionals(state: &SystemState) -> Result<FunctionalReport> {
    let grid = state.grid.as_ref();
    let mass = grid.norm2_c(&state.u)? + 2.0 * grid.norm2_c(&state.v)?;
    let kinetic = grid.dirichlet_form_c(&state.u)? + state.kappa * grid.dirichlet_form_c(&state.v)?;
    let potential = potential_integral(grid, &state.u, &state.v)?;
    let energy = 0.5 * kinetic - potential;
    let pohozaev_g = kinetic - 0.5 * grid.d() as f64 * potential;
    Ok(FunctionalReport {
        mass,
        energy,
        kinetic,
        potential,
        pohozaev_g,
    })
}

/// Ground-state threshold quantities entering the blow-up conditions.
///
/// For d = 5 the products E·M, T·M, P·M are recorded (they are independent of
/// the choice of ground state); for d = 6 the scale-invariant E and T are; the
/// sharp Gagliardo–Nirenberg (d ≤ 5) or Sobolev (d = 6) constant comes along.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ThresholdConstants {
    pub d: u32,
    pub kappa: f64,
    pub e_m: Option<f64>,
    pub t_m: Option<f64>,
    pub p_m: Option<f64>,
    pub e_gs: Option<f64>,
    pub t_gs: Option<f64>,
    pub c_gn: Option<f64>,
    pub c_sob: Option<f64>,
}

impl ThresholdConstants {
    /// Derives the thresholds from a computed ground state.
    pub fn from_ground_state(gs: &GroundStatePair) -> Result<Self> {
        let mut out = Self {
            d: gs.d,
            kappa: gs.kappa,
            e_m: None,
            t_m: None,
            p_m: None,
            e_gs: None,
            t_gs: None,
            c_gn: None,
            c_sob: None,
        };
        match gs.d {
            4 => {
                out.c_gn = Some(gn_constant_from_groundstate(gs)?);
            }
            5 => {
                out.e_m = Some(gs.energy * gs.mass);
                out.t_m = Some(gs.kinetic * gs.mass);
                out.p_m = Some(gs.potential * gs.mass);
                out.c_gn = Some(gn_constant_from_groundstate(gs)?);
            }
            6 => {
                out.e_gs = Some(gs.energy);
                out.t_gs = Some(gs.kinetic);
                out.c_sob = Some(sobolev_constant_from_groundstate(gs)?);
            }
            d => return Err(Error::DimensionOutOfRange(d)),
        }
        Ok(out)
    }
}

/// Sharp Gagliardo–Nirenberg constant from a ground state,
/// C_GN = P / (M^{(6−d)/4} T^{d/4}), valid for d ∈ {4, 5}.
pub fn gn_constant_from_groundstate(gs: &GroundStatePair) -> Result<f64> {
    if !(gs.d == 4 || gs.d == 5) {
        return Err(Error::DimensionOutOfRange(gs.d));
    }
    let denom = gs.mass.powf((6.0 - gs.d as f64) / 4.0) * gs.kinetic.powf(gs.d as f64 / 4.0);
    if denom == 0.0 {
        return Err(Error::InvalidParameter(
            "ground state has vanishing mass or kinetic energy".into(),
        ));
    }
    Ok(gs.potential / denom)
}

/// Sharp Sobolev constant from the d = 6 static pair, C_Sob = P / T^{3/2}.
pub fn sobolev_constant_from_groundstate(gs: &GroundStatePair) -> Result<f64> {
    if gs.d != 6 {
        return Err(Error::DimensionOutOfRange(gs.d));
    }
    if gs.kinetic == 0.0 {
        return Err(Error::InvalidParameter("vanishing kinetic energy".into()));
    }
    Ok(gs.potential / gs.kinetic.powf(1.5))
}

/// Membership flags for the d = 5 variational sets. All comparisons are
/// strict; boundary states classify as outside.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Classification5d {
    pub in_a: bool,
    pub in_a_tilde: bool,
    pub in_sc: bool,
}

pub fn classify_5d(state: &SystemState, thresholds: &ThresholdConstants) -> Result<Classification5d> {
    if state.d() != 5 || thresholds.d != 5 {
        return Err(Error::DimensionOutOfRange(state.d()));
    }
    let (e_m, t_m) = match (thresholds.e_m, thresholds.t_m) {
        (Some(a), Some(b)) => (a, b),
        _ => {
            return Err(Error::InvalidParameter(
                "thresholds lack the d = 5 products".into(),
            ))
        }
    };
    let rep = evaluate_functionals(state)?;
    let em = rep.energy * rep.mass;
    let tm = rep.kinetic * rep.mass;
    let below_energy = em < e_m;
    Ok(Classification5d {
        in_a: below_energy && tm > t_m,
        in_a_tilde: below_energy && rep.pohozaev_g < 0.0,
        in_sc: below_energy && tm < t_m,
    })
}

/// Membership flags for the d = 6 variational sets.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Classification6d {
    pub in_b: bool,
    pub in_b_tilde: bool,
}

pub fn classify_6d(state: &SystemState, thresholds: &ThresholdConstants) -> Result<Classification6d> {
    if state.d() != 6 || thresholds.d != 6 {
        return Err(Error::DimensionOutOfRange(state.d()));
    }
    let (e_gs, t_gs) = match (thresholds.e_gs, thresholds.t_gs) {
        (Some(a), Some(b)) => (a, b),
        _ => {
            return Err(Error::InvalidParameter(
                "thresholds lack the d = 6 values".into(),
            ))
        }
    };
    let rep = evaluate_functionals(state)?;
    let below_energy = rep.energy < e_gs;
    Ok(Classification6d {
        in_b: below_energy && rep.kinetic > t_gs,
        in_b_tilde: below_energy && rep.pohozaev_g < 0.0,
    })
}

/// Constants (ρ, ν, ε, c) giving the uniform bound G + εT ≤ −c along a
/// trajectory with blow-up initial data.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct UniformBoundConstants {
    pub rho: f64,
    pub nu: f64,
    pub epsilon: f64,
    pub c: f64,
}

/// g(λ) = 5λ − 4λ^{5/4}, strictly decreasing on (1, ∞); drives the d = 5
/// refined kinetic lower bound.
pub fn g_decay_5d(lambda: f64) -> f64 {
    5.0 * lambda - 4.0 * lambda.powf(1.25)
}

/// d = 6 analogue, g(λ) = 3λ − 2λ^{3/2}.
pub fn g_decay_6d(lambda: f64) -> f64 {
    3.0 * lambda - 2.0 * lambda.powf(1.5)
}

/// Solves g(λ) = target on the strictly decreasing branch λ > 1 by bisection
/// to 1e−10; returns ν = λ − 1.
pub fn solve_nu(target: f64, d: u32) -> Result<f64> {
    let g = match d {
        5 => g_decay_5d as fn(f64) -> f64,
        6 => g_decay_6d as fn(f64) -> f64,
        _ => return Err(Error::DimensionOutOfRange(d)),
    };
    if !(target < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "root gap target must lie below g(1) = 1, got {target}"
        )));
    }
    let mut lo = 1.0;
    let mut hi = 2.0;
    while g(hi) > target {
        hi *= 2.0;
        if hi > 1e6 {
            return Err(Error::BracketNotFound(
                "nu bracket exceeded 1e6".into(),
            ));
        }
    }
    while hi - lo > 1e-10 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi) - 1.0)
}

/// Derives (ρ, ν, ε, c) for initial data satisfying the blow-up condition.
///
/// Negative-energy data short-circuits to the explicit constants
/// (ε, c) = (1/4, −(5/2)E₀) in d = 5 and (1/2, −3E₀) in d = 6. Otherwise
/// ρ is the relative energy margin, ν the root gap of the decay function,
/// ε the midpoint of its admissible interval, and c the resulting bound.
pub fn uniform_bound_constants(
    state0: &SystemState,
    thresholds: &ThresholdConstants,
) -> Result<UniformBoundConstants> {
    let d = state0.d();
    let rep = evaluate_functionals(state0)?;
    match d {
        5 => {
            let (e_m, t_m) = match (thresholds.e_m, thresholds.t_m) {
                (Some(a), Some(b)) => (a, b),
                _ => {
                    return Err(Error::InvalidParameter(
                        "thresholds lack the d = 5 products".into(),
                    ))
                }
            };
            let em = rep.energy * rep.mass;
            let tm = rep.kinetic * rep.mass;
            if !(em < e_m && tm > t_m) {
                return Err(Error::NotInBlowupRegion);
            }
            if rep.energy < 0.0 {
                return Ok(UniformBoundConstants {
                    rho: 1.0,
                    nu: 0.0,
                    epsilon: 0.25,
                    c: -2.5 * rep.energy,
                });
            }
            let rho = 1.0 - em / e_m;
            let nu = solve_nu(1.0 - rho, 5)?;
            let epsilon = 0.5 * (rho + nu) / (4.0 * (1.0 + nu));
            let c = (rho + nu) / 8.0 * t_m / rep.mass;
            Ok(UniformBoundConstants { rho, nu, epsilon, c })
        }
        6 => {
            let (e_gs, t_gs) = match (thresholds.e_gs, thresholds.t_gs) {
                (Some(a), Some(b)) => (a, b),
                _ => {
                    return Err(Error::InvalidParameter(
                        "thresholds lack the d = 6 values".into(),
                    ))
                }
            };
            if !(rep.energy < e_gs && rep.kinetic > t_gs) {
                return Err(Error::NotInBlowupRegion);
            }
            if rep.energy < 0.0 {
                return Ok(UniformBoundConstants {
                    rho: 1.0,
                    nu: 0.0,
                    epsilon: 0.5,
                    c: -3.0 * rep.energy,
                });
            }
            let rho = 1.0 - rep.energy / e_gs;
            let nu = solve_nu(1.0 - rho, 6)?;
            let epsilon = 0.5 * (rho + nu) / (2.0 * (1.0 + nu));
            let c = (rho + nu) / 4.0 * t_gs;
            Ok(UniformBoundConstants { rho, nu, epsilon, c })
        }
        d => Err(Error::DimensionOutOfRange(d)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::RadialGrid;

    fn radial_state(d: u32, n: usize, r_max: f64, kappa: f64) -> SystemState {
        let grid = Arc::new(Grid::Radial(RadialGrid::new(d, r_max, n).unwrap()));
        SystemState::zero(grid, kappa).unwrap()
    }

    #[test]
    fn zero_state_has_zero_functionals() {
        let state = radial_state(4, 128, 8.0, 1.0);
        let rep = evaluate_functionals(&state).unwrap();
        assert_eq!(rep.mass, 0.0);
        assert_eq!(rep.energy, 0.0);
        assert_eq!(rep.kinetic, 0.0);
        assert_eq!(rep.potential, 0.0);
        assert_eq!(rep.pohozaev_g, 0.0);
    }

    #[test]
    fn report_identities_hold_to_roundoff() {
        let mut state = radial_state(4, 256, 10.0, 0.7);
        if let Grid::Radial(g) = state.grid.as_ref() {
            state.u = g.sample_c(|r| C64::new(1.3 * (-r * r).exp(), 0.4 * (-r * r / 2.0).exp()));
            state.v = g.sample_c(|r| C64::new(0.8 * (-r * r).exp(), -0.2 * (-0.8 * r * r).exp()));
        }
        let rep = evaluate_functionals(&state).unwrap();
        let e_check = 0.5 * rep.kinetic - rep.potential;
        let g_check = rep.kinetic - 2.0 * rep.potential;
        assert!((rep.energy - e_check).abs() <= 1e-12 * rep.kinetic.abs().max(1.0));
        assert!((rep.pohozaev_g - g_check).abs() <= 1e-12 * rep.kinetic.abs().max(1.0));
        // d = 4: G = 2E identically.
        assert!((rep.pohozaev_g - 2.0 * rep.energy).abs() <= 1e-12 * rep.kinetic.abs().max(1.0));
    }

    #[test]
    fn nu_bisection_matches_independent_oracle() {
        // Solve 5λ − 4λ^{5/4} = 1/2 with a test-local bisection on (1, 10).
        let target = 0.5;
        let mut lo = 1.0;
        let mut hi = 10.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if g_decay_5d(mid) > target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let oracle = 0.5 * (lo + hi) - 1.0;
        let nu = solve_nu(target, 5).unwrap();
        assert!((nu - oracle).abs() < 1e-9, "{nu} vs {oracle}");
        assert!(g_decay_5d(1.0 + nu) - target < 1e-9);
    }

    #[test]
    fn rho_arithmetic() {
        // E·M = e_m/2 → ρ = 1/2 by definition of the margin.
        let e_m = 3.0f64;
        let em = 1.5f64;
        let rho = 1.0 - em / e_m;
        assert!((rho - 0.5).abs() < 1e-15);
    }
}
