//! Localized virial functionals, their exact derivative assembly, and the
//! one-sided localized bounds.
//!
//! For a weight φ and state (u, v),
//!
//! ```text
//! M_φ(t) = 2 Im ∫ ∇φ · (∇u ū + ∇v v̄) dx .
//! ```
//!
//! The exact time derivative is assembled in the decomposed form
//!
//! ```text
//! d/dt M_φ = 8G + bilap + hessian_defect + potential_tail
//! bilap            = −∫ Δ²φ (|u|² + κ|v|²)
//! hessian_defect   = −4 ∫ θ₁ (|∇u|² + κ|∇v|²)      (clipped directions)
//! potential_tail   = +2 Re ∫ θ₂ v ū²
//! ```
//!
//! which reduces to 8G exactly when the weight is the unclipped |x|². The
//! bound evaluators add the one-sided right-hand sides of the radial and
//! cylindrical localized estimates with a caller-supplied constant C_est;
//! the constant is not explicit in the estimates (it depends on κ and the
//! conserved mass), so [`calibrate_c_est`] measures the largest observed
//! remainder-to-surrogate ratio over a data family.

use crate::cutoff::{weight_pair, CutoffProfile, ProfileKind};
use crate::error::{Error, Result};
use crate::functionals::{evaluate_functionals, SystemState};
use crate::grid::{GhostRule, Grid};
use serde::Serialize;

/// One evaluation of the virial diagnostics at a trajectory sample.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct VirialReport {
    pub t: f64,
    pub m_phi: f64,
    pub ddt_exact: f64,
    pub ddt_bound_rhs: Option<f64>,
    pub rem_bilap: f64,
    pub rem_hessian_defect: f64,
    pub rem_potential_tail: f64,
    /// Sum of the explicitly R-decaying additive terms of the bound RHS.
    pub o_r_surrogate: Option<f64>,
    /// 8 G(u, v) for reference.
    pub g_value: f64,
    pub c_est_used: Option<f64>,
    pub r_scale: f64,
}

/// Per-grid 1D tables of the profile derivatives and weights.
struct ProfileTables {
    theta1: Vec<f64>,
    theta2: Vec<f64>,
    /// Δ²φ (radial) or Δ²_y ψ_R (cylindrical), from two discrete applications
    /// of the conservative stencil with extrapolating ghosts.
    bilap: Vec<f64>,
}

fn radial_tables(grid: &Grid, profile: &CutoffProfile) -> Result<ProfileTables> {
    let g = grid.as_radial()?;
    let d = g.d();
    let (theta1, theta2) = clipped_weights(profile, d, g.nodes());
    let varphi: Vec<f64> = g.nodes().iter().map(|&r| profile.varphi(r)).collect();
    let lap = g.apply_laplacian_with_ghost(&varphi, GhostRule::Extrapolate)?;
    let bilap = g.apply_laplacian_with_ghost(&lap, GhostRule::Extrapolate)?;
    Ok(ProfileTables {
        theta1,
        theta2,
        bilap,
    })
}

fn cylindrical_tables(grid: &Grid, profile: &CutoffProfile) -> Result<ProfileTables> {
    let g = grid.as_cylindrical()?;
    let d = g.d();
    let (theta1, theta2) = clipped_weights(profile, d, g.rho_nodes());
    let psi_r: Vec<f64> = g.rho_nodes().iter().map(|&r| profile.varphi(r)).collect();
    let lap = g.apply_rho_stencil(&psi_r, GhostRule::Extrapolate)?;
    let bilap = g.apply_rho_stencil(&lap, GhostRule::Extrapolate)?;
    Ok(ProfileTables {
        theta1,
        theta2,
        bilap,
    })
}

fn clipped_weights(profile: &CutoffProfile, d: u32, nodes: &[f64]) -> (Vec<f64>, Vec<f64>) {
    match profile.kind {
        ProfileKind::Quadratic => (vec![0.0; nodes.len()], vec![0.0; nodes.len()]),
        _ => {
            let pair = weight_pair(profile, d).expect("clipped profile");
            (
                nodes.iter().map(|&r| pair.theta1(r)).collect(),
                nodes.iter().map(|&r| pair.theta2(r)).collect(),
            )
        }
    }
}

fn check_symmetry(state: &SystemState, profile: &CutoffProfile) -> Result<()> {
    match (state.grid.as_ref(), profile.kind) {
        (Grid::Radial(_), ProfileKind::Radial | ProfileKind::Quadratic) => Ok(()),
        (Grid::Cylindrical(_), ProfileKind::Cylindrical | ProfileKind::Quadratic) => Ok(()),
        _ => Err(Error::SymmetryMismatch),
    }
}

/// The localized momentum functional M_φ(t).
pub fn m_phi(state: &SystemState, profile: &CutoffProfile) -> Result<f64> {
    check_symmetry(state, profile)?;
    match state.grid.as_ref() {
        Grid::Radial(g) => {
            let du = g.gradient(&state.u)?;
            let dv = g.gradient(&state.v)?;
            let mut acc = 0.0;
            for (j, w) in g.weights().iter().enumerate() {
                let phase = (du[j] * state.u[j].conj() + dv[j] * state.v[j].conj()).im;
                acc += w * profile.dvarphi(g.nodes()[j]) * phase;
            }
            Ok(2.0 * acc)
        }
        Grid::Cylindrical(g) => {
            let du_r = g.gradient_rho(&state.u)?;
            let dv_r = g.gradient_rho(&state.v)?;
            let du_z = g.gradient_z(&state.u)?;
            let dv_z = g.gradient_z(&state.v)?;
            let n_z = g.n_z();
            let mut acc = 0.0;
            for (i, w_rho) in g.rho_weights().iter().enumerate() {
                let dpsi = profile.dvarphi(g.rho_nodes()[i]);
                let mut row = 0.0;
                for k in 0..n_z {
                    let idx = i * n_z + k;
                    let radial_part = (du_r[idx] * state.u[idx].conj()
                        + dv_r[idx] * state.v[idx].conj())
                    .im;
                    let axial_part = (du_z[idx] * state.u[idx].conj()
                        + dv_z[idx] * state.v[idx].conj())
                    .im;
                    row += dpsi * radial_part + 2.0 * g.z_nodes()[k] * axial_part;
                }
                acc += w_rho * row;
            }
            Ok(2.0 * acc * (2.0 * g.z_max() / n_z as f64))
        }
    }
}

/// Exact derivative assembly (no bound attached).
pub fn ddt_m_phi_exact(state: &SystemState, profile: &CutoffProfile) -> Result<VirialReport> {
    check_symmetry(state, profile)?;
    let parts = assemble_parts(state, profile)?;
    Ok(parts.report(None, None, None))
}

struct AssembledParts {
    t: f64,
    m_phi: f64,
    g_value: f64,
    rem_bilap: f64,
    rem_hess: f64,
    rem_pot: f64,
    /// Σ w θ₁ |∂u|² over the clipped directions (u component only).
    theta1_grad_u: f64,
    /// Σ w θ₂² |∂u|² over the clipped directions (u component only).
    theta2_sq_grad_u: f64,
    /// ‖∇u‖² (full gradient, quadratic form).
    grad_u_sq: f64,
    /// ‖∂_d u‖² (cylindrical only; 0 on radial grids).
    axial_u_sq: f64,
    energy: f64,
    r_scale: f64,
}

impl AssembledParts {
    fn ddt_exact(&self) -> f64 {
        self.g_value + self.rem_bilap + self.rem_hess + self.rem_pot
    }

    fn report(
        &self,
        bound: Option<f64>,
        o_r: Option<f64>,
        c_est: Option<f64>,
    ) -> VirialReport {
        VirialReport {
            t: self.t,
            m_phi: self.m_phi,
            ddt_exact: self.ddt_exact(),
            ddt_bound_rhs: bound,
            rem_bilap: self.rem_bilap,
            rem_hessian_defect: self.rem_hess,
            rem_potential_tail: self.rem_pot,
            o_r_surrogate: o_r,
            g_value: self.g_value,
            c_est_used: c_est,
            r_scale: self.r_scale,
        }
    }
}

fn assemble_parts(state: &SystemState, profile: &CutoffProfile) -> Result<AssembledParts> {
    let rep = evaluate_functionals(state)?;
    let kappa = state.kappa;
    let m = m_phi(state, profile)?;
    match state.grid.as_ref() {
        Grid::Radial(g) => {
            let tables = radial_tables(state.grid.as_ref(), profile)?;
            let du = g.gradient(&state.u)?;
            let dv = g.gradient(&state.v)?;
            let mut rem_bilap = 0.0;
            let mut rem_hess = 0.0;
            let mut rem_pot = 0.0;
            let mut theta1_grad_u = 0.0;
            let mut theta2_sq_grad_u = 0.0;
            for (j, w) in g.weights().iter().enumerate() {
                let q = state.u[j].norm_sqr() + kappa * state.v[j].norm_sqr();
                let kgrad = du[j].norm_sqr() + kappa * dv[j].norm_sqr();
                let f_dens = (state.v[j] * state.u[j].conj() * state.u[j].conj()).re;
                rem_bilap -= w * tables.bilap[j] * q;
                rem_hess -= 4.0 * w * tables.theta1[j] * kgrad;
                rem_pot += 2.0 * w * tables.theta2[j] * f_dens;
                theta1_grad_u += w * tables.theta1[j] * du[j].norm_sqr();
                theta2_sq_grad_u += w * tables.theta2[j] * tables.theta2[j] * du[j].norm_sqr();
            }
            Ok(AssembledParts {
                t: state.t,
                m_phi: m,
                g_value: 8.0 * rep.pohozaev_g,
                rem_bilap,
                rem_hess,
                rem_pot,
                theta1_grad_u,
                theta2_sq_grad_u,
                grad_u_sq: g.dirichlet_form_c(&state.u)?,
                axial_u_sq: 0.0,
                energy: rep.energy,
                r_scale: profile.r_scale,
            })
        }
        Grid::Cylindrical(g) => {
            let tables = cylindrical_tables(state.grid.as_ref(), profile)?;
            let du_r = g.gradient_rho(&state.u)?;
            let dv_r = g.gradient_rho(&state.v)?;
            let n_z = g.n_z();
            let h_z = 2.0 * g.z_max() / n_z as f64;
            let mut rem_bilap = 0.0;
            let mut rem_hess = 0.0;
            let mut rem_pot = 0.0;
            let mut theta1_grad_u = 0.0;
            let mut theta2_sq_grad_u = 0.0;
            for (i, w_rho) in g.rho_weights().iter().enumerate() {
                let mut q_row = 0.0;
                let mut kgrad_row = 0.0;
                let mut f_row = 0.0;
                let mut grad_u_row = 0.0;
                for k in 0..n_z {
                    let idx = i * n_z + k;
                    q_row += state.u[idx].norm_sqr() + kappa * state.v[idx].norm_sqr();
                    kgrad_row += du_r[idx].norm_sqr() + kappa * dv_r[idx].norm_sqr();
                    f_row += (state.v[idx] * state.u[idx].conj() * state.u[idx].conj()).re;
                    grad_u_row += du_r[idx].norm_sqr();
                }
                let w = w_rho * h_z;
                rem_bilap -= w * tables.bilap[i] * q_row;
                rem_hess -= 4.0 * w * tables.theta1[i] * kgrad_row;
                rem_pot += 2.0 * w * tables.theta2[i] * f_row;
                theta1_grad_u += w * tables.theta1[i] * grad_u_row;
                theta2_sq_grad_u += w * tables.theta2[i] * tables.theta2[i] * grad_u_row;
            }
            Ok(AssembledParts {
                t: state.t,
                m_phi: m,
                g_value: 8.0 * rep.pohozaev_g,
                rem_bilap,
                rem_hess,
                rem_pot,
                theta1_grad_u,
                theta2_sq_grad_u,
                grad_u_sq: g.dirichlet_form_rho_c(&state.u)? + g.dirichlet_form_z_c(&state.u)?,
                axial_u_sq: g.dirichlet_form_z_c(&state.u)?,
                energy: rep.energy,
                r_scale: profile.r_scale,
            })
        }
    }
}

/// Radial d = 4 localized one-sided estimate:
/// d/dt M_φR ≤ 16E − 4∫(θ₁ − C R^{-3/2} θ₂²)|∇u|² + C(R^{-3/2} + R^{-2}).
pub fn radial_bound_4d(
    state: &SystemState,
    profile: &CutoffProfile,
    c_est: f64,
) -> Result<VirialReport> {
    if state.d() != 4 {
        return Err(Error::DimensionOutOfRange(state.d()));
    }
    if profile.kind != ProfileKind::Radial {
        return Err(Error::SymmetryMismatch);
    }
    state.grid.as_radial()?;
    let parts = assemble_parts(state, profile)?;
    let r = profile.r_scale;
    let decay = r.powf(-1.5);
    let o_r = 4.0 * c_est * decay * parts.theta2_sq_grad_u + c_est * (decay + r.powi(-2));
    let bound = 16.0 * parts.energy - 4.0 * parts.theta1_grad_u + o_r;
    Ok(parts.report(Some(bound), Some(o_r), Some(c_est)))
}

/// Cylindrical localized estimates. For d = 5, 6:
/// d/dt M_φR ≤ 8G + C R^{-(d-2)/2}(‖∇u‖² + 1) + C R^{-2};
/// for d = 4 the refined form with the ϑ weights and the axial term.
pub fn cylindrical_bound(
    state: &SystemState,
    profile: &CutoffProfile,
    c_est: f64,
) -> Result<VirialReport> {
    if profile.kind != ProfileKind::Cylindrical {
        return Err(Error::SymmetryMismatch);
    }
    state.grid.as_cylindrical()?;
    let parts = assemble_parts(state, profile)?;
    let r = profile.r_scale;
    let d = state.d();
    match d {
        5 | 6 => {
            let decay = r.powf(-((d as f64 - 2.0) / 2.0));
            let o_r = c_est * decay * (parts.grad_u_sq + 1.0) + c_est * r.powi(-2);
            let bound = parts.g_value + o_r;
            Ok(parts.report(Some(bound), Some(o_r), Some(c_est)))
        }
        4 => {
            let decay = r.powi(-1);
            let o_r = 4.0 * c_est * decay * parts.theta2_sq_grad_u
                + c_est * decay * (parts.axial_u_sq + 1.0)
                + c_est * r.powi(-2);
            let bound = 16.0 * parts.energy - 4.0 * parts.theta1_grad_u + o_r;
            Ok(parts.report(Some(bound), Some(o_r), Some(c_est)))
        }
        d => Err(Error::DimensionOutOfRange(d)),
    }
}

/// Largest remainder-to-surrogate ratio over a family of states, for the
/// bound path matching the profile kind and state dimension. Callers apply
/// their own safety factor (the acceptance checks use 2×).
pub fn calibrate_c_est(
    states: &[SystemState],
    profile: &CutoffProfile,
) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for state in states {
        check_symmetry(state, profile)?;
        let parts = assemble_parts(state, profile)?;
        let r = profile.r_scale;
        let bilap_ratio = parts.rem_bilap.abs() / r.powi(-2);
        let pot_ratio = match (state.grid.as_ref(), state.d()) {
            (Grid::Radial(_), 4) => {
                let decay = r.powf(-1.5);
                parts.rem_pot.abs() / (decay * (4.0 * parts.theta2_sq_grad_u + 1.0))
            }
            (Grid::Cylindrical(_), 4) => {
                let decay = r.powi(-1);
                parts.rem_pot.abs()
                    / (decay * (4.0 * parts.theta2_sq_grad_u + parts.axial_u_sq + 1.0))
            }
            (Grid::Cylindrical(_), d) => {
                let decay = r.powf(-((d as f64 - 2.0) / 2.0));
                parts.rem_pot.abs() / (decay * (parts.grad_u_sq + 1.0))
            }
            _ => {
                return Err(Error::SymmetryMismatch);
            }
        };
        worst = worst.max(bilap_ratio).max(pot_ratio);
    }
    Ok(worst)
}

/// A bound path selection for trajectory monitoring.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundPath {
    /// Exact assembly only.
    None,
    /// Radial d = 4 estimate.
    Radial4d,
    /// Cylindrical estimate (path picked by dimension).
    Cylindrical,
}

/// Profile plus bound configuration used by the evolution monitors.
#[derive(Clone, Copy, Debug)]
pub struct VirialMonitor {
    pub profile: CutoffProfile,
    pub bound: BoundPath,
    pub c_est: f64,
}

impl VirialMonitor {
    pub fn exact(profile: CutoffProfile) -> Self {
        Self {
            profile,
            bound: BoundPath::None,
            c_est: 0.0,
        }
    }

    pub fn evaluate(&self, state: &SystemState) -> Result<VirialReport> {
        match self.bound {
            BoundPath::None => ddt_m_phi_exact(state, &self.profile),
            BoundPath::Radial4d => radial_bound_4d(state, &self.profile, self.c_est),
            BoundPath::Cylindrical => cylindrical_bound(state, &self.profile, self.c_est),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{CylindricalGrid, RadialGrid};
    use crate::C64;
    use std::sync::Arc;

    fn radial_state(d: u32, n: usize, r_max: f64, kappa: f64) -> SystemState {
        let grid = Arc::new(Grid::Radial(RadialGrid::new(d, r_max, n).unwrap()));
        let mut s = SystemState::zero(grid, kappa).unwrap();
        if let Grid::Radial(g) = s.grid.clone().as_ref() {
            s.u = g.sample_c(|r| C64::new(0.9 * (-r * r).exp(), 0.0) * C64::from_polar(1.0, 0.8 * r));
            s.v = g.sample_c(|r| C64::new(0.5 * (-0.8 * r * r).exp(), 0.0) * C64::from_polar(1.0, -0.4 * r));
        }
        s
    }

    #[test]
    fn real_fields_have_zero_m_phi() {
        let grid = Arc::new(Grid::Radial(RadialGrid::new(4, 8.0, 256).unwrap()));
        let mut s = SystemState::zero(grid, 1.0).unwrap();
        if let Grid::Radial(g) = s.grid.clone().as_ref() {
            s.u = g.sample_c(|r| C64::new((-r * r).exp(), 0.0));
            s.v = g.sample_c(|r| C64::new(0.5 * (-r * r).exp(), 0.0));
        }
        let p = CutoffProfile::quadratic();
        assert_eq!(m_phi(&s, &p).unwrap(), 0.0);
    }

    #[test]
    fn quadratic_profile_reduces_to_eight_g() {
        let s = radial_state(4, 512, 10.0, 0.7);
        let rep = ddt_m_phi_exact(&s, &CutoffProfile::quadratic()).unwrap();
        // Weights vanish identically; the bilaplacian table is zero up to
        // round-off of the exact-on-quadratics stencil.
        let scale = rep.g_value.abs().max(1.0);
        assert!(rep.rem_bilap.abs() < 1e-12 * scale);
        assert_eq!(rep.rem_hessian_defect, 0.0);
        assert_eq!(rep.rem_potential_tail, 0.0);
        assert!((rep.ddt_exact - rep.g_value).abs() < 1e-12 * scale);
    }

    #[test]
    fn m_phi_matches_independent_quadrature() {
        // u = e^{ir} e^{-r²}, v = 0: the integrand is 2 φ'(r) e^{-2r²} ω₃ r³.
        let grid = Arc::new(Grid::Radial(RadialGrid::new(4, 8.0, 16384).unwrap()));
        let mut s = SystemState::zero(grid, 1.0).unwrap();
        if let Grid::Radial(g) = s.grid.clone().as_ref() {
            s.u = g.sample_c(|r| C64::from_polar((-r * r).exp(), r));
        }
        let profile = CutoffProfile::new(ProfileKind::Radial, 4.0).unwrap();
        let got = m_phi(&s, &profile).unwrap();
        // Simpson oracle on a fine 1D grid, independent of the grid code.
        let omega3 = 2.0 * std::f64::consts::PI * std::f64::consts::PI;
        let f = |r: f64| 2.0 * profile.dvarphi(r) * (-2.0 * r * r).exp() * omega3 * r * r * r;
        let n = 800_000;
        let h = 8.0 / n as f64;
        let mut acc = f(0.0) + f(8.0);
        for i in 1..n {
            acc += if i % 2 == 1 { 4.0 } else { 2.0 } * f(i as f64 * h);
        }
        let oracle = acc * h / 3.0;
        let rel = (got - oracle).abs() / oracle.abs();
        assert!(rel < 1e-6, "rel {rel}: {got} vs {oracle}");
    }

    #[test]
    fn m_phi_cauchy_schwarz_bound() {
        let s = radial_state(4, 1024, 10.0, 0.8);
        let profile = CutoffProfile::new(ProfileKind::Radial, 3.0).unwrap();
        let m = m_phi(&s, &profile).unwrap();
        let rep = evaluate_functionals(&s).unwrap();
        // |M_φ| ≤ 2‖φ'‖_∞ (‖u‖ + ‖v‖/√κ) √T
        let sup_grad = 2.0 * profile.r_scale * crate::cutoff::zeta_bridge_value() / 2.0;
        let g = s.grid.as_radial().unwrap();
        let norm_u = g.norm2_c(&s.u).unwrap().sqrt();
        let norm_v = g.norm2_c(&s.v).unwrap().sqrt();
        let cap = 2.0 * sup_grad * (norm_u + norm_v / s.kappa.sqrt()) * rep.kinetic.sqrt();
        assert!(m.abs() <= cap, "|M_φ| = {} exceeds {cap}", m.abs());
    }

    #[test]
    fn zero_state_reports_zero() {
        let grid = Arc::new(Grid::Radial(RadialGrid::new(4, 8.0, 128).unwrap()));
        let s = SystemState::zero(grid, 1.0).unwrap();
        let rep = ddt_m_phi_exact(&s, &CutoffProfile::new(ProfileKind::Radial, 2.0).unwrap()).unwrap();
        assert_eq!(rep.m_phi, 0.0);
        assert_eq!(rep.ddt_exact, 0.0);
    }

    #[test]
    fn support_inside_core_keeps_only_main_terms() {
        // Data supported well inside r ≤ R: all clipped remainders vanish at
        // numerical precision and the bound reduces to 16E + o_R(1).
        let s = radial_state(4, 768, 12.0, 1.0);
        let profile = CutoffProfile::new(ProfileKind::Radial, 6.0).unwrap();
        let rep = radial_bound_4d(&s, &profile, 1.0).unwrap();
        let scale = rep.g_value.abs().max(1.0);
        assert!(rep.rem_hessian_defect.abs() < 1e-10 * scale);
        assert!(rep.rem_potential_tail.abs() < 1e-10 * scale);
        let expect = 16.0 * evaluate_functionals(&s).unwrap().energy + rep.o_r_surrogate.unwrap();
        assert!((rep.ddt_bound_rhs.unwrap() - expect).abs() < 1e-9 * scale);
        // And the bound dominates the exact derivative.
        assert!(rep.ddt_exact <= rep.ddt_bound_rhs.unwrap());
    }

    #[test]
    fn bilaplacian_sup_decays_like_r_minus_two() {
        // sup |Δ²φ_R| over smooth regions scales as R^{-2}; cells within a
        // few h of the curvature-jump radii are excluded.
        let grid = Grid::Radial(RadialGrid::new(4, 160.0, 4096).unwrap());
        let g = grid.as_radial().unwrap();
        let sup_bilap = |r_scale: f64| -> f64 {
            let profile = CutoffProfile::new(ProfileKind::Radial, r_scale).unwrap();
            let tables = radial_tables(&grid, &profile).unwrap();
            let h = g.spacing();
            let knots = [
                r_scale,
                crate::cutoff::BRIDGE_LEFT * r_scale,
                2.0 * r_scale,
            ];
            let mut sup = 0.0f64;
            for (j, &r) in g.nodes().iter().enumerate() {
                if knots.iter().any(|&k| (r - k).abs() < 4.0 * h) || r > 2.2 * r_scale {
                    continue;
                }
                sup = sup.max(tables.bilap[j].abs());
            }
            sup
        };
        let s1 = sup_bilap(20.0);
        let s2 = sup_bilap(40.0);
        let ratio = s1 / s2;
        assert!((2.5..6.5).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn cylindrical_bound_paths() {
        let grid = Arc::new(Grid::Cylindrical(
            CylindricalGrid::new(5, 8.0, 8.0, 96, 192).unwrap(),
        ));
        let mut s = SystemState::zero(grid, 1.0).unwrap();
        if let Grid::Cylindrical(g) = s.grid.clone().as_ref() {
            s.u = g.sample_c(|rho, z| {
                C64::from_polar(0.8 * (-(rho * rho + z * z)).exp(), 0.3 * z)
            });
            s.v = g.sample_c(|rho, z| {
                C64::from_polar(0.4 * (-(rho * rho + 1.3 * z * z)).exp(), -0.2 * rho)
            });
        }
        let profile = CutoffProfile::new(ProfileKind::Cylindrical, 4.0).unwrap();
        let rep = cylindrical_bound(&s, &profile, 1.0).unwrap();
        assert!(rep.ddt_exact <= rep.ddt_bound_rhs.unwrap());
        // Doubling R scales the surrogate by about 2^{-3/2} for d = 5.
        let profile2 = CutoffProfile::new(ProfileKind::Cylindrical, 8.0).unwrap();
        let rep2 = cylindrical_bound(&s, &profile2, 1.0).unwrap();
        let ratio = rep2.o_r_surrogate.unwrap() / rep.o_r_surrogate.unwrap();
        let expect = 2.0f64.powf(-1.5);
        assert!(
            (ratio / expect - 1.0).abs() < 0.2,
            "ratio {ratio} vs {expect}"
        );
    }
}
