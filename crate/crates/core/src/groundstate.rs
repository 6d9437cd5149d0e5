//! Ground states of the coupled elliptic systems.
//!
//! For d ≤ 5 the standing-wave profile (φ, ψ) solves
//!
//! ```text
//! −Δφ + φ  = 2φψ,
//! −κΔψ + 2ψ = φ²,
//! ```
//!
//! computed by a Petviashvili fixed-point iteration (stabilizing power 2 for
//! the quadratic nonlinearity) followed by a few damped Newton steps on the
//! coupled discrete system. An independent shooting oracle integrates the
//! radial ODE system directly and is used for cross-validation only.
//!
//! For d = 6 the static system −Δφ = 2φψ, −κΔψ = φ² admits the explicit pair
//! φ = √(κ/2)·24/(1+|x|²)², ψ = 12/(1+|x|²)², which is returned sampled on a
//! grid with closed-form tail corrections for the slowly decaying integrals.
//! Whether that pair is energy-minimizing among all solutions is not
//! certified here; the artifact only verifies that it solves the system and
//! satisfies the associated variational identities.

use crate::error::{Error, Result};
use crate::grid::{unit_sphere_area, Grid, RadialGrid};
use crate::C64;
use crate::functionals::SystemState;
use std::sync::Arc;

/// Default iteration cap for the Petviashvili stage.
pub const MAX_PETVIASHVILI_ITER: usize = 5000;

/// A real radial ground-state pair with certification data.
///
/// The reported functionals (mass, kinetic, potential, energy, action) of
/// iterated solutions carry a two-grid Richardson extrapolation: the solve is
/// repeated on the half-resolution grid and the O(h²) quadrature/solution
/// error is eliminated, which the variational identities need at tight
/// tolerances. The fields themselves stay on the requested grid.
#[derive(Clone)]
pub struct GroundStatePair {
    pub d: u32,
    pub kappa: f64,
    pub grid: Arc<Grid>,
    pub phi: Vec<f64>,
    pub psi: Vec<f64>,
    /// Max of the two equation residuals in quadrature norm. For iterated
    /// solutions this is the residual of the discrete system; for the d = 6
    /// explicit pair it is the discretization residual of the sampled fields;
    /// for shooting output it is the ODE plug-back residual.
    pub residual_norm: f64,
    pub mass: f64,
    pub kinetic: f64,
    pub potential: f64,
    pub energy: f64,
    /// Action S = E + M/2 (meaningful for d ≤ 5 only).
    pub action: Option<f64>,
}

impl GroundStatePair {
    /// Linear interpolation of φ at radius r (even extension at the axis,
    /// zero beyond r_max).
    pub fn interp_phi(&self, r: f64) -> f64 {
        interp_radial(self.radial(), &self.phi, r)
    }

    /// Linear interpolation of ψ at radius r.
    pub fn interp_psi(&self, r: f64) -> f64 {
        interp_radial(self.radial(), &self.psi, r)
    }

    fn radial(&self) -> &RadialGrid {
        match self.grid.as_ref() {
            Grid::Radial(g) => g,
            _ => unreachable!("ground states live on radial grids"),
        }
    }

    /// Both profiles positive and nonincreasing in r (within tolerance).
    pub fn is_positive_decreasing(&self) -> bool {
        let peak_phi = self.phi.iter().cloned().fold(0.0f64, f64::max);
        let peak_psi = self.psi.iter().cloned().fold(0.0f64, f64::max);
        let floor = 1e-8 * peak_phi.max(peak_psi);
        let mono = |f: &[f64]| {
            f.windows(2)
                .all(|w| w[1] <= w[0] + floor.max(1e-14) || w[0] < floor)
        };
        self.phi.iter().all(|&x| x > -floor)
            && self.psi.iter().all(|&x| x > -floor)
            && mono(&self.phi)
            && mono(&self.psi)
    }

    /// The pair as a complex state (t = 0 standing-wave snapshot).
    pub fn to_state(&self) -> SystemState {
        let u: Vec<C64> = self.phi.iter().map(|&x| C64::new(x, 0.0)).collect();
        let v: Vec<C64> = self.psi.iter().map(|&x| C64::new(x, 0.0)).collect();
        SystemState::new(self.grid.clone(), u, v, self.kappa).expect("fields match grid")
    }
}

fn interp_radial(g: &RadialGrid, f: &[f64], r: f64) -> f64 {
    let h = g.spacing();
    let n = g.len();
    if r >= g.r_max() {
        return 0.0;
    }
    let x = r / h - 0.5;
    if x <= 0.0 {
        // Even extension: quadratic in r² through the first two nodes.
        let r0 = g.nodes()[0];
        let r1 = g.nodes()[1];
        return f[0] + (f[1] - f[0]) * (r * r - r0 * r0) / (r1 * r1 - r0 * r0);
    }
    let j = x.floor() as usize;
    if j + 1 >= n {
        let frac = (g.r_max() - r) / (g.r_max() - g.nodes()[n - 1]);
        return f[n - 1] * frac.clamp(0.0, 1.0);
    }
    let frac = x - j as f64;
    f[j] * (1.0 - frac) + f[j + 1] * frac
}

fn quad_residual_norm(g: &RadialGrid, res: &[f64]) -> f64 {
    g.norm2(res).expect("length checked").sqrt()
}

fn residuals(
    g: &RadialGrid,
    kappa: f64,
    phi: &[f64],
    psi: &[f64],
) -> Result<(Vec<f64>, Vec<f64>)> {
    let lap_phi = g.apply_laplacian(phi)?;
    let lap_psi = g.apply_laplacian(psi)?;
    let n = g.len();
    let mut r1 = vec![0.0; n];
    let mut r2 = vec![0.0; n];
    for j in 0..n {
        r1[j] = -lap_phi[j] + phi[j] - 2.0 * phi[j] * psi[j];
        r2[j] = -kappa * lap_psi[j] + 2.0 * psi[j] - phi[j] * phi[j];
    }
    Ok((r1, r2))
}

fn functionals_of_pair(
    g: &RadialGrid,
    d: u32,
    kappa: f64,
    phi: &[f64],
    psi: &[f64],
) -> Result<(f64, f64, f64, f64)> {
    let mass = g.norm2(phi)? + 2.0 * g.norm2(psi)?;
    let kinetic = g.dirichlet_form(phi)? + kappa * g.dirichlet_form(psi)?;
    let mut pot = 0.0;
    for (j, w) in g.weights().iter().enumerate() {
        pot += w * psi[j] * phi[j] * phi[j];
    }
    let energy = 0.5 * kinetic - pot;
    let _ = d;
    Ok((mass, kinetic, pot, energy))
}

/// Petviashvili iteration with damped Newton polish for d ∈ {4, 5}.
pub fn solve_ground_state(
    d: u32,
    kappa: f64,
    grid: &Arc<Grid>,
    tol: f64,
) -> Result<GroundStatePair> {
    solve_ground_state_from(d, kappa, grid, tol, |r| 3.0 * (-r * r).exp(), |r| {
        3.0 * (-r * r).exp()
    })
}

/// Same solver with a caller-supplied positive initial guess (used by the
/// cross-initialization checks).
pub fn solve_ground_state_from(
    d: u32,
    kappa: f64,
    grid: &Arc<Grid>,
    tol: f64,
    guess_phi: impl Fn(f64) -> f64,
    guess_psi: impl Fn(f64) -> f64,
) -> Result<GroundStatePair> {
    if !(d == 4 || d == 5) {
        return Err(Error::DimensionOutOfRange(d));
    }
    if !(kappa > 0.0) {
        return Err(Error::InvalidParameter("kappa must be positive".into()));
    }
    let g = grid.as_radial()?;
    if g.d() != d {
        return Err(Error::InvalidParameter(format!(
            "grid dimension {} does not match requested d = {d}",
            g.d()
        )));
    }
    let (phi, psi, residual) = petviashvili_newton(g, kappa, tol, &guess_phi, &guess_psi)?;
    let (m_fine, t_fine, p_fine, _) = functionals_of_pair(g, d, kappa, &phi, &psi)?;

    // Companion solves on the half and quarter grids, seeded by the
    // restricted fine solution so all three land on the same branch. The
    // two-stage extrapolation cancels both the h² and h⁴ error components of
    // the reported functionals.
    let mut levels = vec![[m_fine, t_fine, p_fine]];
    for div in [2usize, 4] {
        if g.len() % div != 0 || g.len() / div < 16 {
            break;
        }
        let coarse = RadialGrid::new(d, g.r_max(), g.len() / div)?;
        let seed_phi = |r: f64| interp_radial(g, &phi, r);
        let seed_psi = |r: f64| interp_radial(g, &psi, r);
        match petviashvili_newton(&coarse, kappa, tol, &seed_phi, &seed_psi) {
            Ok((cphi, cpsi, _)) => {
                let (mc, tc, pc, _) = functionals_of_pair(&coarse, d, kappa, &cphi, &cpsi)?;
                levels.push([mc, tc, pc]);
            }
            Err(_) => break,
        }
    }
    let extrapolate = |vals: &[[f64; 3]]| -> [f64; 3] {
        match vals.len() {
            3 => {
                let mut out = [0.0; 3];
                for k in 0..3 {
                    let r1_f = vals[0][k] + (vals[0][k] - vals[1][k]) / 3.0;
                    let r1_c = vals[1][k] + (vals[1][k] - vals[2][k]) / 3.0;
                    out[k] = r1_f + (r1_f - r1_c) / 15.0;
                }
                out
            }
            2 => {
                let mut out = [0.0; 3];
                for k in 0..3 {
                    out[k] = vals[0][k] + (vals[0][k] - vals[1][k]) / 3.0;
                }
                out
            }
            _ => vals[0],
        }
    };
    let [mass, kinetic, potential] = extrapolate(&levels);
    let energy = 0.5 * kinetic - potential;
    Ok(GroundStatePair {
        d,
        kappa,
        grid: grid.clone(),
        phi,
        psi,
        residual_norm: residual,
        mass,
        kinetic,
        potential,
        energy,
        action: Some(energy + 0.5 * mass),
    })
}

/// The iteration core: half-relaxed Petviashvili followed by up to three
/// damped Newton steps on the coupled discrete system.
fn petviashvili_newton(
    g: &RadialGrid,
    kappa: f64,
    tol: f64,
    guess_phi: &impl Fn(f64) -> f64,
    guess_psi: &impl Fn(f64) -> f64,
) -> Result<(Vec<f64>, Vec<f64>, f64)> {
    let n = g.len();
    let mut phi = g.sample(guess_phi);
    let mut psi = g.sample(guess_psi);

    let solve1 = g.helmholtz_factor(1.0, 1.0);
    let solve2 = g.helmholtz_factor(2.0, kappa);

    let mut residual = f64::INFINITY;
    let mut converged = false;
    for iter in 0..MAX_PETVIASHVILI_ITER {
        // Stabilized update with power 2 on the joint normalization.
        let lform = g.dirichlet_form(&phi)? + g.norm2(&phi)?
            + kappa * g.dirichlet_form(&psi)?
            + 2.0 * g.norm2(&psi)?;
        let mut nform = 0.0;
        for (j, w) in g.weights().iter().enumerate() {
            nform += w * 3.0 * phi[j] * phi[j] * psi[j];
        }
        if !(nform > 0.0) || !lform.is_finite() {
            return Err(Error::SolverDiverged {
                iterations: iter,
                residual,
            });
        }
        let gamma = lform / nform;
        let g2 = gamma * gamma;

        let mut new_phi: Vec<f64> = (0..n).map(|j| 2.0 * phi[j] * psi[j]).collect();
        let mut new_psi: Vec<f64> = (0..n).map(|j| phi[j] * phi[j]).collect();
        solve1.solve_in_place(&mut new_phi);
        solve2.solve_in_place(&mut new_psi);
        // Half-relaxed update: the component-exchange mode of the pure
        // fixed-point map has multiplier near −1 and settles into a 2-cycle;
        // mixing with weight 1/2 sends that multiplier to ~0.
        for j in 0..n {
            new_phi[j] = 0.5 * phi[j] + 0.5 * g2 * new_phi[j];
            new_psi[j] = 0.5 * psi[j] + 0.5 * g2 * new_psi[j];
        }

        let scale = g.norm2(&phi)?.sqrt().max(1e-300);
        let mut diff2 = 0.0;
        for (j, w) in g.weights().iter().enumerate() {
            let dphi = new_phi[j] - phi[j];
            let dpsi = new_psi[j] - psi[j];
            diff2 += w * (dphi * dphi + dpsi * dpsi);
        }
        let rel_change = diff2.sqrt() / scale;
        phi = new_phi;
        psi = new_psi;

        if rel_change < tol.max(1e-13) {
            let (r1, r2) = residuals(g, kappa, &phi, &psi)?;
            residual = quad_residual_norm(g, &r1).max(quad_residual_norm(g, &r2));
            converged = true;
            break;
        }
    }
    if !converged {
        let (r1, r2) = residuals(g, kappa, &phi, &psi)?;
        residual = quad_residual_norm(g, &r1).max(quad_residual_norm(g, &r2));
        return Err(Error::SolverDiverged {
            iterations: MAX_PETVIASHVILI_ITER,
            residual,
        });
    }

    // Damped Newton polish on the coupled system.
    for _ in 0..3 {
        let (r1, r2) = residuals(g, kappa, &phi, &psi)?;
        let res_before = quad_residual_norm(g, &r1).max(quad_residual_norm(g, &r2));
        if res_before < 1e-14 {
            break;
        }
        let (dphi, dpsi) = newton_step(g, kappa, &phi, &psi, &r1, &r2)?;
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..6 {
            let cand_phi: Vec<f64> = (0..n).map(|j| phi[j] - lambda * dphi[j]).collect();
            let cand_psi: Vec<f64> = (0..n).map(|j| psi[j] - lambda * dpsi[j]).collect();
            let (c1, c2) = residuals(g, kappa, &cand_phi, &cand_psi)?;
            let res_after = quad_residual_norm(g, &c1).max(quad_residual_norm(g, &c2));
            if res_after < res_before {
                phi = cand_phi;
                psi = cand_psi;
                residual = res_after;
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        if !accepted {
            break;
        }
    }

    Ok((phi, psi, residual))
}

/// One Newton direction for the coupled system, solved as a pentadiagonal
/// band system in interleaved (φ_0, ψ_0, φ_1, ψ_1, …) ordering.
fn newton_step(
    g: &RadialGrid,
    kappa: f64,
    phi: &[f64],
    psi: &[f64],
    r1: &[f64],
    r2: &[f64],
) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = g.len();
    let c = g.conductances();
    let w = g.weights();
    let dim = 2 * n;
    const KL: usize = 2;
    const KU: usize = 2;
    let mut band = BandMatrix::new(dim, KL, KU);
    for j in 0..n {
        let c_hi = c[j];
        let c_lo = if j > 0 { c[j - 1] } else { 0.0 };
        let diag_lap = if j == n - 1 {
            (2.0 * c_hi + c_lo) / w[j]
        } else {
            (c_hi + c_lo) / w[j]
        };
        let off_hi = -c_hi / w[j];
        let off_lo = -c_lo / w[j];
        let rp = 2 * j;
        let rq = 2 * j + 1;
        // φ equation: −Δ + 1 − 2ψ on φ, −2φ on ψ.
        band.set(rp, rp, diag_lap + 1.0 - 2.0 * psi[j]);
        band.set(rp, rq, -2.0 * phi[j]);
        if j > 0 {
            band.set(rp, rp - 2, off_lo);
        }
        if j + 1 < n {
            band.set(rp, rp + 2, off_hi);
        }
        // ψ equation: −2φ on φ, −κΔ + 2 on ψ.
        band.set(rq, rp, -2.0 * phi[j]);
        band.set(rq, rq, kappa * diag_lap + 2.0);
        if j > 0 {
            band.set(rq, rq - 2, kappa * off_lo);
        }
        if j + 1 < n {
            band.set(rq, rq + 2, kappa * off_hi);
        }
    }
    let mut rhs = vec![0.0; dim];
    for j in 0..n {
        rhs[2 * j] = r1[j];
        rhs[2 * j + 1] = r2[j];
    }
    band.solve(&mut rhs)?;
    let dphi: Vec<f64> = (0..n).map(|j| rhs[2 * j]).collect();
    let dpsi: Vec<f64> = (0..n).map(|j| rhs[2 * j + 1]).collect();
    Ok((dphi, dpsi))
}

/// Dense-band Gaussian elimination without pivoting (the discrete operators
/// are strongly diagonally dominated by the 1/h² stencil weight).
struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    data: Vec<f64>, // row-major bands: data[row * width + (col - row + kl)]
}

impl BandMatrix {
    fn new(n: usize, kl: usize, ku: usize) -> Self {
        Self {
            n,
            kl,
            ku,
            data: vec![0.0; n * (kl + ku + 1)],
        }
    }

    #[inline]
    fn set(&mut self, row: usize, col: usize, val: f64) {
        let off = col + self.kl - row;
        self.data[row * (self.kl + self.ku + 1) + off] = val;
    }

    #[inline]
    fn get(&self, row: usize, col: usize) -> f64 {
        let off = col + self.kl - row;
        self.data[row * (self.kl + self.ku + 1) + off]
    }

    #[inline]
    fn add_to(&mut self, row: usize, col: usize, val: f64) {
        let off = col + self.kl - row;
        self.data[row * (self.kl + self.ku + 1) + off] += val;
    }

    fn solve(&mut self, rhs: &mut [f64]) -> Result<()> {
        let n = self.n;
        for p in 0..n {
            let pivot = self.get(p, p);
            if pivot.abs() < 1e-300 {
                return Err(Error::SolverDiverged {
                    iterations: p,
                    residual: f64::INFINITY,
                });
            }
            let hi = (p + self.kl).min(n - 1);
            for r in p + 1..=hi {
                let factor = self.get(r, p) / pivot;
                if factor == 0.0 {
                    continue;
                }
                let chi = (p + self.ku).min(n - 1);
                for ccol in p..=chi {
                    let val = -factor * self.get(p, ccol);
                    self.add_to(r, ccol, val);
                }
                rhs[r] -= factor * rhs[p];
            }
        }
        for p in (0..n).rev() {
            let chi = (p + self.ku).min(n - 1);
            let mut acc = rhs[p];
            for ccol in p + 1..=chi {
                acc -= self.get(p, ccol) * rhs[ccol];
            }
            rhs[p] = acc / self.get(p, p);
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Shooting oracle
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, PartialEq, Debug)]
enum ShotOutcome {
    CrossedNegative,
    GrewPositive,
}

struct ShotTrace {
    rs: Vec<f64>,
    phi: Vec<f64>,
    dphi: Vec<f64>,
    psi: Vec<f64>,
    dpsi: Vec<f64>,
}

/// Integrates the radial ODE system from the series start near r = 0 with a
/// classical fourth-order one-step rule, recording the trajectory.
fn integrate_shot(d: u32, kappa: f64, a0: f64, b0: f64, r_end: f64, h: f64) -> ShotTrace {
    let dm1 = (d - 1) as f64;
    let rhs = |r: f64, y: [f64; 4]| -> [f64; 4] {
        let [p, dp, q, dq] = y;
        [
            dp,
            -dm1 / r * dp + p - 2.0 * p * q,
            dq,
            -dm1 / r * dq + (2.0 * q - p * p) / kappa,
        ]
    };
    let r0 = 1e-4;
    let gp = a0 - 2.0 * a0 * b0;
    let gq = (2.0 * b0 - a0 * a0) / kappa;
    let c = 1.0 / (2.0 * d as f64);
    let mut y = [
        a0 + gp * c * r0 * r0,
        2.0 * gp * c * r0,
        b0 + gq * c * r0 * r0,
        2.0 * gq * c * r0,
    ];
    let steps = ((r_end - r0) / h).ceil() as usize;
    let mut trace = ShotTrace {
        rs: Vec::with_capacity(steps + 1),
        phi: Vec::with_capacity(steps + 1),
        dphi: Vec::with_capacity(steps + 1),
        psi: Vec::with_capacity(steps + 1),
        dpsi: Vec::with_capacity(steps + 1),
    };
    let mut r = r0;
    let cap = 4.0 * (a0.max(b0).max(1.0));
    for _ in 0..=steps {
        trace.rs.push(r);
        trace.phi.push(y[0]);
        trace.dphi.push(y[1]);
        trace.psi.push(y[2]);
        trace.dpsi.push(y[3]);
        if y[0].abs() > cap || y[2].abs() > cap || !y[0].is_finite() {
            break;
        }
        let k1 = rhs(r, y);
        let y2 = add_scaled(y, k1, 0.5 * h);
        let k2 = rhs(r + 0.5 * h, y2);
        let y3 = add_scaled(y, k2, 0.5 * h);
        let k3 = rhs(r + 0.5 * h, y3);
        let y4 = add_scaled(y, k3, h);
        let k4 = rhs(r + h, y4);
        for i in 0..4 {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        r += h;
    }
    trace
}

fn add_scaled(y: [f64; 4], k: [f64; 4], s: f64) -> [f64; 4] {
    [
        y[0] + s * k[0],
        y[1] + s * k[1],
        y[2] + s * k[2],
        y[3] + s * k[3],
    ]
}

fn classify_component(values: &[f64]) -> ShotOutcome {
    for &v in values {
        if v < 0.0 {
            return ShotOutcome::CrossedNegative;
        }
    }
    ShotOutcome::GrewPositive
}

/// Independent verification path: nested bisection shooting on (φ(0), ψ(0)).
///
/// For fixed φ(0) the inner loop locates the ψ(0) separating "ψ crosses
/// negative" from "ψ stays positive"; the outer loop applies the same
/// dichotomy to φ along inner-converged trajectories. Deliberately seeded by
/// a coarse amplitude scan, never by the Petviashvili output.
pub fn shooting_oracle(d: u32, kappa: f64, tol: f64) -> Result<GroundStatePair> {
    if !(d == 4 || d == 5) {
        return Err(Error::DimensionOutOfRange(d));
    }
    let r_end = 13.0;
    let h = 5e-4;
    let tol = tol.max(1e-9);

    let inner_b = |a: f64| -> Result<f64> {
        // ψ stays positive for large b, crosses negative for small b.
        let mut b_lo = 1e-3;
        let mut b_hi = 1.0;
        let outcome =
            |b: f64| classify_component(&integrate_shot(d, kappa, a, b, r_end, h).psi);
        while outcome(b_hi) == ShotOutcome::CrossedNegative {
            b_hi *= 2.0;
            if b_hi > 1e4 {
                return Err(Error::BracketNotFound(format!(
                    "inner psi bracket for a = {a}"
                )));
            }
        }
        while outcome(b_lo) == ShotOutcome::GrewPositive {
            b_lo *= 0.5;
            if b_lo < 1e-12 {
                return Err(Error::BracketNotFound(format!(
                    "inner psi lower bracket for a = {a}"
                )));
            }
        }
        while (b_hi - b_lo) / b_hi > 1e-13 {
            let mid = 0.5 * (b_lo + b_hi);
            if outcome(mid) == ShotOutcome::CrossedNegative {
                b_lo = mid;
            } else {
                b_hi = mid;
            }
        }
        Ok(0.5 * (b_lo + b_hi))
    };

    let outer_outcome = |a: f64| -> Result<ShotOutcome> {
        let b = inner_b(a)?;
        Ok(classify_component(
            &integrate_shot(d, kappa, a, b, r_end, h).phi,
        ))
    };

    // Coarse scan for the outer bracket.
    let scan: Vec<f64> = (0..26).map(|i| 0.4 * 1.25f64.powi(i)).collect();
    let mut bracket = None;
    let mut prev: Option<(f64, ShotOutcome)> = None;
    for &a in &scan {
        let oc = match outer_outcome(a) {
            Ok(oc) => oc,
            Err(_) => continue,
        };
        if let Some((pa, poc)) = prev {
            if poc != oc {
                bracket = Some((pa, a, poc));
                break;
            }
        }
        prev = Some((a, oc));
    }
    let (mut a_lo, mut a_hi, lo_outcome) = bracket.ok_or_else(|| {
        Error::BracketNotFound("outer phi amplitude scan found no sign change".into())
    })?;
    while (a_hi - a_lo) / a_hi > tol * 1e-2 {
        let mid = 0.5 * (a_lo + a_hi);
        let oc = outer_outcome(mid)?;
        if oc == lo_outcome {
            a_lo = mid;
        } else {
            a_hi = mid;
        }
    }

    let a_star = 0.5 * (a_lo + a_hi);
    let b_star = inner_b(a_star)?;
    let trace = integrate_shot(d, kappa, a_star, b_star, r_end, h);

    // Cut where the boundary trajectory stops decaying or either component
    // first dips below zero.
    let peak = trace.phi[0].max(trace.psi[0]);
    let mut cut = trace.rs.len() - 1;
    let mut best = f64::INFINITY;
    for i in 0..trace.rs.len() {
        if trace.phi[i] <= 0.0 || trace.psi[i] <= 0.0 {
            break;
        }
        let m = trace.phi[i].abs().max(trace.psi[i].abs());
        if m < best {
            best = m;
            cut = i;
        }
        if m > 50.0 * best.max(1e-12 * peak) {
            break;
        }
    }

    // Functionals from the dense trajectory (trapezoid in r with the d-ball
    // surface weight; the integrands vanish rapidly at both ends).
    let omega = unit_sphere_area(d);
    let mut mass = 0.0;
    let mut kin = 0.0;
    let mut pot = 0.0;
    for i in 0..cut {
        let r_mid = 0.5 * (trace.rs[i] + trace.rs[i + 1]);
        let dr = trace.rs[i + 1] - trace.rs[i];
        let wgt = omega * r_mid.powi(d as i32 - 1) * dr;
        let p = 0.5 * (trace.phi[i] + trace.phi[i + 1]);
        let q = 0.5 * (trace.psi[i] + trace.psi[i + 1]);
        let dp = 0.5 * (trace.dphi[i] + trace.dphi[i + 1]);
        let dq = 0.5 * (trace.dpsi[i] + trace.dpsi[i + 1]);
        mass += wgt * (p * p + 2.0 * q * q);
        kin += wgt * (dp * dp + kappa * dq * dq);
        pot += wgt * q * p * p;
    }
    let energy = 0.5 * kin - pot;

    // Plug-back residual of the ODE along the stored trajectory.
    let mut res = 0.0f64;
    let dm1 = (d - 1) as f64;
    let idx_hi = cut.min(trace.rs.len().saturating_sub(2));
    for i in 1..idx_hi {
        let r = trace.rs[i];
        let d2p = (trace.phi[i + 1] - 2.0 * trace.phi[i] + trace.phi[i - 1]) / (h * h);
        let d2q = (trace.psi[i + 1] - 2.0 * trace.psi[i] + trace.psi[i - 1]) / (h * h);
        let dp = (trace.phi[i + 1] - trace.phi[i - 1]) / (2.0 * h);
        let dq = (trace.psi[i + 1] - trace.psi[i - 1]) / (2.0 * h);
        let r1 = d2p + dm1 / r * dp - trace.phi[i] + 2.0 * trace.phi[i] * trace.psi[i];
        let r2 = kappa * (d2q + dm1 / r * dq) - 2.0 * trace.psi[i] + trace.phi[i] * trace.phi[i];
        res = res.max(r1.abs()).max(r2.abs());
    }

    // Resample onto a standard radial grid for export/comparison.
    let grid = Arc::new(Grid::Radial(RadialGrid::new(d, r_end, 2048)?));
    let g = grid.as_radial()?;
    let sample_from_trace = |vals: &[f64]| -> Vec<f64> {
        g.nodes()
            .iter()
            .map(|&r| {
                let x = (r - trace.rs[0]) / h;
                if x <= 0.0 {
                    vals[0]
                } else {
                    let i = x.floor() as usize;
                    if i >= cut || i + 1 >= vals.len() {
                        0.0
                    } else {
                        let frac = x - i as f64;
                        vals[i] * (1.0 - frac) + vals[i + 1] * frac
                    }
                }
            })
            .collect()
    };
    let phi = sample_from_trace(&trace.phi);
    let psi = sample_from_trace(&trace.psi);

    Ok(GroundStatePair {
        d,
        kappa,
        grid,
        phi,
        psi,
        residual_norm: res,
        mass,
        kinetic: kin,
        potential: pot,
        energy,
        action: Some(energy + 0.5 * mass),
    })
}

// ---------------------------------------------------------------------------
// Explicit energy-critical pair
// ---------------------------------------------------------------------------

/// ∫_R^∞ r^{2k+1} (1+r²)^{-m} dr in closed form (k < m − 1).
fn tail_integral(r: f64, k: u32, m: u32) -> f64 {
    let t0 = 1.0 + r * r;
    let mut acc = 0.0;
    for i in 0..=k {
        let binom = binomial(k, i);
        let sign = if (k - i) % 2 == 0 { 1.0 } else { -1.0 };
        let pow = i as i32 - m as i32 + 1;
        acc += sign * binom * t0.powi(pow) / (m as f64 - i as f64 - 1.0);
    }
    0.5 * acc
}

fn binomial(n: u32, k: u32) -> f64 {
    let mut acc = 1.0;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc
}

/// The explicit static pair in d = 6:
/// φ = √(κ/2)·24/(1+|x|²)², ψ = 12/(1+|x|²)².
///
/// Functionals are evaluated by grid quadrature of the closed-form profiles
/// (analytic radial derivatives) plus exact tail corrections for the
/// polynomial decay beyond r_max; the residual is the discretization residual
/// of the sampled fields with the analytic ghost sample at r_max + h/2.
pub fn explicit_static_6d(kappa: f64, grid: &Arc<Grid>) -> Result<GroundStatePair> {
    if !(kappa > 0.0) {
        return Err(Error::InvalidParameter("kappa must be positive".into()));
    }
    let g = grid.as_radial()?;
    if g.d() != 6 {
        return Err(Error::DimensionOutOfRange(g.d()));
    }
    let u_prof = |r: f64| 24.0 / (1.0 + r * r).powi(2);
    let du_prof = |r: f64| -96.0 * r / (1.0 + r * r).powi(3);
    let amp_phi = (kappa / 2.0).sqrt();
    let phi = g.sample(|r| amp_phi * u_prof(r));
    let psi = g.sample(|r| 0.5 * u_prof(r));

    let omega = unit_sphere_area(6);
    let r_max = g.r_max();
    // Grid quadrature of the closed-form densities.
    let u2 = g.sample(|r| u_prof(r) * u_prof(r));
    let du2 = g.sample(|r| du_prof(r) * du_prof(r));
    let u3 = g.sample(|r| u_prof(r).powi(3));
    let int_u2 = g.integrate(&u2)? + 576.0 * omega * tail_integral(r_max, 2, 4);
    let int_du2 = g.integrate(&du2)? + 9216.0 * omega * tail_integral(r_max, 3, 6);
    let int_u3 = g.integrate(&u3)? + 13824.0 * omega * tail_integral(r_max, 2, 6);

    let mass = (kappa + 1.0) / 2.0 * int_u2;
    let kinetic = 0.75 * kappa * int_du2;
    let potential = 0.25 * kappa * int_u3;
    let energy = 0.5 * kinetic - potential;

    // Discretization residual. Both equations reduce to multiples of the
    // same core residual ρ = −Δ_h U − U² with U = 24/(1+r²)²:
    // res₁ = √(κ/2) ρ and res₂ = (κ/2) ρ. The stencil increments
    // U(r+h) − U(r) are evaluated in closed form,
    //   ΔU = −24 h (a+b)(2+a²+b²) / [(1+a²)²(1+b²)²],
    // which removes the 1/h² round-off amplification of sampled differences
    // and leaves the pure truncation error of the operator.
    let h = g.spacing();
    let n = g.len();
    let conduct = g.conductances();
    let stable_increment = |a: f64| -> f64 {
        let b = a + h;
        let pa = (1.0 + a * a) * (1.0 + a * a);
        let pb = (1.0 + b * b) * (1.0 + b * b);
        -24.0 * h * (a + b) * (2.0 + a * a + b * b) / (pa * pb)
    };
    let mut rho = vec![0.0; n];
    for j in 0..n {
        let flux_hi = conduct[j] * stable_increment(g.nodes()[j]);
        let flux_lo = if j > 0 {
            conduct[j - 1] * stable_increment(g.nodes()[j - 1])
        } else {
            0.0
        };
        let lap_u = (flux_hi - flux_lo) / g.weights()[j];
        rho[j] = -lap_u - u_prof(g.nodes()[j]).powi(2);
    }
    let residual = (kappa / 2.0).sqrt().max(kappa / 2.0) * quad_residual_norm(g, &rho);

    Ok(GroundStatePair {
        d: 6,
        kappa,
        grid: grid.clone(),
        phi,
        psi,
        residual_norm: residual,
        mass,
        kinetic,
        potential,
        energy,
        action: None,
    })
}

/// Writes the pair as columnar text (r, φ, ψ).
pub fn write_profile(pair: &GroundStatePair, out: &mut impl std::io::Write) -> std::io::Result<()> {
    let g = pair.radial();
    writeln!(out, "# r phi psi")?;
    for (j, &r) in g.nodes().iter().enumerate() {
        writeln!(out, "{:.16e} {:.16e} {:.16e}", r, pair.phi[j], pair.psi[j])?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn radial(d: u32, r_max: f64, n: usize) -> Arc<Grid> {
        Arc::new(Grid::Radial(RadialGrid::new(d, r_max, n).unwrap()))
    }

    #[test]
    fn petviashvili_d4_pohozaev() {
        // d = 4: M = T/2 = P within discretization error.
        let grid = radial(4, 16.0, 1024);
        let gs = solve_ground_state(4, 0.5, &grid, 1e-12).unwrap();
        assert!(gs.residual_norm < 1e-9, "residual {}", gs.residual_norm);
        assert!(gs.is_positive_decreasing());
        let rel = |a: f64, b: f64| (a - b).abs() / b.abs();
        assert!(rel(gs.mass, 0.5 * gs.kinetic) < 1e-5, "M vs T/2: {}", rel(gs.mass, 0.5 * gs.kinetic));
        assert!(rel(gs.mass, gs.potential) < 1e-5);
    }

    #[test]
    fn petviashvili_d5_energy_ratio() {
        let grid = radial(5, 14.0, 768);
        let gs = solve_ground_state(5, 1.0, &grid, 1e-12).unwrap();
        assert!(gs.residual_norm < 1e-9);
        // E = T/10 (extrapolated functionals resolve the scaling identity).
        let rel = (gs.energy - gs.kinetic / 10.0).abs() / gs.energy.abs();
        assert!(rel < 1e-5, "rel {rel}");
    }

    #[test]
    fn cross_initialization_reproduces_mass() {
        let grid = radial(4, 14.0, 512);
        let a = solve_ground_state_from(4, 1.0, &grid, 1e-12, |r| 2.0 * (-0.7 * r * r).exp(), |r| {
            4.0 * (-1.3 * r * r).exp()
        })
        .unwrap();
        let b = solve_ground_state_from(4, 1.0, &grid, 1e-12, |r| 5.0 * (-1.8 * r * r).exp(), |r| {
            1.5 * (-0.6 * r * r).exp()
        })
        .unwrap();
        let rel = (a.mass - b.mass).abs() / a.mass;
        assert!(rel < 1e-5, "masses differ by {rel}");
    }

    #[test]
    fn explicit_6d_identities() {
        let grid = radial(6, 50.0, 4096);
        let gs = explicit_static_6d(0.5, &grid).unwrap();
        // κ = 1/2 makes φ = ψ = 12/(1+r²)².
        let g = match grid.as_ref() {
            Grid::Radial(g) => g,
            _ => unreachable!(),
        };
        for (j, &r) in g.nodes().iter().enumerate().step_by(97) {
            let expect = 12.0 / (1.0 + r * r).powi(2);
            assert!((gs.phi[j] - expect).abs() < 1e-12);
            assert!((gs.psi[j] - expect).abs() < 1e-12);
        }
        // T = 3P and E = T/6 with tail-corrected quadrature.
        let rel_tp = (gs.kinetic - 3.0 * gs.potential).abs() / gs.kinetic;
        assert!(rel_tp < 1e-6, "T vs 3P: {rel_tp}");
        let rel_et = (gs.energy - gs.kinetic / 6.0).abs() / gs.energy;
        assert!(rel_et < 1e-6, "E vs T/6: {rel_et}");
        // Against the closed forms T = 172.8 κ π³, P = 57.6 κ π³.
        let t_exact = 172.8 * 0.5 * PI.powi(3);
        assert!((gs.kinetic - t_exact).abs() / t_exact < 1e-6);
    }

    #[test]
    fn explicit_6d_rejects_wrong_dimension() {
        let grid = radial(5, 30.0, 256);
        assert!(explicit_static_6d(1.0, &grid).is_err());
    }

    #[test]
    fn tail_integral_matches_beta_values() {
        assert!((tail_integral(0.0, 2, 6) - 1.0 / 60.0).abs() < 1e-15);
        assert!((tail_integral(0.0, 3, 6) - 1.0 / 40.0).abs() < 1e-15);
        // Numerical check at finite R against Simpson.
        let r0 = 3.0;
        let simpson: f64 = {
            let n = 400_000;
            let hi = 4000.0;
            let h = (hi - r0) / n as f64;
            let f = |r: f64| r.powi(7) * (1.0 + r * r).powi(-6);
            let mut acc = f(r0) + f(hi);
            for i in 1..n {
                acc += if i % 2 == 1 { 4.0 } else { 2.0 } * f(r0 + i as f64 * h);
            }
            acc * h / 3.0
        };
        assert!((tail_integral(r0, 3, 6) - simpson).abs() < 1e-10);
    }

    #[test]
    fn shooting_agrees_with_petviashvili_d4() {
        let grid = radial(4, 16.0, 1024);
        let gs = solve_ground_state(4, 0.5, &grid, 1e-12).unwrap();
        let shot = shooting_oracle(4, 0.5, 1e-4).unwrap();
        assert!(shot.residual_norm < 1e-4, "ODE residual {}", shot.residual_norm);
        assert!(shot.is_positive_decreasing());
        for (a, b, name) in [
            (gs.mass, shot.mass, "mass"),
            (gs.kinetic, shot.kinetic, "kinetic"),
            (gs.potential, shot.potential, "potential"),
        ] {
            let rel = (a - b).abs() / a.abs();
            assert!(rel < 1e-3, "{name} differs by {rel} ({a} vs {b})");
        }
    }
}
