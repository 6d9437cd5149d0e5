//! Deterministic initial-data families and random test-pair generators.

use crate::error::Result;
use crate::functionals::SystemState;
use crate::grid::Grid;
use crate::groundstate::GroundStatePair;
use crate::C64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

/// Gaussian pair (a_u e^{iφ_u} e^{-w_u r²}, a_v e^{iφ_v} e^{-w_v r²}).
#[derive(Clone, Copy, Debug)]
pub struct GaussianPair {
    pub amp_u: f64,
    pub amp_v: f64,
    pub width_u: f64,
    pub width_v: f64,
    pub phase_u: f64,
    pub phase_v: f64,
}

impl Default for GaussianPair {
    fn default() -> Self {
        Self {
            amp_u: 1.0,
            amp_v: 1.0,
            width_u: 1.0,
            width_v: 1.0,
            phase_u: 0.0,
            phase_v: 0.0,
        }
    }
}

impl GaussianPair {
    pub fn sample(&self, grid: &Arc<Grid>, kappa: f64) -> Result<SystemState> {
        let eu = C64::from_polar(self.amp_u, self.phase_u);
        let ev = C64::from_polar(self.amp_v, self.phase_v);
        let (u, v) = match grid.as_ref() {
            Grid::Radial(g) => (
                g.sample_c(|r| eu * (-self.width_u * r * r).exp()),
                g.sample_c(|r| ev * (-self.width_v * r * r).exp()),
            ),
            Grid::Cylindrical(g) => (
                g.sample_c(|rho, z| eu * (-self.width_u * (rho * rho + z * z)).exp()),
                g.sample_c(|rho, z| ev * (-self.width_v * (rho * rho + z * z)).exp()),
            ),
        };
        SystemState::new(grid.clone(), u, v, kappa)
    }
}

/// Samples a ground state onto an arbitrary grid (radially symmetric lift on
/// cylindrical grids), with amplitude factor and dilation:
/// u(x) = amp · λ² φ(λ|x|), v(x) = amp · λ² ψ(λ|x|).
pub fn scaled_ground_state(
    gs: &GroundStatePair,
    grid: &Arc<Grid>,
    lambda: f64,
    amp: f64,
) -> Result<SystemState> {
    let l2 = amp * lambda * lambda;
    let (u, v) = match grid.as_ref() {
        Grid::Radial(g) => (
            g.sample_c(|r| C64::new(l2 * gs.interp_phi(lambda * r), 0.0)),
            g.sample_c(|r| C64::new(l2 * gs.interp_psi(lambda * r), 0.0)),
        ),
        Grid::Cylindrical(g) => (
            g.sample_c(|rho, z| {
                C64::new(l2 * gs.interp_phi(lambda * (rho * rho + z * z).sqrt()), 0.0)
            }),
            g.sample_c(|rho, z| {
                C64::new(l2 * gs.interp_psi(lambda * (rho * rho + z * z).sqrt()), 0.0)
            }),
        ),
    };
    SystemState::new(grid.clone(), u, v, gs.kappa)
}

/// Random smooth complex pair for inequality sampling: sums of a few
/// Gaussians with random widths, amplitudes, phases, and (on cylindrical
/// grids) centers along the symmetry axis.
pub fn random_smooth_pair(grid: &Arc<Grid>, kappa: f64, rng: &mut ChaCha8Rng) -> Result<SystemState> {
    let make_component = |rng: &mut ChaCha8Rng| {
        let terms: Vec<(f64, f64, f64, f64)> = (0..3)
            .map(|_| {
                (
                    rng.gen_range(0.05..2.0),   // amplitude
                    rng.gen_range(0.4..2.5),    // width
                    rng.gen_range(0.0..std::f64::consts::TAU), // phase
                    rng.gen_range(-1.0..1.0),   // axial center (cylindrical only)
                )
            })
            .collect();
        move |r2: f64, z: f64| -> C64 {
            let mut acc = C64::new(0.0, 0.0);
            for &(a, w, ph, z0) in &terms {
                let zz = z - z0;
                acc += C64::from_polar(a, ph) * (-w * (r2 + zz * zz)).exp();
            }
            acc
        }
    };
    let fu = make_component(rng);
    let fv = make_component(rng);
    let (u, v) = match grid.as_ref() {
        Grid::Radial(g) => (
            g.sample_c(|r| fu(r * r, 0.0)),
            g.sample_c(|r| fv(r * r, 0.0)),
        ),
        Grid::Cylindrical(g) => (
            g.sample_c(|rho, z| fu(rho * rho, z)),
            g.sample_c(|rho, z| fv(rho * rho, z)),
        ),
    };
    SystemState::new(grid.clone(), u, v, kappa)
}

/// Deterministic family of Gaussian pairs for calibration sweeps.
pub fn gaussian_family(count: usize, seed: u64) -> Vec<GaussianPair> {
    use rand::SeedableRng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| GaussianPair {
            amp_u: rng.gen_range(0.3..2.0),
            amp_v: rng.gen_range(0.3..2.0),
            width_u: rng.gen_range(0.6..1.8),
            width_v: rng.gen_range(0.6..1.8),
            phase_u: rng.gen_range(0.0..std::f64::consts::TAU),
            phase_v: rng.gen_range(0.0..std::f64::consts::TAU),
        })
        .collect()
}
