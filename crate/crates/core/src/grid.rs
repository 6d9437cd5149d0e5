//! Symmetry-reduced discretizations of ℝ^d (d = 4, 5, 6).
//!
//! Two grid families are provided:
//!
//! * [`RadialGrid`]: cell-centered nodes r_j = (j + 1/2)h on (0, r_max] for
//!   fully radial data, with quadrature weights ω_{d-1} r_j^{d-1} h.
//! * [`CylindricalGrid`]: tensor product of a cell-centered radial grid in
//!   ρ = |y| (y ∈ ℝ^{d-1}) and a uniform cell-centered grid in the last
//!   coordinate x_d ∈ [-z_max, z_max].
//!
//! The Laplacian is discretized in conservative flux form,
//! r^{1-m} ∂_r (r^{m-1} ∂_r f) with m = d (radial) or m = d - 1 (the ρ part
//! of the cylindrical reduction), plus a plain second difference in x_d.
//! Face conductances are fixed by requiring the stencil to be exact on
//! f = r², which keeps the operator second-order accurate down to the first
//! cell at the axis while remaining symmetric and nonpositive with respect
//! to the quadrature inner product. The coordinate singularity at r = 0
//! needs no special casing: the inner flux of the first cell vanishes.
//!
//! Outer boundaries are homogeneous Dirichlet (ghost reflection −f); runs
//! are expected to stop before wave content reaches them.

use crate::error::{Error, Result};
use crate::C64;
use rayon::prelude::*;
use std::ops::{Add, Mul, Neg, Sub};

/// Fields with at least this many points use rayon for line sweeps.
const PAR_THRESHOLD: usize = 1 << 15;

/// Scalar types the stencils operate on.
pub trait Scalar:
    Copy
    + Send
    + Sync
    + Add<Output = Self>
    + Sub<Output = Self>
    + Neg<Output = Self>
    + Mul<f64, Output = Self>
{
    fn zero() -> Self;
    fn one() -> Self;
}

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
}

impl Scalar for C64 {
    fn zero() -> Self {
        C64::new(0.0, 0.0)
    }
    fn one() -> Self {
        C64::new(1.0, 0.0)
    }
}

/// Surface area of the unit sphere S^{m-1} ⊂ ℝ^m.
pub fn unit_sphere_area(m: u32) -> f64 {
    use std::f64::consts::PI;
    match m {
        1 => 2.0,
        2 => 2.0 * PI,
        3 => 4.0 * PI,
        4 => 2.0 * PI * PI,
        5 => 8.0 * PI * PI / 3.0,
        6 => PI * PI * PI,
        _ => panic!("unit_sphere_area: unsupported dimension {m}"),
    }
}

/// Ghost-cell rule for the outer boundary of stencil applications.
#[derive(Clone, Copy, Debug)]
pub enum GhostRule {
    /// Homogeneous Dirichlet: ghost = −(last cell value).
    Dirichlet,
    /// Quadratic extrapolation from the last three cells. Used for weight
    /// profiles that do not vanish at r_max.
    Extrapolate,
    /// Explicitly supplied ghost value (e.g. an analytic sample beyond r_max).
    Value(f64),
}

// ---------------------------------------------------------------------------
// 1D conservative radial stencil, shared by RadialGrid and the ρ part of
// CylindricalGrid.
// ---------------------------------------------------------------------------

/// Face conductances for the conservative form in m "radial" dimensions.
///
/// `conduct[j]` couples cells j and j+1 (face at (j+1)h); `conduct[n-1]` is
/// the outer boundary face. Chosen so that the stencil is exact on r², which
/// pins the telescoped prefix sums of the midpoint weights.
fn radial_conductances(m: u32, n: usize, h: f64) -> (Vec<f64>, Vec<f64>) {
    let omega = unit_sphere_area(m);
    let mut weights = Vec::with_capacity(n);
    let mut conduct = Vec::with_capacity(n);
    let mut prefix = 0.0;
    for j in 0..n {
        let r = (j as f64 + 0.5) * h;
        let w = omega * r.powi(m as i32 - 1) * h;
        weights.push(w);
        prefix += w;
        let r_face = (j as f64 + 1.0) * h;
        conduct.push(m as f64 * prefix / (h * r_face));
    }
    (weights, conduct)
}

/// Applies the 1D conservative stencil to a contiguous line.
fn apply_line<T: Scalar>(
    f: &[T],
    out: &mut [T],
    weights: &[f64],
    conduct: &[f64],
    ghost: GhostRule,
) {
    let n = f.len();
    if n == 1 {
        let g = ghost_value(f, ghost);
        out[0] = (g - f[0]) * (conduct[0] / weights[0]);
        return;
    }
    out[0] = (f[1] - f[0]) * (conduct[0] / weights[0]);
    for j in 1..n - 1 {
        let flux_hi = (f[j + 1] - f[j]) * conduct[j];
        let flux_lo = (f[j] - f[j - 1]) * conduct[j - 1];
        out[j] = (flux_hi - flux_lo) * (1.0 / weights[j]);
    }
    let g = ghost_value(f, ghost);
    let flux_hi = (g - f[n - 1]) * conduct[n - 1];
    let flux_lo = (f[n - 1] - f[n - 2]) * conduct[n - 2];
    out[n - 1] = (flux_hi - flux_lo) * (1.0 / weights[n - 1]);
}

fn ghost_value<T: Scalar>(f: &[T], ghost: GhostRule) -> T {
    let n = f.len();
    match ghost {
        GhostRule::Dirichlet => -f[n - 1],
        GhostRule::Extrapolate => {
            if n >= 3 {
                f[n - 1] * 3.0 - f[n - 2] * 3.0 + f[n - 3]
            } else {
                f[n - 1]
            }
        }
        GhostRule::Value(v) => T::one() * v,
    }
}

// ---------------------------------------------------------------------------
// Radial grid
// ---------------------------------------------------------------------------

/// Cell-centered radial discretization of ℝ^d under full rotational symmetry.
#[derive(Clone, Debug)]
pub struct RadialGrid {
    d: u32,
    r_max: f64,
    n: usize,
    h: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    conduct: Vec<f64>,
}

impl RadialGrid {
    /// Builds a radial grid with n cells on (0, r_max].
    pub fn new(d: u32, r_max: f64, n: usize) -> Result<Self> {
        if !(4..=6).contains(&d) {
            return Err(Error::DimensionOutOfRange(d));
        }
        if !(r_max > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "r_max must be positive, got {r_max}"
            )));
        }
        if n < 16 {
            return Err(Error::InvalidParameter(format!(
                "radial grid needs at least 16 cells, got {n}"
            )));
        }
        let h = r_max / n as f64;
        let nodes: Vec<f64> = (0..n).map(|j| (j as f64 + 0.5) * h).collect();
        let (weights, conduct) = radial_conductances(d, n, h);
        Ok(Self {
            d,
            r_max,
            n,
            h,
            nodes,
            weights,
            conduct,
        })
    }

    pub fn d(&self) -> u32 {
        self.d
    }
    pub fn r_max(&self) -> f64 {
        self.r_max
    }
    pub fn len(&self) -> usize {
        self.n
    }
    pub fn is_empty(&self) -> bool {
        self.n == 0
    }
    pub fn spacing(&self) -> f64 {
        self.h
    }
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.n {
            return Err(Error::ShapeMismatch {
                expected: self.n,
                got: len,
            });
        }
        Ok(())
    }

    /// Quadrature Σ w_j f_j ≈ ∫_{ℝ^d} f dx for radial integrands.
    pub fn integrate(&self, f: &[f64]) -> Result<f64> {
        self.check_len(f.len())?;
        Ok(self
            .weights
            .iter()
            .zip(f)
            .map(|(w, v)| w * v)
            .sum())
    }

    /// Discrete Laplacian with homogeneous Dirichlet closure at r_max.
    pub fn apply_laplacian<T: Scalar>(&self, f: &[T]) -> Result<Vec<T>> {
        self.apply_laplacian_with_ghost(f, GhostRule::Dirichlet)
    }

    /// Discrete Laplacian with a caller-selected outer ghost rule.
    pub fn apply_laplacian_with_ghost<T: Scalar>(
        &self,
        f: &[T],
        ghost: GhostRule,
    ) -> Result<Vec<T>> {
        self.check_len(f.len())?;
        let mut out = vec![T::zero(); self.n];
        apply_line(f, &mut out, &self.weights, &self.conduct, ghost);
        Ok(out)
    }

    /// Node-centered radial derivative (central differences, even mirror at
    /// the axis, Dirichlet ghost at r_max).
    pub fn gradient<T: Scalar>(&self, f: &[T]) -> Result<Vec<T>> {
        self.check_len(f.len())?;
        let n = self.n;
        let inv2h = 1.0 / (2.0 * self.h);
        let mut out = vec![T::zero(); n];
        out[0] = (f[1] - f[0]) * inv2h;
        for j in 1..n - 1 {
            out[j] = (f[j + 1] - f[j - 1]) * inv2h;
        }
        out[n - 1] = (-f[n - 1] - f[n - 2]) * inv2h;
        Ok(out)
    }

    /// Σ w_j |f_j|².
    pub fn norm2_c(&self, f: &[C64]) -> Result<f64> {
        self.check_len(f.len())?;
        Ok(self
            .weights
            .iter()
            .zip(f)
            .map(|(w, v)| w * v.norm_sqr())
            .sum())
    }

    /// ⟨f, −Δf⟩ in the quadrature inner product (exact summation by parts).
    pub fn dirichlet_form_c(&self, f: &[C64]) -> Result<f64> {
        self.check_len(f.len())?;
        let n = self.n;
        let mut acc = 0.0;
        for j in 0..n - 1 {
            acc += self.conduct[j] * (f[j + 1] - f[j]).norm_sqr();
        }
        acc += 2.0 * self.conduct[n - 1] * f[n - 1].norm_sqr();
        Ok(acc)
    }

    /// Σ w_j f_j g_j for real fields.
    pub fn inner(&self, f: &[f64], g: &[f64]) -> Result<f64> {
        self.check_len(f.len())?;
        self.check_len(g.len())?;
        Ok(self
            .weights
            .iter()
            .zip(f.iter().zip(g))
            .map(|(w, (a, b))| w * a * b)
            .sum())
    }

    /// Σ w_j f_j².
    pub fn norm2(&self, f: &[f64]) -> Result<f64> {
        self.inner(f, f)
    }

    pub(crate) fn conductances(&self) -> &[f64] {
        &self.conduct
    }

    /// Real-field variant of [`Self::dirichlet_form_c`].
    pub fn dirichlet_form(&self, f: &[f64]) -> Result<f64> {
        self.check_len(f.len())?;
        let n = self.n;
        let mut acc = 0.0;
        for j in 0..n - 1 {
            let d = f[j + 1] - f[j];
            acc += self.conduct[j] * d * d;
        }
        acc += 2.0 * self.conduct[n - 1] * f[n - 1] * f[n - 1];
        Ok(acc)
    }

    /// Samples a radial function at the nodes.
    pub fn sample(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        self.nodes.iter().map(|&r| f(r)).collect()
    }

    /// Samples a complex radial function at the nodes.
    pub fn sample_c(&self, f: impl Fn(f64) -> C64) -> Vec<C64> {
        self.nodes.iter().map(|&r| f(r)).collect()
    }

    /// Prefactored solver for (σ I − coef·Δ) x = b, σ > 0, coef > 0.
    pub fn helmholtz_factor(&self, sigma: f64, coef: f64) -> TridiagFactor<f64> {
        let n = self.n;
        let mut sub = vec![0.0; n];
        let mut diag = vec![0.0; n];
        let mut sup = vec![0.0; n];
        for j in 0..n {
            let c_hi = self.conduct[j];
            let c_lo = if j > 0 { self.conduct[j - 1] } else { 0.0 };
            let w = self.weights[j];
            let d_lap = if j == n - 1 {
                -(2.0 * c_hi + c_lo) / w
            } else {
                -(c_hi + c_lo) / w
            };
            diag[j] = sigma - coef * d_lap;
            if j > 0 {
                sub[j] = -coef * c_lo / w;
            }
            if j < n - 1 {
                sup[j] = -coef * c_hi / w;
            }
        }
        TridiagFactor::new(sub, diag, sup)
    }

    /// Prefactored Crank–Nicolson half of (I − αΔ) x = b with complex α.
    pub fn cayley_factor(&self, alpha: C64) -> TridiagFactor<C64> {
        let n = self.n;
        let one = C64::new(1.0, 0.0);
        let mut sub = vec![C64::new(0.0, 0.0); n];
        let mut diag = vec![C64::new(0.0, 0.0); n];
        let mut sup = vec![C64::new(0.0, 0.0); n];
        for j in 0..n {
            let c_hi = self.conduct[j];
            let c_lo = if j > 0 { self.conduct[j - 1] } else { 0.0 };
            let w = self.weights[j];
            let d_lap = if j == n - 1 {
                -(2.0 * c_hi + c_lo) / w
            } else {
                -(c_hi + c_lo) / w
            };
            diag[j] = one - alpha * d_lap;
            if j > 0 {
                sub[j] = -alpha * (c_lo / w);
            }
            if j < n - 1 {
                sup[j] = -alpha * (c_hi / w);
            }
        }
        TridiagFactor::new(sub, diag, sup)
    }

    /// Single Crank–Nicolson (Cayley) step: x solves (I − αΔ)x = (I + αΔ)f.
    /// Exactly norm-preserving for purely imaginary α.
    pub fn cayley_step(&self, f: &mut [C64], alpha: C64) -> Result<()> {
        self.check_len(f.len())?;
        let lap = self.apply_laplacian(f)?;
        for (v, l) in f.iter_mut().zip(&lap) {
            *v += alpha * l;
        }
        let factor = self.cayley_factor(alpha);
        factor.solve_in_place(f);
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Cylindrical grid
// ---------------------------------------------------------------------------

/// Tensor grid for cylindrically symmetric data f(|y|, x_d) on
/// (0, ρ_max] × [−z_max, z_max].
#[derive(Clone, Debug)]
pub struct CylindricalGrid {
    d: u32,
    rho_max: f64,
    z_max: f64,
    n_rho: usize,
    n_z: usize,
    h_rho: f64,
    h_z: f64,
    rho_nodes: Vec<f64>,
    z_nodes: Vec<f64>,
    w_rho: Vec<f64>,
    conduct_rho: Vec<f64>,
}

impl CylindricalGrid {
    pub fn new(d: u32, rho_max: f64, z_max: f64, n_rho: usize, n_z: usize) -> Result<Self> {
        if !(4..=6).contains(&d) {
            return Err(Error::DimensionOutOfRange(d));
        }
        if !(rho_max > 0.0 && z_max > 0.0) {
            return Err(Error::InvalidParameter(
                "cylindrical half-extents must be positive".into(),
            ));
        }
        if n_rho < 16 || n_z < 16 {
            return Err(Error::InvalidParameter(
                "cylindrical grid needs at least 16 cells per direction".into(),
            ));
        }
        let h_rho = rho_max / n_rho as f64;
        let h_z = 2.0 * z_max / n_z as f64;
        let rho_nodes: Vec<f64> = (0..n_rho).map(|i| (i as f64 + 0.5) * h_rho).collect();
        let z_nodes: Vec<f64> = (0..n_z)
            .map(|k| -z_max + (k as f64 + 0.5) * h_z)
            .collect();
        let (w_rho, conduct_rho) = radial_conductances(d - 1, n_rho, h_rho);
        Ok(Self {
            d,
            rho_max,
            z_max,
            n_rho,
            n_z,
            h_rho,
            h_z,
            rho_nodes,
            z_nodes,
            w_rho,
            conduct_rho,
        })
    }

    pub fn d(&self) -> u32 {
        self.d
    }
    pub fn rho_max(&self) -> f64 {
        self.rho_max
    }
    pub fn z_max(&self) -> f64 {
        self.z_max
    }
    pub fn n_rho(&self) -> usize {
        self.n_rho
    }
    pub fn n_z(&self) -> usize {
        self.n_z
    }
    pub fn len(&self) -> usize {
        self.n_rho * self.n_z
    }
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
    pub fn spacing(&self) -> (f64, f64) {
        (self.h_rho, self.h_z)
    }
    pub fn rho_nodes(&self) -> &[f64] {
        &self.rho_nodes
    }
    pub fn z_nodes(&self) -> &[f64] {
        &self.z_nodes
    }
    pub fn rho_weights(&self) -> &[f64] {
        &self.w_rho
    }

    /// Flat index of node (i, k) = (ρ index, z index).
    #[inline]
    pub fn idx(&self, i: usize, k: usize) -> usize {
        i * self.n_z + k
    }

    /// Full quadrature weight of node (i, k).
    #[inline]
    pub fn weight(&self, i: usize, _k: usize) -> f64 {
        self.w_rho[i] * self.h_z
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.len() {
            return Err(Error::ShapeMismatch {
                expected: self.len(),
                got: len,
            });
        }
        Ok(())
    }

    pub fn integrate(&self, f: &[f64]) -> Result<f64> {
        self.check_len(f.len())?;
        let mut acc = 0.0;
        for i in 0..self.n_rho {
            let row = &f[i * self.n_z..(i + 1) * self.n_z];
            let s: f64 = row.iter().sum();
            acc += self.w_rho[i] * s;
        }
        Ok(acc * self.h_z)
    }

    pub fn norm2_c(&self, f: &[C64]) -> Result<f64> {
        self.check_len(f.len())?;
        let mut acc = 0.0;
        for i in 0..self.n_rho {
            let row = &f[i * self.n_z..(i + 1) * self.n_z];
            let s: f64 = row.iter().map(|v| v.norm_sqr()).sum();
            acc += self.w_rho[i] * s;
        }
        Ok(acc * self.h_z)
    }

    /// Full Laplacian Δ = Δ_y + ∂²_{x_d} with Dirichlet closure on the outer
    /// boundaries (axis needs no condition).
    pub fn apply_laplacian<T: Scalar>(&self, f: &[T]) -> Result<Vec<T>> {
        self.check_len(f.len())?;
        let mut out = self.apply_laplacian_rho(f)?;
        self.add_laplacian_z(f, &mut out);
        Ok(out)
    }

    /// Applies the 1D conservative ρ stencil to a ρ-indexed line (used for
    /// profile tables that are constant in x_d).
    pub fn apply_rho_stencil(&self, f: &[f64], ghost: GhostRule) -> Result<Vec<f64>> {
        if f.len() != self.n_rho {
            return Err(Error::ShapeMismatch {
                expected: self.n_rho,
                got: f.len(),
            });
        }
        let mut out = vec![0.0; self.n_rho];
        apply_line(f, &mut out, &self.w_rho, &self.conduct_rho, ghost);
        Ok(out)
    }

    /// Transverse part Δ_y only (conservative ρ stencil, Dirichlet at ρ_max).
    pub fn apply_laplacian_rho<T: Scalar>(&self, f: &[T]) -> Result<Vec<T>> {
        self.check_len(f.len())?;
        let (n_rho, n_z) = (self.n_rho, self.n_z);
        let mut out = vec![T::zero(); f.len()];
        let body = |i: usize, dst: &mut [T]| {
            let w = self.w_rho[i];
            let c_hi = self.conduct_rho[i];
            let c_lo = if i > 0 { self.conduct_rho[i - 1] } else { 0.0 };
            for k in 0..n_z {
                let here = f[i * n_z + k];
                let flux_hi = if i + 1 < n_rho {
                    (f[(i + 1) * n_z + k] - here) * c_hi
                } else {
                    (-here - here) * c_hi
                };
                let flux_lo = if i > 0 {
                    (here - f[(i - 1) * n_z + k]) * c_lo
                } else {
                    T::zero()
                };
                dst[k] = (flux_hi - flux_lo) * (1.0 / w);
            }
        };
        if f.len() >= PAR_THRESHOLD {
            out.par_chunks_mut(n_z)
                .enumerate()
                .for_each(|(i, dst)| body(i, dst));
        } else {
            for (i, dst) in out.chunks_mut(n_z).enumerate() {
                body(i, dst);
            }
        }
        Ok(out)
    }

    /// Adds ∂²_{x_d} f to `out` (Dirichlet at |x_d| = z_max).
    fn add_laplacian_z<T: Scalar>(&self, f: &[T], out: &mut [T]) {
        let n_z = self.n_z;
        let inv_hz2 = 1.0 / (self.h_z * self.h_z);
        let body = |row: (&[T], &mut [T])| {
            let (src, dst) = row;
            for k in 0..n_z {
                let here = src[k];
                let up = if k + 1 < n_z { src[k + 1] } else { -here };
                let dn = if k > 0 { src[k - 1] } else { -here };
                dst[k] = dst[k] + (up - here - (here - dn)) * inv_hz2;
            }
        };
        if f.len() >= PAR_THRESHOLD {
            f.par_chunks(n_z)
                .zip(out.par_chunks_mut(n_z))
                .for_each(body);
        } else {
            f.chunks(n_z).zip(out.chunks_mut(n_z)).for_each(body);
        }
    }

    /// ∂_ρ f, node centered (even mirror at the axis).
    pub fn gradient_rho<T: Scalar>(&self, f: &[T]) -> Result<Vec<T>> {
        self.check_len(f.len())?;
        let (n_rho, n_z) = (self.n_rho, self.n_z);
        let inv2h = 1.0 / (2.0 * self.h_rho);
        let mut out = vec![T::zero(); f.len()];
        for i in 0..n_rho {
            for k in 0..n_z {
                let hi = if i + 1 < n_rho {
                    f[(i + 1) * n_z + k]
                } else {
                    -f[i * n_z + k]
                };
                let lo = if i > 0 { f[(i - 1) * n_z + k] } else { f[k] };
                out[i * n_z + k] = (hi - lo) * inv2h;
            }
        }
        Ok(out)
    }

    /// ∂_{x_d} f, node centered (Dirichlet ghosts at ±z_max).
    pub fn gradient_z<T: Scalar>(&self, f: &[T]) -> Result<Vec<T>> {
        self.check_len(f.len())?;
        let n_z = self.n_z;
        let inv2h = 1.0 / (2.0 * self.h_z);
        let mut out = vec![T::zero(); f.len()];
        for (src, dst) in f.chunks(n_z).zip(out.chunks_mut(n_z)) {
            for k in 0..n_z {
                let hi = if k + 1 < n_z { src[k + 1] } else { -src[k] };
                let lo = if k > 0 { src[k - 1] } else { -src[k] };
                dst[k] = (hi - lo) * inv2h;
            }
        }
        Ok(out)
    }

    /// ⟨f, −Δ_y f⟩ in the quadrature inner product.
    pub fn dirichlet_form_rho_c(&self, f: &[C64]) -> Result<f64> {
        self.check_len(f.len())?;
        let (n_rho, n_z) = (self.n_rho, self.n_z);
        let mut acc = 0.0;
        for i in 0..n_rho {
            let c = self.conduct_rho[i];
            if i + 1 < n_rho {
                let mut s = 0.0;
                for k in 0..n_z {
                    s += (f[(i + 1) * n_z + k] - f[i * n_z + k]).norm_sqr();
                }
                acc += c * s;
            } else {
                let mut s = 0.0;
                for k in 0..n_z {
                    s += f[i * n_z + k].norm_sqr();
                }
                acc += 2.0 * c * s;
            }
        }
        Ok(acc * self.h_z)
    }

    /// ⟨f, −∂²_{x_d} f⟩ in the quadrature inner product.
    pub fn dirichlet_form_z_c(&self, f: &[C64]) -> Result<f64> {
        self.check_len(f.len())?;
        let n_z = self.n_z;
        let inv_hz = 1.0 / self.h_z;
        let mut acc = 0.0;
        for (i, row) in f.chunks(n_z).enumerate() {
            let mut s = 2.0 * row[0].norm_sqr() + 2.0 * row[n_z - 1].norm_sqr();
            for k in 0..n_z - 1 {
                s += (row[k + 1] - row[k]).norm_sqr();
            }
            acc += self.w_rho[i] * s;
        }
        Ok(acc * inv_hz)
    }

    /// ⟨f, −Δf⟩ for the full reduced Laplacian.
    pub fn dirichlet_form_c(&self, f: &[C64]) -> Result<f64> {
        Ok(self.dirichlet_form_rho_c(f)? + self.dirichlet_form_z_c(f)?)
    }

    /// Samples f(ρ, x_d) at the nodes.
    pub fn sample(&self, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len());
        for &rho in &self.rho_nodes {
            for &z in &self.z_nodes {
                out.push(f(rho, z));
            }
        }
        out
    }

    /// Samples a complex f(ρ, x_d) at the nodes.
    pub fn sample_c(&self, f: impl Fn(f64, f64) -> C64) -> Vec<C64> {
        let mut out = Vec::with_capacity(self.len());
        for &rho in &self.rho_nodes {
            for &z in &self.z_nodes {
                out.push(f(rho, z));
            }
        }
        out
    }

    /// Crank–Nicolson step for the ρ direction on every z line.
    pub fn cayley_step_rho(&self, f: &mut [C64], alpha: C64) -> Result<()> {
        self.check_len(f.len())?;
        let (n_rho, n_z) = (self.n_rho, self.n_z);
        let factor = self.cayley_rho_factor(alpha);
        // Work in transposed layout so ρ lines are contiguous.
        let mut t = vec![C64::new(0.0, 0.0); f.len()];
        transpose(f, n_rho, n_z, &mut t);
        let sweep = |line: &mut [C64]| {
            let mut rhs = vec![C64::new(0.0, 0.0); n_rho];
            apply_line(
                line,
                &mut rhs,
                &self.w_rho,
                &self.conduct_rho,
                GhostRule::Dirichlet,
            );
            for (v, l) in line.iter_mut().zip(&rhs) {
                *v += alpha * l;
            }
            factor.solve_in_place(line);
        };
        if f.len() >= PAR_THRESHOLD {
            t.par_chunks_mut(n_rho).for_each(sweep);
        } else {
            t.chunks_mut(n_rho).for_each(sweep);
        }
        transpose(&t, n_z, n_rho, f);
        Ok(())
    }

    /// Crank–Nicolson step for the x_d direction on every ρ line.
    pub fn cayley_step_z(&self, f: &mut [C64], alpha: C64) -> Result<()> {
        self.check_len(f.len())?;
        let n_z = self.n_z;
        let factor = self.cayley_z_factor(alpha);
        let inv_hz2 = 1.0 / (self.h_z * self.h_z);
        let sweep = |line: &mut [C64]| {
            let mut rhs = vec![C64::new(0.0, 0.0); n_z];
            for k in 0..n_z {
                let here = line[k];
                let up = if k + 1 < n_z { line[k + 1] } else { -here };
                let dn = if k > 0 { line[k - 1] } else { -here };
                rhs[k] = here + alpha * ((up - here - (here - dn)) * inv_hz2);
            }
            line.copy_from_slice(&rhs);
            factor.solve_in_place(line);
        };
        if f.len() >= PAR_THRESHOLD {
            f.par_chunks_mut(n_z).for_each(sweep);
        } else {
            f.chunks_mut(n_z).for_each(sweep);
        }
        Ok(())
    }

    fn cayley_rho_factor(&self, alpha: C64) -> TridiagFactor<C64> {
        let n = self.n_rho;
        let one = C64::new(1.0, 0.0);
        let mut sub = vec![C64::new(0.0, 0.0); n];
        let mut diag = vec![C64::new(0.0, 0.0); n];
        let mut sup = vec![C64::new(0.0, 0.0); n];
        for i in 0..n {
            let c_hi = self.conduct_rho[i];
            let c_lo = if i > 0 { self.conduct_rho[i - 1] } else { 0.0 };
            let w = self.w_rho[i];
            let d_lap = if i == n - 1 {
                -(2.0 * c_hi + c_lo) / w
            } else {
                -(c_hi + c_lo) / w
            };
            diag[i] = one - alpha * d_lap;
            if i > 0 {
                sub[i] = -alpha * (c_lo / w);
            }
            if i < n - 1 {
                sup[i] = -alpha * (c_hi / w);
            }
        }
        TridiagFactor::new(sub, diag, sup)
    }

    fn cayley_z_factor(&self, alpha: C64) -> TridiagFactor<C64> {
        let n = self.n_z;
        let one = C64::new(1.0, 0.0);
        let inv_hz2 = 1.0 / (self.h_z * self.h_z);
        let mut sub = vec![C64::new(0.0, 0.0); n];
        let mut diag = vec![C64::new(0.0, 0.0); n];
        let mut sup = vec![C64::new(0.0, 0.0); n];
        for k in 0..n {
            let edge = k == 0 || k == n - 1;
            let d_lap = if edge { -3.0 * inv_hz2 } else { -2.0 * inv_hz2 };
            diag[k] = one - alpha * d_lap;
            if k > 0 {
                sub[k] = -alpha * inv_hz2;
            }
            if k < n - 1 {
                sup[k] = -alpha * inv_hz2;
            }
        }
        TridiagFactor::new(sub, diag, sup)
    }
}

fn transpose<T: Scalar>(src: &[T], rows: usize, cols: usize, dst: &mut [T]) {
    debug_assert_eq!(src.len(), rows * cols);
    if src.len() >= PAR_THRESHOLD {
        dst.par_chunks_mut(rows).enumerate().for_each(|(k, out)| {
            for (i, slot) in out.iter_mut().enumerate() {
                *slot = src[i * cols + k];
            }
        });
    } else {
        for k in 0..cols {
            for i in 0..rows {
                dst[k * rows + i] = src[i * cols + k];
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Grid enum
// ---------------------------------------------------------------------------

/// A symmetry-reduced grid of either kind.
#[derive(Clone, Debug)]
pub enum Grid {
    Radial(RadialGrid),
    Cylindrical(CylindricalGrid),
}

impl Grid {
    pub fn d(&self) -> u32 {
        match self {
            Grid::Radial(g) => g.d(),
            Grid::Cylindrical(g) => g.d(),
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Grid::Radial(g) => g.len(),
            Grid::Cylindrical(g) => g.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn integrate(&self, f: &[f64]) -> Result<f64> {
        match self {
            Grid::Radial(g) => g.integrate(f),
            Grid::Cylindrical(g) => g.integrate(f),
        }
    }

    pub fn norm2_c(&self, f: &[C64]) -> Result<f64> {
        match self {
            Grid::Radial(g) => g.norm2_c(f),
            Grid::Cylindrical(g) => g.norm2_c(f),
        }
    }

    pub fn dirichlet_form_c(&self, f: &[C64]) -> Result<f64> {
        match self {
            Grid::Radial(g) => g.dirichlet_form_c(f),
            Grid::Cylindrical(g) => g.dirichlet_form_c(f),
        }
    }

    pub fn as_radial(&self) -> Result<&RadialGrid> {
        match self {
            Grid::Radial(g) => Ok(g),
            _ => Err(Error::SymmetryMismatch),
        }
    }

    pub fn as_cylindrical(&self) -> Result<&CylindricalGrid> {
        match self {
            Grid::Cylindrical(g) => Ok(g),
            _ => Err(Error::SymmetryMismatch),
        }
    }

    /// Fraction of Σ w|u|² + 2w|v|² carried by the outer 10% shell of the
    /// domain; used to detect boundary contamination.
    pub fn outer_shell_fraction(&self, u: &[C64], v: &[C64]) -> Result<f64> {
        let mut total = 0.0;
        let mut shell = 0.0;
        match self {
            Grid::Radial(g) => {
                g.check_len(u.len())?;
                g.check_len(v.len())?;
                let cut = 0.9 * g.r_max();
                for j in 0..g.len() {
                    let m = g.weights[j] * (u[j].norm_sqr() + 2.0 * v[j].norm_sqr());
                    total += m;
                    if g.nodes[j] > cut {
                        shell += m;
                    }
                }
            }
            Grid::Cylindrical(g) => {
                g.check_len(u.len())?;
                g.check_len(v.len())?;
                let cut_rho = 0.9 * g.rho_max();
                let cut_z = 0.9 * g.z_max();
                for i in 0..g.n_rho {
                    for k in 0..g.n_z {
                        let idx = g.idx(i, k);
                        let m = g.weight(i, k) * (u[idx].norm_sqr() + 2.0 * v[idx].norm_sqr());
                        total += m;
                        if g.rho_nodes[i] > cut_rho || g.z_nodes[k].abs() > cut_z {
                            shell += m;
                        }
                    }
                }
            }
        }
        if total == 0.0 {
            Ok(0.0)
        } else {
            Ok(shell / total)
        }
    }
}

// ---------------------------------------------------------------------------
// Tridiagonal solver with reusable factorization (Thomas algorithm)
// ---------------------------------------------------------------------------

/// Prefactored tridiagonal system; `solve_in_place` costs one forward and one
/// backward sweep per right-hand side.
pub struct TridiagFactor<T> {
    sub: Vec<T>,
    cprime: Vec<T>,
    inv_denom: Vec<T>,
}

pub trait Field:
    Copy + Send + Sync + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self>
{
    fn invert(self) -> Self;
}

impl Field for f64 {
    fn invert(self) -> Self {
        1.0 / self
    }
}

impl Field for C64 {
    fn invert(self) -> Self {
        self.inv()
    }
}

impl<T: Field> TridiagFactor<T> {
    pub fn new(sub: Vec<T>, diag: Vec<T>, sup: Vec<T>) -> Self {
        let n = diag.len();
        let mut cprime = sup.clone();
        let mut inv_denom = Vec::with_capacity(n);
        let inv0 = diag[0].invert();
        inv_denom.push(inv0);
        cprime[0] = sup[0] * inv0;
        for j in 1..n {
            let denom = diag[j] - sub[j] * cprime[j - 1];
            let inv = denom.invert();
            inv_denom.push(inv);
            if j < n - 1 {
                cprime[j] = sup[j] * inv;
            }
        }
        Self {
            sub,
            cprime,
            inv_denom,
        }
    }

    pub fn solve_in_place(&self, rhs: &mut [T]) {
        let n = rhs.len();
        debug_assert_eq!(n, self.inv_denom.len());
        rhs[0] = rhs[0] * self.inv_denom[0];
        for j in 1..n {
            rhs[j] = (rhs[j] - self.sub[j] * rhs[j - 1]) * self.inv_denom[j];
        }
        for j in (0..n - 1).rev() {
            rhs[j] = rhs[j] - self.cprime[j] * rhs[j + 1];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn max_abs(v: &[f64]) -> f64 {
        v.iter().fold(0.0f64, |m, &x| m.max(x.abs()))
    }

    #[test]
    fn sphere_areas_match_closed_forms() {
        assert!((unit_sphere_area(4) - 2.0 * PI * PI).abs() < 1e-14);
        assert!((unit_sphere_area(5) - 8.0 * PI * PI / 3.0).abs() < 1e-14);
        assert!((unit_sphere_area(6) - PI.powi(3)).abs() < 1e-14);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(RadialGrid::new(3, 10.0, 256).is_err());
        assert!(RadialGrid::new(7, 10.0, 256).is_err());
        assert!(RadialGrid::new(4, -1.0, 256).is_err());
        assert!(RadialGrid::new(4, 10.0, 8).is_err());
    }

    #[test]
    fn unit_ball_volume_d6() {
        // Coarse grid: volume of the unit 6-ball within 1%.
        let g = RadialGrid::new(6, 1.0, 16).unwrap();
        let vol: f64 = g.weights().iter().sum();
        let exact = PI.powi(3) / 6.0;
        assert!(
            (vol - exact).abs() / exact < 0.01,
            "vol {vol} vs {exact}"
        );
    }

    #[test]
    fn gaussian_integral_radial_d5() {
        let g = RadialGrid::new(5, 10.0, 512).unwrap();
        let f = g.sample(|r| (-r * r).exp());
        let got = g.integrate(&f).unwrap();
        let exact = PI.powf(2.5);
        assert!((got - exact).abs() / exact < 5e-3);
        // Midpoint quadrature is much better than 0.5% here.
        assert!((got - exact).abs() / exact < 1e-8, "err {}", (got - exact).abs() / exact);
    }

    #[test]
    fn gaussian_integral_cylindrical_d5() {
        let g = CylindricalGrid::new(5, 9.0, 9.0, 160, 320).unwrap();
        let f = g.sample(|rho, z| (-(rho * rho + z * z)).exp());
        let got = g.integrate(&f).unwrap();
        let exact = PI.powf(2.5);
        assert!((got - exact).abs() / exact < 5e-3, "err {}", (got - exact).abs() / exact);
    }

    #[test]
    fn laplacian_of_constant_vanishes_in_interior() {
        let g = RadialGrid::new(5, 8.0, 128).unwrap();
        let f = vec![1.0; g.len()];
        let lap = g.apply_laplacian(&f).unwrap();
        // All interior rows are exactly zero by the flux form.
        let interior = &lap[..g.len() - 1];
        assert!(max_abs(interior) < 1e-13);
        // Boundary row reflects the Dirichlet ghost.
        assert!(lap[g.len() - 1].abs() > 0.0);
    }

    #[test]
    fn laplacian_gaussian_pointwise_d4() {
        // Δ e^{-r²} = (4r² − 2d) e^{-r²}
        let d = 4;
        let g = RadialGrid::new(d, 10.0, 1024).unwrap();
        let f = g.sample(|r| (-r * r).exp());
        let lap = g.apply_laplacian(&f).unwrap();
        let mut worst = 0.0f64;
        for (j, &r) in g.nodes().iter().enumerate() {
            let exact = (4.0 * r * r - 2.0 * d as f64) * (-r * r).exp();
            worst = worst.max((lap[j] - exact).abs());
        }
        let h = g.spacing();
        assert!(worst < 12.0 * h * h, "worst {worst} vs h² {}", h * h);
    }

    #[test]
    fn laplacian_refinement_is_second_order() {
        let d = 5;
        let err = |n: usize| {
            let g = RadialGrid::new(d, 8.0, n).unwrap();
            let f = g.sample(|r| (-r * r).exp());
            let lap = g.apply_laplacian(&f).unwrap();
            let mut worst = 0.0f64;
            for (j, &r) in g.nodes().iter().enumerate() {
                let exact = (4.0 * r * r - 2.0 * d as f64) * (-r * r).exp();
                worst = worst.max((lap[j] - exact).abs());
            }
            worst
        };
        let e1 = err(256);
        let e2 = err(512);
        let ratio = e1 / e2;
        assert!((3.0..5.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn laplacian_symmetric_and_nonpositive() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let g = RadialGrid::new(6, 5.0, 200).unwrap();
        let f: Vec<f64> = (0..g.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let w: Vec<f64> = (0..g.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let lf = g.apply_laplacian(&f).unwrap();
        let lw = g.apply_laplacian(&w).unwrap();
        let a: f64 = g
            .weights()
            .iter()
            .zip(f.iter().zip(&lw))
            .map(|(wt, (x, y))| wt * x * y)
            .sum();
        let b: f64 = g
            .weights()
            .iter()
            .zip(w.iter().zip(&lf))
            .map(|(wt, (x, y))| wt * x * y)
            .sum();
        let scale = a.abs().max(b.abs()).max(1.0);
        assert!((a - b).abs() / scale < 1e-12, "asymmetry {}", (a - b).abs() / scale);

        let quad: f64 = g
            .weights()
            .iter()
            .zip(f.iter().zip(&lf))
            .map(|(wt, (x, y))| wt * x * y)
            .sum();
        assert!(quad <= 0.0);
        // The summation-by-parts form agrees with the matrix quadratic form.
        let form = g.dirichlet_form(&f).unwrap();
        assert!((quad + form).abs() / form.abs() < 1e-12);
    }

    #[test]
    fn cylindrical_laplacian_gaussian() {
        // Δ e^{-(ρ²+z²)} = (4(ρ²+z²) − 2d) e^{-(ρ²+z²)} for d total dims.
        let d = 5;
        let g = CylindricalGrid::new(d, 8.0, 8.0, 200, 400).unwrap();
        let f = g.sample(|rho, z| (-(rho * rho + z * z)).exp());
        let lap = g.apply_laplacian(&f).unwrap();
        let mut worst = 0.0f64;
        for (i, &rho) in g.rho_nodes().iter().enumerate() {
            for (k, &z) in g.z_nodes().iter().enumerate() {
                let r2 = rho * rho + z * z;
                let exact = (4.0 * r2 - 2.0 * d as f64) * (-r2).exp();
                worst = worst.max((lap[g.idx(i, k)] - exact).abs());
            }
        }
        let (h_rho, h_z) = g.spacing();
        let h2 = h_rho.max(h_z).powi(2);
        assert!(worst < 12.0 * h2, "worst {worst} vs h² {h2}");
    }

    #[test]
    fn cayley_step_preserves_norm() {
        let g = RadialGrid::new(4, 10.0, 300).unwrap();
        let mut f = g.sample_c(|r| C64::new((-r * r).exp(), 0.3 * (-r * r / 2.0).exp()));
        let before = g.norm2_c(&f).unwrap();
        let alpha = C64::new(0.0, 1e-3);
        for _ in 0..50 {
            g.cayley_step(&mut f, alpha).unwrap();
        }
        let after = g.norm2_c(&f).unwrap();
        assert!(((after - before) / before).abs() < 1e-12);
    }

    #[test]
    fn cylindrical_cayley_steps_preserve_norm() {
        let g = CylindricalGrid::new(5, 6.0, 6.0, 48, 96).unwrap();
        let mut f = g.sample_c(|rho, z| C64::new((-(rho * rho + z * z)).exp(), 0.1 * z.tanh()));
        let before = g.norm2_c(&f).unwrap();
        let alpha = C64::new(0.0, 5e-4);
        for _ in 0..20 {
            g.cayley_step_rho(&mut f, alpha).unwrap();
            g.cayley_step_z(&mut f, alpha).unwrap();
        }
        let after = g.norm2_c(&f).unwrap();
        assert!(((after - before) / before).abs() < 1e-12);
    }

    #[test]
    fn tridiag_solver_roundtrip() {
        let g = RadialGrid::new(4, 6.0, 64).unwrap();
        let factor = g.helmholtz_factor(1.0, 1.0);
        let rhs = g.sample(|r| (1.0 + r).recip());
        let mut x = rhs.clone();
        factor.solve_in_place(&mut x);
        // Verify (σ − Δ)x = rhs.
        let lap = g.apply_laplacian(&x).unwrap();
        for j in 0..g.len() {
            let lhs = x[j] - lap[j];
            assert!((lhs - rhs[j]).abs() < 1e-10, "row {j}");
        }
    }
}
