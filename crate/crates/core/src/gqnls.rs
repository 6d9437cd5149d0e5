//! The general N-component quadratic system
//!
//! ```text
//! i a_j ∂t u_j + b_j Δu_j − c_j u_j = −f_j(u_1, …, u_N),   j = 1..N,
//! ```
//!
//! with nonlinearities derived from a cubic interaction polynomial F via the
//! Wirtinger rule f_j = ∂_{z̄_j}F + conj(∂_{z_j}F). F is restricted to finite
//! sums of degree-3 monomials with complex coefficients, which makes mass
//! conservation and resonance classification exact coefficient tests rather
//! than sampling estimates.
//!
//! The generalized functionals are
//! 𝓜 = Σ (a_j s_j/2)‖u_j‖², 𝓣 = Σ b_j‖∇u_j‖², 𝓟 = Re ∫ F,
//! 𝓔 = 𝓣/2 + Σ c_j‖u_j‖²/2 − 𝓟, 𝓠 = Σ (a_j s_j ω/2 + c_j)‖u_j‖²,
//! with s the positive mass weights solving Im Σ s_j f_j(z) z̄_j ≡ 0.
//!
//! Kinetic weights in the virial assemblies are b_j (the Laplacian
//! coefficients), which is what makes the derivative identity close and the
//! N = 2 embedding reduce exactly to the two-component code path.

use crate::cutoff::{weight_pair, CutoffProfile, ProfileKind};
use crate::error::{Error, Result};
use crate::grid::{GhostRule, Grid};
use crate::virial::VirialReport;
use crate::C64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::sync::Arc;

/// One monomial c · z^p · z̄^q.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Monomial {
    pub z_pow: Vec<u8>,
    pub zbar_pow: Vec<u8>,
    pub coeff_re: f64,
    pub coeff_im: f64,
}

impl Monomial {
    pub fn coeff(&self) -> C64 {
        C64::new(self.coeff_re, self.coeff_im)
    }
}

type Key = (Vec<u8>, Vec<u8>);

/// Polynomial in (z, z̄) with canonicalized terms.
#[derive(Clone, Debug, PartialEq)]
pub struct Polynomial {
    pub n: usize,
    terms: BTreeMap<Key, C64>,
}

impl Polynomial {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            terms: BTreeMap::new(),
        }
    }

    pub fn from_monomials(n: usize, monomials: &[Monomial]) -> Result<Self> {
        let mut poly = Self::new(n);
        for m in monomials {
            if m.z_pow.len() != n || m.zbar_pow.len() != n {
                return Err(Error::InvalidParameter(
                    "monomial exponent vectors must have length N".into(),
                ));
            }
            poly.add_term(m.z_pow.clone(), m.zbar_pow.clone(), m.coeff());
        }
        Ok(poly)
    }

    pub fn add_term(&mut self, p: Vec<u8>, q: Vec<u8>, c: C64) {
        if c == C64::new(0.0, 0.0) {
            return;
        }
        let entry = self.terms.entry((p, q)).or_insert(C64::new(0.0, 0.0));
        *entry += c;
        if entry.norm() == 0.0 {
            // keep the map canonical
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Key, &C64)> {
        self.terms.iter().filter(|(_, c)| c.norm() > 0.0)
    }

    pub fn degree_is(&self, deg: u32) -> bool {
        self.terms().all(|((p, q), _)| {
            let total: u32 = p.iter().map(|&x| x as u32).sum::<u32>()
                + q.iter().map(|&x| x as u32).sum::<u32>();
            total == deg
        })
    }

    pub fn is_empty(&self) -> bool {
        self.terms().next().is_none()
    }

    pub fn max_coeff_norm(&self) -> f64 {
        self.terms().map(|(_, c)| c.norm()).fold(0.0, f64::max)
    }

    /// Evaluates at a point of ℂ^N.
    pub fn eval(&self, z: &[C64]) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for ((p, q), c) in self.terms() {
            let mut term = *c;
            for (i, &e) in p.iter().enumerate() {
                for _ in 0..e {
                    term *= z[i];
                }
            }
            for (i, &e) in q.iter().enumerate() {
                for _ in 0..e {
                    term *= z[i].conj();
                }
            }
            acc += term;
        }
        acc
    }

    /// Checks Im self ≡ 0 as a polynomial identity: every coefficient must
    /// satisfy c(p, q) = conj(c(q, p)) within `tol` relative to the largest
    /// coefficient.
    pub fn imaginary_part_vanishes(&self, tol: f64) -> bool {
        let scale = self.max_coeff_norm().max(1e-300);
        for ((p, q), c) in self.terms() {
            let mirror = self
                .terms
                .get(&(q.clone(), p.clone()))
                .copied()
                .unwrap_or(C64::new(0.0, 0.0));
            if (*c - mirror.conj()).norm() > tol * scale {
                return false;
            }
        }
        true
    }
}

/// f_j = ∂_{z̄_j}F + conj(∂_{z_j}F) for every component, in canonical order.
pub fn derive_fj(f: &Polynomial) -> Result<Vec<Polynomial>> {
    if !f.degree_is(3) {
        return Err(Error::InvalidParameter(
            "interaction polynomial must be homogeneous of degree 3".into(),
        ));
    }
    let n = f.n;
    let mut out = Vec::with_capacity(n);
    for j in 0..n {
        let mut fj = Polynomial::new(n);
        for ((p, q), c) in f.terms() {
            if q[j] > 0 {
                let mut q2 = q.clone();
                q2[j] -= 1;
                fj.add_term(p.clone(), q2, *c * q[j] as f64);
            }
            if p[j] > 0 {
                // conj(∂_{z_j} c z^p z̄^q) = c̄ p_j z^q z̄^{p − e_j}
                let mut p2 = p.clone();
                p2[j] -= 1;
                fj.add_term(q.clone(), p2, c.conj() * p[j] as f64);
            }
        }
        out.push(fj);
    }
    Ok(out)
}

/// Multiplies a polynomial by z̄_j.
fn times_zbar(poly: &Polynomial, j: usize) -> Polynomial {
    let mut out = Polynomial::new(poly.n);
    for ((p, q), c) in poly.terms() {
        let mut q2 = q.clone();
        q2[j] += 1;
        out.add_term(p.clone(), q2, *c);
    }
    out
}

/// Builds the real linear constraint rows for Im Σ s_j f_j z̄_j ≡ 0.
fn mass_constraint_rows(f_j: &[Polynomial]) -> Vec<Vec<f64>> {
    let n = f_j.len();
    let per_j: Vec<Polynomial> = (0..n).map(|j| times_zbar(&f_j[j], j)).collect();
    // Gather all keys appearing in any component.
    let mut keys: Vec<Key> = Vec::new();
    for poly in &per_j {
        for (k, _) in poly.terms() {
            if !keys.contains(k) {
                keys.push(k.clone());
            }
        }
    }
    let mut rows = Vec::new();
    for key in &keys {
        let (p, q) = key;
        let mirror: Key = (q.clone(), p.clone());
        if mirror < *key {
            continue; // handled from the mirror side
        }
        // Constraint: Σ s_j [γ_j(p,q) − conj(γ_j(q,p))] = 0 (complex).
        let mut row_re = vec![0.0; n];
        let mut row_im = vec![0.0; n];
        for (j, poly) in per_j.iter().enumerate() {
            let g = poly.terms.get(key).copied().unwrap_or(C64::new(0.0, 0.0));
            let gm = poly
                .terms
                .get(&mirror)
                .copied()
                .unwrap_or(C64::new(0.0, 0.0));
            let delta = g - gm.conj();
            row_re[j] = delta.re;
            row_im[j] = delta.im;
        }
        if row_re.iter().any(|&x| x.abs() > 0.0) {
            rows.push(row_re);
        }
        if row_im.iter().any(|&x| x.abs() > 0.0) {
            rows.push(row_im);
        }
    }
    rows
}

/// Nullspace basis of a small dense real matrix by Gaussian elimination.
fn nullspace(rows: &[Vec<f64>], n: usize) -> Vec<Vec<f64>> {
    let mut m: Vec<Vec<f64>> = rows.to_vec();
    let scale = m
        .iter()
        .flat_map(|r| r.iter().map(|x| x.abs()))
        .fold(0.0f64, f64::max)
        .max(1e-300);
    let tol = 1e-12 * scale;
    let mut pivot_cols = Vec::new();
    let mut rank = 0;
    for col in 0..n {
        // Find pivot.
        let mut best = rank;
        for r in rank..m.len() {
            if m[r][col].abs() > m[best][col].abs() {
                best = r;
            }
        }
        if m.is_empty() || rank >= m.len() || m[best][col].abs() <= tol {
            continue;
        }
        m.swap(rank, best);
        let pv = m[rank][col];
        for x in m[rank].iter_mut() {
            *x /= pv;
        }
        for r in 0..m.len() {
            if r != rank && m[r][col].abs() > 0.0 {
                let factor = m[r][col];
                for cidx in 0..n {
                    let sub = factor * m[rank][cidx];
                    m[r][cidx] -= sub;
                }
            }
        }
        pivot_cols.push(col);
        rank += 1;
    }
    let free_cols: Vec<usize> = (0..n).filter(|c| !pivot_cols.contains(c)).collect();
    let mut basis = Vec::new();
    for &fc in &free_cols {
        let mut v = vec![0.0; n];
        v[fc] = 1.0;
        for (ri, &pc) in pivot_cols.iter().enumerate() {
            v[pc] = -m[ri][fc];
        }
        basis.push(v);
    }
    basis
}

/// Solves for strictly positive mass weights s with Im Σ s_j f_j z̄_j ≡ 0,
/// scaled so min s_j = 1. Fails when no positive kernel vector exists.
pub fn solve_mass_weights(f_j: &[Polynomial]) -> Result<Vec<f64>> {
    let n = f_j.len();
    if f_j.iter().all(|p| p.is_empty()) {
        // Decoupled system: any weighting conserves mass.
        return Ok(vec![1.0; n]);
    }
    let rows = mass_constraint_rows(f_j);
    let basis = nullspace(&rows, n);
    if basis.is_empty() {
        return Err(Error::NoPositiveMassWeights);
    }
    let normalize = |v: &[f64]| -> Option<Vec<f64>> {
        let min = v.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let (vec, lo): (Vec<f64>, f64) = if min > 0.0 {
            (v.to_vec(), min)
        } else if max < 0.0 {
            (v.iter().map(|x| -x).collect(), -max)
        } else {
            return None;
        };
        Some(vec.iter().map(|x| x / lo).collect())
    };
    // Projection of the all-ones vector onto the nullspace, then the basis
    // vectors themselves, then seeded random combinations.
    let mut candidates: Vec<Vec<f64>> = Vec::new();
    candidates.push(project_onto_span(&basis, &vec![1.0; n]));
    candidates.extend(basis.iter().cloned());
    use rand::SeedableRng;
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    for _ in 0..200 {
        let mut v = vec![0.0; n];
        for b in &basis {
            let w: f64 = rng.gen_range(-1.0..1.0);
            for (x, y) in v.iter_mut().zip(b) {
                *x += w * y;
            }
        }
        candidates.push(v);
    }
    for cand in candidates {
        if let Some(s) = normalize(&cand) {
            // Verify against the rows (guards projection round-off).
            let scale = rows
                .iter()
                .flat_map(|r| r.iter().map(|x| x.abs()))
                .fold(1e-300f64, f64::max);
            let ok = rows.iter().all(|r| {
                let dot: f64 = r.iter().zip(&s).map(|(a, b)| a * b).sum();
                dot.abs() <= 1e-9 * scale * s.iter().cloned().fold(0.0, f64::max)
            });
            if ok {
                return Ok(s);
            }
        }
    }
    Err(Error::NoPositiveMassWeights)
}

fn project_onto_span(basis: &[Vec<f64>], target: &[f64]) -> Vec<f64> {
    let k = basis.len();
    let n = target.len();
    // Normal equations G x = b with G the Gram matrix.
    let mut gmat = vec![vec![0.0; k]; k];
    let mut b = vec![0.0; k];
    for i in 0..k {
        for j in 0..k {
            gmat[i][j] = basis[i].iter().zip(&basis[j]).map(|(a, c)| a * c).sum();
        }
        b[i] = basis[i].iter().zip(target).map(|(a, c)| a * c).sum();
    }
    // Small dense solve with partial pivoting.
    for p in 0..k {
        let mut best = p;
        for r in p + 1..k {
            if gmat[r][p].abs() > gmat[best][p].abs() {
                best = r;
            }
        }
        gmat.swap(p, best);
        b.swap(p, best);
        let pv = gmat[p][p];
        if pv.abs() < 1e-300 {
            continue;
        }
        for r in p + 1..k {
            let f = gmat[r][p] / pv;
            for c in p..k {
                gmat[r][c] -= f * gmat[p][c];
            }
            b[r] -= f * b[p];
        }
    }
    let mut x = vec![0.0; k];
    for p in (0..k).rev() {
        let mut acc = b[p];
        for c in p + 1..k {
            acc -= gmat[p][c] * x[c];
        }
        x[p] = if gmat[p][p].abs() < 1e-300 {
            0.0
        } else {
            acc / gmat[p][p]
        };
    }
    let mut out = vec![0.0; n];
    for (w, bvec) in x.iter().zip(basis) {
        for (o, v) in out.iter_mut().zip(bvec) {
            *o += w * v;
        }
    }
    out
}

/// Validated specification of an N-component quadratic system.
#[derive(Clone, Debug)]
pub struct QuadraticSystemSpec {
    pub n: usize,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    pub interaction: Polynomial,
    pub f_j: Vec<Polynomial>,
    pub s: Vec<f64>,
}

impl QuadraticSystemSpec {
    pub fn new(a: Vec<f64>, b: Vec<f64>, c: Vec<f64>, interaction: Polynomial) -> Result<Self> {
        let n = interaction.n;
        if a.len() != n || b.len() != n || c.len() != n {
            return Err(Error::InvalidParameter(
                "coefficient vectors must have length N".into(),
            ));
        }
        if a.iter().any(|&x| !(x > 0.0)) || b.iter().any(|&x| !(x > 0.0)) {
            return Err(Error::InvalidParameter(
                "a_j and b_j must be strictly positive".into(),
            ));
        }
        if c.iter().any(|&x| !(x >= 0.0)) {
            return Err(Error::InvalidParameter("c_j must be nonnegative".into()));
        }
        let f_j = derive_fj(&interaction)?;
        for fj in &f_j {
            if !fj.degree_is(2) {
                return Err(Error::InvalidParameter(
                    "derived nonlinearities are not homogeneous quadratic".into(),
                ));
            }
        }
        let s = solve_mass_weights(&f_j)?;
        Ok(Self {
            n,
            a,
            b,
            c,
            interaction,
            f_j,
            s,
        })
    }

    /// The two-component quadratic-interaction system as a spec:
    /// F = z̄₁² z₂, a = (1, 1), b = (1, κ), c = 0.
    pub fn snls_embedding(kappa: f64) -> Result<Self> {
        let mut f = Polynomial::new(2);
        f.add_term(vec![0, 1], vec![2, 0], C64::new(1.0, 0.0));
        Self::new(vec![1.0, 1.0], vec![1.0, kappa], vec![0.0, 0.0], f)
    }

    /// Exact polynomial-coefficient test of Im Σ (a_j/2b_j) f_j z̄_j ≡ 0.
    pub fn resonance_classify(&self) -> bool {
        let mut total = Polynomial::new(self.n);
        for j in 0..self.n {
            let scaled = times_zbar(&self.f_j[j], j);
            let w = self.a[j] / (2.0 * self.b[j]);
            for ((p, q), c) in scaled.terms() {
                total.add_term(p.clone(), q.clone(), *c * w);
            }
        }
        if total.is_empty() {
            return true;
        }
        total.imaginary_part_vanishes(1e-12)
    }
}

/// N-component state on a grid.
#[derive(Clone)]
pub struct GqState {
    pub grid: Arc<Grid>,
    pub fields: Vec<Vec<C64>>,
    pub t: f64,
}

impl GqState {
    pub fn new(grid: Arc<Grid>, fields: Vec<Vec<C64>>) -> Result<Self> {
        if fields.iter().any(|f| f.len() != grid.len()) {
            return Err(Error::GridMismatch);
        }
        Ok(Self {
            grid,
            fields,
            t: 0.0,
        })
    }
}

/// Generalized functionals 𝓜, 𝓔, 𝓣, 𝓠, 𝓟.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct GeneralizedReport {
    pub g_mass: f64,
    pub g_energy: f64,
    pub g_t: f64,
    pub g_q: f64,
    pub g_p: f64,
}

pub fn generalized_report(
    state: &GqState,
    spec: &QuadraticSystemSpec,
    omega: f64,
) -> Result<GeneralizedReport> {
    if state.fields.len() != spec.n {
        return Err(Error::InvalidParameter(
            "state component count does not match the spec".into(),
        ));
    }
    let grid = state.grid.as_ref();
    let mut g_mass = 0.0;
    let mut g_t = 0.0;
    let mut g_q = 0.0;
    let mut c_mass = 0.0;
    for j in 0..spec.n {
        let n2 = grid.norm2_c(&state.fields[j])?;
        g_mass += 0.5 * spec.a[j] * spec.s[j] * n2;
        g_q += (0.5 * spec.a[j] * spec.s[j] * omega + spec.c[j]) * n2;
        c_mass += spec.c[j] * n2;
        g_t += spec.b[j] * grid.dirichlet_form_c(&state.fields[j])?;
    }
    let g_p = real_interaction_integral(grid, &state.fields, &spec.interaction)?;
    let g_energy = 0.5 * g_t + 0.5 * c_mass - g_p;
    Ok(GeneralizedReport {
        g_mass,
        g_energy,
        g_t,
        g_q,
        g_p,
    })
}

/// Re ∫ F(u⃗) dx.
pub fn real_interaction_integral(
    grid: &Grid,
    fields: &[Vec<C64>],
    f: &Polynomial,
) -> Result<f64> {
    let npts = grid.len();
    let mut density = vec![0.0; npts];
    let mut z = vec![C64::new(0.0, 0.0); fields.len()];
    for idx in 0..npts {
        for (j, field) in fields.iter().enumerate() {
            z[j] = field[idx];
        }
        density[idx] = f.eval(&z).re;
    }
    grid.integrate(&density)
}

// ---------------------------------------------------------------------------
// Generalized localized virial estimates (d = 4)
// ---------------------------------------------------------------------------

struct GqParts {
    m_phi: f64,
    g_value: f64,
    rem_bilap: f64,
    rem_hess: f64,
    rem_pot: f64,
    theta1_grad: f64,
    theta2_sq_grad: f64,
    axial_sq: f64,
    energy: f64,
}

fn gq_assemble(
    state: &GqState,
    profile: &CutoffProfile,
    spec: &QuadraticSystemSpec,
    omega_unused: f64,
) -> Result<GqParts> {
    let _ = omega_unused;
    let rep = generalized_report(state, spec, 1.0)?;
    let d = state.grid.d() as f64;
    let g_value = 8.0 * (rep.g_t - 0.5 * d * rep.g_p);
    match state.grid.as_ref() {
        Grid::Radial(g) => {
            if profile.kind != ProfileKind::Radial && profile.kind != ProfileKind::Quadratic {
                return Err(Error::SymmetryMismatch);
            }
            let nodes = g.nodes();
            let (theta1, theta2) = match profile.kind {
                ProfileKind::Quadratic => (vec![0.0; nodes.len()], vec![0.0; nodes.len()]),
                _ => {
                    let pair = weight_pair(profile, g.d())?;
                    (
                        nodes.iter().map(|&r| pair.theta1(r)).collect(),
                        nodes.iter().map(|&r| pair.theta2(r)).collect(),
                    )
                }
            };
            let varphi: Vec<f64> = nodes.iter().map(|&r| profile.varphi(r)).collect();
            let lap = g.apply_laplacian_with_ghost(&varphi, GhostRule::Extrapolate)?;
            let bilap = g.apply_laplacian_with_ghost(&lap, GhostRule::Extrapolate)?;

            let grads: Vec<Vec<C64>> = state
                .fields
                .iter()
                .map(|f| g.gradient(f))
                .collect::<Result<_>>()?;
            let mut m_phi = 0.0;
            let mut rem_bilap = 0.0;
            let mut rem_hess = 0.0;
            let mut rem_pot = 0.0;
            let mut theta1_grad = 0.0;
            let mut theta2_sq_grad = 0.0;
            let mut z = vec![C64::new(0.0, 0.0); spec.n];
            for (j, w) in g.weights().iter().enumerate() {
                let mut q_dens = 0.0;
                let mut kgrad = 0.0;
                let mut mom = 0.0;
                for comp in 0..spec.n {
                    q_dens += spec.b[comp] * state.fields[comp][j].norm_sqr();
                    kgrad += spec.b[comp] * grads[comp][j].norm_sqr();
                    mom += spec.a[comp]
                        * (grads[comp][j] * state.fields[comp][j].conj()).im;
                    z[comp] = state.fields[comp][j];
                }
                let f_dens = spec.interaction.eval(&z).re;
                m_phi += 2.0 * w * profile.dvarphi(nodes[j]) * mom;
                rem_bilap -= w * bilap[j] * q_dens;
                rem_hess -= 4.0 * w * theta1[j] * kgrad;
                rem_pot += 2.0 * w * theta2[j] * f_dens;
                theta1_grad += w * theta1[j] * kgrad;
                theta2_sq_grad += w * theta2[j] * theta2[j] * kgrad;
            }
            Ok(GqParts {
                m_phi,
                g_value,
                rem_bilap,
                rem_hess,
                rem_pot,
                theta1_grad,
                theta2_sq_grad,
                axial_sq: 0.0,
                energy: rep.g_energy,
            })
        }
        Grid::Cylindrical(g) => {
            if profile.kind != ProfileKind::Cylindrical && profile.kind != ProfileKind::Quadratic {
                return Err(Error::SymmetryMismatch);
            }
            let rho_nodes = g.rho_nodes();
            let (theta1, theta2) = match profile.kind {
                ProfileKind::Quadratic => {
                    (vec![0.0; rho_nodes.len()], vec![0.0; rho_nodes.len()])
                }
                _ => {
                    let pair = weight_pair(profile, g.d())?;
                    (
                        rho_nodes.iter().map(|&r| pair.theta1(r)).collect(),
                        rho_nodes.iter().map(|&r| pair.theta2(r)).collect(),
                    )
                }
            };
            let psi_r: Vec<f64> = rho_nodes.iter().map(|&r| profile.varphi(r)).collect();
            let lap = g.apply_rho_stencil(&psi_r, GhostRule::Extrapolate)?;
            let bilap = g.apply_rho_stencil(&lap, GhostRule::Extrapolate)?;

            let grads_r: Vec<Vec<C64>> = state
                .fields
                .iter()
                .map(|f| g.gradient_rho(f))
                .collect::<Result<_>>()?;
            let grads_z: Vec<Vec<C64>> = state
                .fields
                .iter()
                .map(|f| g.gradient_z(f))
                .collect::<Result<_>>()?;
            let n_z = g.n_z();
            let h_z = 2.0 * g.z_max() / n_z as f64;
            let mut m_phi = 0.0;
            let mut rem_bilap = 0.0;
            let mut rem_hess = 0.0;
            let mut rem_pot = 0.0;
            let mut theta1_grad = 0.0;
            let mut theta2_sq_grad = 0.0;
            let mut axial_sq = 0.0;
            let mut z = vec![C64::new(0.0, 0.0); spec.n];
            for (i, w_rho) in g.rho_weights().iter().enumerate() {
                let dpsi = profile.dvarphi(rho_nodes[i]);
                let mut row_mom = 0.0;
                let mut row_q = 0.0;
                let mut row_kgrad = 0.0;
                let mut row_f = 0.0;
                for k in 0..n_z {
                    let idx = i * n_z + k;
                    let mut mom_r = 0.0;
                    let mut mom_z = 0.0;
                    for comp in 0..spec.n {
                        let field = state.fields[comp][idx];
                        row_q += spec.b[comp] * field.norm_sqr();
                        row_kgrad += spec.b[comp] * grads_r[comp][idx].norm_sqr();
                        mom_r += spec.a[comp] * (grads_r[comp][idx] * field.conj()).im;
                        mom_z += spec.a[comp] * (grads_z[comp][idx] * field.conj()).im;
                        z[comp] = field;
                    }
                    row_f += spec.interaction.eval(&z).re;
                    row_mom += dpsi * mom_r + 2.0 * g.z_nodes()[k] * mom_z;
                }
                let w = w_rho * h_z;
                m_phi += 2.0 * w_rho * row_mom * h_z;
                rem_bilap -= w * bilap[i] * row_q / 1.0;
                rem_hess -= 4.0 * w * theta1[i] * row_kgrad;
                rem_pot += 2.0 * w * theta2[i] * row_f;
                theta1_grad += w * theta1[i] * row_kgrad;
                theta2_sq_grad += w * theta2[i] * theta2[i] * row_kgrad;
            }
            for comp in 0..spec.n {
                axial_sq += g.dirichlet_form_z_c(&state.fields[comp])?;
            }
            Ok(GqParts {
                m_phi,
                g_value,
                rem_bilap,
                rem_hess,
                rem_pot,
                theta1_grad,
                theta2_sq_grad,
                axial_sq,
                energy: rep.g_energy,
            })
        }
    }
}

fn gq_report(parts: &GqParts, profile: &CutoffProfile, t: f64, bound: Option<f64>, o_r: Option<f64>, c_est: Option<f64>) -> VirialReport {
    VirialReport {
        t,
        m_phi: parts.m_phi,
        ddt_exact: parts.g_value + parts.rem_bilap + parts.rem_hess + parts.rem_pot,
        ddt_bound_rhs: bound,
        rem_bilap: parts.rem_bilap,
        rem_hessian_defect: parts.rem_hess,
        rem_potential_tail: parts.rem_pot,
        o_r_surrogate: o_r,
        g_value: parts.g_value,
        c_est_used: c_est,
        r_scale: profile.r_scale,
    }
}

/// Radial d = 4 generalized localized estimate:
/// d/dt 𝓜_φR ≤ 16𝓔 − 4∫(θ₁ − C R^{-3/2} θ₂²)(Σ b_j|∇u_j|²) + o_R(1).
pub fn gq_virial_radial_4d(
    state: &GqState,
    profile: &CutoffProfile,
    spec: &QuadraticSystemSpec,
    c_est: f64,
) -> Result<VirialReport> {
    if state.grid.d() != 4 {
        return Err(Error::DimensionOutOfRange(state.grid.d()));
    }
    state.grid.as_radial()?;
    let parts = gq_assemble(state, profile, spec, 1.0)?;
    let r = profile.r_scale;
    let decay = r.powf(-1.5);
    let o_r = 4.0 * c_est * decay * parts.theta2_sq_grad + c_est * (decay + r.powi(-2));
    let bound = 16.0 * parts.energy - 4.0 * parts.theta1_grad + o_r;
    Ok(gq_report(&parts, profile, state.t, Some(bound), Some(o_r), Some(c_est)))
}

/// Cylindrical d = 4 generalized localized estimate with the axial term.
pub fn gq_virial_cylindrical_4d(
    state: &GqState,
    profile: &CutoffProfile,
    spec: &QuadraticSystemSpec,
    c_est: f64,
) -> Result<VirialReport> {
    if state.grid.d() != 4 {
        return Err(Error::DimensionOutOfRange(state.grid.d()));
    }
    state.grid.as_cylindrical()?;
    let parts = gq_assemble(state, profile, spec, 1.0)?;
    let r = profile.r_scale;
    let decay = r.powi(-1);
    let o_r = 4.0 * c_est * decay * parts.theta2_sq_grad
        + c_est * decay * (parts.axial_sq + 1.0)
        + c_est * r.powi(-2);
    let bound = 16.0 * parts.energy - 4.0 * parts.theta1_grad + o_r;
    Ok(gq_report(&parts, profile, state.t, Some(bound), Some(o_r), Some(c_est)))
}

/// Exact generalized assembly without a bound (any d, any matching profile).
pub fn gq_ddt_exact(
    state: &GqState,
    profile: &CutoffProfile,
    spec: &QuadraticSystemSpec,
) -> Result<VirialReport> {
    let parts = gq_assemble(state, profile, spec, 1.0)?;
    Ok(gq_report(&parts, profile, state.t, None, None, None))
}

/// Result of the vector Gagliardo–Nirenberg verification.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct GqGnCheck {
    pub c_opt: f64,
    pub violations: usize,
    pub samples: usize,
}

/// Verifies 𝓟(g⃗) ≤ C_opt [𝓠(g⃗)]^{(6−d)/4} [𝓣(g⃗)]^{d/4} on random smooth
/// tuples, with C_opt computed from the supplied ground-state tuple (d = 5).
pub fn gq_gn_check(
    gs_fields: &[Vec<f64>],
    grid: &Arc<Grid>,
    spec: &QuadraticSystemSpec,
    omega: f64,
    n_random: usize,
    seed: u64,
) -> Result<GqGnCheck> {
    if grid.d() != 5 {
        return Err(Error::DimensionOutOfRange(grid.d()));
    }
    for j in 0..spec.n {
        if !(0.5 * spec.a[j] * spec.s[j] * omega + spec.c[j] > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "frequency condition fails for component {j}"
            )));
        }
    }
    let to_c = |f: &Vec<f64>| -> Vec<C64> { f.iter().map(|&x| C64::new(x, 0.0)).collect() };
    let gs_state = GqState::new(grid.clone(), gs_fields.iter().map(to_c).collect())?;
    let rep = generalized_report(&gs_state, spec, omega)?;
    let denom = rep.g_q.powf((6.0 - 5.0) / 4.0) * rep.g_t.powf(5.0 / 4.0);
    if denom == 0.0 {
        return Err(Error::InvalidParameter("degenerate ground-state tuple".into()));
    }
    let c_opt = rep.g_p / denom;

    use rand::SeedableRng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut violations = 0;
    for _ in 0..n_random {
        let fields: Vec<Vec<C64>> = (0..spec.n)
            .map(|_| {
                let amp = rng.gen_range(0.05..2.0);
                let width = rng.gen_range(0.4..2.0);
                let phase = rng.gen_range(0.0..std::f64::consts::TAU);
                match grid.as_ref() {
                    Grid::Radial(g) => {
                        g.sample_c(|r| C64::from_polar(amp * (-width * r * r).exp(), phase * r))
                    }
                    Grid::Cylindrical(g) => g.sample_c(|rho, zc| {
                        C64::from_polar(
                            amp * (-width * (rho * rho + zc * zc)).exp(),
                            phase * zc,
                        )
                    }),
                }
            })
            .collect();
        let state = GqState::new(grid.clone(), fields)?;
        let r = generalized_report(&state, spec, omega)?;
        let rhs = c_opt * r.g_q.powf(0.25) * r.g_t.powf(1.25);
        if r.g_p > rhs + 1e-6 * rhs.abs().max(1.0) {
            violations += 1;
        }
    }
    Ok(GqGnCheck {
        c_opt,
        violations,
        samples: n_random,
    })
}

// ---------------------------------------------------------------------------
// Evolution of the generalized system
// ---------------------------------------------------------------------------

/// One Strang step of the generalized system: Crank–Nicolson per component
/// with coefficient b_j/a_j and the exact linear phase for c_j, around the
/// pointwise nonlinear flow du_j/dt = (i/a_j) f_j(u⃗).
pub fn gq_step(state: &mut GqState, spec: &QuadraticSystemSpec, dt: f64) -> Result<()> {
    gq_linear_half(state, spec, dt)?;
    gq_nonlinear_full(state, spec, dt);
    gq_linear_half(state, spec, dt)?;
    state.t += dt;
    Ok(())
}

fn gq_linear_half(state: &mut GqState, spec: &QuadraticSystemSpec, dt: f64) -> Result<()> {
    for j in 0..spec.n {
        let alpha = C64::new(0.0, 0.25 * dt * spec.b[j] / spec.a[j]);
        match state.grid.as_ref() {
            Grid::Radial(g) => g.cayley_step(&mut state.fields[j], alpha)?,
            Grid::Cylindrical(g) => {
                g.cayley_step_rho(&mut state.fields[j], alpha)?;
                g.cayley_step_z(&mut state.fields[j], alpha)?;
            }
        }
        if spec.c[j] != 0.0 {
            let phase = C64::from_polar(1.0, -0.5 * dt * spec.c[j] / spec.a[j]);
            for z in state.fields[j].iter_mut() {
                *z *= phase;
            }
        }
    }
    Ok(())
}

fn gq_nonlinear_full(state: &mut GqState, spec: &QuadraticSystemSpec, dt: f64) {
    let n = spec.n;
    let npts = state.grid.len();
    let mut amp: f64 = 0.0;
    for f in &state.fields {
        for zv in f {
            amp = amp.max(zv.norm_sqr());
        }
    }
    let nsub = ((dt * 3.0 * amp.sqrt() / 0.25).ceil() as usize).clamp(1, 4);
    let h = dt / nsub as f64;
    let i_unit = C64::new(0.0, 1.0);
    let mut z = vec![C64::new(0.0, 0.0); n];
    let mut k1 = vec![C64::new(0.0, 0.0); n];
    let mut k2 = vec![C64::new(0.0, 0.0); n];
    let mut k3 = vec![C64::new(0.0, 0.0); n];
    let mut k4 = vec![C64::new(0.0, 0.0); n];
    let mut tmp = vec![C64::new(0.0, 0.0); n];
    for idx in 0..npts {
        for j in 0..n {
            z[j] = state.fields[j][idx];
        }
        for _ in 0..nsub {
            let eval = |dst: &mut [C64], src: &[C64]| {
                for j in 0..n {
                    dst[j] = i_unit / spec.a[j] * spec.f_j[j].eval(src);
                }
            };
            eval(&mut k1, &z);
            for j in 0..n {
                tmp[j] = z[j] + 0.5 * h * k1[j];
            }
            eval(&mut k2, &tmp);
            for j in 0..n {
                tmp[j] = z[j] + 0.5 * h * k2[j];
            }
            eval(&mut k3, &tmp);
            for j in 0..n {
                tmp[j] = z[j] + h * k3[j];
            }
            eval(&mut k4, &tmp);
            for j in 0..n {
                z[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
            }
        }
        for j in 0..n {
            state.fields[j][idx] = z[j];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::RadialGrid;

    fn snls_f() -> Polynomial {
        let mut f = Polynomial::new(2);
        f.add_term(vec![0, 1], vec![2, 0], C64::new(1.0, 0.0));
        f
    }

    #[test]
    fn derive_fj_reproduces_the_two_component_nonlinearity() {
        let f = snls_f();
        let fj = derive_fj(&f).unwrap();
        // f₁ = 2 z̄₁ z₂, f₂ = z₁².
        let z = [C64::new(0.3, -0.7), C64::new(-1.1, 0.2)];
        let f1 = fj[0].eval(&z);
        let f2 = fj[1].eval(&z);
        let expect1 = 2.0 * z[0].conj() * z[1];
        let expect2 = z[0] * z[0];
        assert!((f1 - expect1).norm() < 1e-15);
        assert!((f2 - expect2).norm() < 1e-15);
    }

    #[test]
    fn derive_fj_rejects_non_cubic() {
        let mut f = Polynomial::new(1);
        f.add_term(vec![2], vec![0], C64::new(1.0, 0.0));
        assert!(derive_fj(&f).is_err());
    }

    #[test]
    fn zero_interaction_gives_zero_fj_and_unit_weights() {
        let f = Polynomial::new(3);
        let fj = derive_fj(&f).unwrap();
        assert!(fj.iter().all(|p| p.is_empty()));
        let s = solve_mass_weights(&fj).unwrap();
        assert_eq!(s, vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn mass_weights_for_the_embedding_are_one_two() {
        let fj = derive_fj(&snls_f()).unwrap();
        let s = solve_mass_weights(&fj).unwrap();
        assert!((s[0] - 1.0).abs() < 1e-12);
        assert!((s[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn adversarial_interaction_has_no_positive_weights() {
        // F = z₁² z₂ needs 2s₁ + s₂ = 0: no strictly positive solution.
        let mut f = Polynomial::new(2);
        f.add_term(vec![2, 1], vec![0, 0], C64::new(1.0, 0.0));
        let fj = derive_fj(&f).unwrap();
        match solve_mass_weights(&fj) {
            Err(Error::NoPositiveMassWeights) => {}
            other => panic!("expected NoPositiveMassWeights, got {other:?}"),
        }
    }

    #[test]
    fn resonance_classification_depends_on_kappa() {
        let spec_res = QuadraticSystemSpec::snls_embedding(0.5).unwrap();
        assert!(spec_res.resonance_classify());
        let spec_non = QuadraticSystemSpec::snls_embedding(1.0).unwrap();
        assert!(!spec_non.resonance_classify());
        // Decoupled F: trivially resonant.
        let spec_zero =
            QuadraticSystemSpec::new(vec![1.0], vec![1.0], vec![0.0], Polynomial::new(1));
        assert!(spec_zero.is_err() || spec_zero.unwrap().resonance_classify());
    }

    #[test]
    fn wirtinger_rule_satisfies_cubic_euler_identity() {
        // Structural property of f_j = ∂_{z̄_j}F + conj(∂_{z_j}F) for cubic
        // homogeneous F: Re Σ f_j(z) z̄_j = 3 Re F(z) at every point.
        let mut f = Polynomial::new(2);
        f.add_term(vec![1, 1], vec![0, 1], C64::new(0.7, 0.2));
        f.add_term(vec![0, 1], vec![2, 0], C64::new(-0.3, 1.1));
        f.add_term(vec![3, 0], vec![0, 0], C64::new(0.05, 0.0));
        let fj = derive_fj(&f).unwrap();
        let points = [
            [C64::new(0.4, -0.9), C64::new(1.3, 0.6)],
            [C64::new(-1.0, 0.1), C64::new(0.2, -0.5)],
            [C64::new(2.0, 2.0), C64::new(-0.7, 0.3)],
        ];
        for z in points {
            let lhs: f64 = (0..2).map(|j| (fj[j].eval(&z) * z[j].conj()).re).sum();
            let rhs = 3.0 * f.eval(&z).re;
            assert!((lhs - rhs).abs() < 1e-12 * rhs.abs().max(1.0), "{lhs} vs {rhs}");
        }
    }

    #[test]
    fn gq_mass_is_conserved_by_the_nonlinear_substep() {
        let spec = QuadraticSystemSpec::snls_embedding(0.75).unwrap();
        let grid = Arc::new(Grid::Radial(RadialGrid::new(4, 8.0, 128).unwrap()));
        let g = match grid.as_ref() {
            Grid::Radial(g) => g.clone(),
            _ => unreachable!(),
        };
        let fields = vec![
            g.sample_c(|r| C64::from_polar(1.2 * (-r * r).exp(), 0.9 * r)),
            g.sample_c(|r| C64::from_polar(0.7 * (-0.8 * r * r).exp(), -0.4 * r)),
        ];
        let mut state = GqState::new(grid.clone(), fields).unwrap();
        let mass_of = |s: &GqState| {
            let r = generalized_report(s, &spec, 1.0).unwrap();
            r.g_mass
        };
        let m0 = mass_of(&state);
        gq_nonlinear_full(&mut state, &spec, 1e-3);
        let m1 = mass_of(&state);
        assert!(((m1 - m0) / m0).abs() < 1e-12, "drift {}", (m1 - m0) / m0);
    }
}
