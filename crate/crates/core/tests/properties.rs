//! Property tests for structural invariants: quadrature positivity and
//! consistency, operator symmetry, pointwise mass conservation of the
//! nonlinear substep, cut-off profile constraints, and the scaling law.

use num_complex::Complex64 as C64;
use proptest::prelude::*;
use snls_core::cutoff::{chi, zeta, zeta_prime, BRIDGE_LEFT};
use snls_core::functionals::SystemState;
use snls_core::gqnls::{derive_fj, solve_mass_weights, Polynomial};
use snls_core::grid::{unit_sphere_area, Grid, RadialGrid};
use std::sync::Arc;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn quadrature_weights_positive_and_volume_consistent(
        d in 4u32..=6,
        n in 32usize..200,
        r_max in 0.5f64..40.0,
    ) {
        let g = RadialGrid::new(d, r_max, n).unwrap();
        prop_assert!(g.nodes().iter().all(|&r| r > 0.0));
        prop_assert!(g.weights().iter().all(|&w| w > 0.0));
        let vol: f64 = g.weights().iter().sum();
        let exact = unit_sphere_area(d) * r_max.powi(d as i32) / d as f64;
        let h = g.spacing();
        // Midpoint-rule volume error is O(h²) relative.
        let band = 0.5 * (d * (d - 1)) as f64 * h * h / (r_max * r_max) + 1e-12;
        prop_assert!(((vol - exact) / exact).abs() <= band,
            "vol {} vs {} (band {})", vol, exact, band);
    }

    #[test]
    fn laplacian_is_symmetric_for_random_fields(
        d in 4u32..=6,
        n in 32usize..160,
        seed in any::<u64>(),
    ) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let g = RadialGrid::new(d, 7.0, n).unwrap();
        let f: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let w: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let lf = g.apply_laplacian(&f).unwrap();
        let lw = g.apply_laplacian(&w).unwrap();
        let ip = |a: &[f64], b: &[f64]| -> f64 {
            g.weights().iter().zip(a.iter().zip(b)).map(|(wt, (x, y))| wt * x * y).sum()
        };
        let lhs = ip(&f, &lw);
        let rhs = ip(&w, &lf);
        let scale = lhs.abs().max(rhs.abs()).max(1.0);
        prop_assert!((lhs - rhs).abs() / scale < 1e-12);
        // Nonpositive quadratic form.
        prop_assert!(ip(&f, &lf) <= 1e-12 * scale);
    }

    #[test]
    fn nonlinear_substep_mass_density_is_conserved(
        au in 0.01f64..3.0,
        av in 0.01f64..3.0,
        pu in 0.0f64..6.28,
        pv in 0.0f64..6.28,
    ) {
        let grid = Arc::new(Grid::Radial(RadialGrid::new(4, 6.0, 32).unwrap()));
        let mut s = SystemState::zero(grid, 1.0).unwrap();
        for (j, (u, v)) in s.u.iter_mut().zip(s.v.iter_mut()).enumerate() {
            let x = j as f64 / 32.0;
            *u = C64::from_polar(au * (1.0 - x), pu + x);
            *v = C64::from_polar(av * (1.0 - x), pv - 2.0 * x);
        }
        let before: Vec<f64> = s.u.iter().zip(&s.v)
            .map(|(a, b)| a.norm_sqr() + 2.0 * b.norm_sqr()).collect();
        snls_core::evolution::step(&mut s, 1e-4).unwrap();
        // The full Strang step also preserves total mass to near round-off
        // (unitary linear part, high-order substep).
        let g = s.grid.clone();
        let after_total = g.norm2_c(&s.u).unwrap() + 2.0 * g.norm2_c(&s.v).unwrap();
        let before_total: f64 = {
            let w = match g.as_ref() { Grid::Radial(gr) => gr.weights(), _ => unreachable!() };
            w.iter().zip(&before).map(|(wt, m)| wt * m).sum()
        };
        if before_total > 1e-12 {
            prop_assert!(((after_total - before_total) / before_total).abs() < 1e-11);
        }
    }

    #[test]
    fn cutoff_profile_constraints(s in 0.0f64..5.0) {
        // χ'' = ζ' ≤ 2 everywhere; χ(s) = s² on the core; χ monotone.
        prop_assert!(zeta_prime(s) <= 2.0 + 1e-12);
        prop_assert!(zeta(s).unwrap() >= 0.0);
        if s <= 1.0 {
            prop_assert!((chi(s).unwrap() - s * s).abs() < 1e-14);
        }
        // FD check of χ'' = ζ' away from the knots.
        let knots = [1.0, BRIDGE_LEFT, 2.0];
        let h = 1e-5;
        if knots.iter().all(|&k| (s - k).abs() > 10.0 * h) && s > 10.0 * h {
            let second = (chi(s + h).unwrap() - 2.0 * chi(s).unwrap() + chi(s - h).unwrap()) / (h * h);
            prop_assert!((second - zeta_prime(s)).abs() < 1e-4,
                "chi'' {} vs zeta' {} at s = {}", second, zeta_prime(s), s);
        }
    }

    #[test]
    fn random_cubic_interactions_satisfy_euler_and_mass_identities(
        seed in any::<u64>(),
    ) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(1usize..4);
        let mut f = Polynomial::new(n);
        for _ in 0..rng.gen_range(1usize..4) {
            // Random degree-3 exponent split between z and z̄.
            let mut p = vec![0u8; n];
            let mut q = vec![0u8; n];
            for _ in 0..3 {
                let slot = rng.gen_range(0..2 * n);
                if slot < n { p[slot] += 1; } else { q[slot - n] += 1; }
            }
            f.add_term(p, q, C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        }
        if f.is_empty() {
            return Ok(());
        }
        let fj = derive_fj(&f).unwrap();
        // Euler identity of the Wirtinger rule at random points.
        for _ in 0..4 {
            let z: Vec<C64> = (0..n)
                .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect();
            let lhs: f64 = (0..n).map(|j| (fj[j].eval(&z) * z[j].conj()).re).sum();
            let rhs = 3.0 * f.eval(&z).re;
            prop_assert!((lhs - rhs).abs() <= 1e-10 * rhs.abs().max(1.0));
        }
        // When positive mass weights exist, Im Σ s_j f_j z̄_j vanishes at
        // random points.
        if let Ok(s) = solve_mass_weights(&fj) {
            for _ in 0..4 {
                let z: Vec<C64> = (0..n)
                    .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                    .collect();
                let im: f64 = (0..n).map(|j| s[j] * (fj[j].eval(&z) * z[j].conj()).im).sum();
                let scale: f64 = (0..n).map(|j| (fj[j].eval(&z) * z[j].conj()).norm()).sum();
                prop_assert!(im.abs() <= 1e-9 * scale.max(1.0));
            }
        }
    }
}

#[test]
fn scaling_law_for_h1_seminorm() {
    // u_λ(x) = λ² u(λx) has ‖u_λ‖_{Ḣ¹} = λ^{3−d/2} ‖u‖_{Ḣ¹}.
    for d in [4u32, 5, 6] {
        let grid = Arc::new(Grid::Radial(RadialGrid::new(d, 12.0, 2048).unwrap()));
        let lambda = 1.4f64;
        let g = grid.as_radial().unwrap();
        let base = g.sample_c(|r| C64::new((-r * r).exp(), 0.3 * (-0.7 * r * r).exp()));
        let scaled = g.sample_c(|r| {
            let rr = lambda * r;
            lambda * lambda * C64::new((-rr * rr).exp(), 0.3 * (-0.7 * rr * rr).exp())
        });
        let h1_base = g.dirichlet_form_c(&base).unwrap().sqrt();
        let h1_scaled = g.dirichlet_form_c(&scaled).unwrap().sqrt();
        let expect = lambda.powf(3.0 - d as f64 / 2.0);
        let got = h1_scaled / h1_base;
        assert!(
            (got / expect - 1.0).abs() < 1e-4,
            "d = {d}: ratio {got} vs {expect}"
        );
    }
}
