use num_complex::Complex64 as C64;
use snls_core::cutoff::{CutoffProfile, ProfileKind};
use snls_core::evolution::{evolve, IntegratorConfig, Termination};
use snls_core::functionals::{evaluate_functionals, SystemState};
use snls_core::grid::{CylindricalGrid, Grid, RadialGrid};
use snls_core::groundstate::explicit_static_6d;
use snls_core::virial::VirialMonitor;
use std::sync::Arc;
use std::time::Instant;

fn main() {
    let which = std::env::args().nth(1).unwrap_or_default();
    match which.as_str() {
        "c3" => c3(),
        "c5r" => c5_radial(),
        "c5c" => c5_cyl(),
        "c9" => c9(),
        _ => println!("usage: calib c3|c5r|c5c|c9"),
    }
}

fn c3() {
    // Residual of the explicit d = 6 pair vs grid size.
    for n in [1 << 19, 1 << 20, 1 << 21] {
        let t0 = Instant::now();
        let grid = Arc::new(Grid::Radial(RadialGrid::new(6, 20.0, n).unwrap()));
        let gs = explicit_static_6d(0.7, &grid).unwrap();
        println!(
            "n {n:8}  residual {:10.3e}   ({:.2}s)",
            gs.residual_norm,
            t0.elapsed().as_secs_f64()
        );
    }
}

fn smooth_radial_state(n: usize, r_max: f64, d: u32) -> SystemState {
    let grid = Arc::new(Grid::Radial(RadialGrid::new(d, r_max, n).unwrap()));
    let mut s = SystemState::zero(grid, 0.8).unwrap();
    if let Grid::Radial(g) = s.grid.clone().as_ref() {
        s.u = g.sample_c(|r| C64::from_polar(0.55 * (-r * r).exp(), 0.5 * r));
        s.v = g.sample_c(|r| C64::from_polar(0.35 * (-0.9 * r * r).exp(), -0.35 * r));
    }
    s
}

fn fd_check(rec: &snls_core::evolution::TrajectoryRecord, idx: usize) -> f64 {
    let n = rec.samples.len();
    let mut worst = 0.0f64;
    for i in 1..n - 1 {
        let tm = &rec.samples[i - 1];
        let tp = &rec.samples[i + 1];
        let fd = (tp.virials[idx].m_phi - tm.virials[idx].m_phi) / (tp.t - tm.t);
        let exact = rec.samples[i].virials[idx].ddt_exact;
        worst = worst.max((fd - exact).abs() / exact.abs().max(1.0));
    }
    worst
}

fn c5_radial() {
    let stride: usize = std::env::args().nth(2).map(|x| x.parse().unwrap()).unwrap_or(5);
    let dt: f64 = std::env::args().nth(3).map(|x| x.parse().unwrap()).unwrap_or(1e-4);
    for (n, rmx) in [(1024usize, 10.0f64), (1638, 16.0), (2048, 20.0)] {
        let t0 = Instant::now();
        let s = smooth_radial_state(n, rmx, 4);
        let config = IntegratorConfig {
            dt0: dt,
            c_adapt: None,
            t_end: 1.0,
            monitor_stride: stride,
            ..Default::default()
        };
        let monitors = [
            VirialMonitor::exact(CutoffProfile::new(ProfileKind::Radial, 2.0).unwrap()),
            VirialMonitor::exact(CutoffProfile::quadratic()),
        ];
        let rec = evolve(&s, &config, &monitors).unwrap();
        println!(
            "radial n {n} rmax {rmx}: worst FD-vs-exact clipped {:.3e}  quad {:.3e}  ({:.1}s, {} samples)",
            fd_check(&rec, 0),
            fd_check(&rec, 1),
            t0.elapsed().as_secs_f64(),
            rec.samples.len()
        );
    }
}

fn c5_cyl() {
    for (n_rho, n_z, ext) in [(256usize, 512usize, 8.0f64), (384, 768, 8.0), (512, 1024, 8.0)] {
        let t0 = Instant::now();
        let grid = Arc::new(Grid::Cylindrical(
            CylindricalGrid::new(5, ext, ext, n_rho, n_z).unwrap(),
        ));
        let mut s = SystemState::zero(grid, 0.8).unwrap();
        if let Grid::Cylindrical(g) = s.grid.clone().as_ref() {
            s.u = g.sample_c(|rho, z| {
                C64::from_polar(
                    0.4 * (-(rho * rho + z * z)).exp(),
                    0.3 * z + 0.2 * (rho * rho + z * z),
                )
            });
            s.v = g.sample_c(|rho, z| {
                C64::from_polar(
                    0.25 * (-(rho * rho + 1.2 * z * z)).exp(),
                    -0.2 * z + 0.15 * rho * rho,
                )
            });
        }
        let config = IntegratorConfig {
            dt0: 1e-4,
            c_adapt: None,
            t_end: 1.0,
            monitor_stride: 10,
            ..Default::default()
        };
        let monitors = [VirialMonitor::exact(
            CutoffProfile::new(ProfileKind::Cylindrical, 3.0).unwrap(),
        )];
        let rec = evolve(&s, &config, &monitors).unwrap();
        println!(
            "cyl {n_rho}x{n_z}: worst FD-vs-exact {:.3e}  ({:.1}s, {} samples)",
            fd_check(&rec, 0),
            t0.elapsed().as_secs_f64(),
            rec.samples.len()
        );
    }
}

fn c9() {
    // Negative-energy blow-up run.
    let n = 4096;
    let grid = Arc::new(Grid::Radial(RadialGrid::new(4, 8.0, n).unwrap()));
    let mut s = SystemState::zero(grid, 1.0).unwrap();
    let amp = 2.2;
    if let Grid::Radial(g) = s.grid.clone().as_ref() {
        s.u = g.sample_c(|r| C64::new(amp * (-r * r).exp(), 0.0));
        s.v = g.sample_c(|r| C64::new(amp * (-r * r).exp(), 0.0));
    }
    let rep = evaluate_functionals(&s).unwrap();
    println!("E0 = {:.4}, T0 = {:.4}, M0 = {:.4}", rep.energy, rep.kinetic, rep.mass);
    let profile = CutoffProfile::new(ProfileKind::Radial, 4.0).unwrap();
    let config = IntegratorConfig {
        dt0: 1e-3,
        dt_min: 1e-13,
        t_end: 3.0,
        c_adapt: Some(0.1),
        monitor_stride: 25,
        blowup_factor: 1e4,
    };
    let t0 = Instant::now();
    let rec = evolve(&s, &config, &[VirialMonitor::exact(profile)]).unwrap();
    let last = rec.last();
    println!(
        "termination {:?} at t = {:.5} after {} steps ({:.1}s); T_end/T0 = {:.1}",
        rec.termination,
        last.t,
        rec.steps,
        t0.elapsed().as_secs_f64(),
        last.functionals.kinetic / rep.kinetic
    );
    let mono = snls_core::evolution::monotone_bound_check(&rec, rep.energy);
    println!(
        "monotone majorant: applicable {} holds {} violations {}",
        mono.applicable,
        mono.holds,
        mono.violations.len()
    );
    // where does termination sit relative to horizon
    if rec.termination == Termination::ReachedHorizon {
        println!("no blow-up detected; increase amplitude");
    }
}
