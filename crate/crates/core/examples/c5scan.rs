use num_complex::Complex64 as C64;
use snls_core::cutoff::{CutoffProfile, ProfileKind};
use snls_core::evolution::{evolve, IntegratorConfig};
use snls_core::functionals::SystemState;
use snls_core::grid::{Grid, RadialGrid};
use snls_core::virial::VirialMonitor;
use std::sync::Arc;
use std::time::Instant;

fn worst(rec: &snls_core::evolution::TrajectoryRecord, idx: usize) -> f64 {
    let n = rec.samples.len();
    let mut w = 0.0f64;
    for i in 1..n - 1 {
        let fd = (rec.samples[i + 1].virials[idx].m_phi - rec.samples[i - 1].virials[idx].m_phi)
            / (rec.samples[i + 1].t - rec.samples[i - 1].t);
        let exact = rec.samples[i].virials[idx].ddt_exact;
        w = w.max((fd - exact).abs() / exact.abs().max(1.0));
    }
    w
}

fn main() {
    for amp in [0.55f64, 0.4, 0.3] {
        for n in [2048usize, 4096] {
            let rmx = 12.0;
            let t0 = Instant::now();
            let grid = Arc::new(Grid::Radial(RadialGrid::new(4, rmx, n).unwrap()));
            let mut s = SystemState::zero(grid, 0.8).unwrap();
            if let Grid::Radial(g) = s.grid.clone().as_ref() {
                s.u = g.sample_c(|r| C64::from_polar(amp * (-r * r).exp(), 0.3 * r * r));
                s.v = g.sample_c(|r| {
                    C64::from_polar(0.64 * amp * (-0.9 * r * r).exp(), -0.2 * r * r)
                });
            }
            let config = IntegratorConfig {
                dt0: 1e-4,
                c_adapt: None,
                t_end: 1.0,
                monitor_stride: 10,
                ..Default::default()
            };
            let monitors = [
                VirialMonitor::exact(CutoffProfile::new(ProfileKind::Radial, 2.0).unwrap()),
                VirialMonitor::exact(CutoffProfile::quadratic()),
            ];
            let rec = evolve(&s, &config, &monitors).unwrap();
            println!(
                "amp {amp:4}  n {n:5}: clipped {:9.3e}  quad {:9.3e}  ({:.0}s)",
                worst(&rec, 0),
                worst(&rec, 1),
                t0.elapsed().as_secs_f64()
            );
        }
    }
}
