use num_complex::Complex64 as C64;
use snls_core::cutoff::{CutoffProfile, ProfileKind};
use snls_core::evolution::{evolve, IntegratorConfig};
use snls_core::functionals::SystemState;
use snls_core::grid::{Grid, RadialGrid};
use snls_core::virial::VirialMonitor;
use std::sync::Arc;

fn main() {
    let rmx: f64 = std::env::args().nth(1).map(|x| x.parse().unwrap()).unwrap_or(10.0);
    let n: usize = std::env::args().nth(2).map(|x| x.parse().unwrap()).unwrap_or(1024);
    let grid = Arc::new(Grid::Radial(RadialGrid::new(4, rmx, n).unwrap()));
    let mut s = SystemState::zero(grid, 0.8).unwrap();
    if let Grid::Radial(g) = s.grid.clone().as_ref() {
        s.u = g.sample_c(|r| C64::from_polar(0.55 * (-r * r).exp(), 0.5 * r));
        s.v = g.sample_c(|r| C64::from_polar(0.35 * (-0.9 * r * r).exp(), -0.35 * r));
    }
    let config = IntegratorConfig {
        dt0: 1e-4,
        c_adapt: None,
        t_end: 1.0,
        monitor_stride: 10,
        ..Default::default()
    };
    let monitors = [VirialMonitor::exact(
        CutoffProfile::new(ProfileKind::Radial, 2.0).unwrap(),
    )];
    let rec = evolve(&s, &config, &monitors).unwrap();
    let ns = rec.samples.len();
    for i in (1..ns - 1).step_by(40) {
        let tm = &rec.samples[i - 1];
        let tp = &rec.samples[i + 1];
        let fd = (tp.virials[0].m_phi - tm.virials[0].m_phi) / (tp.t - tm.t);
        let smp = &rec.samples[i];
        let exact = smp.virials[0].ddt_exact;
        println!(
            "t {:6.3}  m_phi {:11.4e}  fd {:11.4e}  exact {:11.4e}  mismatch {:9.2e}  shell {:8.1e}",
            smp.t, smp.virials[0].m_phi, fd, exact,
            (fd - exact).abs() / exact.abs().max(1.0),
            smp.shell_fraction,
        );
    }
}
