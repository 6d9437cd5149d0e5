//! Numerical laboratory for the two-component nonlinear Schrödinger system
//! with quadratic interaction,
//!
//! ```text
//! i ∂t u + Δu  = -2 v ū,
//! i ∂t v + κΔv = -u²,        x ∈ ℝ^d,  d = 4, 5, 6,
//! ```
//!
//! and its N-component generalization. The crate provides:
//!
//! * symmetry-reduced grids (radial and cylindrical) with conservative
//!   Laplacian stencils and quadrature ([`grid`]),
//! * the conserved/variational functionals M, E, T, P, G together with
//!   blow-up condition classifiers and sharp-constant evaluation
//!   ([`functionals`]),
//! * ground-state solvers: a Petviashvili fixed-point iteration with Newton
//!   polish, an independent shooting oracle, and the explicit static pair in
//!   d = 6 ([`groundstate`]),
//! * the piecewise cut-off profile ζ/χ and its derived weight functions with
//!   a pointwise-inequality certifier ([`cutoff`]),
//! * localized virial functionals M_φ(t), their exact derivative assembly and
//!   one-sided localized bounds ([`virial`]),
//! * a Strang-splitting time integrator with conservation and blow-up
//!   monitors ([`evolution`]),
//! * the general N-component quadratic system: polynomial nonlinearity
//!   engine, mass-weight solver, resonance classification, and generalized
//!   virial estimates ([`gqnls`]).

pub mod cutoff;
pub mod error;
pub mod evolution;
pub mod families;
pub mod functionals;
pub mod gqnls;
pub mod grid;
pub mod groundstate;
pub mod virial;

pub use error::{Error, Result};
pub use evolution::{IntegratorConfig, Termination, TrajectoryRecord};
pub use functionals::{
    Classification5d, Classification6d, FunctionalReport, SystemState, ThresholdConstants,
    UniformBoundConstants,
};
pub use grid::{CylindricalGrid, Grid, RadialGrid};
pub use groundstate::GroundStatePair;
pub use virial::VirialReport;

/// Complex scalar used for all wave fields.
pub type C64 = num_complex::Complex64;
