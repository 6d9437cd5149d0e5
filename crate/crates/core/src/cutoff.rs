//! Cut-off weight construction for localized virial functionals.
//!
//! The base profile is built from the piecewise slope function ζ:
//!
//! ```text
//! ζ(s) = 2s                    on [0, 1]
//!        2[s − (s−1)³]         on (1, 1 + 1/√3]
//!        C¹ decreasing bridge  on (1 + 1/√3, 2)
//!        0                     on [2, ∞)
//! ```
//!
//! with χ(s) = ∫₀^s ζ, so that χ(s) = s² for s ≤ 1, χ is constant past 2,
//! and χ'' = ζ' ≤ 2 everywhere. The bridge is a cubic Hermite interpolant
//! with zero end slopes; its interior slope is strictly negative. Rescaled
//! profiles φ_R(r) = R²χ(r/R) (radial) and ψ_R(ρ) = R²χ(ρ/R) (cylindrical)
//! feed the weight functions θ/ϑ that control the localized virial bounds,
//! and [`certify_pointwise_inequality`] checks the pointwise positivity those
//! bounds need at a given scale R.

use crate::error::{Error, Result};
use serde::Serialize;

/// Left knot of the bridge piece, 1 + 1/√3.
pub const BRIDGE_LEFT: f64 = 1.577_350_269_189_625_8;
/// Right end of the bridge piece.
pub const BRIDGE_RIGHT: f64 = 2.0;

/// ζ value at the left bridge knot, 2 + 4/(3√3).
pub fn zeta_bridge_value() -> f64 {
    2.0 + 4.0 / (3.0 * 3.0f64.sqrt())
}

/// Piecewise slope function ζ(s), s ≥ 0.
pub fn zeta(s: f64) -> Result<f64> {
    if s < 0.0 {
        return Err(Error::InvalidParameter(format!("zeta needs s >= 0, got {s}")));
    }
    Ok(zeta_unchecked(s))
}

fn zeta_unchecked(s: f64) -> f64 {
    if s <= 1.0 {
        2.0 * s
    } else if s <= BRIDGE_LEFT {
        2.0 * (s - (s - 1.0).powi(3))
    } else if s < BRIDGE_RIGHT {
        let l = BRIDGE_RIGHT - BRIDGE_LEFT;
        let x = (s - BRIDGE_LEFT) / l;
        // Hermite basis with value V at x=0, zero at x=1, zero slopes at both.
        zeta_bridge_value() * (2.0 * x.powi(3) - 3.0 * x * x + 1.0)
    } else {
        0.0
    }
}

/// ζ'(s) = χ''(s); satisfies ζ' ≤ 2 everywhere.
pub fn zeta_prime(s: f64) -> f64 {
    if s < 0.0 {
        return 0.0;
    }
    if s <= 1.0 {
        2.0
    } else if s <= BRIDGE_LEFT {
        2.0 * (1.0 - 3.0 * (s - 1.0) * (s - 1.0))
    } else if s < BRIDGE_RIGHT {
        let l = BRIDGE_RIGHT - BRIDGE_LEFT;
        let x = (s - BRIDGE_LEFT) / l;
        zeta_bridge_value() * (6.0 * x * x - 6.0 * x) / l
    } else {
        0.0
    }
}

/// χ(s) = ∫₀^s ζ, in closed form on each piece.
pub fn chi(s: f64) -> Result<f64> {
    if s < 0.0 {
        return Err(Error::InvalidParameter(format!("chi needs s >= 0, got {s}")));
    }
    Ok(chi_unchecked(s))
}

fn chi_at_bridge_left() -> f64 {
    // s² − (s−1)⁴/2 at s = 1 + 1/√3; (s−1)⁴ = 1/9.
    BRIDGE_LEFT * BRIDGE_LEFT - 1.0 / 18.0
}

fn chi_plateau() -> f64 {
    let l = BRIDGE_RIGHT - BRIDGE_LEFT;
    chi_at_bridge_left() + zeta_bridge_value() * l / 2.0
}

fn chi_unchecked(s: f64) -> f64 {
    if s <= 1.0 {
        s * s
    } else if s <= BRIDGE_LEFT {
        s * s - 0.5 * (s - 1.0).powi(4)
    } else if s < BRIDGE_RIGHT {
        let l = BRIDGE_RIGHT - BRIDGE_LEFT;
        let x = (s - BRIDGE_LEFT) / l;
        // ∫ (2x³ − 3x² + 1) dx = x⁴/2 − x³ + x
        chi_at_bridge_left() + zeta_bridge_value() * l * (0.5 * x.powi(4) - x.powi(3) + x)
    } else {
        chi_plateau()
    }
}

/// Symmetry class of a cut-off profile.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ProfileKind {
    /// φ_R(x) = R² χ(r/R), r = |x|.
    Radial,
    /// φ_R(x) = ψ_R(ρ) + x_d², ψ_R(ρ) = R² χ(ρ/R).
    Cylindrical,
    /// Unclipped φ(x) = |x|² (resp. ρ² + x_d²); χ(s) = s² everywhere.
    Quadratic,
}

/// Rescaled cut-off profile at scale R.
#[derive(Clone, Copy, Debug)]
pub struct CutoffProfile {
    pub kind: ProfileKind,
    pub r_scale: f64,
}

impl CutoffProfile {
    pub fn new(kind: ProfileKind, r_scale: f64) -> Result<Self> {
        if kind != ProfileKind::Quadratic && !(r_scale > 1.0) {
            return Err(Error::InvalidParameter(format!(
                "cut-off scale R must exceed 1, got {r_scale}"
            )));
        }
        Ok(Self { kind, r_scale })
    }

    pub fn quadratic() -> Self {
        Self {
            kind: ProfileKind::Quadratic,
            r_scale: 1.0,
        }
    }

    /// Profile value along the clipped coordinate (r or ρ).
    pub fn varphi(&self, r: f64) -> f64 {
        match self.kind {
            ProfileKind::Quadratic => r * r,
            _ => self.r_scale * self.r_scale * chi_unchecked(r / self.r_scale),
        }
    }

    /// First derivative φ'_R(r) = R ζ(r/R).
    pub fn dvarphi(&self, r: f64) -> f64 {
        match self.kind {
            ProfileKind::Quadratic => 2.0 * r,
            _ => self.r_scale * zeta_unchecked(r / self.r_scale),
        }
    }

    /// Second derivative φ''_R(r) = ζ'(r/R).
    pub fn d2varphi(&self, r: f64) -> f64 {
        match self.kind {
            ProfileKind::Quadratic => 2.0,
            _ => zeta_prime(r / self.r_scale),
        }
    }
}

/// Weight pair entering the localized virial bounds:
/// θ₁ = 2 − φ''_R and θ₂ = 2m − Δφ_R = θ₁ + (m−1)(2 − φ'_R/r), where m is
/// the number of clipped dimensions (m = d for radial profiles, m = d−1 for
/// the transverse part of cylindrical ones).
#[derive(Clone, Copy, Debug)]
pub struct WeightPair {
    profile: CutoffProfile,
    m: u32,
}

impl WeightPair {
    pub fn theta1(&self, r: f64) -> f64 {
        2.0 - self.profile.d2varphi(r)
    }

    pub fn theta2(&self, r: f64) -> f64 {
        let ratio = if r == 0.0 {
            2.0
        } else {
            self.profile.dvarphi(r) / r
        };
        self.theta1(r) + (self.m as f64 - 1.0) * (2.0 - ratio)
    }

    pub fn clipped_dims(&self) -> u32 {
        self.m
    }

    pub fn scale(&self) -> f64 {
        self.profile.r_scale
    }
}

/// Builds the weight pair for a profile on a d-dimensional problem.
///
/// For the radial d = 4 profile this is (θ_{1,R}, θ_{2,R}) with
/// θ₂ = 8 − Δφ_R; for the cylindrical d = 4 profile it is (ϑ_{1,R}, ϑ_{2,R})
/// with ϑ₂ = 6 − Δ_y ψ_R.
pub fn weight_pair(profile: &CutoffProfile, d: u32) -> Result<WeightPair> {
    let m = match profile.kind {
        ProfileKind::Radial => d,
        ProfileKind::Cylindrical => d - 1,
        ProfileKind::Quadratic => {
            return Err(Error::InvalidParameter(
                "weight pair is undefined for the unclipped quadratic profile".into(),
            ))
        }
    };
    Ok(WeightPair {
        profile: *profile,
        m,
    })
}

/// Outcome of a pointwise inequality certification.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Certification {
    pub holds: bool,
    /// Smallest sampled value of θ₁ − C R^{-γ} θ₂².
    pub margin: f64,
    /// Radius where the minimum margin was attained.
    pub r_min_margin: f64,
}

/// Decay exponent γ of the remainder weight for a profile kind:
/// R^{-3/2} for the radial d = 4 estimate, R^{-1} for the cylindrical one.
pub fn remainder_exponent(kind: ProfileKind) -> f64 {
    match kind {
        ProfileKind::Cylindrical => 1.0,
        _ => 1.5,
    }
}

/// Checks θ₁(r) − C R^{-γ} θ₂(r)² ≥ 0 for all r ≥ 0 by dense sampling of
/// each polynomial piece plus explicit checks at the piece boundaries and on
/// the constant tail. `holds == false` is a normal outcome for small R.
pub fn certify_pointwise_inequality(pair: &WeightPair, c: f64, r_scale: f64) -> Certification {
    let gamma = remainder_exponent(pair.profile.kind);
    let coef = c * r_scale.powf(-gamma);
    let lhs = |s: f64| {
        let r = s * r_scale;
        let t1 = pair.theta1(r);
        let t2 = pair.theta2(r);
        t1 - coef * t2 * t2
    };

    let mut margin = f64::INFINITY;
    let mut at = 0.0;
    let mut consider = |s: f64, val: f64| {
        if val < margin {
            margin = val;
            at = s * r_scale;
        }
    };

    // Core region: both weights vanish identically; the margin is exactly 0.
    consider(0.5, 0.0);

    let pieces: [(f64, f64); 3] = [
        (1.0, BRIDGE_LEFT),
        (BRIDGE_LEFT, BRIDGE_RIGHT),
        (BRIDGE_RIGHT, BRIDGE_RIGHT + 1.0),
    ];
    const SAMPLES: usize = 10_000;
    for (lo, hi) in pieces {
        for i in 0..=SAMPLES {
            let s = lo + (hi - lo) * i as f64 / SAMPLES as f64;
            consider(s, lhs(s));
        }
        // One-sided values at the piece boundaries.
        consider(lo + 1e-12, lhs(lo + 1e-12));
        consider(hi - 1e-12, lhs(hi - 1e-12));
    }
    // Tail s ≥ 2 is constant: θ₁ = 2, θ₂ = 2m.
    consider(BRIDGE_RIGHT + 2.0, lhs(BRIDGE_RIGHT + 2.0));

    Certification {
        holds: margin >= 0.0,
        margin,
        r_min_margin: at,
    }
}

/// Smallest R (to 1% resolution) at which the pointwise inequality holds,
/// scanned by bisection on log R. The admissible set is upward closed in R
/// because the weights depend on r/R only.
pub fn min_admissible_r(kind: ProfileKind, d: u32, c: f64) -> Result<f64> {
    const R_CAP: f64 = 1e8;
    if !(c > 0.0) {
        return Err(Error::InvalidParameter("C must be positive".into()));
    }
    let probe = |r: f64| -> Result<bool> {
        let profile = CutoffProfile::new(kind, r)?;
        let pair = weight_pair(&profile, d)?;
        Ok(certify_pointwise_inequality(&pair, c, r).holds)
    };
    let mut lo = 1.0 + 1e-9;
    let mut hi = lo * 2.0;
    while !probe(hi)? {
        hi *= 4.0;
        if hi > R_CAP {
            return Err(Error::BracketNotFound(format!(
                "no admissible R below {R_CAP:.1e} for C = {c}"
            )));
        }
    }
    if probe(lo)? {
        return Ok(lo);
    }
    while hi / lo > 1.01 {
        let mid = (lo * hi).sqrt();
        if probe(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// One row of the exported profile table.
#[derive(Clone, Copy, Debug)]
pub struct ProfileRow {
    pub s: f64,
    pub zeta: f64,
    pub chi: f64,
    pub chi_second: f64,
}

/// Tabulates (s, ζ, χ, χ'') on [0, s_max] for plotting by external tools.
pub fn tabulate_profile(s_max: f64, samples: usize) -> Vec<ProfileRow> {
    (0..=samples)
        .map(|i| {
            let s = s_max * i as f64 / samples as f64;
            ProfileRow {
                s,
                zeta: zeta_unchecked(s),
                chi: chi_unchecked(s),
                chi_second: zeta_prime(s),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zeta_fixed_values() {
        assert_eq!(zeta(0.5).unwrap(), 1.0);
        let v = zeta(BRIDGE_LEFT).unwrap();
        let exact = 2.0 + 4.0 / (3.0 * 3.0f64.sqrt());
        assert!((v - exact).abs() < 1e-14);
        assert!((exact - 2.7698003589195).abs() < 1e-12);
        assert_eq!(zeta(2.5).unwrap(), 0.0);
        assert!(zeta(-0.1).is_err());
    }

    #[test]
    fn zeta_is_continuous_at_knots() {
        for knot in [1.0, BRIDGE_LEFT, BRIDGE_RIGHT] {
            let lo = zeta(knot - 1e-9).unwrap();
            let hi = zeta(knot + 1e-9).unwrap();
            assert!((lo - hi).abs() < 1e-7, "knot {knot}: {lo} vs {hi}");
        }
    }

    #[test]
    fn zeta_prime_bounded_by_two_and_bridge_decreasing() {
        for i in 0..=10_000 {
            let s = 3.0 * i as f64 / 10_000.0;
            assert!(zeta_prime(s) <= 2.0 + 1e-12, "s = {s}");
        }
        for i in 1..10_000 {
            let s = BRIDGE_LEFT + (BRIDGE_RIGHT - BRIDGE_LEFT) * i as f64 / 10_000.0;
            assert!(zeta_prime(s) <= 0.0, "bridge slope positive at {s}");
        }
    }

    #[test]
    fn chi_matches_quadrature_of_zeta() {
        // Independent oracle: composite Simpson on a fine grid.
        let simpson = |b: f64| {
            let n = 20_000;
            let h = b / n as f64;
            let mut acc = zeta_unchecked(0.0) + zeta_unchecked(b);
            for i in 1..n {
                let w = if i % 2 == 1 { 4.0 } else { 2.0 };
                acc += w * zeta_unchecked(i as f64 * h);
            }
            acc * h / 3.0
        };
        for b in [0.5, 1.0, 1.3, BRIDGE_LEFT, 1.8, 2.0, 2.7] {
            let exact = chi(b).unwrap();
            let quad = simpson(b);
            assert!((exact - quad).abs() < 1e-9, "b = {b}: {exact} vs {quad}");
        }
    }

    #[test]
    fn chi_is_square_on_core_and_flat_past_two() {
        for s in [0.0, 0.25, 0.7, 1.0] {
            assert_eq!(chi(s).unwrap(), s * s);
        }
        let plateau = chi(2.0).unwrap();
        for s in [2.1, 5.0, 100.0] {
            assert!((chi(s).unwrap() - plateau).abs() < 1e-14);
        }
        // Derivative past 2 vanishes to round-off.
        let d = (chi(2.5 + 1e-6).unwrap() - chi(2.5).unwrap()) / 1e-6;
        assert!(d.abs() < 1e-14);
    }

    #[test]
    fn varphi_is_r_squared_inside_core() {
        let p = CutoffProfile::new(ProfileKind::Radial, 7.0).unwrap();
        for r in [0.0, 1.0, 3.5, 7.0] {
            assert!((p.varphi(r) - r * r).abs() <= 1e-13 * (1.0 + r * r));
            assert!((p.dvarphi(r) - 2.0 * r).abs() <= 1e-13 * (1.0 + r));
            assert_eq!(p.d2varphi(r), 2.0);
        }
    }

    #[test]
    fn theta_closed_forms_on_middle_piece() {
        // d = 4 radial: θ₁(1.5R) = 6(0.5)² and the tail bound from the
        // middle-piece case analysis.
        let r_scale = 12.0;
        let p = CutoffProfile::new(ProfileKind::Radial, r_scale).unwrap();
        let pair = weight_pair(&p, 4).unwrap();
        let r = 1.5 * r_scale;
        assert!((pair.theta1(r) - 1.5).abs() < 1e-13);
        let bound = 2.0 * (3.0 + 2.0 / 3.0f64.sqrt()) * 0.25;
        assert!(pair.theta2(r) < bound, "{} !< {bound}", pair.theta2(r));
        // Direct evaluation: θ₂(1.5R) = 6(s−1)² + 6(s−1)³/s at s = 1.5.
        let exact = 6.0 * 0.25 + 6.0 * 0.125 / 1.5;
        assert!((pair.theta2(r) - exact).abs() < 1e-13);
    }

    #[test]
    fn weights_vanish_inside_core() {
        let p = CutoffProfile::new(ProfileKind::Cylindrical, 5.0).unwrap();
        let pair = weight_pair(&p, 4).unwrap();
        for r in [0.1, 2.5, 5.0] {
            assert_eq!(pair.theta1(r), 0.0);
            assert_eq!(pair.theta2(r), 0.0);
        }
        assert_eq!(pair.clipped_dims(), 3);
    }

    #[test]
    fn certification_large_r_holds_small_r_fails() {
        let c = 1.0;
        let p_big = CutoffProfile::new(ProfileKind::Radial, 1e4).unwrap();
        let pair_big = weight_pair(&p_big, 4).unwrap();
        let cert = certify_pointwise_inequality(&pair_big, c, 1e4);
        assert!(cert.holds);
        assert!(cert.margin >= 0.0);

        let p_small = CutoffProfile::new(ProfileKind::Radial, 1.01).unwrap();
        let pair_small = weight_pair(&p_small, 4).unwrap();
        let cert = certify_pointwise_inequality(&pair_small, c, 1.01);
        assert!(!cert.holds);
        assert!(cert.margin < 0.0);
        assert!(cert.r_min_margin > 1.01);
    }

    #[test]
    fn min_admissible_r_limits_and_monotonicity() {
        // Tiny C: the inequality degenerates to θ₁ ≥ 0, admissible R → 1⁺.
        let r_tiny = min_admissible_r(ProfileKind::Radial, 4, 1e-12).unwrap();
        assert!(r_tiny < 1.1, "r_tiny = {r_tiny}");

        let r1 = min_admissible_r(ProfileKind::Radial, 4, 1.0).unwrap();
        let r2 = min_admissible_r(ProfileKind::Radial, 4, 2.0).unwrap();
        assert!(r1 > 1.0);
        assert!(r2 >= r1, "doubling C must not shrink admissible R");

        // Upward closure: R above the scan result certifies, below fails.
        let probe = |r: f64| {
            let p = CutoffProfile::new(ProfileKind::Radial, r).unwrap();
            let pair = weight_pair(&p, 4).unwrap();
            certify_pointwise_inequality(&pair, 1.0, r).holds
        };
        assert!(probe(r1 * 1.1));
        assert!(probe(r1 * 4.0));
        assert!(!probe(r1 * 0.8));
    }

    #[test]
    fn cylindrical_identity_theta2() {
        // ϑ₂ = ϑ₁ + 2(2 − ψ'_R/ρ) symbolically for d = 4.
        let p = CutoffProfile::new(ProfileKind::Cylindrical, 3.0).unwrap();
        let pair = weight_pair(&p, 4).unwrap();
        for rho in [0.5, 3.3, 4.0, 5.5, 7.0] {
            let lhs = pair.theta2(rho);
            let rhs = pair.theta1(rho) + 2.0 * (2.0 - p.dvarphi(rho) / rho);
            assert!((lhs - rhs).abs() < 1e-13);
        }
    }
}
