use serde::{Deserialize, Serialize};
use statrs::function::beta::{beta_reg, ln_beta};

use crate::error::{invalid, Error, Result};
use crate::model::{DuoConfig, Species};
use crate::quadrature::{GaussJacobi, GAUSS_JACOBI_NODES};

/// Shapes `γʲ = λʲ/δʲ` of the Beta law governing the species-free face.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaSpec {
    pub gamma1: f64,
    pub gamma2: f64,
}

impl BetaSpec {
    pub fn of(c: &DuoConfig) -> Result<Self> {
        if c.lambda <= 0.0 {
            return Err(Error::DegenerateDensity("no switching (lambda = 0)"));
        }
        Ok(Self {
            gamma1: c.lambda1() / c.vessel1.delta,
            gamma2: c.lambda2() / c.vessel2.delta,
        })
    }
}

/// Stationary law of the resource on the species-free face, per regime:
///
/// `ρ¹(R) = C |R−R₀¹|^{γ¹−1} |R₀²−R|^{γ²}`,
/// `ρ²(R) = C (δ¹/δ²) |R−R₀¹|^{γ¹} |R₀²−R|^{γ²−1}`.
///
/// Both orientations of the inputs are accepted.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FaceDensity {
    pub gamma1: f64,
    pub gamma2: f64,
    pub r01: f64,
    pub r02: f64,
    pub delta_ratio: f64,
    /// `ln C`.
    pub log_c: f64,
    s: f64,
}

pub fn invariant_density(c: &DuoConfig) -> Result<FaceDensity> {
    c.validate()?;
    let spec = BetaSpec::of(c)?;
    let [r01, r02] = c.inputs();
    if r01 == r02 {
        return Err(Error::DegenerateDensity("equal inputs: the face law is a point mass at R0"));
    }
    let (g1, g2) = (spec.gamma1, spec.gamma2);
    let ratio = c.vessel1.delta / c.vessel2.delta;
    let len = (r02 - r01).abs();
    // Masses of the two unnormalised pieces: B(γ¹, γ²+1) and (δ¹/δ²) B(γ¹+1, γ²).
    let lb1 = ln_beta(g1, g2 + 1.0);
    let lb2 = ratio.ln() + ln_beta(g1 + 1.0, g2);
    let m = lb1.max(lb2);
    let log_mass = m + ((lb1 - m).exp() + (lb2 - m).exp()).ln();
    Ok(FaceDensity {
        gamma1: g1,
        gamma2: g2,
        r01,
        r02,
        delta_ratio: ratio,
        log_c: -(g1 + g2) * len.ln() - log_mass,
        s: c.s,
    })
}

impl FaceDensity {
    fn spans(&self, r: f64) -> Option<(f64, f64)> {
        let d1 = (r - self.r01) / (self.r02 - self.r01);
        if !(0.0..=1.0).contains(&d1) {
            return None;
        }
        let len = (self.r02 - self.r01).abs();
        Some((d1 * len, (1.0 - d1) * len))
    }

    pub fn rho1(&self, r: f64) -> f64 {
        self.spans(r).map_or(0.0, |(a, b)| self.rho_at(a, b)[0])
    }

    pub fn rho2(&self, r: f64) -> f64 {
        self.spans(r).map_or(0.0, |(a, b)| self.rho_at(a, b)[1])
    }

    /// `[ρ¹, ρ²]` at distances `a = |R − R₀¹|` and `b = |R₀² − R|`; avoids the
    /// cancellation of forming `R` near an endpoint.
    pub fn rho_at(&self, a: f64, b: f64) -> [f64; 2] {
        let (la, lb) = (a.ln(), b.ln());
        [
            (self.log_c + (self.gamma1 - 1.0) * la + self.gamma2 * lb).exp(),
            (self.log_c + self.delta_ratio.ln() + self.gamma1 * la + (self.gamma2 - 1.0) * lb).exp(),
        ]
    }

    pub fn density(&self, r: f64) -> f64 {
        self.rho1(r) + self.rho2(r)
    }

    /// Probability mass `P(R ≤ r)`. In the affine coordinate `x` the law is
    /// `(1−s) Beta(γ¹, γ²+1) + s Beta(γ¹+1, γ²)`.
    pub fn cdf(&self, r: f64) -> f64 {
        let x = ((r - self.r01) / (self.r02 - self.r01)).clamp(0.0, 1.0);
        let fx = (1.0 - self.s) * beta_reg(self.gamma1, self.gamma2 + 1.0, x)
            + self.s * beta_reg(self.gamma1 + 1.0, self.gamma2, x);
        if self.r02 > self.r01 {
            fx
        } else {
            1.0 - fx
        }
    }

    /// Mass of regime 1, which equals the long-run fraction `1 − s`.
    pub fn regime1_mass(&self) -> f64 {
        1.0 - self.s
    }
}

/// Rate at which `w` invades the species-free switched chemostat.
///
/// `Λ⁰_w = (s/δ¹ + (1−s)/δ²) E[Φ(B)]` with `B ~ Beta(γ¹, γ²)`, evaluated by a
/// Gauss–Jacobi rule matched to the Beta weight. Equal inputs give the
/// point-mass value; `λ = 0` gives the small-`λ` limit.
pub fn lambda0(c: &DuoConfig, w: Species) -> Result<f64> {
    lambda0_with_nodes(c, w, GAUSS_JACOBI_NODES)
}

pub fn lambda0_with_nodes(c: &DuoConfig, w: Species, nodes: usize) -> Result<f64> {
    c.validate()?;
    let [r01, r02] = c.inputs();
    let [d1, d2] = c.deltas();
    let s = c.s;
    if r01 == r02 {
        return Ok((1.0 - s) * c.net_growth(w, 0, r01) + s * c.net_growth(w, 1, r01));
    }
    if c.lambda == 0.0 {
        return Ok(lambda0_limits(c, w)?.0);
    }
    let spec = BetaSpec::of(c)?;
    let gj = GaussJacobi::beta(spec.gamma1, spec.gamma2, nodes)?;
    let phi = |x: f64| {
        let r = (r02 - r01) * x + r01;
        d2 * (1.0 - x) * c.net_growth(w, 0, r) + d1 * x * c.net_growth(w, 1, r)
    };
    Ok((s / d1 + (1.0 - s) / d2) * gj.expect(phi))
}

/// `(λ → 0, λ → ∞)` limits of [`lambda0`].
pub fn lambda0_limits(c: &DuoConfig, w: Species) -> Result<(f64, f64)> {
    c.validate()?;
    let s = c.s;
    let [r01, r02] = c.inputs();
    let [d1, d2] = c.deltas();
    let at0 = (1.0 - s) * c.net_growth(w, 0, r01) + s * c.net_growth(w, 1, r02);
    let r_inf = ((1.0 - s) * d1 * r01 + s * d2 * r02) / ((1.0 - s) * d1 + s * d2);
    let at_inf = (1.0 - s) * c.net_growth(w, 0, r_inf) + s * c.net_growth(w, 1, r_inf);
    Ok((at0, at_inf))
}

/// `Λ⁰_w` along a grid of switching intensities.
pub fn lambda0_profile(c: &DuoConfig, w: Species, lambda_grid: &[f64]) -> Result<Vec<f64>> {
    lambda_grid
        .iter()
        .map(|&l| lambda0(&c.with_coupling(c.s, l), w))
        .collect()
}

pub const MONOTONE_TOL: f64 = 1e-9;

/// True iff `Λ⁰_w` is monotone (either direction) along the ascending grid,
/// up to [`MONOTONE_TOL`].
pub fn lambda0_monotone_check(c: &DuoConfig, w: Species, lambda_grid: &[f64]) -> Result<bool> {
    if lambda_grid.len() < 3 {
        return Err(invalid("lambda_grid", "need at least 3 points"));
    }
    if lambda_grid.windows(2).any(|p| !(p[1] > p[0])) {
        return Err(invalid("lambda_grid", "must be strictly ascending"));
    }
    Ok(is_monotone(&lambda0_profile(c, w, lambda_grid)?, MONOTONE_TOL))
}

pub fn is_monotone(values: &[f64], tol: f64) -> bool {
    let up = values.windows(2).all(|p| p[1] >= p[0] - tol);
    let down = values.windows(2).all(|p| p[1] <= p[0] + tol);
    up || down
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datasets;
    use crate::model::{MonodParams, VesselParams};
    use crate::quadrature::integrate;

    fn mp(a: f64, b: f64) -> MonodParams {
        MonodParams { a, b }
    }

    #[test]
    fn prefactor_identity() {
        let c = datasets::pi2(0.3, 2.7);
        let b = BetaSpec::of(&c).unwrap();
        let lhs = (b.gamma1 + b.gamma2) / (c.lambda1() + c.lambda2());
        let rhs = c.s / c.vessel1.delta + (1.0 - c.s) / c.vessel2.delta;
        assert!((lhs - rhs).abs() < 1e-15);
    }

    #[test]
    fn flat_density_when_shapes_are_one() {
        // δ¹ = δ² = 1 and λ¹ = λ² = 1: γ¹ = γ² = 1.
        let c = datasets::pi2(0.5, 2.0);
        let d = invariant_density(&c).unwrap();
        assert_eq!((d.gamma1, d.gamma2), (1.0, 1.0));
        // ρ¹ + ρ² is then constant: C[(1−x) L + x L] L⁰.
        let l = 2.1 - 0.55;
        for k in 1..10 {
            let r = 0.55 + l * k as f64 / 10.0;
            assert!((d.density(r) - 1.0 / l).abs() < 1e-12);
        }
    }

    #[test]
    fn density_normalises_and_matches_cdf() {
        for (s, lambda) in [(0.5, 1.0), (0.2, 0.3), (0.8, 7.0)] {
            for c in [datasets::pi1(s, lambda), datasets::pi2(s, lambda)] {
                let d = invariant_density(&c).unwrap();
                let [r01, r02] = c.inputs();
                let (lo, hi) = (r01.min(r02), r01.max(r02));
                // d = h tᵐ from each end absorbs the endpoint power laws.
                let m = 1.0 / d.gamma1.min(d.gamma2).min(1.0);
                let len = hi - lo;
                let h = 0.5 * len;
                let half = |near_r01: bool| {
                    integrate(
                        |t| {
                            let e = h * t.powf(m);
                            let [p1, p2] = if near_r01 { d.rho_at(e, len - e) } else { d.rho_at(len - e, e) };
                            (p1 + p2) * h * m * t.powf(m - 1.0)
                        },
                        0.0,
                        1.0,
                        1e-13,
                    )
                };
                let total = half(true) + half(false);
                assert!((total - 1.0).abs() < 1e-10, "mass {total} at s={s}, λ={lambda}");
                assert!((d.cdf(hi) - 1.0).abs() < 1e-14 && d.cdf(lo).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn identical_vessels_collapse() {
        let v = VesselParams::new(1.3, 4.0, mp(2.0, 1.0), mp(2.0, 1.0)).unwrap();
        let c = DuoConfig::new(v, v, 0.4, 2.0).unwrap();
        let expect = v.net_growth(Species::U, 4.0);
        assert!((lambda0(&c, Species::U).unwrap() - expect).abs() < 1e-15);
        let (a, b) = lambda0_limits(&c, Species::U).unwrap();
        assert!((a - expect).abs() < 1e-15 && (b - expect).abs() < 1e-15);
    }

    #[test]
    fn nearly_equal_inputs_approach_point_value() {
        let mut v2 = VesselParams::new(1.3, 4.0, mp(2.0, 1.0), mp(2.0, 1.0)).unwrap();
        let v1 = v2;
        v2.r0 = 4.0 + 1e-7;
        let c = DuoConfig::new(v1, v2, 0.4, 2.0).unwrap();
        assert!((lambda0(&c, Species::U).unwrap() - v1.net_growth(Species::U, 4.0)).abs() < 1e-7);
    }

    #[test]
    fn limits_bracket_and_continuity() {
        let c = datasets::pi2(0.5, 1.0);
        let (l0, linf) = lambda0_limits(&c, Species::U).unwrap();
        let small = lambda0(&c.with_coupling(0.5, 1e-6), Species::U).unwrap();
        let large = lambda0(&c.with_coupling(0.5, 1e4), Species::U).unwrap();
        assert!((small - l0).abs() < 1e-4);
        assert!((large - linf).abs() < 1e-2);
        let (lo, hi) = (l0.min(linf), l0.max(linf));
        for l in [0.01, 0.1, 1.0, 10.0, 100.0] {
            let x = lambda0(&c.with_coupling(0.5, l), Species::U).unwrap();
            assert!(x >= lo - 1e-9 && x <= hi + 1e-9);
        }
    }

    #[test]
    fn zero_lambda_routes_to_limit() {
        let c = datasets::pi1(0.3, 0.0);
        assert_eq!(lambda0(&c, Species::U).unwrap(), lambda0_limits(&c, Species::U).unwrap().0);
        assert!(invariant_density(&c).is_err());
    }

    #[test]
    fn quadrature_converges_in_nodes() {
        let c = datasets::pi1(0.37, 0.8);
        let a = lambda0_with_nodes(&c, Species::U, 64).unwrap();
        let b = lambda0_with_nodes(&c, Species::U, 256).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn pi1_is_monotone() {
        let grid: Vec<f64> = (0..30).map(|k| 10f64.powf(-2.0 + 5.0 * k as f64 / 29.0)).collect();
        let c = datasets::pi1(0.5, 1.0);
        assert!(lambda0_monotone_check(&c, Species::U, &grid).unwrap());
        assert!(lambda0_monotone_check(&c, Species::U, &grid[..2]).is_err());
    }

    #[test]
    fn detects_non_monotone_profile() {
        // A configuration whose face rate rises and then falls with λ.
        let v1 = VesselParams::new(1.069, 4.446, mp(3.036, 4.722), mp(3.036, 4.722)).unwrap();
        let v2 = VesselParams::new(1.553, 2.294, mp(3.828, 1.221), mp(3.828, 1.221)).unwrap();
        let c = DuoConfig::new(v1, v2, 0.1742, 1.0).unwrap();
        let grid: Vec<f64> = (0..30).map(|k| 10f64.powf(-2.0 + 5.0 * k as f64 / 29.0)).collect();
        let prof = lambda0_profile(&c, Species::U, &grid).unwrap();
        let peak = prof.iter().cloned().fold(f64::MIN, f64::max);
        assert!(peak > prof[0] + 1e-4 && peak > prof[29] + 1e-3);
        assert!(!lambda0_monotone_check(&c, Species::U, &grid).unwrap());
    }
}
