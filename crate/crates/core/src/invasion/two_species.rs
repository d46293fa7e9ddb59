//! Invasion of a rare species into the switched resident-only system.
//!
//! With common input `R₀` and `Σ = R₀`, the resident density `x` follows
//! `ẋ = x X^I(R₀−x)` with `Xʲ = f_w̄ʲ − δʲ`. Its stationary law is
//! `p(x) ∝ G(x) e^{λH(x)}` with
//!
//! * `G = (|X¹|+|X²|) / (x |X¹| |X²|)`,
//! * `λH = ln q`, `q' = −q (λ¹/φ¹ + λ²/φ²)`, `φʲ = x Xʲ`,
//!
//! and the invader's rate is the `p`-average of
//! `h = (X_w¹|X²| + X_w²|X¹|)/(|X¹|+|X²|)`.
//!
//! Near an endpoint the density is a pure power law `|x − x_e|^{e−1}`; the
//! quadrature integrates each half of the support in a variable that flattens
//! that power, in log space.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::model::{BreakEven, DuoConfig, MonodParams, Species};
use crate::quadrature::adaptive_gk;
use crate::roots::bisect;

/// Where the resident's support ends.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Endpoint {
    /// Extinction boundary `x = 0`: reached when the resident fails in one vessel.
    Zero,
    /// Single-vessel equilibrium `x = R₀ − R_w̄^{j,*}` of vessel `j` (0-based).
    Equilibrium { vessel: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct ResidentVessel {
    a: f64,
    b: f64,
    delta: f64,
    /// `a − δ`.
    gap: f64,
    /// `x* = R₀ − R*`; may lie outside `[0, R₀]`.
    x_star: f64,
    /// Coefficients of `ln x` and `ln |x* − x|` in `ln q`.
    c_ln_x: f64,
    c_ln_gap: f64,
}

/// Ingredients of the two-species rate for invader `w` against resident `w̄`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoSpeciesIntegrand {
    pub invader: Species,
    pub r0: f64,
    pub lambda: f64,
    pub s: f64,
    /// Support `[x_lo, x_hi]` of the resident density.
    pub x_lo: f64,
    pub x_hi: f64,
    pub lo: Endpoint,
    pub hi: Endpoint,
    /// Endpoint exponents `e` (density `~ |x − x_e|^{e−1}`).
    pub e_lo: f64,
    pub e_hi: f64,
    /// `α_w̄ʲ = a/(a−δ)`.
    pub alpha: [f64; 2],
    /// `β_w̄ʲ = 1 + R₀/b`.
    pub beta: [f64; 2],
    /// `ω¹ = (s/δ¹) R¹*/(R₀−R¹*)`, `ω² = ((1−s)/δ²) R²*/(R₀−R²*)`.
    pub omega: [f64; 2],
    res: [ResidentVessel; 2],
    inv: [MonodParams; 2],
    inv_delta: [f64; 2],
}

/// Outcome when the support is a single point or the density is well defined.
#[derive(Debug, Clone, PartialEq)]
pub enum Support {
    Interval(TwoSpeciesIntegrand),
    /// Both single-vessel equilibria coincide: the law is a point mass.
    Point(f64),
}

impl TwoSpeciesIntegrand {
    pub fn new(c: &DuoConfig, w: Species) -> Result<Support> {
        c.validate()?;
        let r0 = c.common_input()?;
        if c.lambda <= 0.0 {
            return Err(Error::DegenerateDensity("no switching (lambda = 0)"));
        }
        let resident = w.other();
        let rates = c.rates();
        let weights = [c.s, 1.0 - c.s];
        let mut res = [ResidentVessel {
            a: 0.0,
            b: 0.0,
            delta: 0.0,
            gap: 0.0,
            x_star: 0.0,
            c_ln_x: 0.0,
            c_ln_gap: 0.0,
        }; 2];
        let mut alpha = [0.0; 2];
        let mut beta = [0.0; 2];
        let mut omega = [0.0; 2];
        for j in 0..2 {
            let v = c.vessel(j);
            let p = v.monod(resident);
            let gap = p.a - v.delta;
            if gap == 0.0 {
                return Err(invalid(
                    &format!("vessel{}.{}.a", j + 1, resident),
                    "equals the dilution rate; the resident's face law has no closed form",
                ));
            }
            // R* = bδ/(a−δ) also for a < δ (negative), which keeps one formula.
            let r_star = p.b * v.delta / gap;
            let x_star = r0 - r_star;
            if x_star == 0.0 {
                return Err(Error::ResidentCannotPersist(resident));
            }
            res[j] = ResidentVessel {
                a: p.a,
                b: p.b,
                delta: v.delta,
                gap,
                x_star,
                c_ln_x: -rates[j] * (p.b + r0) / (gap * x_star),
                c_ln_gap: rates[j] * (p.b + r_star) / (gap * x_star),
            };
            alpha[j] = p.a / gap;
            beta[j] = 1.0 + r0 / p.b;
            omega[j] = weights[j] / v.delta * r_star / (r0 - r_star);
        }
        let persists = |j: usize| matches!(c.vessel(j).break_even(resident), BreakEven::Finite(r) if r < r0);
        let (lo, hi, x_lo, x_hi) = match (persists(0), persists(1)) {
            (true, true) => {
                let (x1, x2) = (res[0].x_star, res[1].x_star);
                if x1 == x2 {
                    return Ok(Support::Point(x1));
                }
                let (a, b) = if x1 < x2 { (0, 1) } else { (1, 0) };
                (
                    Endpoint::Equilibrium { vessel: a },
                    Endpoint::Equilibrium { vessel: b },
                    res[a].x_star,
                    res[b].x_star,
                )
            }
            (true, false) => (Endpoint::Zero, Endpoint::Equilibrium { vessel: 0 }, 0.0, res[0].x_star),
            (false, true) => (Endpoint::Zero, Endpoint::Equilibrium { vessel: 1 }, 0.0, res[1].x_star),
            (false, false) => return Err(Error::ResidentCannotPersist(resident)),
        };
        let mut it = TwoSpeciesIntegrand {
            invader: w,
            r0,
            lambda: c.lambda,
            s: c.s,
            x_lo,
            x_hi,
            lo,
            hi,
            e_lo: 0.0,
            e_hi: 0.0,
            alpha,
            beta,
            omega,
            res,
            inv: [*c.vessel1.monod(w), *c.vessel2.monod(w)],
            inv_delta: c.deltas(),
        };
        it.e_lo = it.exponent(lo);
        it.e_hi = it.exponent(hi);
        if !(it.e_lo > 0.0 && it.e_hi > 0.0) {
            // At x = 0 this is the resident's own face rate being non-positive.
            return Err(Error::ResidentCannotPersist(resident));
        }
        Ok(Support::Interval(it))
    }

    fn exponent(&self, e: Endpoint) -> f64 {
        match e {
            Endpoint::Zero => self.res[0].c_ln_x + self.res[1].c_ln_x,
            Endpoint::Equilibrium { vessel } => self.res[vessel].c_ln_gap,
        }
    }

    /// Resident net growth `|Xʲ(R₀−x)|` from the factored form, given `|x*−x|`.
    fn abs_resident_growth(&self, j: usize, x: f64, dist: f64) -> f64 {
        let v = &self.res[j];
        v.gap.abs() * dist / (v.b + self.r0 - x)
    }

    fn invader_growth(&self, j: usize, x: f64) -> f64 {
        self.inv[j].rate(self.r0 - x) - self.inv_delta[j]
    }

    /// `h_w(x)`.
    pub fn h(&self, x: f64) -> f64 {
        let d = [(self.res[0].x_star - x).abs(), (self.res[1].x_star - x).abs()];
        self.h_with(x, d)
    }

    fn h_with(&self, x: f64, dist: [f64; 2]) -> f64 {
        let m1 = self.abs_resident_growth(0, x, dist[0]);
        let m2 = self.abs_resident_growth(1, x, dist[1]);
        (self.invader_growth(0, x) * m2 + self.invader_growth(1, x) * m1) / (m1 + m2)
    }

    /// Weight `G(x) = (|X¹|+|X²|)/(x |X¹| |X²|)` of the resident density.
    pub fn weight(&self, x: f64) -> f64 {
        let m1 = self.abs_resident_growth(0, x, (self.res[0].x_star - x).abs());
        let m2 = self.abs_resident_growth(1, x, (self.res[1].x_star - x).abs());
        (m1 + m2) / (x * m1 * m2)
    }

    /// `H(x)` (up to an additive constant), so that `e^{λH} = q`.
    pub fn exponent_h(&self, x: f64) -> f64 {
        let mut acc = 0.0;
        for v in &self.res {
            acc += v.c_ln_x * x.ln() + v.c_ln_gap * (v.x_star - x).abs().ln();
        }
        acc / self.lambda
    }

    /// `ln(G q)` with the power of the distance to `skip` left out.
    ///
    /// `ln_d` is `ln` of the distance from `x` to `skip`; it enters only
    /// through terms that stay bounded.
    fn log_density_regular(&self, x: f64, skip: Endpoint, d: f64) -> f64 {
        let dist = |j: usize| match skip {
            Endpoint::Equilibrium { vessel } if vessel == j => d,
            _ => (self.res[j].x_star - x).abs(),
        };
        let d1 = dist(0);
        let d2 = dist(1);
        let mut acc = 0.0;
        // ln q = Σ c_x ln x + c_gap ln|x*−x|;  ln G = ln(m1+m2) − ln x − ln m1 − ln m2,
        // ln mʲ = ln|gap| + ln|x*−x| − ln(b+R₀−x).
        let mut coef_ln_x = -1.0;
        for j in 0..2 {
            let v = &self.res[j];
            coef_ln_x += v.c_ln_x;
            let coef_gap = v.c_ln_gap - 1.0;
            let dj = if j == 0 { d1 } else { d2 };
            if !matches!(skip, Endpoint::Equilibrium { vessel } if vessel == j) {
                acc += coef_gap * dj.ln();
            }
            acc += (v.b + self.r0 - x).ln() - v.gap.abs().ln();
        }
        if skip != Endpoint::Zero {
            acc += coef_ln_x * x.ln();
        }
        let m1 = self.abs_resident_growth(0, x, d1);
        let m2 = self.abs_resident_growth(1, x, d2);
        acc + (m1 + m2).ln()
    }

    /// Ratio `∫ h p / ∫ p` over the support.
    pub fn rate(&self) -> Result<f64> {
        let half = 0.5 * (self.x_hi - self.x_lo);
        let sides = [(self.lo, self.x_lo, 1.0, self.e_lo), (self.hi, self.x_hi, -1.0, self.e_hi)];
        // Each half is integrated in t with d = tᵏ, k = max(1, 1/e): the
        // combined power (e−1)k + (k−1) = ek − 1 is then ≥ 0.
        struct Side {
            end: Endpoint,
            origin: f64,
            sign: f64,
            k: f64,
            pow: f64,
            t_max: f64,
        }
        let sides: Vec<Side> = sides
            .iter()
            .map(|&(end, origin, sign, e)| {
                let k = if e < 1.0 { 1.0 / e } else { 1.0 };
                Side {
                    end,
                    origin,
                    sign,
                    k,
                    pow: if e < 1.0 { 0.0 } else { e - 1.0 },
                    t_max: half.powf(1.0 / k),
                }
            })
            .collect();
        let log_integrand = |side: &Side, t: f64| -> (f64, f64) {
            let ln_t = t.ln();
            let d = (side.k * ln_t).exp();
            let x = side.origin + side.sign * d;
            let dist = |j: usize| match side.end {
                Endpoint::Equilibrium { vessel } if vessel == j => d,
                _ => (self.res[j].x_star - x).abs(),
            };
            let lg = self.log_density_regular(x, side.end, d) + side.pow * ln_t + side.k.ln();
            (lg, self.h_with(x, [dist(0), dist(1)]))
        };
        // Shift by the largest sampled log-density to stay in range.
        let mut shift = f64::NEG_INFINITY;
        for side in &sides {
            let n = 512;
            for i in 0..n {
                let t = side.t_max * (i as f64 + 0.5) / n as f64;
                let (lg, _) = log_integrand(side, t);
                if lg.is_finite() {
                    shift = shift.max(lg);
                }
            }
        }
        if !shift.is_finite() {
            return Err(Error::Inconsistent("two-species density could not be evaluated".into()));
        }
        let mut num = 0.0;
        let mut den = 0.0;
        for side in &sides {
            let r = adaptive_gk(
                |t| {
                    let (lg, h) = log_integrand(side, t);
                    let p = (lg - shift).exp();
                    if p.is_finite() {
                        [p, h * p]
                    } else {
                        [0.0, 0.0]
                    }
                },
                0.0,
                side.t_max,
                64,
                1e-11,
                0.0,
                20_000,
            );
            den += r.value[0];
            num += r.value[1];
        }
        if !(den > 0.0) {
            return Err(Error::Inconsistent("two-species density has zero mass".into()));
        }
        Ok(num / den)
    }
}

/// `Λ_w` for invader `w` against the switched resident `w̄`.
///
/// Requires equal inputs. A point support (equal single-vessel equilibria)
/// gives the frozen value `(1−s) X_w¹ + s X_w²` at that point.
pub fn lambda_two_species(c: &DuoConfig, w: Species) -> Result<f64> {
    c.validate()?;
    let r0 = c.common_input()?;
    if c.lambda == 0.0 {
        return Ok(lambda_two_species_limits(c, w)?.0);
    }
    match TwoSpeciesIntegrand::new(c, w)? {
        Support::Point(x) => {
            Ok((1.0 - c.s) * c.net_growth(w, 0, r0 - x) + c.s * c.net_growth(w, 1, r0 - x))
        }
        Support::Interval(it) => it.rate(),
    }
}

/// `(λ → 0, λ → ∞)` limits of [`lambda_two_species`].
///
/// The small-`λ` limit needs both single-vessel resident equilibria; the
/// large-`λ` limit evaluates the invader at `R_w^∞`, the root of the averaged
/// resident growth `(1−s) X_w̄¹ + s X_w̄²` on `(0, R₀)`.
pub fn lambda_two_species_limits(c: &DuoConfig, w: Species) -> Result<(f64, f64)> {
    c.validate()?;
    let r0 = c.common_input()?;
    let resident = w.other();
    let s = c.s;
    let mut at0 = 0.0;
    for (j, weight) in [(0usize, 1.0 - s), (1usize, s)] {
        match c.vessel(j).break_even(resident) {
            BreakEven::Finite(r) if r < r0 => at0 += weight * c.net_growth(w, j, r),
            _ => return Err(Error::ResidentCannotPersist(resident)),
        }
    }
    let r_inf = averaged_resident_root(c, resident, r0)?;
    let at_inf = (1.0 - s) * c.net_growth(w, 0, r_inf) + s * c.net_growth(w, 1, r_inf);
    Ok((at0, at_inf))
}

/// `R_w^∞`: root of the resident's averaged net growth in `(0, R₀)`.
pub fn averaged_resident_root(c: &DuoConfig, resident: Species, r0: f64) -> Result<f64> {
    let g = |r: f64| (1.0 - c.s) * c.net_growth(resident, 0, r) + c.s * c.net_growth(resident, 1, r);
    if g(r0) <= 0.0 {
        return Err(Error::ResidentCannotPersist(resident));
    }
    bisect(g, 0.0, r0, 1e-14, "averaged resident equilibrium")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datasets;
    use crate::model::VesselParams;
    use crate::pdmp::{ergodic_lambda_two_species, SimOptions};
    use crate::quadrature::integrate;

    fn mp(a: f64, b: f64) -> MonodParams {
        MonodParams { a, b }
    }

    fn interval(c: &DuoConfig, w: Species) -> TwoSpeciesIntegrand {
        match TwoSpeciesIntegrand::new(c, w).unwrap() {
            Support::Interval(it) => it,
            Support::Point(_) => panic!("point support"),
        }
    }

    #[test]
    fn self_invasion_is_zero() {
        for (s, l) in [(0.5, 1.0), (0.1, 0.01), (0.9, 300.0)] {
            let c = datasets::fig3a(s, l);
            // Resident v, invader v's own parameters: swap roles by copying.
            let mut d = c;
            d.vessel1.monod_u = d.vessel1.monod_v;
            d.vessel2.monod_u = d.vessel2.monod_v;
            let r = lambda_two_species(&d, Species::U).unwrap();
            assert!(r.abs() < 1e-9, "self rate {r} at s={s}, λ={l}");
        }
    }

    #[test]
    fn h_vanishes_for_the_resident_itself() {
        let c = datasets::fig3b(0.4, 2.0);
        let mut d = c;
        d.vessel1.monod_v = d.vessel1.monod_u;
        d.vessel2.monod_v = d.vessel2.monod_u;
        let it = interval(&d, Species::V);
        for k in 1..20 {
            let x = it.x_lo + (it.x_hi - it.x_lo) * k as f64 / 20.0;
            assert!(it.h(x).abs() < 1e-12);
        }
    }

    #[test]
    fn exponent_matches_alpha_beta_omega_form() {
        // λH equals the exponent built from α, β, ω up to a constant.
        let c = datasets::fig3a(0.3, 2.0);
        let it = interval(&c, Species::V);
        let alt = |x: f64| {
            let mut acc = -(it.omega[0] * it.beta[0] + it.omega[1] * it.beta[1]) * x.ln();
            for j in 0..2 {
                let v = c.vessel(j);
                let p = v.monod_u;
                let m = (p.rate(it.r0 - x) - v.delta).abs();
                acc += it.omega[j] * it.alpha[j] * ((p.b + it.r0 - x) * m).ln();
            }
            acc
        };
        let xs: Vec<f64> = (1..10).map(|k| it.x_lo + (it.x_hi - it.x_lo) * k as f64 / 10.0).collect();
        let offset = it.lambda * it.exponent_h(xs[0]) - c.lambda * alt(xs[0]);
        for &x in &xs[1..] {
            let diff = it.lambda * it.exponent_h(x) - c.lambda * alt(x) - offset;
            assert!(diff.abs() < 1e-9, "{diff}");
        }
    }

    #[test]
    fn density_solves_stationary_equation() {
        // Flux balance: d/dx(φ¹ p₁) = −λ¹ p₁ + λ² p₂ with p_j = q/|φʲ|.
        let c = datasets::fig3b(0.35, 1.7);
        let it = interval(&c, Species::V);
        let r0 = it.r0;
        let phi = |j: usize, x: f64| x * c.net_growth(Species::U, j, r0 - x);
        let q = |x: f64| (it.lambda * it.exponent_h(x)).exp();
        let p = |j: usize, x: f64| q(x) / phi(j, x).abs();
        let x = 0.5 * (it.x_lo + it.x_hi);
        let h = 1e-5;
        let lhs = (phi(0, x + h) * p(0, x + h) - phi(0, x - h) * p(0, x - h)) / (2.0 * h);
        let rhs = -c.lambda1() * p(0, x) + c.lambda2() * p(1, x);
        assert!((lhs - rhs).abs() < 1e-6 * rhs.abs().max(1e-300), "{lhs} vs {rhs}");
    }

    #[test]
    fn quadrature_agrees_with_plain_integration() {
        let c = datasets::fig3a(0.5, 3.0);
        let it = interval(&c, Species::V);
        let m = 1.0 / it.e_lo.min(it.e_hi).min(1.0);
        let half = 0.5 * (it.x_hi - it.x_lo);
        let side = |from: f64, sign: f64, f: &dyn Fn(f64) -> f64| {
            integrate(
                |t| {
                    let x = from + sign * half * t.powf(m);
                    f(x) * half * m * t.powf(m - 1.0)
                },
                0.0,
                1.0,
                1e-12,
            )
        };
        let dens = |x: f64| it.weight(x) * (it.lambda * it.exponent_h(x)).exp();
        let num_f = |x: f64| it.h(x) * dens(x);
        let den = side(it.x_lo, 1.0, &dens) + side(it.x_hi, -1.0, &dens);
        let num = side(it.x_lo, 1.0, &num_f) + side(it.x_hi, -1.0, &num_f);
        assert!((num / den - it.rate().unwrap()).abs() < 1e-8);
    }

    #[test]
    fn limits_and_continuity() {
        let c = datasets::fig3a(0.4, 1.0);
        for w in Species::BOTH {
            let (l0, linf) = lambda_two_species_limits(&c, w).unwrap();
            let small = lambda_two_species(&c.with_coupling(0.4, 1e-6), w).unwrap();
            let large = lambda_two_species(&c.with_coupling(0.4, 1e4), w).unwrap();
            assert!((small - l0).abs() < 1e-3, "{w}: {small} vs {l0}");
            assert!((large - linf).abs() < 2e-2 * linf.abs().max(1e-2), "{w}: {large} vs {linf}");
        }
    }

    #[test]
    fn averaged_root_residual() {
        let c = datasets::fig4a(0.6, 1.0);
        for res in Species::BOTH {
            let r = averaged_resident_root(&c, res, 7.0).unwrap();
            let g = 0.4 * c.net_growth(res, 0, r) + 0.6 * c.net_growth(res, 1, r);
            assert!(g.abs() < 1e-12);
        }
    }

    #[test]
    fn point_support_uses_frozen_value() {
        // Same resident equilibrium in both vessels.
        let v1 = VesselParams::new(1.0, 5.0, mp(2.0, 1.0), mp(3.0, 2.0)).unwrap();
        let v2 = VesselParams::new(2.0, 5.0, mp(4.0, 1.0), mp(3.0, 1.0)).unwrap();
        let c = DuoConfig::new(v1, v2, 0.3, 2.0).unwrap();
        let r = lambda_two_species(&c, Species::V).unwrap();
        let expect = 0.7 * c.net_growth(Species::V, 0, 1.0) + 0.3 * c.net_growth(Species::V, 1, 1.0);
        assert!((r - expect).abs() < 1e-15);
    }

    #[test]
    fn resident_failing_in_one_vessel() {
        // v cannot grow in vessel 2 but persists under switching.
        let v1 = VesselParams::new(1.0, 5.0, mp(2.0, 1.0), mp(3.0, 0.5)).unwrap();
        let v2 = VesselParams::new(1.0, 5.0, mp(2.5, 1.0), mp(0.9, 0.5)).unwrap();
        let c = DuoConfig::new(v1, v2, 0.2, 2.0).unwrap();
        let it = interval(&c, Species::U);
        assert_eq!(it.lo, Endpoint::Zero);
        let r = it.rate().unwrap();
        let mc = ergodic_lambda_two_species(&c, Species::U, &SimOptions::new(2e4, 17)).unwrap();
        assert!((r - mc.value).abs() < (4.0 * mc.std_error).max(2e-3), "{r} vs {}", mc.value);
        // With mostly vessel-2 time the resident dies out.
        let c = c.with_coupling(0.95, 2.0);
        assert!(matches!(
            lambda_two_species(&c, Species::U),
            Err(Error::ResidentCannotPersist(Species::V))
        ));
    }

    #[test]
    fn weight_with_product_in_denominator_matches_simulation() {
        // Moving |X¹||X²| into the numerator gives a rate Monte Carlo
        // rejects clearly on this configuration.
        let c = datasets::fig3b(0.5, 1.0);
        let it = interval(&c, Species::U);
        let derived = it.rate().unwrap();
        let swapped = {
            let dens = |x: f64| {
                let m1 = (c.net_growth(Species::V, 0, it.r0 - x)).abs();
                let m2 = (c.net_growth(Species::V, 1, it.r0 - x)).abs();
                (m1 + m2) * m1 * m2 / x * (it.lambda * it.exponent_h(x)).exp()
            };
            let num = integrate(|x| it.h(x) * dens(x), it.x_lo, it.x_hi, 1e-12);
            let den = integrate(dens, it.x_lo, it.x_hi, 1e-12);
            num / den
        };
        let mc = ergodic_lambda_two_species(&c, Species::U, &SimOptions::new(5e4, 99)).unwrap();
        assert!((derived - mc.value).abs() < 4.0 * mc.std_error + 1e-3);
        assert!((swapped - mc.value).abs() > 10.0 * mc.std_error);
    }
}
