use nalgebra::{Matrix4, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::model::{DuoConfig, Species};
use crate::roots::bisect;

use super::curves::{curve_f, g_line};
use super::{gamma0, max_eigenvalue_of, sigma_star, survival_matrix};

/// Relative width of the discriminant band treated as a tangency.
pub const DISCRIMINANT_BAND: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EquilibriumKind {
    #[serde(rename = "trivial")]
    Trivial,
    #[serde(rename = "semi-trivial-u")]
    SemiTrivialU,
    #[serde(rename = "semi-trivial-v")]
    SemiTrivialV,
    #[serde(rename = "coexistence")]
    Coexistence,
}

impl EquilibriumKind {
    pub fn semi_trivial(w: Species) -> Self {
        match w {
            Species::U => EquilibriumKind::SemiTrivialU,
            Species::V => EquilibriumKind::SemiTrivialV,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stability {
    Stable,
    Unstable,
    Marginal,
}

impl Stability {
    fn from_rate(x: f64) -> Self {
        if x < 0.0 {
            Stability::Stable
        } else if x > 0.0 {
            Stability::Unstable
        } else {
            Stability::Marginal
        }
    }
}

/// A stationary point of the reduced flow.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumRecord {
    pub kind: EquilibriumKind,
    /// Resource `R = R₀ − U − V` per vessel.
    pub r: [f64; 2],
    pub u: [f64; 2],
    pub v: [f64; 2],
    pub stability: Stability,
    /// Largest real part among the eigenvalues of the reduced Jacobian.
    pub max_real_eigenvalue: f64,
}

/// Vector field of the reduced flow at `(U, V)` with `R = Σ − U − V`.
pub fn reduced_field(c: &DuoConfig, sigma: [f64; 2], u: [f64; 2], v: [f64; 2]) -> ([f64; 2], [f64; 2]) {
    let [l1, l2] = c.rates();
    let r = [sigma[0] - u[0] - v[0], sigma[1] - u[1] - v[1]];
    let field = |w: Species, x: [f64; 2]| {
        [
            x[0] * c.net_growth(w, 0, r[0]) + l1 * (x[1] - x[0]),
            x[1] * c.net_growth(w, 1, r[1]) + l2 * (x[0] - x[1]),
        ]
    };
    (field(Species::U, u), field(Species::V, v))
}

/// Jacobian of the reduced flow at `(U, V)`, variables ordered `(U¹, U², V¹, V²)`.
pub fn jacobian(c: &DuoConfig, u: [f64; 2], v: [f64; 2]) -> Result<Matrix4<f64>> {
    let sigma = sigma_star(c)?;
    let [l1, l2] = c.rates();
    let l = [l1, l2];
    let r = [sigma[0] - u[0] - v[0], sigma[1] - u[1] - v[1]];
    let mut j = Matrix4::zeros();
    for (w, x, off) in [(Species::U, u, 0), (Species::V, v, 2)] {
        for k in 0..2 {
            let vessel = c.vessel(k);
            let beta = x[k] * vessel.monod(w).derivative(r[k]);
            let row = off + k;
            j[(row, off + k)] = vessel.net_growth(w, r[k]) - l[k] - beta;
            j[(row, off + 1 - k)] = l[k];
            // dR/dW = −1 for both species in the same vessel.
            let other = 2 - off + k;
            j[(row, other)] = -beta;
        }
    }
    Ok(j)
}

/// A few Newton steps on the reduced field; keeps the input if they do not help.
fn polish(c: &DuoConfig, u: [f64; 2], v: [f64; 2]) -> Result<([f64; 2], [f64; 2])> {
    let sigma = sigma_star(c)?;
    let norm = |u: [f64; 2], v: [f64; 2]| {
        let (a, b) = reduced_field(c, sigma, u, v);
        a.iter().chain(b.iter()).fold(0.0f64, |m, x| m.max(x.abs()))
    };
    let (mut best, mut best_norm) = ((u, v), norm(u, v));
    let (mut u, mut v) = (u, v);
    for _ in 0..4 {
        let (a, b) = reduced_field(c, sigma, u, v);
        let rhs = Vector4::new(a[0], a[1], b[0], b[1]);
        let Some(step) = jacobian(c, u, v)?.lu().solve(&rhs) else {
            break;
        };
        u = [u[0] - step[0], u[1] - step[1]];
        v = [v[0] - step[2], v[1] - step[3]];
        let n = norm(u, v);
        if n < best_norm {
            (best, best_norm) = ((u, v), n);
        }
    }
    Ok(best)
}

fn max_real_eigenvalue(j: &Matrix4<f64>) -> f64 {
    j.complex_eigenvalues().iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max)
}

fn require_coupled(c: &DuoConfig) -> Result<f64> {
    c.validate()?;
    let r0 = c.common_input()?;
    if c.lambda <= 0.0 {
        return Err(invalid("lambda", "the equilibrium atlas needs coupled vessels (lambda > 0)"));
    }
    Ok(r0)
}

/// `E₀ = (0, 0)`, stable iff both `Γ⁰` are negative.
pub fn trivial_equilibrium(c: &DuoConfig) -> Result<EquilibriumRecord> {
    let sigma = sigma_star(c)?;
    let g = gamma0(c, Species::U)?.max(gamma0(c, Species::V)?);
    let zero = [0.0; 2];
    Ok(EquilibriumRecord {
        kind: EquilibriumKind::Trivial,
        r: sigma,
        u: zero,
        v: zero,
        stability: Stability::from_rate(g),
        max_real_eigenvalue: max_real_eigenvalue(&jacobian(c, zero, zero)?),
    })
}

/// Resource `(R_w¹, R_w²)` at `E_w`, if it exists.
///
/// Along `R² = g_w(R¹)` the function `φ = λ¹λ² − (X_w¹ − λ¹)(X_w²(g_w) − λ²)`
/// has the sign of `g_w − F_w` on `D_w` and no pole, so it is bisected instead.
pub(crate) fn semi_trivial_resource(c: &DuoConfig, w: Species) -> Result<Option<[f64; 2]>> {
    let r0 = require_coupled(c)?;
    if gamma0(c, w)? <= 0.0 {
        return Ok(None);
    }
    let f = curve_f(c, w)?;
    let [l1, l2] = c.rates();
    let g = |r: f64| g_line(c, w, r0, l1, r);
    // g(0) = −R₀δ¹/λ¹ < 0 and g = R₀ at the end of D_w, so R² ≥ 0 from r_lo on.
    let r_lo = bisect(g, 0.0, f.domain_end, 0.0, "semi-trivial: g_w = 0")?;
    let phi = |r: f64| {
        let y = g(r).max(0.0);
        l1 * l2 - (c.net_growth(w, 0, r) - l1) * (c.net_growth(w, 1, y) - l2)
    };
    if !(phi(r_lo) < 0.0) {
        return Err(Error::Inconsistent(format!(
            "Γ⁰_{w} > 0 but the semi-trivial equilibrium is not bracketed on [{r_lo}, {}]",
            f.domain_end
        )));
    }
    let r1 = bisect(phi, r_lo, f.domain_end, 0.0, "semi-trivial: g_w = F_w")?;
    Ok(Some([r1, g(r1)]))
}

/// `E_w = (W, 0)` (or `(0, W)`), present iff `Γ⁰_w > 0`. Its stability is the
/// sign of the other species' invasion rate.
pub fn semi_trivial_equilibrium(c: &DuoConfig, w: Species) -> Result<Option<EquilibriumRecord>> {
    let Some(r) = semi_trivial_resource(c, w)? else {
        return Ok(None);
    };
    let r0 = c.vessel1.r0;
    let x = [r0 - r[0], r0 - r[1]];
    let zero = [0.0; 2];
    let (u, v) = match w {
        Species::U => (x, zero),
        Species::V => (zero, x),
    };
    let (u, v) = polish(c, u, v)?;
    // The absent species' face is invariant; keep it exactly empty.
    let (u, v) = match w {
        Species::U => (u, zero),
        Species::V => (zero, v),
    };
    let r = [r0 - u[0] - v[0], r0 - u[1] - v[1]];
    let invader = max_eigenvalue_of(survival_matrix(c, w.other(), r));
    Ok(Some(EquilibriumRecord {
        kind: EquilibriumKind::semi_trivial(w),
        r,
        u,
        v,
        stability: Stability::from_rate(invader),
        max_real_eigenvalue: max_real_eigenvalue(&jacobian(c, u, v)?),
    }))
}

/// `Γ_w`: largest eigenvalue of `M_w(R_w̄)`, the rate at which `w` invades the
/// resident `w̄` at its semi-trivial equilibrium.
pub fn invasion_gamma(c: &DuoConfig, w: Species) -> Result<f64> {
    let resident = w.other();
    let r = semi_trivial_resource(c, resident)?.ok_or(Error::MissingEquilibrium(resident))?;
    Ok(max_eigenvalue_of(survival_matrix(c, w, r)))
}

/// Intersection of the two survival curves.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub r: [f64; 2],
    /// The discriminant fell inside [`DISCRIMINANT_BAND`]: a tangency.
    pub double_root: bool,
}

/// Real solutions of `F_u(x) = F_v(x)` with `x ∈ D_u ∩ D_v` and `F_u(x) ∈ [0, R₀]`.
pub fn coexistence_candidates(c: &DuoConfig) -> Result<Vec<Candidate>> {
    require_coupled(c)?;
    let (fu, fv) = (curve_f(c, Species::U)?, curve_f(c, Species::V)?);
    let ([u1, u2, u3, u4], [v1, v2, v3, v4]) = (fu.m, fv.m);
    let a = u1 * v3 - v1 * u3;
    let b = u1 * v4 + u2 * v3 - v1 * u4 - v2 * u3;
    let cc = u2 * v4 - v2 * u4;
    let size = fu.m.iter().fold(0.0f64, |m, x| m.max(x.abs())) * fv.m.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let tiny = 1e-14 * size;
    if a.abs() <= tiny && b.abs() <= tiny && cc.abs() <= tiny {
        return Err(Error::DegenerateSpeciesPair);
    }
    let mut roots: Vec<(f64, bool)> = Vec::new();
    if a.abs() <= tiny {
        if b.abs() > tiny {
            roots.push((-cc / b, false));
        }
    } else {
        let disc = b * b - 4.0 * a * cc;
        let scale = b * b + (4.0 * a * cc).abs();
        if disc.abs() <= DISCRIMINANT_BAND * scale {
            roots.push((-b / (2.0 * a), true));
        } else if disc > 0.0 {
            let q = -0.5 * (b + b.signum() * disc.sqrt());
            roots.push((q / a, false));
            roots.push((cc / q, false));
        }
    }
    let r0 = fu.r0;
    let mut out: Vec<Candidate> = roots
        .into_iter()
        .filter(|&(x, _)| fu.in_domain(x) && fv.in_domain(x))
        .filter_map(|(x, double_root)| {
            let y = fu.eval(x);
            (y.is_finite() && (0.0..=r0).contains(&y)).then_some(Candidate { r: [x, y], double_root })
        })
        .collect();
    out.sort_by(|p, q| p.r[0].total_cmp(&q.r[0]));
    Ok(out)
}

/// Positive `(U_c, V_c)` attached to an intersection `R_c`, if admissible.
///
/// Admissible means `(R_u¹ − R_v¹)(R_u² − R_v²) < 0`, `R_c` inside the box
/// spanned by `R_u` and `R_v`, and positive eigenvector coefficients
/// `μ_w = (g_w̄(R_c¹) − R_c²)/(X_w̄¹ − X_w¹)`; then `W = μ_w (λ¹, λ¹ − X_w¹)`.
pub fn admissible_coexistence(c: &DuoConfig, rc: [f64; 2]) -> Result<Option<([f64; 2], [f64; 2])>> {
    let r0 = require_coupled(c)?;
    let ru = semi_trivial_resource(c, Species::U)?.ok_or(Error::MissingEquilibrium(Species::U))?;
    let rv = semi_trivial_resource(c, Species::V)?.ok_or(Error::MissingEquilibrium(Species::V))?;
    if !((ru[0] - rv[0]) * (ru[1] - rv[1]) < 0.0) {
        return Ok(None);
    }
    let inside = |k: usize| ru[k].min(rv[k]) <= rc[k] && rc[k] <= ru[k].max(rv[k]);
    if !(inside(0) && inside(1)) {
        return Ok(None);
    }
    let l1 = c.lambda1();
    let (xu, xv) = (c.net_growth(Species::U, 0, rc[0]), c.net_growth(Species::V, 0, rc[0]));
    if xu == xv {
        return Ok(None);
    }
    let mu_u = (g_line(c, Species::V, r0, l1, rc[0]) - rc[1]) / (xv - xu);
    let mu_v = (g_line(c, Species::U, r0, l1, rc[0]) - rc[1]) / (xu - xv);
    if !(mu_u > 0.0 && mu_v > 0.0) {
        return Ok(None);
    }
    let (u, v) = polish(c, [mu_u * l1, mu_u * (l1 - xu)], [mu_v * l1, mu_v * (l1 - xv)])?;
    Ok(Some((u, v)))
}

/// Leading principal minors of the Jacobian at a coexistence point and the
/// resulting verdict.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoexistenceStability {
    /// `d₁ … d₄`; stability needs `(−1)^k d_k > 0`.
    pub minors: [f64; 4],
    /// `d₄` from the closed form
    /// `μ_u μ_v λ¹ f_u²′ f_v²′ (X_v¹ − X_u¹)(X_u¹ − λ¹)(X_v¹ − λ¹)(F_u′ − F_v′)`.
    pub d4_closed: f64,
    pub stability: Stability,
    pub max_real_eigenvalue: f64,
}

/// Stability of a coexistence equilibrium. `d₁ < 0`, `d₂ > 0`, `d₃ < 0` hold
/// structurally, so the verdict is the sign of `d₄`.
pub fn coexistence_stability(c: &DuoConfig, u: [f64; 2], v: [f64; 2]) -> Result<CoexistenceStability> {
    let r0 = require_coupled(c)?;
    let j = jacobian(c, u, v)?;
    let d1 = j[(0, 0)];
    let d2 = j.fixed_view::<2, 2>(0, 0).into_owned().determinant();
    let d3 = j.fixed_view::<3, 3>(0, 0).into_owned().determinant();
    let d4 = j.determinant();

    let rc = [r0 - u[0] - v[0], r0 - u[1] - v[1]];
    let l1 = c.lambda1();
    let (xu, xv) = (c.net_growth(Species::U, 0, rc[0]), c.net_growth(Species::V, 0, rc[0]));
    let (fu, fv) = (curve_f(c, Species::U)?, curve_f(c, Species::V)?);
    let (mu_u, mu_v) = (u[0] / l1, v[0] / l1);
    let fu2 = c.vessel2.monod(Species::U).derivative(rc[1]);
    let fv2 = c.vessel2.monod(Species::V).derivative(rc[1]);
    let d4_closed = mu_u
        * mu_v
        * l1
        * fu2
        * fv2
        * (xv - xu)
        * (xu - l1)
        * (xv - l1)
        * (fu.derivative(rc[0]) - fv.derivative(rc[0]));

    if !(d1 < 0.0 && d2 > 0.0 && d3 < 0.0) {
        return Err(Error::Inconsistent(format!(
            "coexistence minors out of sign pattern: d1={d1:e}, d2={d2:e}, d3={d3:e}"
        )));
    }
    let scale = j.iter().fold(0.0f64, |m, x| m.max(x.abs())).powi(4);
    let stability = if d4_closed.abs() < 1e-12 * scale {
        Stability::Marginal
    } else if d4_closed > 0.0 {
        Stability::Stable
    } else {
        Stability::Unstable
    };
    Ok(CoexistenceStability {
        minors: [d1, d2, d3, d4],
        d4_closed,
        stability,
        max_real_eigenvalue: max_real_eigenvalue(&j),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datasets;
    use crate::model::{MonodParams, VesselParams};

    fn residual(c: &DuoConfig, e: &EquilibriumRecord) -> f64 {
        let sigma = sigma_star(c).unwrap();
        let (fu, fv) = reduced_field(c, sigma, e.u, e.v);
        fu.iter().chain(fv.iter()).fold(0.0f64, |m, x| m.max(x.abs()))
    }

    #[test]
    fn semi_trivial_is_fixed_point_on_g_line() {
        let c = datasets::fig4b(0.4, 2.0);
        for w in Species::BOTH {
            let e = semi_trivial_equilibrium(&c, w).unwrap().expect("exists");
            assert!(residual(&c, &e) < 1e-10, "{w}: residual {}", residual(&c, &e));
            let g = super::super::resource_line_g(&c, w, e.r[0]).unwrap();
            assert!((g - e.r[1]).abs() < 1e-12);
            let x = if w == Species::U { e.u } else { e.v };
            assert!(x[0] > 0.0 && x[1] > 0.0);
        }
    }

    #[test]
    fn absent_when_gamma0_negative() {
        let m = MonodParams { a: 0.5, b: 1.0 };
        let v = VesselParams::new(1.0, 3.0, m, m).unwrap();
        let c = DuoConfig::new(v, v, 0.5, 1.0).unwrap();
        assert!(semi_trivial_equilibrium(&c, Species::U).unwrap().is_none());
        assert!(matches!(
            invasion_gamma(&c, Species::V),
            Err(Error::MissingEquilibrium(Species::U))
        ));
    }

    #[test]
    fn resident_does_not_invade_itself() {
        let c = datasets::fig3a(0.15, 0.8);
        for w in Species::BOTH {
            let r = semi_trivial_resource(&c, w).unwrap().unwrap();
            let g = max_eigenvalue_of(survival_matrix(&c, w, r));
            assert!(g.abs() < 1e-10, "{w}: self rate {g:e}");
        }
    }

    #[test]
    fn identical_species_are_degenerate() {
        let m = MonodParams { a: 2.0, b: 1.0 };
        let v1 = VesselParams::new(1.0, 3.0, m, m).unwrap();
        let n = MonodParams { a: 3.0, b: 0.5 };
        let v2 = VesselParams::new(1.5, 3.0, n, n).unwrap();
        let c = DuoConfig::new(v1, v2, 0.5, 1.0).unwrap();
        assert!(matches!(coexistence_candidates(&c), Err(Error::DegenerateSpeciesPair)));
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let c = datasets::fig4a(0.3, 1.7);
        let sigma = sigma_star(&c).unwrap();
        let (u, v) = ([1.2, 0.7], [0.9, 2.1]);
        let j = jacobian(&c, u, v).unwrap();
        let h = 1e-6;
        for col in 0..4 {
            let bump = |d: f64| {
                let mut x = [u[0], u[1], v[0], v[1]];
                x[col] += d;
                let (a, b) = reduced_field(&c, sigma, [x[0], x[1]], [x[2], x[3]]);
                [a[0], a[1], b[0], b[1]]
            };
            let (p, m) = (bump(h), bump(-h));
            for row in 0..4 {
                let fd = (p[row] - m[row]) / (2.0 * h);
                assert!((fd - j[(row, col)]).abs() < 1e-7, "J[{row},{col}] {} vs {fd}", j[(row, col)]);
            }
        }
    }
}
