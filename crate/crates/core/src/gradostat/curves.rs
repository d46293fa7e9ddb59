use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::model::{DuoConfig, Species};
use crate::trajectory::fmt_num;

use super::survival_matrix;

/// The survival curve `R² = F_w(R¹)` on which `det A_w(R) = 0`:
/// `F_w(x) = (m¹x + m²)/(m³x + m⁴)` on `D_w = [0, domain_end)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MobiusCurve {
    pub species: Species,
    pub m: [f64; 4],
    /// `D_w = {r ∈ [0, R₀] : X_w¹(r) < λ¹}` is `[0, domain_end)`, or all of
    /// `[0, R₀]` when `domain_end == R₀` and `X_w¹(R₀) < λ¹`.
    pub domain_end: f64,
    pub r0: f64,
    closed: bool,
}

impl MobiusCurve {
    pub fn eval(&self, x: f64) -> f64 {
        let [m1, m2, m3, m4] = self.m;
        (m1 * x + m2) / (m3 * x + m4)
    }

    pub fn derivative(&self, x: f64) -> f64 {
        let [m1, m2, m3, m4] = self.m;
        let den = m3 * x + m4;
        (m1 * m4 - m2 * m3) / (den * den)
    }

    pub fn in_domain(&self, r: f64) -> bool {
        r >= 0.0 && (r < self.domain_end || (self.closed && r <= self.domain_end))
    }
}

/// Coefficients of `F_w` from `(X_w¹(r) − λ¹)(X_w²(F) − λ²) = λ¹λ²`, with both
/// Monod terms cleared of denominators.
pub fn curve_f(c: &DuoConfig, w: Species) -> Result<MobiusCurve> {
    c.validate()?;
    let r0 = c.common_input()?;
    if c.lambda <= 0.0 {
        return Err(invalid("lambda", "the survival curve needs coupled vessels (lambda > 0)"));
    }
    let [l1, l2] = c.rates();
    let (p1, p2) = (c.vessel1.monod(w), c.vessel2.monod(w));
    let [d1, d2] = c.deltas();
    // X¹ − λ¹ = (P r − Q)/(b₁ + r), X² − λ² = (P₂ y − Q₂)/(b₂ + y).
    let (p, q) = (p1.a - d1 - l1, p1.b * (d1 + l1));
    let (pp, qq) = (p2.a - d2 - l2, p2.b * (d2 + l2));
    let l = l1 * l2;
    let m = [
        qq * p + l * p2.b,
        l * p1.b * p2.b - q * qq,
        p * pp - l,
        -q * pp - l * p1.b,
    ];
    // X¹ − λ¹ < 0 ⇔ P r < Q.
    let (domain_end, closed) = if p > 0.0 && q / p <= r0 { (q / p, false) } else { (r0, true) };
    Ok(MobiusCurve {
        species: w,
        m,
        domain_end,
        r0,
        closed,
    })
}

/// `g_w(r) = R₀ + (R₀ − r)(X_w¹(r) − λ¹)/λ¹`: where `R` must sit for `R₀ − R` to
/// be the Perron vector of `A_w(R)`.
pub fn resource_line_g(c: &DuoConfig, w: Species, r: f64) -> Result<f64> {
    let r0 = c.common_input()?;
    let l1 = c.lambda1();
    if l1 <= 0.0 {
        return Err(invalid("lambda", "the resource line needs coupled vessels (lambda > 0)"));
    }
    Ok(g_line(c, w, r0, l1, r))
}

pub(crate) fn g_line(c: &DuoConfig, w: Species, r0: f64, l1: f64, r: f64) -> f64 {
    r0 + (r0 - r) * (c.net_growth(w, 0, r) - l1) / l1
}

/// `det A_w(R)`.
pub fn survival_det(c: &DuoConfig, w: Species, r: [f64; 2]) -> f64 {
    let a = survival_matrix(c, w, r);
    a[0][0] * a[1][1] - a[0][1] * a[1][0]
}

/// `n` rows of `[r, F_u, F_v, g_u, g_v]` for `r` evenly spaced on `[0, R₀]`;
/// `NaN` outside the species' domain.
pub fn curve_table(c: &DuoConfig, n: usize) -> Result<Vec<[f64; 5]>> {
    if n < 2 {
        return Err(invalid("n", "need at least 2 samples"));
    }
    let (fu, fv) = (curve_f(c, Species::U)?, curve_f(c, Species::V)?);
    let (r0, l1) = (fu.r0, c.lambda1());
    Ok((0..n)
        .map(|i| {
            let r = r0 * i as f64 / (n - 1) as f64;
            let on = |f: &MobiusCurve, x: f64| if f.in_domain(r) { x } else { f64::NAN };
            [
                r,
                on(&fu, fu.eval(r)),
                on(&fv, fv.eval(r)),
                on(&fu, g_line(c, Species::U, r0, l1, r)),
                on(&fv, g_line(c, Species::V, r0, l1, r)),
            ]
        })
        .collect())
}

pub fn write_curves_csv<W: Write>(mut w: W, rows: &[[f64; 5]]) -> io::Result<()> {
    writeln!(w, "r,F_u,F_v,g_u,g_v")?;
    for row in rows {
        let cells: Vec<String> = row
            .iter()
            .map(|&x| if x.is_nan() { String::new() } else { fmt_num(x) })
            .collect();
        writeln!(w, "{}", cells.join(","))?;
    }
    Ok(())
}
