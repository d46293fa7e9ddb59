//! The gradostat: two vessels exchanging content at rates `λ¹ = sλ`, `λ² = (1−s)λ`.
//!
//! ```text
//! R' = δ(R₀ − R) − U f_u(R) − V f_v(R) + λKR
//! U' = U (f_u(R) − δ) + λKU
//! V' = V (f_v(R) − δ) + λKV
//! ```
//!
//! The total `Σ = R + U + V` relaxes to `Σ* = (Δ − λK)⁻¹ δR₀`, after which the
//! flow reduces to `(U, V)` with `R = Σ* − U − V`. With a common input the
//! equilibria are read off four curves in the `(R¹, R²)` plane ([`curve_f`],
//! [`resource_line_g`]).

mod classify;
mod curves;
mod equilibria;
mod sim;

pub use classify::{classify_gradostat, GradostatCase, GradostatVerdict, GAMMA_ZERO_BAND};
pub use curves::{curve_f, curve_table, resource_line_g, survival_det, write_curves_csv, MobiusCurve};
pub use equilibria::{
    admissible_coexistence, coexistence_candidates, coexistence_stability, invasion_gamma, jacobian,
    reduced_field, semi_trivial_equilibrium, trivial_equilibrium, Candidate, CoexistenceStability, EquilibriumKind,
    EquilibriumRecord, Stability, DISCRIMINANT_BAND,
};
pub use sim::{simulate_gradostat_full, simulate_gradostat_reduced, GradostatRun};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::model::{DuoConfig, Species};

/// `K = [[−s, s], [1−s, s−1]]` and its scaling by `λ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplingMatrix {
    pub k: [[f64; 2]; 2],
    pub lambda: f64,
}

impl CouplingMatrix {
    pub fn of(c: &DuoConfig) -> Self {
        let s = c.s;
        Self {
            k: [[-s, s], [1.0 - s, s - 1.0]],
            lambda: c.lambda,
        }
    }

    pub fn scaled(&self) -> [[f64; 2]; 2] {
        self.k.map(|row| row.map(|x| self.lambda * x))
    }

    /// `λK x`.
    pub fn apply(&self, x: [f64; 2]) -> [f64; 2] {
        let m = self.scaled();
        [m[0][0] * x[0] + m[0][1] * x[1], m[1][0] * x[0] + m[1][1] * x[1]]
    }
}

/// `Σ* = (Δ − λK)⁻¹ δR₀`, the limit of the per-vessel totals `R + U + V`.
pub fn sigma_star(c: &DuoConfig) -> Result<[f64; 2]> {
    c.validate()?;
    let [d1, d2] = c.deltas();
    let [l1, l2] = c.rates();
    let [r1, r2] = c.inputs();
    let det = (d1 + l1) * (d2 + l2) - l1 * l2;
    let (b1, b2) = (d1 * r1, d2 * r2);
    Ok([((d2 + l2) * b1 + l1 * b2) / det, (l2 * b1 + (d1 + l1) * b2) / det])
}

/// Largest eigenvalue of `[[p, l1], [l2, q]]` with `l1 l2 ≥ 0`.
///
/// Uses `−2 det / (D − T)` when the trace `T` is negative, which avoids the
/// cancellation in `(T + D)/2`.
pub fn max_eigenvalue_2x2(p: f64, l1: f64, l2: f64, q: f64) -> f64 {
    let t = p + q;
    let d = (p - q).hypot(2.0 * (l1 * l2).sqrt());
    if t >= 0.0 {
        0.5 * (t + d)
    } else {
        -2.0 * (p * q - l1 * l2) / (d - t)
    }
}

/// `A_w(R) = [[X_w¹(R¹) − λ¹, λ¹], [λ², X_w²(R²) − λ²]]`.
pub fn survival_matrix(c: &DuoConfig, w: Species, r: [f64; 2]) -> [[f64; 2]; 2] {
    let [l1, l2] = c.rates();
    [
        [c.net_growth(w, 0, r[0]) - l1, l1],
        [l2, c.net_growth(w, 1, r[1]) - l2],
    ]
}

fn max_eigenvalue_of(a: [[f64; 2]; 2]) -> f64 {
    max_eigenvalue_2x2(a[0][0], a[0][1], a[1][0], a[1][1])
}

/// `Γ⁰_w`: largest eigenvalue of `A_w(Σ*)`, the rate at which `w` invades the
/// species-free gradostat.
pub fn gamma0(c: &DuoConfig, w: Species) -> Result<f64> {
    let sigma = sigma_star(c)?;
    Ok(max_eigenvalue_of(survival_matrix(c, w, sigma)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datasets;
    use crate::model::{MonodParams, VesselParams};
    use nalgebra::Matrix2;

    fn eig_max(a: [[f64; 2]; 2]) -> f64 {
        let m = Matrix2::new(a[0][0], a[0][1], a[1][0], a[1][1]);
        m.complex_eigenvalues().iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max)
    }

    #[test]
    fn kernel_contains_constants() {
        let k = CouplingMatrix::of(&datasets::fig4b(0.3, 2.0));
        let y = k.apply([1.7, 1.7]);
        assert!(y[0].abs() < 1e-15 && y[1].abs() < 1e-15);
        assert!(k.k[0][1] > 0.0 && k.k[1][0] > 0.0);
    }

    #[test]
    fn sigma_limits() {
        let c = datasets::pi1(0.4, 0.0);
        assert_eq!(sigma_star(&c).unwrap(), [10.0, 1.0]);
        let c = datasets::fig3a(0.4, 3.0);
        let s = sigma_star(&c).unwrap();
        assert!((s[0] - 8.0).abs() < 1e-14 && (s[1] - 8.0).abs() < 1e-14);
    }

    #[test]
    fn sigma_residual() {
        let c = datasets::pi2(0.37, 4.2);
        let s = sigma_star(&c).unwrap();
        let [d1, d2] = c.deltas();
        let ks = CouplingMatrix::of(&c).apply(s);
        let r = [d1 * s[0] - ks[0] - d1 * 0.55, d2 * s[1] - ks[1] - d2 * 2.1];
        assert!(r[0].abs() < 1e-12 && r[1].abs() < 1e-12);
        assert!(s[0] > 0.0 && s[1] > 0.0);
    }

    #[test]
    fn eigenvalue_matches_eigensolver() {
        for &(p, l1, l2, q) in &[
            (-3.0, 0.5, 0.1, -1e-3),
            (2.0, 0.0, 0.0, -1.0),
            (-1e-9, 1e-5, 1e-5, -2e-9),
            (0.3, 4.0, 1.0, 0.3),
            (-50.0, 30.0, 70.0, -70.0),
        ] {
            let a = [[p, l1], [l2, q]];
            assert!((max_eigenvalue_of(a) - eig_max(a)).abs() < 1e-12, "{a:?}");
        }
    }

    #[test]
    fn equal_growth_and_rates() {
        // λ¹ = λ² and equal net growth c: the Perron eigenvalue is c.
        let m = MonodParams { a: 2.0, b: 1.0 };
        let v = VesselParams::new(1.0, 3.0, m, m).unwrap();
        let c = DuoConfig::new(v, v, 0.5, 1.3).unwrap();
        let expect = 2.0 * 3.0 / 4.0 - 1.0;
        assert!((gamma0(&c, Species::U).unwrap() - expect).abs() < 1e-14);
    }

    #[test]
    fn uncoupled_gamma0_is_best_vessel() {
        let c = datasets::pi1(0.3, 0.0);
        let g = gamma0(&c, Species::U).unwrap();
        let x = [c.net_growth(Species::U, 0, 10.0), c.net_growth(Species::U, 1, 1.0)];
        assert_eq!(g, x[0].max(x[1]));
    }
}
