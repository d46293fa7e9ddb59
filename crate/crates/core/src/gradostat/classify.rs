use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::model::{DuoConfig, Species};
use crate::trajectory::GradostatSample;

use super::equilibria::{
    admissible_coexistence, coexistence_candidates, coexistence_stability, semi_trivial_equilibrium,
    trivial_equilibrium, EquilibriumKind, EquilibriumRecord, Stability,
};
use super::{gamma0, max_eigenvalue_of, survival_matrix};

/// Rates within this distance of zero are not trusted for a sign. The gradostat
/// rates are closed-form eigenvalues, so the band is far narrower than the
/// switched model's.
pub const GAMMA_ZERO_BAND: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GradostatCase {
    /// Neither species can invade the empty gradostat.
    Washout,
    ExtinctionOfU,
    ExtinctionOfV,
    /// Both invade each other: a unique, globally attracting coexistence point.
    CoexistenceGlobal,
    /// Neither invades the other: `E_u` and `E_v` both stable.
    ExclusiveBistability,
    /// One invades, the other does not, yet a stable coexistence point
    /// coexists with the stable semi-trivial one.
    OddBistability,
    /// A rate inside the zero band, or a tangency of the survival curves.
    Marginal,
}

impl GradostatCase {
    pub fn tag(self) -> &'static str {
        match self {
            GradostatCase::Washout => "washout",
            GradostatCase::ExtinctionOfU => "extinction-of-u",
            GradostatCase::ExtinctionOfV => "extinction-of-v",
            GradostatCase::CoexistenceGlobal => "coexistence-global",
            GradostatCase::ExclusiveBistability => "exclusive-bistability",
            GradostatCase::OddBistability => "odd-bistability",
            GradostatCase::Marginal => "marginal",
        }
    }

    pub fn extinction_of(w: Species) -> Self {
        match w {
            Species::U => GradostatCase::ExtinctionOfU,
            Species::V => GradostatCase::ExtinctionOfV,
        }
    }
}

impl fmt::Display for GradostatCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradostatVerdict {
    pub case: GradostatCase,
    /// `[Γ⁰_u, Γ⁰_v]`.
    pub gamma0: [f64; 2],
    /// `[Γ_u, Γ_v]`; `Γ_w` needs the resident's equilibrium `E_w̄`.
    pub gamma: [Option<f64>; 2],
    pub equilibria: Vec<EquilibriumRecord>,
}

impl GradostatVerdict {
    pub fn stable_equilibria(&self) -> impl Iterator<Item = &EquilibriumRecord> {
        self.equilibria.iter().filter(|e| e.stability == Stability::Stable)
    }

    pub fn find(&self, kind: EquilibriumKind) -> Option<&EquilibriumRecord> {
        self.equilibria.iter().find(|e| e.kind == kind)
    }

    /// The equilibrium a long-run state has settled on, if it lies within `tol`
    /// (max norm over `U` and `V`) of a stable one. In a marginal verdict every
    /// listed equilibrium is acceptable.
    pub fn landing(&self, state: &GradostatSample, tol: f64) -> Option<&EquilibriumRecord> {
        let dist = |e: &EquilibriumRecord| {
            (0..2)
                .map(|k| (state.u[k] - e.u[k]).abs().max((state.v[k] - e.v[k]).abs()))
                .fold(0.0, f64::max)
        };
        self.equilibria
            .iter()
            .filter(|e| self.case == GradostatCase::Marginal || e.stability == Stability::Stable)
            .find(|e| dist(e) <= tol)
    }
}

/// Long-time outcome of the gradostat with a common input.
///
/// `Γ⁰` signs decide which semi-trivial equilibria exist; with both present,
/// the signs of `(Γ_u, Γ_v)` decide the case, and with mixed signs the number
/// of admissible coexistence points separates plain extinction from odd
/// bistability.
pub fn classify_gradostat(c: &DuoConfig, zero_band: f64) -> Result<GradostatVerdict> {
    let g0 = [gamma0(c, Species::U)?, gamma0(c, Species::V)?];
    let mut equilibria = vec![trivial_equilibrium(c)?];
    let mut verdict = GradostatVerdict {
        case: GradostatCase::Marginal,
        gamma0: g0,
        gamma: [None, None],
        equilibria: Vec::new(),
    };
    let eu = semi_trivial_equilibrium(c, Species::U)?;
    let ev = semi_trivial_equilibrium(c, Species::V)?;
    equilibria.extend(eu.iter().chain(ev.iter()).copied());
    // Γ_u is read at E_v and Γ_v at E_u.
    verdict.gamma = [
        ev.map(|e| max_eigenvalue_of(survival_matrix(c, Species::U, e.r))),
        eu.map(|e| max_eigenvalue_of(survival_matrix(c, Species::V, e.r))),
    ];
    if g0.iter().any(|g| g.abs() <= zero_band) {
        verdict.equilibria = equilibria;
        return Ok(verdict);
    }
    let case = match (eu, ev) {
        (None, None) => GradostatCase::Washout,
        (Some(_), None) => GradostatCase::ExtinctionOfV,
        (None, Some(_)) => GradostatCase::ExtinctionOfU,
        (Some(_), Some(_)) => {
            let [Some(gu), Some(gv)] = verdict.gamma else {
                unreachable!("both rates exist when both equilibria do")
            };
            let mut tangent = false;
            let mut coexist = 0usize;
            for cand in coexistence_candidates(c)? {
                if let Some((u, v)) = admissible_coexistence(c, cand.r)? {
                    let st = coexistence_stability(c, u, v)?;
                    tangent |= cand.double_root || st.stability == Stability::Marginal;
                    coexist += 1;
                    equilibria.push(EquilibriumRecord {
                        kind: EquilibriumKind::Coexistence,
                        r: [c.vessel1.r0 - u[0] - v[0], c.vessel1.r0 - u[1] - v[1]],
                        u,
                        v,
                        stability: st.stability,
                        max_real_eigenvalue: st.max_real_eigenvalue,
                    });
                }
            }
            if gu.abs() <= zero_band || gv.abs() <= zero_band || tangent {
                GradostatCase::Marginal
            } else {
                match (gu > 0.0, gv > 0.0) {
                    (true, true) => GradostatCase::CoexistenceGlobal,
                    (false, false) => GradostatCase::ExclusiveBistability,
                    // Γ_v < 0: E_u resists v.
                    (true, false) if coexist == 0 => GradostatCase::ExtinctionOfV,
                    (false, true) if coexist == 0 => GradostatCase::ExtinctionOfU,
                    _ => GradostatCase::OddBistability,
                }
            }
        }
    };
    verdict.case = case;
    verdict.equilibria = equilibria;
    Ok(verdict)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datasets;
    use crate::model::{MonodParams, VesselParams};

    #[test]
    fn washout_without_growth() {
        let m = MonodParams { a: 0.5, b: 1.0 };
        let v = VesselParams::new(1.0, 3.0, m, m).unwrap();
        let c = DuoConfig::new(v, v, 0.5, 1.0).unwrap();
        let verdict = classify_gradostat(&c, GAMMA_ZERO_BAND).unwrap();
        assert_eq!(verdict.case, GradostatCase::Washout);
        assert_eq!(verdict.equilibria.len(), 1);
        assert_eq!(verdict.equilibria[0].stability, Stability::Stable);
    }

    #[test]
    fn single_survivor() {
        let good = MonodParams { a: 3.0, b: 1.0 };
        let bad = MonodParams { a: 0.5, b: 1.0 };
        let v = VesselParams::new(1.0, 3.0, good, bad).unwrap();
        let c = DuoConfig::new(v, v, 0.5, 1.0).unwrap();
        let verdict = classify_gradostat(&c, GAMMA_ZERO_BAND).unwrap();
        assert_eq!(verdict.case, GradostatCase::ExtinctionOfV);
        assert_eq!(verdict.gamma[0], None);
        assert!(verdict.gamma[1].unwrap() < 0.0);
    }

    #[test]
    fn coexistence_global_has_one_stable_interior_point() {
        let verdict = classify_gradostat(&datasets::fig3a(0.1, 0.1), GAMMA_ZERO_BAND).unwrap();
        assert_eq!(verdict.case, GradostatCase::CoexistenceGlobal, "{verdict:?}");
        let coex: Vec<_> = verdict.equilibria.iter().filter(|e| e.kind == EquilibriumKind::Coexistence).collect();
        assert_eq!(coex.len(), 1);
        assert_eq!(coex[0].stability, Stability::Stable);
        assert!(coex[0].max_real_eigenvalue < 0.0);
    }

    #[test]
    fn tags_are_kebab_case() {
        assert_eq!(
            serde_json::to_string(&GradostatCase::OddBistability).unwrap(),
            "\"odd-bistability\""
        );
        assert_eq!(GradostatCase::CoexistenceGlobal.to_string(), "coexistence-global");
    }
}
