//! Shared parameterization: Monod kinetics, vessels, the two-environment
//! configuration, break-even concentrations and the averaged chemostat.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::roots::bisect;

/// One of the two competing species.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Species {
    U,
    V,
}

impl Species {
    pub const BOTH: [Species; 2] = [Species::U, Species::V];

    /// The competitor, written `w̄` for a species `w`.
    pub fn other(self) -> Species {
        match self {
            Species::U => Species::V,
            Species::V => Species::U,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Species::U => "u",
            Species::V => "v",
        }
    }

    pub fn index(self) -> usize {
        match self {
            Species::U => 0,
            Species::V => 1,
        }
    }
}

impl fmt::Display for Species {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Monod consumption `f(R) = a R / (b + R)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonodParams {
    /// Maximum growth rate (1/time).
    pub a: f64,
    /// Half-saturation concentration (mass/volume).
    pub b: f64,
}

impl MonodParams {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        let p = Self { a, b };
        p.validate("monod")?;
        Ok(p)
    }

    pub fn validate(&self, prefix: &str) -> Result<()> {
        if !(self.a > 0.0 && self.a.is_finite()) {
            return Err(invalid(&format!("{prefix}.a"), "must be finite and > 0"));
        }
        if !(self.b > 0.0 && self.b.is_finite()) {
            return Err(invalid(&format!("{prefix}.b"), "must be finite and > 0"));
        }
        Ok(())
    }

    /// Unchecked evaluation, also used off the physical range by the curve algebra.
    #[inline]
    pub fn rate(&self, r: f64) -> f64 {
        self.a * r / (self.b + r)
    }

    /// `f'(R) = a b / (b + R)^2`.
    #[inline]
    pub fn derivative(&self, r: f64) -> f64 {
        let d = self.b + r;
        self.a * self.b / (d * d)
    }

    /// Inverse of `R ↦ f(R) − δ`: the concentration whose net growth is `y`.
    #[inline]
    pub fn inverse_net(&self, delta: f64, y: f64) -> f64 {
        self.b * (y + delta) / (self.a - delta - y)
    }
}

/// Checked Monod evaluation; rejects negative concentrations.
pub fn monod_eval(p: &MonodParams, r: f64) -> Result<f64> {
    if !(r >= 0.0) {
        return Err(invalid("r", format!("concentration must be >= 0, got {r}")));
    }
    Ok(p.rate(r))
}

/// Break-even concentration `R*`; infinite when the species cannot outgrow dilution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "lowercase")]
pub enum BreakEven {
    Finite(f64),
    Infinite,
}

impl BreakEven {
    pub fn finite(self) -> Option<f64> {
        match self {
            BreakEven::Finite(v) => Some(v),
            BreakEven::Infinite => None,
        }
    }

    /// True when `self < other` with infinity ordered last.
    pub fn lt(self, other: BreakEven) -> bool {
        match (self, other) {
            (BreakEven::Finite(a), BreakEven::Finite(b)) => a < b,
            (BreakEven::Finite(_), BreakEven::Infinite) => true,
            _ => false,
        }
    }

    pub fn below(self, level: f64) -> bool {
        matches!(self, BreakEven::Finite(v) if v < level)
    }
}

pub fn break_even(p: &MonodParams, delta: f64) -> BreakEven {
    if p.a > delta {
        BreakEven::Finite(p.b * delta / (p.a - delta))
    } else {
        BreakEven::Infinite
    }
}

/// A single chemostat: dilution, resource input and both species' kinetics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VesselParams {
    pub delta: f64,
    pub r0: f64,
    pub monod_u: MonodParams,
    pub monod_v: MonodParams,
}

impl VesselParams {
    pub fn new(delta: f64, r0: f64, monod_u: MonodParams, monod_v: MonodParams) -> Result<Self> {
        let v = Self {
            delta,
            r0,
            monod_u,
            monod_v,
        };
        v.validate("vessel")?;
        Ok(v)
    }

    pub fn validate(&self, prefix: &str) -> Result<()> {
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(invalid(&format!("{prefix}.delta"), "must be finite and > 0"));
        }
        if !(self.r0 > 0.0 && self.r0.is_finite()) {
            return Err(invalid(&format!("{prefix}.r0"), "must be finite and > 0"));
        }
        self.monod_u.validate(&format!("{prefix}.u"))?;
        self.monod_v.validate(&format!("{prefix}.v"))
    }

    pub fn monod(&self, w: Species) -> &MonodParams {
        match w {
            Species::U => &self.monod_u,
            Species::V => &self.monod_v,
        }
    }

    /// Net per-capita growth `f_w(R) − δ`.
    #[inline]
    pub fn net_growth(&self, w: Species, r: f64) -> f64 {
        self.monod(w).rate(r) - self.delta
    }

    pub fn break_even(&self, w: Species) -> BreakEven {
        break_even(self.monod(w), self.delta)
    }

    /// Winner of the competitive exclusion principle in this vessel, if any.
    pub fn best_competitor(&self) -> Competitor {
        let ru = self.break_even(Species::U);
        let rv = self.break_even(Species::V);
        pick_winner(ru, rv, self.r0)
    }
}

/// Outcome of a single-resource competition by break-even comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "species", rename_all = "lowercase")]
pub enum Competitor {
    Winner(Species),
    Tie,
    Neither,
}

fn pick_winner(ru: BreakEven, rv: BreakEven, r0: f64) -> Competitor {
    let u_ok = ru.below(r0);
    let v_ok = rv.below(r0);
    match (u_ok, v_ok) {
        (false, false) => Competitor::Neither,
        (true, false) => Competitor::Winner(Species::U),
        (false, true) => Competitor::Winner(Species::V),
        (true, true) => {
            if ru.lt(rv) {
                Competitor::Winner(Species::U)
            } else if rv.lt(ru) {
                Competitor::Winner(Species::V)
            } else {
                Competitor::Tie
            }
        }
    }
}

/// Two environments plus the coupling `(s, λ)` shared by both models.
///
/// In the switched model `λ¹ = sλ` and `λ² = (1−s)λ` are the jump rates out of
/// environment 1 and 2; in the gradostat they are the exchange rates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DuoConfig {
    pub vessel1: VesselParams,
    pub vessel2: VesselParams,
    pub s: f64,
    pub lambda: f64,
}

impl DuoConfig {
    pub fn new(vessel1: VesselParams, vessel2: VesselParams, s: f64, lambda: f64) -> Result<Self> {
        let c = Self {
            vessel1,
            vessel2,
            s,
            lambda,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        self.vessel1.validate("vessel1")?;
        self.vessel2.validate("vessel2")?;
        if !(self.s > 0.0 && self.s < 1.0) {
            return Err(invalid("s", format!("must lie in (0, 1), got {}", self.s)));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(invalid("lambda", format!("must be finite and >= 0, got {}", self.lambda)));
        }
        Ok(())
    }

    /// Same vessels, different coupling.
    pub fn with_coupling(&self, s: f64, lambda: f64) -> Self {
        Self { s, lambda, ..*self }
    }

    pub fn vessel(&self, j: usize) -> &VesselParams {
        match j {
            0 => &self.vessel1,
            1 => &self.vessel2,
            _ => panic!("vessel index {j} out of range"),
        }
    }

    pub fn vessels(&self) -> [&VesselParams; 2] {
        [&self.vessel1, &self.vessel2]
    }

    pub fn lambda1(&self) -> f64 {
        self.s * self.lambda
    }

    pub fn lambda2(&self) -> f64 {
        (1.0 - self.s) * self.lambda
    }

    pub fn rates(&self) -> [f64; 2] {
        [self.lambda1(), self.lambda2()]
    }

    /// Long-run fraction of time spent in each environment: `(1−s, s)`.
    pub fn occupation(&self) -> [f64; 2] {
        [1.0 - self.s, self.s]
    }

    pub fn deltas(&self) -> [f64; 2] {
        [self.vessel1.delta, self.vessel2.delta]
    }

    pub fn inputs(&self) -> [f64; 2] {
        [self.vessel1.r0, self.vessel2.r0]
    }

    pub fn equal_inputs(&self) -> bool {
        self.vessel1.r0 == self.vessel2.r0
    }

    /// Common input `R₀` for the two-species machinery.
    pub fn common_input(&self) -> Result<f64> {
        if self.equal_inputs() {
            Ok(self.vessel1.r0)
        } else {
            Err(Error::UnequalInputs {
                r01: self.vessel1.r0,
                r02: self.vessel2.r0,
            })
        }
    }

    /// `X_w^j(R) = f_w^j(R) − δ^j`.
    #[inline]
    pub fn net_growth(&self, w: Species, j: usize, r: f64) -> f64 {
        self.vessel(j).net_growth(w, r)
    }

    pub fn break_evens(&self, w: Species) -> [BreakEven; 2] {
        [self.vessel1.break_even(w), self.vessel2.break_even(w)]
    }
}

/// The averaged chemostat `ε_s = (1−s)ε¹ + sε²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AveragedVessel {
    pub delta: f64,
    pub r0: f64,
    weights: [f64; 2],
    kinetics: [[MonodParams; 2]; 2],
}

impl AveragedVessel {
    /// Averaged consumption `f̄_w = (1−s) f_w¹ + s f_w²`; increasing with `f̄_w(0) = 0`.
    pub fn consumption(&self, w: Species, r: f64) -> f64 {
        let k = &self.kinetics[w.index()];
        self.weights[0] * k[0].rate(r) + self.weights[1] * k[1].rate(r)
    }

    pub fn net_growth(&self, w: Species, r: f64) -> f64 {
        self.consumption(w, r) - self.delta
    }

    /// Root of `f̄_w(R) = δ̄` by bisection on `[0, 10 R̄₀]`; infinite if none there.
    pub fn break_even(&self, w: Species) -> Result<BreakEven> {
        let hi = 10.0 * self.r0;
        if self.net_growth(w, hi) <= 0.0 {
            return Ok(BreakEven::Infinite);
        }
        bisect(|r| self.net_growth(w, r), 0.0, hi, 1e-12, "averaged break-even").map(BreakEven::Finite)
    }

    pub fn best_competitor(&self) -> Result<Competitor> {
        let ru = self.break_even(Species::U)?;
        let rv = self.break_even(Species::V)?;
        Ok(pick_winner(ru, rv, self.r0))
    }
}

/// Averaged vessel at fraction `s_override` (or the config's own `s`).
pub fn averaged_chemostat(c: &DuoConfig, s_override: Option<f64>) -> Result<AveragedVessel> {
    let s = s_override.unwrap_or(c.s);
    if !(s > 0.0 && s < 1.0) {
        return Err(invalid("s", format!("averaging fraction must lie in (0, 1), got {s}")));
    }
    Ok(averaged_at(c, s))
}

pub(crate) fn averaged_at(c: &DuoConfig, s: f64) -> AveragedVessel {
    let (v1, v2) = (&c.vessel1, &c.vessel2);
    let delta = (1.0 - s) * v1.delta + s * v2.delta;
    let r0 = ((1.0 - s) * v1.delta * v1.r0 + s * v2.delta * v2.r0) / delta;
    AveragedVessel {
        delta,
        r0,
        weights: [1.0 - s, s],
        kinetics: [[v1.monod_u, v2.monod_u], [v1.monod_v, v2.monod_v]],
    }
}

pub fn best_competitor_averaged(c: &DuoConfig, s: f64) -> Result<Competitor> {
    averaged_chemostat(c, Some(s))?.best_competitor()
}

/// Which clause of `(H_w)` held.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "clause", rename_all = "snake_case")]
pub enum HwWitness {
    /// Environment `vessel` (1 or 2) is unfavorable to the species.
    Vessel { vessel: usize },
    /// The averaged chemostat at this `s` is unfavorable to the species.
    Averaged { s: f64 },
}

/// Result of checking `(H_w)`; `false` is relative to the sampled `s` grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HwCheck {
    pub holds: bool,
    pub witness: Option<HwWitness>,
}

/// Default number of interior `s` values scanned by clause (ii).
pub const HW_GRID_DEFAULT: usize = 101;

pub fn hypothesis_hw(c: &DuoConfig, w: Species, s_grid_size: usize) -> Result<HwCheck> {
    if s_grid_size < 2 {
        return Err(invalid("s_grid_size", "need at least 2 grid points"));
    }
    for (j, v) in c.vessels().into_iter().enumerate() {
        if v.best_competitor() != Competitor::Winner(w) {
            return Ok(HwCheck {
                holds: true,
                witness: Some(HwWitness::Vessel { vessel: j + 1 }),
            });
        }
    }
    // Uniform grid on (0, 1) with the endpoints excluded.
    let n = s_grid_size as f64;
    for i in 1..=s_grid_size {
        let s = i as f64 / (n + 1.0);
        if best_competitor_averaged(c, s)? != Competitor::Winner(w) {
            return Ok(HwCheck {
                holds: true,
                witness: Some(HwWitness::Averaged { s }),
            });
        }
    }
    Ok(HwCheck {
        holds: false,
        witness: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datasets;
    use proptest::prelude::*;

    fn mp(a: f64, b: f64) -> MonodParams {
        MonodParams { a, b }
    }

    #[test]
    fn monod_values() {
        assert_eq!(monod_eval(&mp(2.0, 1.0), 0.0).unwrap(), 0.0);
        assert_eq!(monod_eval(&mp(2.0, 1.0), 1.0).unwrap(), 1.0);
        let at_break_even = monod_eval(&mp(1.1, 0.4), 4.0).unwrap();
        assert!((at_break_even - 1.0).abs() < 1e-15);
        assert!((break_even(&mp(1.1, 0.4), 1.0).finite().unwrap() - 4.0).abs() < 1e-12);
        assert!(monod_eval(&mp(2.0, 1.0), -1e-3).is_err());
    }

    #[test]
    fn break_even_cases() {
        assert!((break_even(&mp(1.1, 0.4), 1.0).finite().unwrap() - 4.0).abs() < 1e-12);
        assert!((break_even(&mp(1.1, 0.05), 1.0).finite().unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(break_even(&mp(1.0, 0.4), 1.0), BreakEven::Infinite);
    }

    #[test]
    fn averaged_pi1_half() {
        let c = datasets::pi1(0.5, 1.0);
        let avg = averaged_chemostat(&c, None).unwrap();
        assert!((avg.delta - 1.0).abs() < 1e-15);
        assert!((avg.r0 - 5.5).abs() < 1e-15);
    }

    #[test]
    fn averaging_identical_vessels_is_identity() {
        let v = VesselParams::new(0.7, 3.0, mp(2.0, 0.5), mp(1.5, 0.2)).unwrap();
        let c = DuoConfig::new(v, v, 0.3, 1.0).unwrap();
        let avg = averaged_chemostat(&c, Some(0.37)).unwrap();
        assert!((avg.delta - 0.7).abs() < 1e-15);
        assert!((avg.r0 - 3.0).abs() < 1e-14);
        for r in [0.0, 0.5, 2.0] {
            assert!((avg.consumption(Species::U, r) - v.monod_u.rate(r)).abs() < 1e-14);
        }
    }

    #[test]
    fn averaging_tends_to_vessel1_as_s_vanishes() {
        let c = datasets::pi2(0.5, 1.0);
        let avg = averaged_chemostat(&c, Some(1e-12)).unwrap();
        assert!((avg.delta - c.vessel1.delta).abs() < 1e-10);
        assert!((avg.r0 - c.vessel1.r0).abs() < 1e-10);
        assert!(averaged_chemostat(&c, Some(1.0)).is_err());
    }

    #[test]
    fn averaged_best_competitor() {
        let v = VesselParams::new(1.0, 5.0, mp(2.0, 1.0), mp(2.0, 1.0)).unwrap();
        let c = DuoConfig::new(v, v, 0.5, 1.0).unwrap();
        assert_eq!(best_competitor_averaged(&c, 0.5).unwrap(), Competitor::Tie);

        let v = VesselParams::new(1.0, 5.0, mp(3.0, 1.0), mp(2.0, 1.0)).unwrap();
        let c = DuoConfig::new(v, v, 0.5, 1.0).unwrap();
        assert_eq!(
            best_competitor_averaged(&c, 0.5).unwrap(),
            Competitor::Winner(Species::U)
        );
    }

    #[test]
    fn averaged_break_even_is_a_root() {
        let c = datasets::fig3a(0.5, 1.0);
        let avg = averaged_chemostat(&c, Some(0.4)).unwrap();
        for w in Species::BOTH {
            let r = avg.break_even(w).unwrap().finite().unwrap();
            assert!(avg.net_growth(w, r).abs() < 1e-11);
        }
    }

    #[test]
    fn hypothesis_hw_clauses() {
        // u cannot grow in vessel 1.
        let v1 = VesselParams::new(1.0, 5.0, mp(0.9, 1.0), mp(2.0, 1.0)).unwrap();
        let v2 = VesselParams::new(1.0, 5.0, mp(3.0, 1.0), mp(2.0, 1.0)).unwrap();
        let c = DuoConfig::new(v1, v2, 0.5, 1.0).unwrap();
        let h = hypothesis_hw(&c, Species::U, HW_GRID_DEFAULT).unwrap();
        assert!(h.holds);
        assert_eq!(h.witness, Some(HwWitness::Vessel { vessel: 1 }));

        // u dominates everywhere.
        let v = VesselParams::new(1.0, 5.0, mp(3.0, 0.5), mp(2.0, 1.0)).unwrap();
        let w2 = VesselParams::new(1.5, 4.0, mp(4.0, 0.5), mp(2.5, 1.0)).unwrap();
        let c = DuoConfig::new(v, w2, 0.5, 1.0).unwrap();
        assert!(!hypothesis_hw(&c, Species::U, HW_GRID_DEFAULT).unwrap().holds);

        // Fig. 4-a: both vessels favor u, so (H_v) holds through clause (i).
        let c = datasets::fig4a(0.5, 1.0);
        let h = hypothesis_hw(&c, Species::V, HW_GRID_DEFAULT).unwrap();
        assert_eq!(h.witness, Some(HwWitness::Vessel { vessel: 1 }));
        assert!(hypothesis_hw(&c, Species::V, 1).is_err());
    }

    proptest! {
        #[test]
        fn monod_is_increasing_and_bounded(a in 0.1f64..10.0, b in 0.01f64..10.0, r in 0.0f64..100.0, dr in 1e-6f64..10.0) {
            let p = mp(a, b);
            let lo = monod_eval(&p, r).unwrap();
            let hi = monod_eval(&p, r + dr).unwrap();
            prop_assert!(hi > lo);
            prop_assert!((0.0..a).contains(&lo));
        }

        #[test]
        fn break_even_is_the_unique_root(a in 0.1f64..10.0, b in 0.01f64..10.0, delta in 0.05f64..5.0) {
            let p = mp(a, b);
            match break_even(&p, delta) {
                BreakEven::Finite(r) => prop_assert!((p.rate(r) - delta).abs() <= 1e-12 * delta.max(1.0)),
                BreakEven::Infinite => prop_assert!(a <= delta),
            }
        }
    }
}
