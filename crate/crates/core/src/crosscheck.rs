//! Independent cross-checks of the closed forms against eigensolvers,
//! Monte Carlo and direct simulation.
//!
//! Each check is a fixed experiment with its tolerance pinned below; all random
//! draws come from [`JumpRng`] with fixed seeds, so a report is reproducible.

use std::fmt;

use nalgebra::Matrix2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::datasets::{self, Figure};
use crate::error::{Error, Result};
use crate::gradostat::{
    admissible_coexistence, classify_gradostat, coexistence_candidates, coexistence_stability, curve_f, gamma0,
    invasion_gamma, resource_line_g, sigma_star, simulate_gradostat_full, survival_det, survival_matrix,
    EquilibriumKind, Stability, GAMMA_ZERO_BAND,
};
use crate::invasion::{
    classify_switching, invariant_density, lambda0, lambda0_limits, lambda0_monotone_check, lambda_two_species,
    lambda_two_species_limits, SwitchCase, ZERO_BAND_DEFAULT,
};
use crate::model::{BreakEven, DuoConfig, MonodParams, Species, VesselParams};
use crate::pdmp::{
    ergodic_lambda0, ergodic_lambda_two_species, face_occupation_cdf, simulate_pdmp, simulate_simple_chemostat,
    PdmpState, SimOptions,
};
use crate::rng::JumpRng;
use crate::stats::ks_distance;
use crate::sweep::{sign_map, SignMap, SignMapCell, SweepGrid, SweepMode};

pub const GAMMA0_EIGEN_TOL: f64 = 1e-10;
pub const MC_REL_TOL: f64 = 0.02;
pub const MC_SIGMAS: f64 = 3.0;
pub const SELF_INVASION_TOL: f64 = 1e-6;
pub const LIMIT_GAP_TOL: f64 = 1e-2;
pub const LIMIT_TOL: f64 = 1e-3;
pub const CURVE_DET_TOL: f64 = 1e-10;
pub const ANCHOR_TOL: f64 = 1e-10;
pub const D4_REL_TOL: f64 = 1e-8;
/// Threshold below which a terminal density counts as extinct.
pub const EXTINCT_LEVEL: f64 = 1e-4;
/// Max-norm distance between a terminal gradostat state and its equilibrium.
pub const LANDING_TOL: f64 = 1e-4;
pub const KS_TOL: f64 = 0.02;

pub const CHECK_COUNT: u8 = 11;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub id: u8,
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mark = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "[{:>2}] {mark} {}: {}", self.id, self.name, self.detail)
    }
}

fn report(id: u8, passed: bool, detail: String) -> CheckReport {
    CheckReport {
        id,
        name: check_name(id).to_string(),
        passed,
        detail,
    }
}

pub fn check_name(id: u8) -> &'static str {
    match id {
        1 => "gamma0 closed form vs eigensolver",
        2 => "lambda0 quadrature vs Monte Carlo",
        3 => "self-invasion rate vanishes",
        4 => "small and large switching limits",
        5 => "lambda0 monotone in lambda",
        6 => "survival curve geometry",
        7 => "d4 closed form and stability",
        8 => "classification vs long-run simulation",
        9 => "odd bistability found and confirmed",
        10 => "competitive exclusion in one vessel",
        11 => "face density vs occupation histogram",
        _ => "unknown check",
    }
}

/// Runs check `id` (1 to [`CHECK_COUNT`]). A numerical error inside a check is
/// reported as a failure carrying the message.
pub fn run_check(id: u8) -> CheckReport {
    let out = match id {
        1 => check_gamma0_closed_form(),
        2 => check_lambda0_monte_carlo(),
        3 => check_self_invasion(),
        4 => check_limits(),
        5 => check_lambda0_monotone(),
        6 => check_curve_geometry(),
        7 => check_d4_closed_form(),
        8 => check_classification_vs_simulation(),
        9 => check_odd_bistability(),
        10 => check_competitive_exclusion(),
        11 => check_invariant_density(),
        _ => Err(Error::Config(format!("no check numbered {id}"))),
    };
    out.unwrap_or_else(|e| report(id, false, format!("error: {e}")))
}

pub fn run_all() -> Vec<CheckReport> {
    (1..=CHECK_COUNT).map(run_check).collect()
}

// ---------------------------------------------------------------------------
// Random parameter draws

/// Random two-vessel configurations over a fixed box: `R₀ ∈ [1, 10]`,
/// `a ∈ [0.5, 5]`, `b ∈ [0.1, 5]`, `δ ∈ [0.3, 2]`, `s ∈ [0.05, 0.95]`,
/// `log₁₀ λ` uniform on `log10_lambda`.
#[derive(Debug, Clone)]
pub struct RandomConfigs {
    rng: JumpRng,
    pub common_input: bool,
    pub log10_lambda: (f64, f64),
}

impl RandomConfigs {
    pub fn new(seed: u64, common_input: bool) -> Self {
        Self {
            rng: JumpRng::new(seed),
            common_input,
            log10_lambda: (-2.0, 2.0),
        }
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.rng.uniform()
    }

    pub fn monod(&mut self) -> MonodParams {
        MonodParams {
            a: self.uniform(0.5, 5.0),
            b: self.uniform(0.1, 5.0),
        }
    }

    pub fn vessel(&mut self, r0: Option<f64>) -> VesselParams {
        let delta = self.uniform(0.3, 2.0);
        let r0 = r0.unwrap_or_else(|| self.uniform(1.0, 10.0));
        VesselParams {
            delta,
            r0,
            monod_u: self.monod(),
            monod_v: self.monod(),
        }
    }

    pub fn next_config(&mut self) -> DuoConfig {
        let r0 = self.uniform(1.0, 10.0);
        let shared = self.common_input.then_some(r0);
        let vessel1 = self.vessel(Some(r0));
        let vessel2 = self.vessel(shared);
        let s = self.uniform(0.05, 0.95);
        let (lo, hi) = self.log10_lambda;
        let lambda = 10f64.powf(self.uniform(lo, hi));
        DuoConfig {
            vessel1,
            vessel2,
            s,
            lambda,
        }
    }
}

fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(|k| (a + (b - a) * k as f64 / (n - 1) as f64).exp()).collect()
}

fn quiet_opts(horizon: f64, seed: u64) -> SimOptions {
    SimOptions {
        record_every: 0,
        ..SimOptions::new(horizon, seed)
    }
}

// ---------------------------------------------------------------------------
// 1

fn check_gamma0_closed_form() -> Result<CheckReport> {
    let mut gen = RandomConfigs::new(0x01, false);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let c = gen.next_config();
        let sigma = sigma_star(&c)?;
        for w in Species::BOTH {
            let a = survival_matrix(&c, w, sigma);
            let m = Matrix2::new(a[0][0], a[0][1], a[1][0], a[1][1]);
            let numeric = m.complex_eigenvalues().iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
            worst = worst.max((gamma0(&c, w)? - numeric).abs());
        }
    }
    Ok(report(
        1,
        worst <= GAMMA0_EIGEN_TOL,
        format!("1000 configs x 2 species, max |closed - eigen| = {worst:.2e} (tol {GAMMA0_EIGEN_TOL:.0e})"),
    ))
}

// ---------------------------------------------------------------------------
// 2

fn check_lambda0_monte_carlo() -> Result<CheckReport> {
    let mut points = Vec::new();
    for (name, fig) in [("pi1", Figure::Fig2a), ("pi2", Figure::Fig2b)] {
        for s in [0.25, 0.5, 0.75] {
            for lambda in [0.1, 1.0, 10.0] {
                points.push((name, fig.config(s, lambda)));
            }
        }
    }
    let results: Vec<Result<(f64, f64)>> = points
        .par_iter()
        .enumerate()
        .map(|(k, (_, c))| {
            let exact = lambda0(c, Species::U)?;
            let est = ergodic_lambda0(c, Species::U, &quiet_opts(1e5, 0x200 + k as u64))?;
            let allowed = (MC_REL_TOL * exact.abs()).max(MC_SIGMAS * est.std_error);
            Ok(((est.value - exact).abs() / allowed, est.value - exact))
        })
        .collect();
    let mut worst = (0.0f64, 0.0f64, "");
    let mut failures = 0;
    for ((name, _), r) in points.iter().zip(results) {
        let (ratio, gap) = r?;
        if ratio > 1.0 {
            failures += 1;
        }
        if ratio > worst.0 {
            worst = (ratio, gap, name);
        }
    }
    Ok(report(
        2,
        failures == 0,
        format!(
            "18 points, horizon 1e5: {failures} outside max(2%, 3 sigma); worst uses {:.2} of its band ({}, gap {:.2e})",
            worst.0, worst.2, worst.1
        ),
    ))
}

// ---------------------------------------------------------------------------
// 3

fn check_self_invasion() -> Result<CheckReport> {
    let mut gen = RandomConfigs::new(0x03, true);
    gen.log10_lambda = (-1.0, 1.0);
    let mut configs = Vec::new();
    while configs.len() < 20 {
        let mut c = gen.next_config();
        // The invader is an exact copy of the resident.
        c.vessel1.monod_v = c.vessel1.monod_u;
        c.vessel2.monod_v = c.vessel2.monod_u;
        if lambda0(&c, Species::V)? > 1e-2 {
            configs.push(c);
        }
    }
    let results: Vec<Result<(f64, f64)>> = configs
        .par_iter()
        .enumerate()
        .map(|(k, c)| {
            let exact = lambda_two_species(c, Species::U)?;
            let est = ergodic_lambda_two_species(c, Species::U, &quiet_opts(2e4, 0x300 + k as u64))?;
            Ok((exact.abs(), est.value.abs() / est.std_error.max(f64::MIN_POSITIVE)))
        })
        .collect();
    let (mut worst_exact, mut worst_z) = (0.0f64, 0.0f64);
    for r in results {
        let (e, z) = r?;
        worst_exact = worst_exact.max(e);
        worst_z = worst_z.max(z);
    }
    Ok(report(
        3,
        worst_exact <= SELF_INVASION_TOL && worst_z <= MC_SIGMAS,
        format!("20 configs: max |quadrature| = {worst_exact:.2e}, max |Monte Carlo|/sigma = {worst_z:.2}"),
    ))
}

// ---------------------------------------------------------------------------
// 4

/// `Γ⁰_w` for uncoupled vessels: the better of the two single-vessel rates.
fn gamma0_small_limit(c: &DuoConfig, w: Species) -> f64 {
    let [r1, r2] = c.inputs();
    c.net_growth(w, 0, r1).max(c.net_growth(w, 1, r2))
}

/// `Γ_w` for uncoupled vessels: the invader's best rate at the resident's
/// single-vessel resource levels (`R₀` where the resident cannot live).
fn gamma_small_limit(c: &DuoConfig, w: Species) -> f64 {
    let resident = w.other();
    (0..2)
        .map(|j| {
            let r0 = c.inputs()[j];
            let r = match c.vessel(j).break_even(resident) {
                BreakEven::Finite(r) if r < r0 => r,
                _ => r0,
            };
            c.net_growth(w, j, r)
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

fn check_limits() -> Result<CheckReport> {
    const SLOW: f64 = 1e-6;
    const FAST: f64 = 1e4;
    let mut worst = [0.0f64; 4]; // fast gap, fast vs averaged, slow, two-species
    let mut compared = 0usize;
    let mut tenfold = 0.0f64;
    let bump = |slot: &mut f64, x: f64| *slot = slot.max(x);
    for fig in [Figure::Fig2a, Figure::Fig2b] {
        for s in [0.2, 0.5, 0.8] {
            let (fast, slow) = (fig.config(s, FAST), fig.config(s, SLOW));
            let (_, avg) = lambda0_limits(&fast, Species::U)?;
            let (l, g) = (lambda0(&fast, Species::U)?, gamma0(&fast, Species::U)?);
            bump(&mut worst[0], (l - g).abs());
            bump(&mut worst[1], (l - avg).abs().max((g - avg).abs()));
            let (at0, _) = lambda0_limits(&slow, Species::U)?;
            bump(&mut worst[2], (lambda0(&slow, Species::U)? - at0).abs());
            bump(&mut worst[2], (gamma0(&slow, Species::U)? - gamma0_small_limit(&slow, Species::U)).abs());
            compared += 4;
        }
    }
    for fig in [Figure::Fig3a, Figure::Fig3b, Figure::Fig4a, Figure::Fig4b] {
        for s in [0.2, 0.5, 0.8] {
            let (fast, slow) = (fig.config(s, FAST), fig.config(s, SLOW));
            for w in Species::BOTH {
                let Ok((at0, avg)) = lambda_two_species_limits(&fast, w) else {
                    continue;
                };
                let l_fast = lambda_two_species(&fast, w)?;
                bump(&mut worst[3], (l_fast - avg).abs());
                // Not graded: shows the gap shrinking like 1/λ.
                let faster = fig.config(s, 10.0 * FAST);
                bump(&mut tenfold, (lambda_two_species(&faster, w)? - avg).abs());
                bump(&mut worst[3], (lambda_two_species(&slow, w)? - at0).abs());
                compared += 2;
                match invasion_gamma(&fast, w) {
                    Ok(g) => {
                        bump(&mut worst[0], (l_fast - g).abs());
                        bump(&mut worst[3], (g - avg).abs());
                        compared += 1;
                    }
                    Err(Error::MissingEquilibrium(_)) => {}
                    Err(e) => return Err(e),
                }
                match invasion_gamma(&slow, w) {
                    Ok(g) => {
                        bump(&mut worst[3], (g - gamma_small_limit(&slow, w)).abs());
                        compared += 1;
                    }
                    Err(Error::MissingEquilibrium(_)) => {}
                    Err(e) => return Err(e),
                }
            }
        }
    }
    let passed = worst[0] <= LIMIT_GAP_TOL && worst[1..].iter().all(|x| *x <= LIMIT_TOL);
    Ok(report(
        4,
        passed,
        format!(
            "{compared} comparisons: |switched - gradostat| at lambda=1e4 {:.1e}; vs averaged {:.1e}; \
             one-species at lambda=1e-6 {:.1e}; two-species {:.1e} (at lambda=1e5: {:.1e})",
            worst[0], worst[1], worst[2], worst[3], tenfold
        ),
    ))
}

// ---------------------------------------------------------------------------
// 5

fn check_lambda0_monotone() -> Result<CheckReport> {
    let mut gen = RandomConfigs::new(0x05, false);
    let grid = log_grid(1e-2, 1e3, 30);
    let configs: Vec<DuoConfig> = (0..100).map(|_| gen.next_config()).collect();
    let flags: Vec<Result<bool>> = configs
        .par_iter()
        .map(|c| lambda0_monotone_check(c, Species::U, &grid))
        .collect();
    let mut bad = Vec::new();
    for (k, f) in flags.into_iter().enumerate() {
        if !f? {
            bad.push(k);
        }
    }
    let detail = match bad.first() {
        None => "100 configs, 30-point grid on [1e-2, 1e3]: 0 violations".to_string(),
        Some(&k) => {
            let c = &configs[k];
            format!(
                "100 configs, 30-point grid on [1e-2, 1e3]: {} non-monotone profiles; first: R0=({:.3},{:.3}) \
                 delta=({:.3},{:.3}) a=({:.3},{:.3}) b=({:.3},{:.3}) s={:.4}",
                bad.len(),
                c.vessel1.r0,
                c.vessel2.r0,
                c.vessel1.delta,
                c.vessel2.delta,
                c.vessel1.monod_u.a,
                c.vessel2.monod_u.a,
                c.vessel1.monod_u.b,
                c.vessel2.monod_u.b,
                c.s
            )
        }
    };
    Ok(report(5, bad.is_empty(), detail))
}

// ---------------------------------------------------------------------------
// 6

fn check_curve_geometry() -> Result<CheckReport> {
    let mut gen = RandomConfigs::new(0x06, true);
    let (mut worst_det, mut worst_anchor) = (0.0f64, 0.0f64);
    let (mut f_bad, mut g_bad, mut samples, mut anchors) = (0usize, 0usize, 0usize, 0usize);
    for _ in 0..200 {
        let c = gen.next_config();
        let r0 = c.vessel1.r0;
        for w in Species::BOTH {
            let f = curve_f(&c, w)?;
            let pts: Vec<f64> = (0..64).map(|i| f.domain_end * (i as f64 + 0.5) / 64.0).collect();
            let mut prev: Option<(f64, f64, f64)> = None;
            for &r in &pts {
                let y = f.eval(r);
                let branch = (f.m[2] * r + f.m[3]).signum();
                if (0.0..=r0).contains(&y) {
                    samples += 1;
                    worst_det = worst_det.max(survival_det(&c, w, [r, y]).abs());
                    if let Some((_, py, pb)) = prev {
                        if pb == branch && y >= py {
                            f_bad += 1;
                        }
                    }
                    prev = Some((r, y, branch));
                }
            }
            for p in pts.windows(2) {
                if resource_line_g(&c, w, p[1])? <= resource_line_g(&c, w, p[0])? {
                    g_bad += 1;
                }
            }
            if let (BreakEven::Finite(r1), BreakEven::Finite(r2)) = (c.vessel1.break_even(w), c.vessel2.break_even(w)) {
                anchors += 1;
                worst_anchor = worst_anchor.max((f.eval(r1) - r2).abs() / r2.max(1.0));
            }
        }
    }
    let passed = worst_det <= CURVE_DET_TOL && worst_anchor <= ANCHOR_TOL && f_bad == 0 && g_bad == 0;
    Ok(report(
        6,
        passed,
        format!(
            "200 configs: {samples} curve points, max |det| = {worst_det:.1e}; F increases {f_bad}x, \
             g fails to increase {g_bad}x; {anchors} anchors, max gap {worst_anchor:.1e}"
        ),
    ))
}

// ---------------------------------------------------------------------------
// 7

fn check_d4_closed_form() -> Result<CheckReport> {
    let mut gen = RandomConfigs::new(0x07, true);
    let (mut found, mut mismatched, mut marginal) = (0usize, 0usize, 0usize);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let c = gen.next_config();
        let cands = match coexistence_candidates(&c) {
            Ok(x) => x,
            Err(Error::DegenerateSpeciesPair) => continue,
            Err(e) => return Err(e),
        };
        for cand in cands {
            let Some((u, v)) = admissible_coexistence(&c, cand.r)? else {
                continue;
            };
            found += 1;
            let st = coexistence_stability(&c, u, v)?;
            let d4 = st.minors[3];
            worst = worst.max((d4 - st.d4_closed).abs() / d4.abs().max(st.d4_closed.abs()));
            match st.stability {
                Stability::Marginal => marginal += 1,
                Stability::Stable if st.max_real_eigenvalue >= 0.0 => mismatched += 1,
                Stability::Unstable if st.max_real_eigenvalue <= 0.0 => mismatched += 1,
                _ => {}
            }
        }
    }
    Ok(report(
        7,
        found > 0 && worst <= D4_REL_TOL && mismatched == 0,
        format!(
            "200 configs: {found} coexistence points ({marginal} marginal), max relative d4 gap {worst:.1e}, \
             {mismatched} stability/eigenvalue disagreements"
        ),
    ))
}

// ---------------------------------------------------------------------------
// 8

/// Cell of `map` with the given verdict whose rates sit farthest from zero,
/// restricted to `λ ∈ lambda_range`.
fn representative<'a>(
    map: &'a SignMap,
    verdict: impl Fn(&SignMapCell) -> &str,
    rates: impl Fn(&SignMapCell) -> [f64; 2],
    tag: &str,
    lambda_range: (f64, f64),
) -> Option<&'a SignMapCell> {
    let margin = |c: &SignMapCell| {
        rates(c)
            .iter()
            .filter(|x| x.is_finite())
            .map(|x| x.abs())
            .fold(f64::INFINITY, f64::min)
    };
    map.cells
        .iter()
        .filter(|c| verdict(c) == tag && (lambda_range.0..=lambda_range.1).contains(&c.lambda))
        .max_by(|a, b| margin(a).total_cmp(&margin(b)))
}

fn distinct_tags(map: &SignMap, verdict: impl Fn(&SignMapCell) -> &str) -> Vec<String> {
    let mut tags: Vec<String> = map.cells.iter().map(|c| verdict(c).to_string()).collect();
    tags.sort();
    tags.dedup();
    tags
}

/// Log-uniform positive gradostat state with `R + U + V ≤ R₀` per vessel.
fn random_gradostat_state(rng: &mut JumpRng, r0: f64) -> ([f64; 2], [f64; 2], [f64; 2]) {
    let mut draw = || r0 * 10f64.powf(-3.0 + 3.0 * rng.uniform()) / 3.0;
    let (u, v) = ([draw(), draw()], [draw(), draw()]);
    let r = [draw(), draw()];
    (r, u, v)
}

/// Integrates `n` random starts and returns how many landed on each stable
/// equilibrium kind, plus the number that landed nowhere permitted.
fn gradostat_landings(c: &DuoConfig, n: usize, horizon: f64, seed: u64) -> Result<(Vec<EquilibriumKind>, usize)> {
    let verdict = classify_gradostat(c, GAMMA_ZERO_BAND)?;
    let r0 = c.common_input()?;
    let mut rng = JumpRng::new(seed);
    let starts: Vec<_> = (0..n).map(|_| random_gradostat_state(&mut rng, r0)).collect();
    let ends: Vec<Result<_>> = starts
        .par_iter()
        .map(|&init| simulate_gradostat_full(c, init, horizon, 1e-10, 0).map(|run| run.last))
        .collect();
    let mut kinds = Vec::new();
    let mut stray = 0;
    for end in ends {
        match verdict.landing(&end?, LANDING_TOL) {
            Some(e) => kinds.push(e.kind),
            None => stray += 1,
        }
    }
    Ok((kinds, stray))
}

fn switched_outcome_ok(case: SwitchCase, u: f64, v: f64) -> bool {
    let (u_gone, v_gone) = (u < EXTINCT_LEVEL, v < EXTINCT_LEVEL);
    match case {
        SwitchCase::ExtinctionOfU => u_gone && !v_gone,
        SwitchCase::ExtinctionOfV => v_gone && !u_gone,
        SwitchCase::Coexistence => !u_gone && !v_gone,
        SwitchCase::ExclusiveBistability => u_gone != v_gone,
        SwitchCase::Washout => u_gone && v_gone,
        SwitchCase::Inconclusive => true,
    }
}

fn check_classification_vs_simulation() -> Result<CheckReport> {
    let (mut det_runs, mut det_bad, mut prob_runs, mut prob_bad) = (0usize, 0usize, 0usize, 0usize);
    let mut notes = Vec::new();
    for (fi, fig) in [Figure::Fig3a, Figure::Fig3b, Figure::Fig4a, Figure::Fig4b].into_iter().enumerate() {
        let map = sign_map(&fig.config(0.5, 1.0), &SweepGrid::default_for(fig.name()), SweepMode::TwoSpecies, None)?;
        // The explicit integrator's step shrinks like 1/λ, so representatives
        // are taken at moderate switching rates.
        for tag in distinct_tags(&map, |c| &c.verdict_det) {
            let Some(cell) = representative(&map, |c| &c.verdict_det, |c| c.grate, &tag, (1e-2, 20.0)) else {
                continue;
            };
            if tag == "marginal" || tag == "error" {
                continue;
            }
            let c = fig.config(cell.s, cell.lambda);
            let (_, stray) = gradostat_landings(&c, 32, 1e4, 0x800 + fi as u64)?;
            det_runs += 32;
            det_bad += stray;
            if stray > 0 {
                notes.push(format!("{fig} {tag} at ({:.3},{:.3}): {stray} strays", cell.s, cell.lambda));
            }
        }
        for tag in distinct_tags(&map, |c| &c.verdict_prob) {
            if tag == "inconclusive" || tag == "error" {
                continue;
            }
            let Some(cell) = representative(&map, |c| &c.verdict_prob, |c| c.rate, &tag, (0.1, 10.0)) else {
                notes.push(format!("{fig} {tag}: no cell with lambda in [0.1, 10]"));
                continue;
            };
            let c = fig.config(cell.s, cell.lambda);
            let case = classify_switching(&c, ZERO_BAND_DEFAULT)?.case;
            let r0 = c.common_input()?;
            let finals: Vec<Result<(PdmpState, [f64; 2])>> = (0..20u64)
                .into_par_iter()
                .map(|seed| {
                    let mut rng = JumpRng::derive(0x880 + fi as u64, seed);
                    let (u, v) = (0.3 * r0 * rng.uniform() + 1e-3, 0.3 * r0 * rng.uniform() + 1e-3);
                    let init = PdmpState::new(r0 - u - v, u, v, 1 + (seed % 2) as u8);
                    let opts = SimOptions {
                        record_every: 16,
                        ..SimOptions::new(1e5, seed)
                    };
                    let run = simulate_pdmp(&c, init, &opts)?;
                    // Largest densities over the last tenth of the run.
                    let peak = run
                        .samples
                        .iter()
                        .filter(|x| x.t >= 0.9e5)
                        .fold([0.0f64; 2], |m, x| [m[0].max(x.u), m[1].max(x.v)]);
                    Ok((run.final_state, peak))
                })
                .collect();
            let (mut bad, mut recurred) = (0, 0);
            for f in finals {
                let (f, peak) = f?;
                if !switched_outcome_ok(case, f.u, f.v) {
                    bad += 1;
                    if case == SwitchCase::Coexistence && peak.iter().all(|p| *p > EXTINCT_LEVEL) {
                        recurred += 1;
                    }
                }
            }
            prob_runs += 20;
            prob_bad += bad;
            if bad > 0 {
                let mut note = format!("{fig} {tag} at ({:.3},{:.3}): {bad}/20 disagree", cell.s, cell.lambda);
                if case == SwitchCase::Coexistence {
                    note.push_str(&format!(", of which {recurred} exceed {EXTINCT_LEVEL:.0e} again in the last 10%"));
                }
                notes.push(note);
            }
        }
    }
    let mut detail = format!(
        "gradostat: {det_bad}/{det_runs} starts off the permitted equilibria; switched: {prob_bad}/{prob_runs} \
         runs disagree"
    );
    if !notes.is_empty() {
        detail.push_str(&format!(" [{}]", notes.join("; ")));
    }
    Ok(report(8, det_bad == 0 && prob_bad == 0 && det_runs > 0 && prob_runs > 0, detail))
}

// ---------------------------------------------------------------------------
// 9

fn check_odd_bistability() -> Result<CheckReport> {
    let fig = Figure::Fig4b;
    let map = sign_map(&fig.config(0.5, 1.0), &SweepGrid::default_for(fig.name()), SweepMode::TwoSpecies, None)?;
    let odd: Vec<&SignMapCell> = map.cells.iter().filter(|c| c.verdict_det == "odd-bistability").collect();
    let Some(cell) = odd.first() else {
        return Ok(report(9, false, "no odd-bistability cell on the default grid".into()));
    };
    let c = fig.config(cell.s, cell.lambda);
    let (kinds, stray) = gradostat_landings(&c, 64, 2e4, 0x900)?;
    let coex = kinds.iter().filter(|k| **k == EquilibriumKind::Coexistence).count();
    let semi = kinds
        .iter()
        .filter(|k| matches!(k, EquilibriumKind::SemiTrivialU | EquilibriumKind::SemiTrivialV))
        .count();
    Ok(report(
        9,
        coex > 0 && semi > 0,
        format!(
            "{} odd cell(s); at (s={:.4}, lambda={:.4}) 64 starts: {coex} to coexistence, {semi} to a semi-trivial \
             point, {stray} elsewhere",
            odd.len(),
            cell.s,
            cell.lambda
        ),
    ))
}

// ---------------------------------------------------------------------------
// 10

fn check_competitive_exclusion() -> Result<CheckReport> {
    let mut gen = RandomConfigs::new(0x0A, true);
    let mut worst = 0.0f64;
    let mut failures = 0;
    let mut draws = 0;
    while draws < 50 {
        let v = gen.vessel(None);
        let (BreakEven::Finite(ru), BreakEven::Finite(rv)) = (v.break_even(Species::U), v.break_even(Species::V))
        else {
            continue;
        };
        let (winner, loser, r_win) = if ru < rv {
            (Species::U, Species::V, ru)
        } else {
            (Species::V, Species::U, rv)
        };
        // Admissible: the winner lives on R₀ and the loser declines at a
        // resolvable rate on the winner's resource level.
        if r_win >= v.r0 || v.net_growth(loser, r_win) > -2e-3 {
            continue;
        }
        draws += 1;
        let init = (gen.uniform(0.0, v.r0), gen.uniform(0.01, v.r0), gen.uniform(0.01, v.r0));
        let end = *simulate_simple_chemostat(&v, init, 1e4, 1e-9, usize::MAX)?.last().expect("final sample is kept");
        let (w_end, l_end) = match winner {
            Species::U => (end.u, end.v),
            Species::V => (end.v, end.u),
        };
        worst = worst.max(l_end);
        if l_end > EXTINCT_LEVEL || w_end <= EXTINCT_LEVEL {
            failures += 1;
        }
    }
    Ok(report(
        10,
        failures == 0,
        format!("50 draws, horizon 1e4: {failures} failures; largest loser density {worst:.1e}"),
    ))
}

// ---------------------------------------------------------------------------
// 11

fn check_invariant_density() -> Result<CheckReport> {
    let mut worst = 0.0f64;
    let points = [(0.5, 1.0), (0.25, 0.5), (0.75, 4.0)];
    for (k, (s, lambda)) in points.into_iter().enumerate() {
        let c = datasets::pi1(s, lambda);
        let density = invariant_density(&c)?;
        let [a, b] = c.inputs();
        let levels: Vec<f64> = (0..=200).map(|i| a.min(b) + (a - b).abs() * i as f64 / 200.0).collect();
        let empirical = face_occupation_cdf(&c, &quiet_opts(1e6, 0xB00 + k as u64), &levels)?;
        let exact: Vec<f64> = levels.iter().map(|&r| density.cdf(r)).collect();
        worst = worst.max(ks_distance(&empirical, &exact));
    }
    Ok(report(
        11,
        worst <= KS_TOL,
        format!("pi1 at 3 couplings, horizon 1e6: max KS distance {worst:.4} (tol {KS_TOL})"),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_configs_are_valid_and_reproducible() {
        let mut a = RandomConfigs::new(9, true);
        let mut b = RandomConfigs::new(9, true);
        for _ in 0..50 {
            let c = a.next_config();
            c.validate().unwrap();
            assert!(c.equal_inputs());
            assert_eq!(c, b.next_config());
        }
        let mut free = RandomConfigs::new(9, false);
        assert!((0..20).any(|_| !free.next_config().equal_inputs()));
    }

    #[test]
    fn unknown_check_is_a_failure() {
        let r = run_check(99);
        assert!(!r.passed);
        assert!(r.to_string().contains("FAIL"));
    }

    #[test]
    fn quick_checks_pass() {
        for id in [1, 6, 7] {
            let r = run_check(id);
            assert!(r.passed, "{r}");
        }
    }

    #[test]
    fn switched_outcome_table() {
        assert!(switched_outcome_ok(SwitchCase::ExtinctionOfV, 1.0, 1e-9));
        assert!(!switched_outcome_ok(SwitchCase::ExtinctionOfV, 1.0, 1e-3));
        assert!(switched_outcome_ok(SwitchCase::ExclusiveBistability, 1e-9, 1.0));
        assert!(!switched_outcome_ok(SwitchCase::Coexistence, 1e-9, 1.0));
    }
}
