//! The randomly switched chemostat and its Monte Carlo rate estimators.
//!
//! Species densities are integrated as logarithms, so a present species stays
//! strictly positive and an absent one (initial density zero) stays exactly
//! zero. Regime switches happen at exact exponential times; the integrator is
//! stopped there rather than snapping jumps to a grid.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::model::{DuoConfig, Species, VesselParams};
use crate::ode::{Dopri, OdeOptions};
use crate::rng::JumpRng;
use crate::stats::{batch_means, ErgodicEstimate, DEFAULT_BATCHES};
use crate::trajectory::{Jump, Recorder, TrajectorySample};

/// Run controls shared by every stochastic simulation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimOptions {
    pub horizon: f64,
    /// Start of the averaging window.
    pub burn_in: f64,
    /// Integrator absolute and relative tolerance.
    pub tol: f64,
    pub seed: u64,
    /// Keep every n-th accepted step in recorded trajectories (0 keeps none).
    pub record_every: usize,
}

impl SimOptions {
    /// Burn-in defaults to 10% of the horizon.
    pub fn new(horizon: f64, seed: u64) -> Self {
        Self {
            horizon,
            burn_in: 0.1 * horizon,
            tol: 1e-9,
            seed,
            record_every: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(invalid("horizon", "must be finite and > 0"));
        }
        if !(self.burn_in >= 0.0 && self.burn_in < self.horizon) {
            return Err(invalid("burn_in", "must satisfy 0 <= burn_in < horizon"));
        }
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return Err(invalid("tol", "must lie in (0, 1)"));
        }
        Ok(())
    }

    fn ode(&self) -> OdeOptions {
        OdeOptions::with_tol(self.tol)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PdmpState {
    pub t: f64,
    pub r: f64,
    pub u: f64,
    pub v: f64,
    /// 1 or 2.
    pub regime: u8,
}

impl PdmpState {
    pub fn new(r: f64, u: f64, v: f64, regime: u8) -> Self {
        Self { t: 0.0, r, u, v, regime }
    }

    fn validate(&self) -> Result<()> {
        for (name, x) in [("init.r", self.r), ("init.u", self.u), ("init.v", self.v)] {
            if !(x >= 0.0 && x.is_finite()) {
                return Err(invalid(name, "must be finite and >= 0"));
            }
        }
        if self.regime != 1 && self.regime != 2 {
            return Err(invalid("init.regime", "must be 1 or 2"));
        }
        Ok(())
    }
}

/// Output of [`simulate_pdmp`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PdmpRun {
    pub samples: Vec<TrajectorySample>,
    pub jumps: Vec<Jump>,
    pub final_state: PdmpState,
    /// Time spent in regimes 1 and 2.
    pub occupation: [f64; 2],
    /// First time `r + u + v` was observed inside `K`.
    pub k_entry: Option<f64>,
    /// Accepted steps at which the path was outside `K` after entering it.
    pub k_exits: usize,
}

/// The absorbing set `K = [min R₀ʲ / 2, 2 max R₀ʲ]` for the total mass.
pub fn k_bounds(c: &DuoConfig) -> (f64, f64) {
    let [a, b] = c.inputs();
    (0.5 * a.min(b), 2.0 * a.max(b))
}

fn regime_index(regime: u8) -> usize {
    (regime - 1) as usize
}

fn switch_rate(c: &DuoConfig, regime: u8) -> f64 {
    c.rates()[regime_index(regime)]
}

// State vector: (R, ln U, ln V); `present` masks species that started at zero.
struct Flow<'a> {
    vessel: &'a VesselParams,
    present: [bool; 2],
}

impl Flow<'_> {
    #[inline]
    fn rhs(&self, y: &[f64; 3]) -> [f64; 3] {
        let v = self.vessel;
        let r = y[0];
        let fu = v.monod_u.rate(r);
        let fv = v.monod_v.rate(r);
        let mut dr = v.delta * (v.r0 - r);
        let mut out = [0.0; 3];
        if self.present[0] {
            dr -= fu * y[1].exp();
            out[1] = fu - v.delta;
        }
        if self.present[1] {
            dr -= fv * y[2].exp();
            out[2] = fv - v.delta;
        }
        out[0] = dr;
        out
    }
}

fn decode(y: &[f64; 3], present: [bool; 2]) -> (f64, f64, f64) {
    let u = if present[0] { y[1].exp() } else { 0.0 };
    let v = if present[1] { y[2].exp() } else { 0.0 };
    (y[0], u, v)
}

/// Simulate the switched chemostat from `init` up to `opts.horizon`.
///
/// Jump times are cumulative sums of exponentials with rate `λ^{regime}` drawn
/// from [`JumpRng`], so the seed alone determines the jump log. With `λ = 0`
/// the initial regime is kept forever.
pub fn simulate_pdmp(c: &DuoConfig, init: PdmpState, opts: &SimOptions) -> Result<PdmpRun> {
    c.validate()?;
    opts.validate()?;
    init.validate()?;
    let present = [init.u > 0.0, init.v > 0.0];
    let mut y = [init.r, safe_ln(init.u), safe_ln(init.v)];
    let mut regime = init.regime;
    let mut t = init.t;
    let mut rng = JumpRng::new(opts.seed);
    let mut stepper = Dopri::<3>::new(opts.ode());
    let (k_lo, k_hi) = k_bounds(c);
    let mut rec = Recorder::new(opts.record_every);
    let mut jumps = Vec::new();
    let mut occupation = [0.0; 2];
    let mut k_entry = None;
    let mut k_exits = 0usize;

    let sample = |t: f64, y: &[f64; 3], regime: u8| {
        let (r, u, v) = decode(y, present);
        TrajectorySample { t, r, u, v, regime: Some(regime) }
    };
    let mut track_k = |t: f64, y: &[f64; 3]| {
        let (r, u, v) = decode(y, present);
        let total = r + u + v;
        let inside = (k_lo..=k_hi).contains(&total);
        match (k_entry, inside) {
            (None, true) => k_entry = Some(t),
            (Some(_), false) => k_exits += 1,
            _ => {}
        }
    };
    track_k(t, &y);
    rec.force(sample(t, &y, regime));

    while t < opts.horizon {
        let t_jump = t + rng.exponential(switch_rate(c, regime));
        let t_stop = t_jump.min(opts.horizon);
        let flow = Flow {
            vessel: c.vessel(regime_index(regime)),
            present,
        };
        stepper.integrate(
            |_, y| flow.rhs(y),
            t,
            &mut y,
            t_stop,
            |ts, ys| {
                track_k(ts, ys);
                rec.offer(sample(ts, ys, regime));
            },
        )?;
        occupation[regime_index(regime)] += t_stop - t;
        t = t_stop;
        if t_jump <= opts.horizon {
            let to = 3 - regime;
            jumps.push(Jump { t, from: regime, to });
            regime = to;
            rec.force(sample(t, &y, regime));
        }
    }
    if rec.samples.last().map(|s| s.t) != Some(t) {
        rec.force(sample(t, &y, regime));
    }
    let (r, u, v) = decode(&y, present);
    Ok(PdmpRun {
        samples: rec.samples,
        jumps,
        final_state: PdmpState { t, r, u, v, regime },
        occupation,
        k_entry,
        k_exits,
    })
}

fn safe_ln(x: f64) -> f64 {
    if x > 0.0 {
        x.ln()
    } else {
        0.0
    }
}

/// One chemostat without switching; `regime` is left blank in the output.
pub fn simulate_simple_chemostat(
    v: &VesselParams,
    init: (f64, f64, f64),
    horizon: f64,
    tol: f64,
    record_every: usize,
) -> Result<Vec<TrajectorySample>> {
    v.validate("vessel")?;
    let c = DuoConfig {
        vessel1: *v,
        vessel2: *v,
        s: 0.5,
        lambda: 0.0,
    };
    let opts = SimOptions {
        horizon,
        burn_in: 0.0,
        tol,
        seed: 0,
        record_every,
    };
    let run = simulate_pdmp(&c, PdmpState::new(init.0, init.1, init.2, 1), &opts)?;
    Ok(run
        .samples
        .into_iter()
        .map(|s| TrajectorySample { regime: None, ..s })
        .collect())
}

// ---------------------------------------------------------------------------
// Species-free face: R̄' = δ^I (R₀^I − R), solved exactly between jumps.

/// Exact face-process path, sampled on a regular grid of step `sample_dt` and
/// at every jump. Starts from the midpoint of the two inputs in regime 1.
pub fn face_resource_process(c: &DuoConfig, opts: &SimOptions, sample_dt: f64) -> Result<Vec<TrajectorySample>> {
    c.validate()?;
    opts.validate()?;
    if !(sample_dt > 0.0) {
        return Err(invalid("sample_dt", "must be > 0"));
    }
    let mut out = Vec::new();
    let mut next_sample = 0.0;
    walk_face(c, opts, |seg| {
        while next_sample <= seg.t_end && next_sample <= opts.horizon {
            let r = seg.value_at(next_sample - seg.t_start);
            out.push(TrajectorySample {
                t: next_sample,
                r,
                u: 0.0,
                v: 0.0,
                regime: Some(seg.regime),
            });
            next_sample += sample_dt;
        }
    });
    Ok(out)
}

#[derive(Debug, Clone, Copy)]
struct FaceSegment {
    t_start: f64,
    t_end: f64,
    r_start: f64,
    regime: u8,
    delta: f64,
    target: f64,
}

impl FaceSegment {
    fn value_at(&self, dt: f64) -> f64 {
        self.target + (self.r_start - self.target) * (-self.delta * dt).exp()
    }

    fn r_end(&self) -> f64 {
        self.value_at(self.t_end - self.t_start)
    }

    /// `∫ (f(R) − δ) dt` over `[t_start, t_start + tau]` for `R` following this segment.
    fn growth_integral(&self, a: f64, b: f64, delta_w: f64, tau: f64) -> f64 {
        let k = b + self.target;
        let r_tau = self.value_at(tau);
        let log_term = ((b + r_tau) / (b + self.r_start)).ln();
        (a - delta_w) * tau - a * b / k * (tau + log_term / self.delta)
    }
}

// Visits exact flow segments, split at jumps and at `split_times`, over [0, horizon].
fn walk_face_split<F: FnMut(&FaceSegment)>(c: &DuoConfig, opts: &SimOptions, split_times: &[f64], mut visit: F) {
    let mut rng = JumpRng::new(opts.seed);
    let [r01, r02] = c.inputs();
    let mut r = 0.5 * (r01 + r02);
    let mut regime = 1u8;
    let mut t = 0.0;
    let mut split = split_times.iter().copied().filter(|&s| s > 0.0).peekable();
    let mut t_jump = rng.exponential(switch_rate(c, regime));
    while t < opts.horizon {
        let mut t_end = t_jump.min(opts.horizon);
        let mut is_split = false;
        if let Some(&s) = split.peek() {
            if s < t_end {
                t_end = s;
                is_split = true;
            }
        }
        let j = regime_index(regime);
        let seg = FaceSegment {
            t_start: t,
            t_end,
            r_start: r,
            regime,
            delta: c.deltas()[j],
            target: c.inputs()[j],
        };
        visit(&seg);
        r = seg.r_end();
        t = t_end;
        if is_split {
            split.next();
        } else if t_jump <= opts.horizon {
            regime = 3 - regime;
            t_jump = t + rng.exponential(switch_rate(c, regime));
        }
    }
}

fn walk_face<F: FnMut(&FaceSegment)>(c: &DuoConfig, opts: &SimOptions, visit: F) {
    walk_face_split(c, opts, &[], visit)
}

fn batch_edges(start: f64, end: f64, n: usize) -> Vec<f64> {
    (0..=n).map(|k| start + (end - start) * k as f64 / n as f64).collect()
}

/// Time average of `f_w^I(R_t) − δ^I` along the species-free face after burn-in.
pub fn ergodic_lambda0(c: &DuoConfig, w: Species, opts: &SimOptions) -> Result<ErgodicEstimate> {
    c.validate()?;
    opts.validate()?;
    let edges = batch_edges(opts.burn_in, opts.horizon, DEFAULT_BATCHES);
    let batch_len = edges[1] - edges[0];
    let mut integrals = vec![0.0; DEFAULT_BATCHES];
    let params = [*c.vessel1.monod(w), *c.vessel2.monod(w)];
    walk_face_split(c, opts, &edges, |seg| {
        if seg.t_start < opts.burn_in {
            return;
        }
        let k = (((seg.t_start - opts.burn_in) / batch_len) as usize).min(DEFAULT_BATCHES - 1);
        let p = params[regime_index(seg.regime)];
        integrals[k] += seg.growth_integral(p.a, p.b, seg.delta, seg.t_end - seg.t_start);
    });
    Ok(batch_means(&integrals, batch_len))
}

/// Exact time-occupation CDF of the face process after burn-in: for each
/// level `y` (ascending), the fraction of time with `R_t ≤ y`.
pub fn face_occupation_cdf(c: &DuoConfig, opts: &SimOptions, levels: &[f64]) -> Result<Vec<f64>> {
    c.validate()?;
    opts.validate()?;
    if levels.windows(2).any(|p| p[1] < p[0]) {
        return Err(invalid("levels", "must be ascending"));
    }
    let n = levels.len();
    // `below[k]` accumulates time with R ≤ levels[k]; `diff` handles whole
    // segments lying below a level in O(log n).
    let mut below = vec![0.0; n];
    let mut diff = vec![0.0; n + 1];
    walk_face_split(c, opts, &[opts.burn_in], |seg| {
        if seg.t_start < opts.burn_in {
            return;
        }
        let tau = seg.t_end - seg.t_start;
        let (ra, rb) = (seg.r_start, seg.r_end());
        let (lo, hi) = (ra.min(rb), ra.max(rb));
        let first_inside = levels.partition_point(|&y| y < lo);
        let first_above = levels.partition_point(|&y| y < hi);
        diff[first_above] += tau;
        for (k, &y) in levels.iter().enumerate().take(first_above).skip(first_inside) {
            // Time for the exponential relaxation to reach level y.
            let ty = ((ra - seg.target) / (y - seg.target)).ln() / seg.delta;
            let ty = ty.clamp(0.0, tau);
            below[k] += if rb > ra { ty } else { tau - ty };
        }
    });
    let total = opts.horizon - opts.burn_in;
    let mut acc = 0.0;
    Ok((0..n)
        .map(|k| {
            acc += diff[k];
            (below[k] + acc) / total
        })
        .collect())
}

// ---------------------------------------------------------------------------
// Two-species face with Σ = R₀: the resident density x alone.

/// Time average of the invader's growth `f_w^I(R₀ − x) − δ^I` along the
/// resident's switched equation `ẋ = x (f_w̄^I(R₀ − x) − δ^I)`.
///
/// Integrates `ln x` together with the running growth integral. Fails with
/// [`Error::ResidentExtinct`] if the resident falls below `1e-12`.
pub fn ergodic_lambda_two_species(c: &DuoConfig, w: Species, opts: &SimOptions) -> Result<ErgodicEstimate> {
    c.validate()?;
    opts.validate()?;
    let r0 = c.common_input()?;
    let resident = w.other();
    let x0 = resident_start(c, resident, r0);
    let mut y = [x0.ln(), 0.0];
    let edges = batch_edges(opts.burn_in, opts.horizon, DEFAULT_BATCHES);
    let batch_len = edges[1] - edges[0];
    let mut integrals = vec![0.0; DEFAULT_BATCHES];
    let mut rng = JumpRng::new(opts.seed);
    let mut stepper = Dopri::<2>::new(opts.ode());
    let mut regime = 1u8;
    let mut t = 0.0;
    let mut t_jump = rng.exponential(switch_rate(c, regime));
    let mut next_edge = 0usize;
    let mut acc_at_edge = 0.0;
    let mut min_ln_x = y[0];
    while t < opts.horizon {
        let edge_t = edges.get(next_edge).copied().unwrap_or(f64::INFINITY);
        let t_stop = t_jump.min(edge_t).min(opts.horizon);
        let v = c.vessel(regime_index(regime));
        let (pr, pw) = (*v.monod(resident), *v.monod(w));
        let delta = v.delta;
        stepper.integrate(
            |_, y| {
                let r = r0 - y[0].exp();
                [pr.rate(r) - delta, pw.rate(r) - delta]
            },
            t,
            &mut y,
            t_stop,
            |_, y| min_ln_x = min_ln_x.min(y[0]),
        )?;
        t = t_stop;
        if t == edge_t {
            if next_edge > 0 {
                integrals[next_edge - 1] = y[1] - acc_at_edge;
            }
            acc_at_edge = y[1];
            next_edge += 1;
        }
        if t == t_jump {
            regime = 3 - regime;
            t_jump = t + rng.exponential(switch_rate(c, regime));
        }
    }
    if y[0] < (1e-12f64).ln() {
        return Err(Error::ResidentExtinct(resident));
    }
    Ok(batch_means(&integrals, batch_len))
}

// Interior starting density for the resident: the middle of the range spanned
// by its single-vessel equilibria, or R₀/2 when it has none.
fn resident_start(c: &DuoConfig, resident: Species, r0: f64) -> f64 {
    let eq: Vec<f64> = c
        .break_evens(resident)
        .iter()
        .filter_map(|b| b.finite())
        .filter(|&r| r < r0)
        .map(|r| r0 - r)
        .collect();
    match eq.as_slice() {
        [a, b] => 0.5 * (a + b),
        [a] => 0.5 * a,
        _ => 0.5 * r0,
    }
}

/// Growth exponent of a rare invader measured on the full switched system:
/// `(ln W(t_end) − ln W(burn_in)) / (t_end − burn_in)`, where the window
/// closes at the horizon or when `W` first exceeds `1e-3 · R₀`.
///
/// The resident starts at an interior density with `R + x = R₀¹` in regime 1.
pub fn lyapunov_from_rare(c: &DuoConfig, w: Species, eps: f64, opts: &SimOptions) -> Result<ErgodicEstimate> {
    c.validate()?;
    opts.validate()?;
    let r0_max = c.inputs()[0].max(c.inputs()[1]);
    if !(eps > 0.0 && eps <= 1e-6 * r0_max) {
        return Err(invalid("eps", format!("must lie in (0, 1e-6 R0], got {eps}")));
    }
    let threshold = 1e-3 * r0_max;
    let resident = w.other();
    let x0 = resident_start(c, resident, c.vessel1.r0);
    let (u0, v0) = match w {
        Species::U => (eps, x0),
        Species::V => (x0, eps),
    };
    let idx = 1 + w.index();
    let present = [true, true];
    let mut y = [c.vessel1.r0 - x0 - eps, u0.ln(), v0.ln()];
    let ln_threshold = threshold.ln();
    let edges = batch_edges(opts.burn_in, opts.horizon, DEFAULT_BATCHES);
    let batch_len = edges[1] - edges[0];
    let mut marks: Vec<f64> = Vec::with_capacity(DEFAULT_BATCHES + 1);
    let mut rng = JumpRng::new(opts.seed);
    let mut stepper = Dopri::<3>::new(opts.ode());
    let mut regime = 1u8;
    let mut t = 0.0;
    let mut t_jump = rng.exponential(switch_rate(c, regime));
    let mut next_edge = 0usize;
    let mut crossed = false;
    while t < opts.horizon && !crossed {
        let edge_t = edges.get(next_edge).copied().unwrap_or(f64::INFINITY);
        let t_stop = t_jump.min(edge_t).min(opts.horizon);
        let flow = Flow {
            vessel: c.vessel(regime_index(regime)),
            present,
        };
        let reached = stepper.integrate_until(
            |_, y| flow.rhs(y),
            t,
            &mut y,
            t_stop,
            |_, y| {
                crossed = y[idx] > ln_threshold;
                !crossed
            },
        )?;
        t = reached;
        if crossed {
            break;
        }
        if t == edge_t {
            marks.push(y[idx]);
            next_edge += 1;
        }
        if t == t_jump {
            regime = 3 - regime;
            t_jump = t + rng.exponential(switch_rate(c, regime));
        }
    }
    if marks.is_empty() || t <= opts.burn_in {
        return Err(Error::EmptyWindow(w));
    }
    let value = (y[idx] - marks[0]) / (t - opts.burn_in);
    let std_error = if marks.len() > 2 {
        let increments: Vec<f64> = marks.windows(2).map(|p| p[1] - p[0]).collect();
        batch_means(&increments, batch_len).std_error
    } else {
        f64::INFINITY
    };
    Ok(ErgodicEstimate {
        value,
        std_error,
        sample_time: t - opts.burn_in,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datasets;
    use crate::model::MonodParams;

    fn mp(a: f64, b: f64) -> MonodParams {
        MonodParams { a, b }
    }

    #[test]
    fn resource_only_state_is_fixed() {
        let v = VesselParams::new(1.0, 3.0, mp(2.0, 1.0), mp(1.5, 0.5)).unwrap();
        let path = simulate_simple_chemostat(&v, (3.0, 0.0, 0.0), 50.0, 1e-9, 1).unwrap();
        for s in &path {
            assert_eq!((s.r, s.u, s.v), (3.0, 0.0, 0.0));
            assert_eq!(s.regime, None);
        }
    }

    #[test]
    fn total_mass_follows_closed_form() {
        let v = VesselParams::new(0.8, 4.0, mp(2.0, 1.0), mp(1.5, 0.3)).unwrap();
        let (r, u, w) = (0.5, 2.0, 3.0);
        let path = simulate_simple_chemostat(&v, (r, u, w), 60.0, 1e-9, 1).unwrap();
        let s0 = r + u + w;
        let worst = path
            .iter()
            .map(|p| (p.r + p.u + p.v - 4.0 - (-0.8 * p.t).exp() * (s0 - 4.0)).abs())
            .fold(0.0, f64::max);
        assert!(worst < 1e-8, "worst Σ deviation {worst:e}");
    }

    #[test]
    fn best_competitor_takes_over() {
        let c = datasets::pi2(0.5, 1.0);
        let v = c.vessel1;
        let path = simulate_simple_chemostat(&v, (0.55, 0.1, 0.1), 1e4, 1e-9, 1_000_000).unwrap();
        let end = path.last().unwrap();
        let rstar = v.break_even(Species::U).finite().unwrap();
        // Identical species here: both persist in fixed proportion.
        assert!((end.r - rstar).abs() < 1e-6);
        assert!((end.u + end.v - (0.55 - rstar)).abs() < 1e-6);
    }

    #[test]
    fn zero_switching_matches_single_vessel() {
        let c = datasets::fig3a(0.5, 0.0);
        let opts = SimOptions::new(30.0, 11);
        let run = simulate_pdmp(&c, PdmpState::new(1.0, 0.5, 0.5, 1), &opts).unwrap();
        let simple = simulate_simple_chemostat(&c.vessel1, (1.0, 0.5, 0.5), 30.0, 1e-9, 1).unwrap();
        assert!(run.jumps.is_empty());
        assert_eq!(run.samples.len(), simple.len());
        for (a, b) in run.samples.iter().zip(&simple) {
            assert_eq!((a.t, a.r, a.u, a.v), (b.t, b.r, b.u, b.v));
        }
    }

    #[test]
    fn same_seed_same_output() {
        let c = datasets::fig3b(0.4, 2.0);
        let opts = SimOptions::new(40.0, 0xC0FFEE);
        let a = simulate_pdmp(&c, PdmpState::new(2.0, 1.0, 1.0, 1), &opts).unwrap();
        let b = simulate_pdmp(&c, PdmpState::new(2.0, 1.0, 1.0, 1), &opts).unwrap();
        assert_eq!(a, b);
        let other = simulate_pdmp(&c, PdmpState::new(2.0, 1.0, 1.0, 1), &SimOptions { seed: 1, ..opts }).unwrap();
        assert_ne!(a.jumps, other.jumps);
    }

    #[test]
    fn path_enters_and_stays_in_k() {
        let c = datasets::pi1(0.3, 3.0);
        let opts = SimOptions { record_every: 0, ..SimOptions::new(200.0, 5) };
        let run = simulate_pdmp(&c, PdmpState::new(0.01, 25.0, 0.0, 2), &opts).unwrap();
        assert!(run.k_entry.is_some());
        assert_eq!(run.k_exits, 0);
        assert!(run.final_state.u > 0.0 && run.final_state.v == 0.0);
    }

    #[test]
    fn occupation_matches_switching_fractions() {
        let c = datasets::pi2(0.3, 5.0);
        let opts = SimOptions { record_every: 0, ..SimOptions::new(1e4, 3) };
        let run = simulate_pdmp(&c, PdmpState::new(1.0, 0.0, 0.0, 1), &opts).unwrap();
        let frac1 = run.occupation[0] / 1e4;
        assert!((frac1 - 0.7).abs() < 0.02, "regime-1 fraction {frac1}");
    }

    #[test]
    fn face_sits_at_common_input() {
        let v = VesselParams::new(1.0, 2.0, mp(2.0, 1.0), mp(2.0, 1.0)).unwrap();
        let w = VesselParams::new(3.0, 2.0, mp(1.5, 1.0), mp(2.0, 1.0)).unwrap();
        let c = DuoConfig::new(v, w, 0.5, 2.0).unwrap();
        let path = face_resource_process(&c, &SimOptions::new(50.0, 1), 1.0).unwrap();
        assert!(path.iter().all(|p| (p.r - 2.0).abs() < 1e-15));
    }

    #[test]
    fn face_stays_between_inputs() {
        let c = datasets::pi1(0.5, 1.0);
        let path = face_resource_process(&c, &SimOptions::new(500.0, 9), 0.25).unwrap();
        assert!(path.iter().all(|p| (1.0..=10.0).contains(&p.r)));
    }

    #[test]
    fn exact_face_integral_matches_quadrature() {
        let seg = FaceSegment {
            t_start: 0.0,
            t_end: 2.0,
            r_start: 7.0,
            regime: 1,
            delta: 0.8,
            target: 1.5,
        };
        let (a, b, d) = (2.0, 0.7, 0.8);
        let n = 200_000;
        let h = 2.0 / n as f64;
        let num: f64 = (0..n)
            .map(|k| {
                let r = seg.value_at((k as f64 + 0.5) * h);
                a * r / (b + r) - d
            })
            .sum::<f64>()
            * h;
        assert!((seg.growth_integral(a, b, d, 2.0) - num).abs() < 1e-9);
    }

    #[test]
    fn face_average_for_identical_inputs() {
        let v = VesselParams::new(1.0, 3.0, mp(2.0, 1.0), mp(2.0, 1.0)).unwrap();
        let c = DuoConfig::new(v, v, 0.5, 1.0).unwrap();
        let e = ergodic_lambda0(&c, Species::U, &SimOptions::new(1e3, 2)).unwrap();
        assert!((e.value - 0.5).abs() < 1e-12);
    }

    #[test]
    fn occupation_cdf_is_a_cdf() {
        let c = datasets::pi2(0.5, 1.0);
        let levels: Vec<f64> = (0..=40).map(|k| 0.55 + (2.1 - 0.55) * k as f64 / 40.0).collect();
        let cdf = face_occupation_cdf(&c, &SimOptions::new(2e3, 4), &levels).unwrap();
        assert!(cdf.windows(2).all(|p| p[1] >= p[0] - 1e-15));
        assert!((cdf[40] - 1.0).abs() < 1e-12);
        assert!(cdf[0] < 1e-6);
    }

    #[test]
    fn rare_invader_in_frozen_environment() {
        // λ = 0: resident sits at its vessel-1 equilibrium; the invader grows
        // at its net rate there.
        let c = datasets::fig3a(0.5, 0.0);
        let opts = SimOptions { record_every: 0, ..SimOptions::new(400.0, 1) };
        let e = lyapunov_from_rare(&c, Species::V, 1e-9, &opts).unwrap();
        let r_star = c.vessel1.break_even(Species::U).finite().unwrap();
        let expect = c.vessel1.net_growth(Species::V, r_star);
        assert!(expect < 0.0);
        assert!((e.value - expect).abs() < 1e-3, "{} vs {expect}", e.value);
    }

    #[test]
    fn rejects_large_eps() {
        let c = datasets::fig3a(0.5, 1.0);
        assert!(lyapunov_from_rare(&c, Species::V, 1e-2, &SimOptions::new(10.0, 1)).is_err());
    }

    #[test]
    fn two_species_requires_equal_inputs() {
        let c = datasets::pi1(0.5, 1.0);
        assert!(matches!(
            ergodic_lambda_two_species(&c, Species::U, &SimOptions::new(10.0, 1)),
            Err(Error::UnequalInputs { .. })
        ));
    }
}
