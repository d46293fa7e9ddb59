use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::model::{DuoConfig, Species};
use crate::ode::{Dopri, OdeOptions};
use crate::trajectory::{GradostatSample, Recorder};

use super::equilibria::reduced_field;
use super::sigma_star;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradostatRun {
    pub samples: Vec<GradostatSample>,
    /// State at the horizon, recorded or not.
    pub last: GradostatSample,
}

fn check_run(horizon: f64, tol: f64) -> Result<()> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(invalid("horizon", "must be finite and > 0"));
    }
    if !(tol > 0.0 && tol < 1.0) {
        return Err(invalid("tol", "must lie in (0, 1)"));
    }
    Ok(())
}

fn check_nonneg(field: &str, x: [f64; 2]) -> Result<()> {
    if x.iter().all(|v| *v >= 0.0 && v.is_finite()) {
        Ok(())
    } else {
        Err(invalid(field, "components must be finite and >= 0"))
    }
}

/// Integrates the six-dimensional system from `(R, U, V)`.
pub fn simulate_gradostat_full(
    c: &DuoConfig,
    init: ([f64; 2], [f64; 2], [f64; 2]),
    horizon: f64,
    tol: f64,
    record_every: usize,
) -> Result<GradostatRun> {
    c.validate()?;
    check_run(horizon, tol)?;
    let (r, u, v) = init;
    check_nonneg("init.r", r)?;
    check_nonneg("init.u", u)?;
    check_nonneg("init.v", v)?;
    let [l1, l2] = c.rates();
    let [d1, d2] = c.deltas();
    let [r01, r02] = c.inputs();
    let (v1, v2) = (&c.vessel1, &c.vessel2);
    let rhs = |_t: f64, y: &[f64; 6]| {
        let [r1, r2, u1, u2, w1, w2] = *y;
        let (fu1, fu2) = (v1.monod_u.rate(r1), v2.monod_u.rate(r2));
        let (fv1, fv2) = (v1.monod_v.rate(r1), v2.monod_v.rate(r2));
        [
            d1 * (r01 - r1) - u1 * fu1 - w1 * fv1 + l1 * (r2 - r1),
            d2 * (r02 - r2) - u2 * fu2 - w2 * fv2 + l2 * (r1 - r2),
            u1 * (fu1 - d1) + l1 * (u2 - u1),
            u2 * (fu2 - d2) + l2 * (u1 - u2),
            w1 * (fv1 - d1) + l1 * (w2 - w1),
            w2 * (fv2 - d2) + l2 * (w1 - w2),
        ]
    };
    let sample = |t: f64, y: &[f64; 6]| GradostatSample {
        t,
        r: [y[0], y[1]],
        u: [y[2], y[3]],
        v: [y[4], y[5]],
    };
    let mut y = [r[0], r[1], u[0], u[1], v[0], v[1]];
    let mut rec = Recorder::new(record_every);
    rec.offer(sample(0.0, &y));
    let mut ode = Dopri::<6>::new(OdeOptions::with_tol(tol));
    ode.integrate(rhs, 0.0, &mut y, horizon, |t, y| rec.offer(sample(t, y)))?;
    finish(rec, sample(horizon, &y))
}

/// Integrates the four-dimensional flow on `R + U + V = Σ*`, starting from
/// `(U, V)` with `U + V ≤ Σ*` componentwise.
pub fn simulate_gradostat_reduced(
    c: &DuoConfig,
    init: ([f64; 2], [f64; 2]),
    horizon: f64,
    tol: f64,
    record_every: usize,
) -> Result<GradostatRun> {
    c.validate()?;
    check_run(horizon, tol)?;
    let (u, v) = init;
    check_nonneg("init.u", u)?;
    check_nonneg("init.v", v)?;
    let sigma = sigma_star(c)?;
    if (0..2).any(|k| u[k] + v[k] > sigma[k]) {
        return Err(invalid("init", "U + V must not exceed the limiting total Σ in either vessel"));
    }
    let rhs = |_t: f64, y: &[f64; 4]| {
        let (a, b) = reduced_field(c, sigma, [y[0], y[1]], [y[2], y[3]]);
        [a[0], a[1], b[0], b[1]]
    };
    let sample = |t: f64, y: &[f64; 4]| GradostatSample {
        t,
        r: [sigma[0] - y[0] - y[2], sigma[1] - y[1] - y[3]],
        u: [y[0], y[1]],
        v: [y[2], y[3]],
    };
    let mut y = [u[0], u[1], v[0], v[1]];
    let mut rec = Recorder::new(record_every);
    rec.offer(sample(0.0, &y));
    let mut ode = Dopri::<4>::new(OdeOptions::with_tol(tol));
    ode.integrate(rhs, 0.0, &mut y, horizon, |t, y| rec.offer(sample(t, y)))?;
    finish(rec, sample(horizon, &y))
}

fn finish(mut rec: Recorder<GradostatSample>, last: GradostatSample) -> Result<GradostatRun> {
    if rec.samples.last().map(|s| s.t) != Some(last.t) {
        rec.force(last);
    }
    Ok(GradostatRun {
        samples: rec.samples,
        last,
    })
}

impl GradostatSample {
    pub fn species(&self, w: Species) -> [f64; 2] {
        match w {
            Species::U => self.u,
            Species::V => self.v,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datasets;
    use crate::gradostat::{semi_trivial_equilibrium, CouplingMatrix};
    use crate::pdmp::simulate_simple_chemostat;

    #[test]
    fn total_relaxes_to_sigma_at_eigen_rate() {
        let c = datasets::pi1(0.3, 0.8);
        let sigma = sigma_star(&c).unwrap();
        let run = simulate_gradostat_full(&c, ([0.5, 0.2], [1.0, 0.3], [0.2, 0.4]), 40.0, 1e-11, 1).unwrap();
        let dev = |s: &GradostatSample| {
            let t = [s.r[0] + s.u[0] + s.v[0], s.r[1] + s.u[1] + s.v[1]];
            (t[0] - sigma[0]).hypot(t[1] - sigma[1])
        };
        assert!(dev(&run.last) < 1e-6);
        // Slope of log‖Σ(t) − Σ*‖ is bounded by the top eigenvalue of λK − Δ.
        let k = CouplingMatrix::of(&c).scaled();
        let [d1, d2] = c.deltas();
        let top = super::super::max_eigenvalue_2x2(k[0][0] - d1, k[0][1], k[1][0], k[1][1] - d2);
        let early = run.samples.iter().find(|s| s.t >= 5.0).unwrap();
        let late = run.samples.iter().find(|s| s.t >= 20.0).unwrap();
        let slope = (dev(late).ln() - dev(early).ln()) / (late.t - early.t);
        assert!(slope <= top + 1e-3, "slope {slope} vs {top}");
    }

    #[test]
    fn uncoupled_vessels_are_simple_chemostats() {
        let c = datasets::fig3a(0.4, 0.0);
        let run = simulate_gradostat_full(&c, ([1.0, 2.0], [0.5, 0.1], [0.3, 0.6]), 30.0, 1e-11, 0).unwrap();
        let one = simulate_simple_chemostat(&c.vessel1, (1.0, 0.5, 0.3), 30.0, 1e-11, 1).unwrap();
        let two = simulate_simple_chemostat(&c.vessel2, (2.0, 0.1, 0.6), 30.0, 1e-11, 1).unwrap();
        let (a, b) = (one.last().unwrap(), two.last().unwrap());
        assert!((run.last.u[0] - a.u).abs() < 1e-7 && (run.last.v[0] - a.v).abs() < 1e-7);
        assert!((run.last.u[1] - b.u).abs() < 1e-7 && (run.last.r[1] - b.r).abs() < 1e-7);
    }

    #[test]
    fn reduced_stays_at_equilibrium() {
        let c = datasets::fig4b(0.4, 2.0);
        let e = semi_trivial_equilibrium(&c, Species::U).unwrap().unwrap();
        let run = simulate_gradostat_reduced(&c, (e.u, e.v), 100.0, 1e-12, 1).unwrap();
        for s in &run.samples {
            let d = (0..2).map(|k| (s.u[k] - e.u[k]).abs() + s.v[k]).fold(0.0, f64::max);
            assert!(d < 1e-8, "drift {d:e} at t={}", s.t);
        }
    }

    #[test]
    fn full_and_reduced_agree_in_the_long_run() {
        let c = datasets::fig3a(0.15, 1.0);
        let sigma = sigma_star(&c).unwrap();
        let (u, v) = ([0.3, 0.2], [0.4, 0.5]);
        let r = [sigma[0] - 0.7, sigma[1] - 0.7];
        let full = simulate_gradostat_full(&c, (r, u, v), 2000.0, 1e-10, 0).unwrap();
        let red = simulate_gradostat_reduced(&c, (u, v), 2000.0, 1e-10, 0).unwrap();
        for k in 0..2 {
            assert!((full.last.u[k] - red.last.u[k]).abs() < 1e-5);
            assert!((full.last.v[k] - red.last.v[k]).abs() < 1e-5);
        }
    }

    #[test]
    fn rejects_overfull_reduced_start() {
        let c = datasets::fig3a(0.5, 1.0);
        assert!(simulate_gradostat_reduced(&c, ([5.0, 1.0], [4.0, 1.0]), 1.0, 1e-9, 1).is_err());
    }
}
