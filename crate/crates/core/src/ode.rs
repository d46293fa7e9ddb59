//! Adaptive Dormand–Prince 5(4) integrator on fixed-size states.
//!
//! The stepper keeps its last accepted step size between calls so a path made
//! of many short segments (between jumps, batch boundaries, sample times) does
//! not restart the step-size controller each time.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeOptions {
    pub atol: f64,
    pub rtol: f64,
    /// Upper bound on the step size; `f64::INFINITY` for none.
    pub h_max: f64,
    /// Accepted plus rejected steps allowed in a single `integrate` call.
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self {
            atol: 1e-9,
            rtol: 1e-9,
            h_max: f64::INFINITY,
            max_steps: 50_000_000,
        }
    }
}

impl OdeOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            atol: tol,
            rtol: tol,
            ..Self::default()
        }
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// Differences between the 5th- and embedded 4th-order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

#[inline]
fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for (c, k) in terms {
        let hc = h * c;
        for i in 0..N {
            out[i] += hc * k[i];
        }
    }
    out
}

/// Stateful stepper; reuse one instance along a path.
#[derive(Debug, Clone)]
pub struct Dopri<const N: usize> {
    opts: OdeOptions,
    h: Option<f64>,
    accepted: u64,
    rejected: u64,
}

impl<const N: usize> Dopri<N> {
    pub fn new(opts: OdeOptions) -> Self {
        Self {
            opts,
            h: None,
            accepted: 0,
            rejected: 0,
        }
    }

    pub fn accepted_steps(&self) -> u64 {
        self.accepted
    }

    pub fn rejected_steps(&self) -> u64 {
        self.rejected
    }

    fn error_norm(&self, y: &[f64; N], y_new: &[f64; N], err: &[f64; N]) -> f64 {
        let mut m = 0.0f64;
        for i in 0..N {
            if !y_new[i].is_finite() {
                return f64::INFINITY;
            }
            let sc = self.opts.atol + self.opts.rtol * y[i].abs().max(y_new[i].abs());
            let e = (err[i] / sc).abs();
            // `f64::max` would silently drop a NaN.
            if !(e <= m) {
                m = e;
            }
        }
        m
    }

    fn initial_step<F>(&self, f: &mut F, t: f64, y: &[f64; N], k1: &[f64; N], span: f64) -> f64
    where
        F: FnMut(f64, &[f64; N]) -> [f64; N],
    {
        // Hairer–Nørsett–Wanner starting-step heuristic.
        let scale = |i: usize| self.opts.atol + self.opts.rtol * y[i].abs();
        let (mut d0, mut d1) = (0.0f64, 0.0f64);
        for i in 0..N {
            d0 = d0.max((y[i] / scale(i)).abs());
            d1 = d1.max((k1[i] / scale(i)).abs());
        }
        let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        let h0 = h0.min(span);
        let y1 = axpy(y, h0, &[(1.0, k1)]);
        let k2 = f(t + h0, &y1);
        let mut d2 = 0.0f64;
        for i in 0..N {
            d2 = d2.max(((k2[i] - k1[i]) / scale(i)).abs() / h0);
        }
        let h1 = if d1.max(d2) <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / d1.max(d2)).powf(0.2)
        };
        (100.0 * h0).min(h1).min(span).min(self.opts.h_max)
    }

    /// Advance `y` from `t0` to exactly `t1`, calling `observer(t, y)` after
    /// every accepted step (including the final one at `t1`).
    pub fn integrate<F, O>(&mut self, f: F, t0: f64, y: &mut [f64; N], t1: f64, mut observer: O) -> Result<()>
    where
        F: FnMut(f64, &[f64; N]) -> [f64; N],
        O: FnMut(f64, &[f64; N]),
    {
        self.integrate_until(f, t0, y, t1, |t, y| {
            observer(t, y);
            true
        })
        .map(|_| ())
    }

    /// Like [`Dopri::integrate`], but stops after the first accepted step for
    /// which `observer` returns `false`. Returns the time reached.
    pub fn integrate_until<F, O>(&mut self, mut f: F, t0: f64, y: &mut [f64; N], t1: f64, mut observer: O) -> Result<f64>
    where
        F: FnMut(f64, &[f64; N]) -> [f64; N],
        O: FnMut(f64, &[f64; N]) -> bool,
    {
        if t1 <= t0 {
            return Ok(t0);
        }
        let mut t = t0;
        let mut k1 = f(t, y);
        let mut h = match self.h {
            Some(h) => h,
            None => self.initial_step(&mut f, t, y, &k1, t1 - t0),
        };
        let mut steps = 0usize;
        loop {
            steps += 1;
            if steps > self.opts.max_steps {
                return Err(Error::TooManySteps {
                    t,
                    max_steps: self.opts.max_steps,
                });
            }
            h = h.min(self.opts.h_max);
            let remaining = t1 - t;
            let last = h >= remaining;
            let hs = if last { remaining } else { h };

            let k2 = f(t + C2 * hs, &axpy(y, hs, &[(A21, &k1)]));
            let k3 = f(t + C3 * hs, &axpy(y, hs, &[(A31, &k1), (A32, &k2)]));
            let k4 = f(t + C4 * hs, &axpy(y, hs, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
            let k5 = f(
                t + C5 * hs,
                &axpy(y, hs, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
            );
            let k6 = f(
                t + hs,
                &axpy(y, hs, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
            );
            let y_new = axpy(y, hs, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
            let k7 = f(t + hs, &y_new);
            let mut err = [0.0; N];
            for i in 0..N {
                err[i] = hs
                    * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            }
            let en = self.error_norm(y, &y_new, &err);
            if !en.is_finite() {
                self.rejected += 1;
                h = hs * 0.2;
                if h < 1e-14 * t.abs().max(1.0) {
                    return Err(Error::NonConvergent { t, h });
                }
                continue;
            }
            let factor = if en == 0.0 {
                5.0
            } else {
                (0.9 * en.powf(-0.2)).clamp(0.2, 5.0)
            };
            if en <= 1.0 {
                self.accepted += 1;
                t = if last { t1 } else { t + hs };
                *y = y_new;
                k1 = k7;
                let keep_going = observer(t, y);
                // A step truncated to hit t1 says nothing about the natural step.
                h = if last { h.max(hs * factor) } else { hs * factor };
                if last || !keep_going {
                    self.h = Some(h);
                    return Ok(t);
                }
            } else {
                self.rejected += 1;
                h = hs * factor;
                if h < 1e-14 * t.abs().max(1.0) {
                    return Err(Error::NonConvergent { t, h });
                }
            }
        }
    }
}
