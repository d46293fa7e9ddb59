//! Quadrature rules: Beta-weighted Gauss–Jacobi and adaptive Gauss–Kronrod.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{invalid, Error, Result};

/// Gauss rule for expectations under `Beta(p, q)` on `[0, 1]`.
///
/// Nodes come from the Golub–Welsch eigenproblem of the Jacobi matrix for the
/// weight `(1−t)^α (1+t)^β` on `[−1, 1]`, with `α = q − 1`, `β = p − 1`, mapped
/// by `x = (1 + t)/2`. Weights are normalised to sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussJacobi {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

pub const GAUSS_JACOBI_NODES: usize = 256;

impl GaussJacobi {
    pub fn beta(p: f64, q: f64, n: usize) -> Result<Self> {
        if !(p > 0.0 && q > 0.0 && p.is_finite() && q.is_finite()) {
            return Err(invalid("beta shape", format!("need finite p, q > 0, got ({p}, {q})")));
        }
        if n == 0 {
            return Err(invalid("nodes", "need at least one node"));
        }
        let (alpha, beta) = (q - 1.0, p - 1.0);
        let ab = alpha + beta;
        let mut diag = vec![0.0; n];
        let mut off = vec![0.0; n];
        diag[0] = (beta - alpha) / (ab + 2.0);
        for k in 1..n {
            let kf = k as f64;
            let s = 2.0 * kf + ab;
            diag[k] = (beta * beta - alpha * alpha) / (s * (s + 2.0));
            let b2 = if k == 1 {
                4.0 * (1.0 + alpha) * (1.0 + beta) / ((2.0 + ab).powi(2) * (3.0 + ab))
            } else {
                4.0 * kf * (kf + alpha) * (kf + beta) * (kf + ab) / (s * s * (s + 1.0) * (s - 1.0))
            };
            off[k - 1] = b2.sqrt();
        }
        let (vals, first) = symmetric_tridiagonal_eigen(diag, off)?;
        let total: f64 = first.iter().map(|z| z * z).sum();
        let mut pairs: Vec<(f64, f64)> = vals
            .iter()
            .zip(&first)
            .map(|(&t, &z)| (0.5 * (1.0 + t), z * z / total))
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        Ok(Self {
            nodes: pairs.iter().map(|p| p.0.clamp(0.0, 1.0)).collect(),
            weights: pairs.iter().map(|p| p.1).collect(),
        })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn expect<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }
}

/// Implicit-shift QL on a symmetric tridiagonal matrix, tracking only the
/// first row of the eigenvector matrix. Returns (eigenvalues, first components).
fn symmetric_tridiagonal_eigen(mut d: Vec<f64>, mut e: Vec<f64>) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = d.len();
    let mut z = vec![0.0; n];
    z[0] = 1.0;
    if n > 0 {
        e[n - 1] = 0.0;
    }
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 100 {
                return Err(Error::Inconsistent("tridiagonal eigen solver did not converge".into()));
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut i = m;
            let mut underflow = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                let zf = z[i + 1];
                z[i + 1] = s * z[i] + c * zf;
                z[i] = c * z[i] - s * zf;
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok((d, z))
}

// Gauss–Kronrod 7/15 abscissae and weights on [−1, 1].
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<const N: usize, F: FnMut(f64) -> [f64; N]>(f: &mut F, a: f64, b: f64) -> ([f64; N], [f64; N]) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut kron = [0.0; N];
    let mut gauss = [0.0; N];
    let fc = f(c);
    for i in 0..N {
        kron[i] = WGK[7] * fc[i];
        gauss[i] = WG[3] * fc[i];
    }
    for j in 0..7 {
        let dx = h * XGK[j];
        let f1 = f(c - dx);
        let f2 = f(c + dx);
        for i in 0..N {
            let s = f1[i] + f2[i];
            kron[i] += WGK[j] * s;
            if j % 2 == 1 {
                gauss[i] += WG[j / 2] * s;
            }
        }
    }
    let mut err = [0.0; N];
    for i in 0..N {
        kron[i] *= h;
        err[i] = (kron[i] - gauss[i] * h).abs();
    }
    (kron, err)
}

#[derive(Debug, Clone, Copy)]
struct Panel<const N: usize> {
    a: f64,
    b: f64,
    value: [f64; N],
    err: [f64; N],
    key: f64,
}

impl<const N: usize> PartialEq for Panel<N> {
    fn eq(&self, other: &Self) -> bool {
        self.key.total_cmp(&other.key) == Ordering::Equal
    }
}
impl<const N: usize> Eq for Panel<N> {}
impl<const N: usize> PartialOrd for Panel<N> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<const N: usize> Ord for Panel<N> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key.total_cmp(&other.key)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GkResult<const N: usize> {
    pub value: [f64; N],
    pub error: [f64; N],
    pub converged: bool,
}

/// Adaptive Gauss–Kronrod 7/15 on `[a, b]` for `N` integrands at once.
///
/// Starts from `panels` equal pieces and bisects the worst panel until the
/// summed error estimate is below `rtol · Σ|value| + atol` or `max_panels` is
/// reached (then `converged` is false).
pub fn adaptive_gk<const N: usize, F>(mut f: F, a: f64, b: f64, panels: usize, rtol: f64, atol: f64, max_panels: usize) -> GkResult<N>
where
    F: FnMut(f64) -> [f64; N],
{
    let panels = panels.max(1);
    let mut heap = BinaryHeap::with_capacity(max_panels + panels);
    let make = |f: &mut F, a: f64, b: f64| {
        let (value, err) = gk15(f, a, b);
        let key = err.iter().sum::<f64>();
        Panel { a, b, value, err, key }
    };
    for k in 0..panels {
        let lo = a + (b - a) * k as f64 / panels as f64;
        let hi = if k + 1 == panels { b } else { a + (b - a) * (k + 1) as f64 / panels as f64 };
        heap.push(make(&mut f, lo, hi));
    }
    let totals = |heap: &BinaryHeap<Panel<N>>| {
        let mut v = [0.0; N];
        let mut e = [0.0; N];
        for p in heap.iter() {
            for i in 0..N {
                v[i] += p.value[i];
                e[i] += p.err[i];
            }
        }
        (v, e)
    };
    loop {
        let (v, e) = totals(&heap);
        let scale: f64 = v.iter().map(|x| x.abs()).sum();
        let err: f64 = e.iter().sum();
        if err <= rtol * scale + atol {
            return GkResult { value: v, error: e, converged: true };
        }
        if heap.len() >= max_panels {
            return GkResult { value: v, error: e, converged: false };
        }
        let worst = heap.pop().expect("non-empty heap");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            heap.push(Panel { key: 0.0, ..worst });
            continue;
        }
        heap.push(make(&mut f, worst.a, mid));
        heap.push(make(&mut f, mid, worst.b));
    }
}

/// Scalar convenience wrapper around [`adaptive_gk`].
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, rtol: f64) -> f64 {
    adaptive_gk(|x| [f(x)], a, b, 8, rtol, 1e-300, 20_000).value[0]
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::function::beta::ln_beta;

    #[test]
    fn legendre_case_is_exact_for_polynomials() {
        let gj = GaussJacobi::beta(1.0, 1.0, 8).unwrap();
        let m = gj.expect(|x| x.powi(9));
        assert!((m - 0.1).abs() < 1e-14);
    }

    #[test]
    fn beta_moments() {
        for &(p, q) in &[(0.3, 2.5), (1.0, 1.0), (7.0, 0.2), (50.0, 80.0), (1e-3, 2e-3), (3e3, 1e4)] {
            let gj = GaussJacobi::beta(p, q, 64).unwrap();
            assert!((gj.weights().iter().sum::<f64>() - 1.0).abs() < 1e-13);
            let mean = gj.expect(|x| x);
            assert!((mean - p / (p + q)).abs() < 1e-12, "mean for ({p},{q})");
            let m2 = gj.expect(|x| x * x);
            let exact = p * (p + 1.0) / ((p + q) * (p + q + 1.0));
            assert!((m2 - exact).abs() < 1e-12, "second moment for ({p},{q})");
        }
    }

    #[test]
    fn beta_expectation_of_log() {
        // E[ln B] = ψ(p) − ψ(p+q); compare with a smooth-enough function instead:
        // E[1/(1+x)] checked against brute-force quadrature of the density.
        let (p, q) = (0.6, 1.7);
        let gj = GaussJacobi::beta(p, q, 256).unwrap();
        let lb = ln_beta(p, q);
        let direct = integrate(
            |t| {
                // x = t^{1/p} removes the x^{p-1} singularity.
                let x = t.powf(1.0 / p);
                (1.0 - x).powf(q - 1.0) / (1.0 + x) / p
            },
            0.0,
            1.0,
            1e-13,
        ) / lb.exp();
        assert!((gj.expect(|x| 1.0 / (1.0 + x)) - direct).abs() < 1e-11);
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(GaussJacobi::beta(0.0, 1.0, 8).is_err());
        assert!(GaussJacobi::beta(1.0, f64::NAN, 8).is_err());
    }

    #[test]
    fn gk_handles_peaks_and_vectors() {
        let r = adaptive_gk(
            |x| [(-1e4 * (x - 0.3).powi(2)).exp(), x.sin()],
            0.0,
            1.0,
            4,
            1e-12,
            0.0,
            10_000,
        );
        assert!(r.converged);
        assert!((r.value[0] - (std::f64::consts::PI / 1e4).sqrt()).abs() < 1e-12);
        assert!((r.value[1] - (1.0 - 1f64.cos())).abs() < 1e-13);
    }

    #[test]
    fn gk_integrable_singularity() {
        let v = integrate(|x| 1.0 / x.sqrt(), 0.0, 1.0, 1e-10);
        assert!((v - 2.0).abs() < 1e-8);
    }
}
