//! Gauss-Legendre rules, adaptive Gauss-Legendre integration and cumulative
//! integration of sampled series on non-uniform abscissae.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use crate::{Error, Result, C64};

/// Nodes and weights on `[-1, 1]`.
#[derive(Clone, Debug)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Newton iteration on `P_n` from Chebyshev initial guesses.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        GaussLegendre { nodes, weights }
    }

    /// Shared cached rule.
    pub fn cached(n: usize) -> Arc<GaussLegendre> {
        static CACHE: OnceLock<Mutex<HashMap<usize, Arc<GaussLegendre>>>> = OnceLock::new();
        let mut c = CACHE
            .get_or_init(Default::default)
            .lock()
            .expect("rule cache poisoned");
        c.entry(n)
            .or_insert_with(|| Arc::new(GaussLegendre::new(n)))
            .clone()
    }

    /// Nodes and weights mapped to `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(x, w)| (mid + half * x, half * w))
    }

    pub fn integrate<F: Fn(f64) -> C64>(&self, f: F, a: f64, b: f64) -> C64 {
        self.mapped(a, b).map(|(x, w)| f(x) * w).sum()
    }
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Composite rule: `panels` equal panels of `nodes`-point Gauss-Legendre.
pub fn composite<F: Fn(f64) -> C64>(f: F, a: f64, b: f64, panels: usize, nodes: usize) -> C64 {
    let rule = GaussLegendre::cached(nodes);
    let h = (b - a) / panels as f64;
    (0..panels)
        .map(|p| rule.integrate(&f, a + p as f64 * h, a + (p + 1) as f64 * h))
        .sum()
}

const ADAPT_NODES: usize = 15;
const MAX_DEPTH: u32 = 40;

/// Adaptive Gauss-Legendre: an interval is accepted when the 15-point rule on it
/// agrees with the sum over its two halves to within its share of `abs_tol`.
pub fn adaptive<F: Fn(f64) -> C64>(f: F, a: f64, b: f64, abs_tol: f64) -> Result<C64> {
    if a == b {
        return Ok(C64::default());
    }
    let rule = GaussLegendre::cached(ADAPT_NODES);
    let whole = rule.integrate(&f, a, b);
    recurse(&f, &rule, a, b, whole, abs_tol, 0, (b - a).abs())
}

#[allow(clippy::too_many_arguments)]
fn recurse<F: Fn(f64) -> C64>(
    f: &F,
    rule: &GaussLegendre,
    a: f64,
    b: f64,
    whole: C64,
    tol: f64,
    depth: u32,
    total_len: f64,
) -> Result<C64> {
    let m = 0.5 * (a + b);
    let left = rule.integrate(f, a, m);
    let right = rule.integrate(f, m, b);
    let refined = left + right;
    let share = tol * ((b - a).abs() / total_len).max(1e-3);
    if (refined - whole).norm() <= share {
        return Ok(refined);
    }
    if depth >= MAX_DEPTH || !refined.is_finite() {
        return Err(Error::Quadrature { a, b });
    }
    Ok(recurse(f, rule, a, m, left, tol, depth + 1, total_len)?
        + recurse(f, rule, m, b, right, tol, depth + 1, total_len)?)
}

/// Real-valued convenience wrapper of [`adaptive`].
pub fn adaptive_real<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, abs_tol: f64) -> Result<f64> {
    adaptive(|x| C64::new(f(x), 0.0), a, b, abs_tol).map(|v| v.re)
}

/// Cumulative integral `∫_{t_0}^{t_i} y dt` of samples on increasing, possibly
/// non-uniform abscissae. Each interval is integrated exactly for the cubic
/// through the four nearest samples (fourth order); fewer samples fall back to
/// lower-order interpolants.
pub fn cumulative(t: &[f64], y: &[f64]) -> Vec<f64> {
    assert_eq!(t.len(), y.len(), "abscissae and samples differ in length");
    let n = t.len();
    let mut out = vec![0.0; n];
    if n < 2 {
        return out;
    }
    let width = n.min(4);
    for i in 0..n - 1 {
        let lo = (i as isize - 1).clamp(0, (n - width) as isize) as usize;
        let idx: Vec<usize> = (lo..lo + width).collect();
        out[i + 1] = out[i] + lagrange_integral(t, y, &idx, t[i], t[i + 1]);
    }
    out
}

/// `∫_a^b` of the Lagrange interpolant through the samples `idx`, by a
/// Gauss rule that is exact for its degree.
fn lagrange_integral(t: &[f64], y: &[f64], idx: &[usize], a: f64, b: f64) -> f64 {
    let rule = GaussLegendre::cached(3);
    rule.mapped(a, b)
        .map(|(x, w)| {
            let mut v = 0.0;
            for &j in idx {
                let mut l = 1.0;
                for &k in idx {
                    if k != j {
                        l *= (x - t[k]) / (t[j] - t[k]);
                    }
                }
                v += l * y[j];
            }
            w * v
        })
        .sum()
}

/// Derivative of the cubic (or lower) interpolant at each sample.
pub fn derivative(t: &[f64], y: &[f64]) -> Vec<f64> {
    assert_eq!(t.len(), y.len(), "abscissae and samples differ in length");
    let n = t.len();
    if n < 2 {
        return vec![0.0; n];
    }
    let width = n.min(4);
    (0..n)
        .map(|i| {
            let lo = (i as isize - 1).clamp(0, (n - width) as isize) as usize;
            let idx: Vec<usize> = (lo..lo + width).collect();
            let x = t[i];
            idx.iter()
                .map(|&j| {
                    // d/dx of the j-th Lagrange basis polynomial
                    let mut s = 0.0;
                    for &m in &idx {
                        if m == j {
                            continue;
                        }
                        let mut p = 1.0 / (t[j] - t[m]);
                        for &k in &idx {
                            if k != j && k != m {
                                p *= (x - t[k]) / (t[j] - t[k]);
                            }
                        }
                        s += p;
                    }
                    s * y[j]
                })
                .sum()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn rules_integrate_polynomials_exactly() {
        for n in 1..=20 {
            let r = GaussLegendre::new(n);
            assert_relative_eq!(r.weights.iter().sum::<f64>(), 2.0, epsilon = 1e-14);
            for deg in 0..2 * n {
                let got: f64 = r
                    .nodes
                    .iter()
                    .zip(&r.weights)
                    .map(|(x, w)| w * x.powi(deg as i32))
                    .sum();
                let exact = if deg % 2 == 1 {
                    0.0
                } else {
                    2.0 / (deg as f64 + 1.0)
                };
                assert!((got - exact).abs() < 1e-13, "n={n} deg={deg}");
            }
        }
    }

    #[test]
    fn adaptive_handles_oscillation_and_peaks() {
        let v = adaptive_real(|x| (40.0 * x).cos(), 0.0, 3.0, 1e-12).unwrap();
        assert_relative_eq!(v, (120.0f64).sin() / 40.0, epsilon = 1e-12);
        let v = adaptive_real(|x| 1.0 / (1e-4 + x * x), -1.0, 1.0, 1e-10).unwrap();
        assert_relative_eq!(v, 2.0 * 100.0 * (100.0f64).atan(), max_relative = 1e-11);
        assert_eq!(adaptive_real(|x| x, 2.0, 2.0, 1e-12).unwrap(), 0.0);
        assert!(adaptive_real(|x| 1.0 / x, -1.0, 1.0, 1e-12).is_err());
    }

    #[test]
    fn composite_matches_closed_form() {
        let v = composite(|x| C64::new(0.0, x).exp(), 0.0, 10.0, 8, 12);
        let exact = (C64::new(0.0, 10.0).exp() - 1.0) / C64::new(0.0, 1.0);
        assert!((v - exact).norm() < 1e-13);
    }

    #[test]
    fn cumulative_is_exact_for_cubics_on_nonuniform_grid() {
        let t: Vec<f64> = (0..12).map(|i| 1.0 + (i as f64).powf(1.3) * 0.37).collect();
        let y: Vec<f64> = t
            .iter()
            .map(|x| 2.0 - x + 0.5 * x * x - 0.1 * x * x * x)
            .collect();
        let c = cumulative(&t, &y);
        let prim = |x: f64| 2.0 * x - 0.5 * x * x + x * x * x / 6.0 - 0.025 * x.powi(4);
        for (ti, ci) in t.iter().zip(&c) {
            assert_relative_eq!(*ci, prim(*ti) - prim(t[0]), epsilon = 1e-11);
        }
        let d = derivative(&t, &y);
        for (ti, di) in t.iter().zip(&d) {
            assert_relative_eq!(*di, -1.0 + ti - 0.3 * ti * ti, epsilon = 1e-10);
        }
    }

    #[test]
    fn cumulative_converges_at_fourth_order() {
        let err = |n: usize| {
            let t: Vec<f64> = (0..=n)
                .map(|i| 1.0 + 2.0 * (i as f64 / n as f64).powi(2))
                .collect();
            let y: Vec<f64> = t.iter().map(|x| x.sin()).collect();
            let c = cumulative(&t, &y);
            (c[n] - (1.0f64.cos() - 3.0f64.cos())).abs()
        };
        let ratio = err(40) / err(80);
        assert!(ratio > 12.0, "observed ratio {ratio}");
    }
}
