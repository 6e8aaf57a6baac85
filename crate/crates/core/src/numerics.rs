//! Shared numerical kernels: Gauss-Legendre rules, bracketed root finding,
//! adaptive Simpson quadrature and stable hyperbolic helpers.

use crate::error::{CoreError, Result};

/// Gauss-Legendre quadrature rule on a finite interval.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    /// Nodes on the reference interval [-1, 1], ascending.
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// Builds an `n`-point rule by Newton iteration on the Legendre polynomial
    /// roots, seeded with the Chebyshev-like approximation.
    pub fn new(n: usize) -> Self {
        assert!(n >= 2, "Gauss-Legendre rule needs at least 2 nodes");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            // Newton on P_n(x) with the three-term recurrence for P_n and P_n'.
            for _ in 0..100 {
                let (p, dp) = legendre_with_derivative(n, x);
                let dx = p / dp;
                x -= dx;
                if dx.abs() < 1e-15 {
                    break;
                }
            }
            let (_, dp) = legendre_with_derivative(n, x);
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            let (_, dp) = legendre_with_derivative(n, 0.0);
            nodes[n / 2] = 0.0;
            weights[n / 2] = 2.0 / (dp * dp);
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes and weights mapped onto [lo, hi].
    pub fn mapped(&self, lo: f64, hi: f64) -> (Vec<f64>, Vec<f64>) {
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (hi + lo);
        let nodes = self.nodes.iter().map(|&x| mid + half * x).collect();
        let weights = self.weights.iter().map(|&w| half * w).collect();
        (nodes, weights)
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, lo: f64, hi: f64, mut f: F) -> f64 {
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (hi + lo);
        let sum: f64 = self
            .nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(mid + half * x))
            .sum();
        half * sum
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for j in 2..=n {
        let jf = j as f64;
        let p2 = ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Bracketed scalar root finding: secant steps accepted only while they stay
/// inside the current bracket, bisection otherwise. Tolerance is on the
/// abscissa. Requires f(lo) and f(hi) of opposite sign.
pub fn find_root_bracketed<F: FnMut(f64) -> f64>(
    mut f: F,
    mut lo: f64,
    mut hi: f64,
    tol: f64,
    max_iter: usize,
) -> Result<f64> {
    let mut flo = f(lo);
    let mut fhi = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(CoreError::NoBracket { lo, hi });
    }
    for _ in 0..max_iter {
        if (hi - lo).abs() <= tol {
            return Ok(0.5 * (lo + hi));
        }
        // secant candidate
        let mut x = if fhi != flo {
            hi - fhi * (hi - lo) / (fhi - flo)
        } else {
            0.5 * (lo + hi)
        };
        let margin = 0.01 * (hi - lo).abs();
        if !(x > lo.min(hi) + margin && x < lo.max(hi) - margin) {
            x = 0.5 * (lo + hi);
        }
        let fx = f(x);
        if fx == 0.0 {
            return Ok(x);
        }
        if fx.signum() == flo.signum() {
            lo = x;
            flo = fx;
        } else {
            hi = x;
            fhi = fx;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Adaptive Simpson quadrature with absolute tolerance.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64, tol: f64) -> f64 {
    let mid = 0.5 * (lo + hi);
    let (flo, fmid, fhi) = (f(lo), f(mid), f(hi));
    let whole = (hi - lo) / 6.0 * (flo + 4.0 * fmid + fhi);
    simpson_recurse(f, lo, hi, flo, fmid, fhi, whole, tol, 30)
}

#[allow(clippy::too_many_arguments)]
fn simpson_recurse<F: Fn(f64) -> f64>(
    f: &F,
    lo: f64,
    hi: f64,
    flo: f64,
    fmid: f64,
    fhi: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let mid = 0.5 * (lo + hi);
    let lmid = 0.5 * (lo + mid);
    let rmid = 0.5 * (mid + hi);
    let flm = f(lmid);
    let frm = f(rmid);
    let left = (mid - lo) / 6.0 * (flo + 4.0 * flm + fmid);
    let right = (hi - mid) / 6.0 * (fmid + 4.0 * frm + fhi);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        left + right + delta / 15.0
    } else {
        simpson_recurse(f, lo, mid, flo, flm, fmid, left, 0.5 * tol, depth - 1)
            + simpson_recurse(f, mid, hi, fmid, frm, fhi, right, 0.5 * tol, depth - 1)
    }
}

/// sinh(z)/z, stable near z = 0.
pub fn sinhc(z: f64) -> f64 {
    if z.abs() < 1e-4 {
        let z2 = z * z;
        1.0 + z2 / 6.0 * (1.0 + z2 / 20.0)
    } else {
        z.sinh() / z
    }
}

/// (sinh(z) - z)/z^3, stable near z = 0.
pub fn sinh_minus_z_over_z3(z: f64) -> f64 {
    if z.abs() < 1e-2 {
        let z2 = z * z;
        (1.0 + z2 / 20.0 * (1.0 + z2 / 42.0)) / 6.0
    } else {
        (z.sinh() - z) / (z * z * z)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn gauss_legendre_degree_3_nodes() {
        let rule = GaussLegendre::new(3);
        let (x, w) = rule.mapped(-1.0, 1.0);
        assert_abs_diff_eq!(x[0], -0.7745966692414834, epsilon = 1e-14);
        assert_abs_diff_eq!(x[1], 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(x[2], 0.7745966692414834, epsilon = 1e-14);
        assert_abs_diff_eq!(w[0], 0.5555555555555556, epsilon = 1e-14);
        assert_abs_diff_eq!(w[1], 0.8888888888888888, epsilon = 1e-14);
    }

    #[test]
    fn gauss_legendre_polynomial_exactness() {
        // n nodes integrate degree 2n-1 exactly
        let rule = GaussLegendre::new(8);
        let exact = 2.0 / 16.0; // int_0^1 x^15
        assert_abs_diff_eq!(rule.integrate(0.0, 1.0, |x| x.powi(15)), exact / 2.0, epsilon = 1e-14);
        let osc = rule.integrate(0.0, 3.0, |x| x.sin());
        assert_abs_diff_eq!(osc, 1.0 - 3.0f64.cos(), epsilon = 1e-10);
    }

    #[test]
    fn gauss_legendre_weights_sum_to_interval() {
        for n in [2, 5, 64, 257] {
            let rule = GaussLegendre::new(n);
            let (_, w) = rule.mapped(2.0, 7.0);
            let total: f64 = w.iter().sum();
            assert_abs_diff_eq!(total, 5.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn root_finder_simple() {
        let r = find_root_bracketed(|x| x * x - 2.0, 0.0, 2.0, 1e-12, 200).unwrap();
        assert_abs_diff_eq!(r, std::f64::consts::SQRT_2, epsilon = 1e-11);
    }

    #[test]
    fn root_finder_rejects_bad_bracket() {
        assert!(matches!(
            find_root_bracketed(|x| x * x + 1.0, -1.0, 1.0, 1e-12, 100),
            Err(CoreError::NoBracket { .. })
        ));
    }

    #[test]
    fn root_finder_endpoint_roots() {
        assert_eq!(find_root_bracketed(|x| x, 0.0, 1.0, 1e-12, 100).unwrap(), 0.0);
    }

    #[test]
    fn adaptive_simpson_constant_and_smooth() {
        let c = adaptive_simpson(&|_| 3.5, 0.0, 2.0, 1e-12);
        assert_abs_diff_eq!(c, 7.0, epsilon = 1e-12);
        let e = adaptive_simpson(&|x: f64| x.exp(), 0.0, 1.0, 1e-12);
        assert_abs_diff_eq!(e, std::f64::consts::E - 1.0, epsilon = 1e-10);
    }

    #[test]
    fn stable_hyperbolics_match_direct() {
        for z in [1e-6, 1e-3, 0.5, 3.0] {
            assert_abs_diff_eq!(sinhc(z), z.sinh() / z, epsilon = 1e-13);
            let direct = (z.sinh() - z) / z.powi(3);
            assert!(
                (sinh_minus_z_over_z3(z) - direct).abs() < 1e-9 * direct.abs().max(1.0),
                "z = {z}"
            );
        }
        assert_abs_diff_eq!(sinhc(0.0), 1.0, epsilon = 1e-15);
    }
}
