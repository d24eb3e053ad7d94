//! Deterministic Gauss–Legendre quadrature.
//!
//! Nodes and weights are computed by Newton iteration on the Legendre
//! recurrence (double precision, symmetric by construction) and cached per
//! degree, so repeated integrations of smooth functions are cheap and
//! reproducible. [`integrate_auto`] refines the degree on a fixed doubling
//! ladder until two consecutive estimates agree, which keeps the result a
//! smooth function of the integration bounds — important when the integral
//! is later differentiated.

use std::collections::BTreeMap;
use std::sync::{Arc, Mutex, OnceLock};

use crate::{Error, Result, Vector};

/// A quadrature rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

fn rule_cache() -> &'static Mutex<BTreeMap<usize, Arc<Rule>>> {
    static CACHE: OnceLock<Mutex<BTreeMap<usize, Arc<Rule>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(BTreeMap::new()))
}

/// Legendre polynomial value and derivative at `x` via the three-term
/// recurrence `(k+1) P_{k+1} = (2k+1) x P_k − k P_{k−1}`.
fn legendre_with_deriv(n: usize, x: f64) -> (f64, f64) {
    let mut p_prev = 1.0;
    let mut p = x;
    for k in 1..n {
        let kf = k as f64;
        let p_next = ((2.0 * kf + 1.0) * x * p - kf * p_prev) / (kf + 1.0);
        p_prev = p;
        p = p_next;
    }
    let deriv = (n as f64) * (x * p - p_prev) / (x * x - 1.0);
    (p, deriv)
}

fn compute_rule(n: usize) -> Rule {
    assert!(n >= 1, "quadrature rule needs at least one node");
    if n == 1 {
        return Rule {
            nodes: vec![0.0],
            weights: vec![2.0],
        };
    }
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi initial guess, then Newton.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_with_deriv(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre_with_deriv(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        // Nodes come out descending from the cosine guess; mirror for symmetry.
        nodes[n - 1 - i] = x;
        nodes[i] = -x;
        weights[n - 1 - i] = w;
        weights[i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    Rule { nodes, weights }
}

/// Gauss–Legendre rule of degree `n` on `[-1, 1]` (cached).
pub fn gauss_legendre(n: usize) -> Arc<Rule> {
    let mut cache = rule_cache().lock().expect("quadrature cache poisoned");
    cache.entry(n).or_insert_with(|| Arc::new(compute_rule(n))).clone()
}

/// Nodes and weights of the degree-`n` rule mapped onto `[a, b]`.
pub fn nodes_on_interval(n: usize, a: f64, b: f64) -> Vec<(f64, f64)> {
    let rule = gauss_legendre(n);
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    rule.nodes
        .iter()
        .zip(&rule.weights)
        .map(|(&t, &w)| (mid + half * t, half * w))
        .collect()
}

/// Fixed-degree integration of `f` over `[a, b]`.
pub fn integrate<F>(f: F, a: f64, b: f64, n: usize) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    let mut acc = 0.0;
    for (x, w) in nodes_on_interval(n, a, b) {
        acc += w * f(x)?;
    }
    Ok(acc)
}

/// Degree ladder used by [`integrate_auto`].
const AUTO_DEGREES: [usize; 5] = [32, 64, 128, 256, 512];

/// Integrates `f` over `[a, b]`, doubling the rule degree until two
/// consecutive estimates agree within `atol + rtol·|I|`. Returns the finer
/// estimate together with the last observed discrepancy.
pub fn integrate_auto<F>(f: F, a: f64, b: f64, rtol: f64, atol: f64) -> Result<(f64, f64)>
where
    F: Fn(f64) -> Result<f64>,
{
    if a == b {
        return Ok((0.0, 0.0));
    }
    let mut prev = integrate(&f, a, b, AUTO_DEGREES[0])?;
    let mut err = f64::INFINITY;
    for &n in &AUTO_DEGREES[1..] {
        let cur = integrate(&f, a, b, n)?;
        err = (cur - prev).abs();
        if err <= atol + rtol * cur.abs() {
            return Ok((cur, err));
        }
        prev = cur;
    }
    Err(Error::QuadratureNotConverged(err))
}

/// Tensor-product Gauss–Legendre nodes over an axis-aligned box, returned as
/// point/weight pairs. Intended for low dimensions (`k <= 3`).
pub fn tensor_box(bounds: &[(f64, f64)], nodes_per_dim: usize) -> Vec<(Vector, f64)> {
    let dim = bounds.len();
    assert!(dim >= 1, "tensor_box: empty bounds");
    let per_dim: Vec<Vec<(f64, f64)>> = bounds
        .iter()
        .map(|&(a, b)| nodes_on_interval(nodes_per_dim, a, b))
        .collect();
    let total: usize = nodes_per_dim.pow(dim as u32);
    let mut out = Vec::with_capacity(total);
    let mut idx = vec![0usize; dim];
    loop {
        let mut point = Vector::zeros(dim);
        let mut weight = 1.0;
        for (d, &i) in idx.iter().enumerate() {
            let (x, w) = per_dim[d][i];
            point[d] = x;
            weight *= w;
        }
        out.push((point, weight));
        // Odometer increment.
        let mut d = 0;
        loop {
            idx[d] += 1;
            if idx[d] < nodes_per_dim {
                break;
            }
            idx[d] = 0;
            d += 1;
            if d == dim {
                return out;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn weights_sum_to_interval_length() {
        for n in [1, 2, 5, 16, 64, 129] {
            let rule = gauss_legendre(n);
            let sum: f64 = rule.weights.iter().sum();
            assert_abs_diff_eq!(sum, 2.0, epsilon = 1e-13);
        }
    }

    #[test]
    fn exact_for_polynomials_up_to_degree_2n_minus_1() {
        // Degree-5 rule integrates x^9 exactly: ∫_{-1}^{1} x^9 dx = 0,
        // and ∫_0^1 x^9 dx = 1/10.
        let val = integrate(|x| Ok(x.powi(9)), 0.0, 1.0, 5).unwrap();
        assert_abs_diff_eq!(val, 0.1, epsilon = 1e-14);
    }

    #[test]
    fn gaussian_integral_to_machine_precision() {
        let f = |x: f64| Ok((-0.5 * x * x).exp());
        let val = integrate(f, -8.0, 8.0, 64).unwrap();
        assert_abs_diff_eq!(val, (2.0 * std::f64::consts::PI).sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn auto_refinement_reports_small_error() {
        let (val, err) = integrate_auto(|x| Ok(x.exp()), 0.0, 2.0, 1e-9, 1e-12).unwrap();
        assert_abs_diff_eq!(val, 2f64.exp() - 1.0, epsilon = 1e-11);
        assert!(err < 1e-10);
    }

    #[test]
    fn tensor_box_integrates_separable_product() {
        // ∫∫ x y over [0,1]×[0,2] = (1/2)(2) = 1.
        let nodes = tensor_box(&[(0.0, 1.0), (0.0, 2.0)], 8);
        let val: f64 = nodes.iter().map(|(p, w)| w * p[0] * p[1]).sum();
        assert_abs_diff_eq!(val, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn nodes_are_symmetric_and_sorted() {
        let rule = gauss_legendre(17);
        for i in 0..17 {
            assert_abs_diff_eq!(rule.nodes[i], -rule.nodes[16 - i], epsilon = 0.0);
        }
        assert!(rule.nodes.windows(2).all(|w| w[0] < w[1]));
    }
}
