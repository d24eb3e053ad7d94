//! Finite-difference calculus: central stencils with an order-aware step
//! schedule, optional Richardson extrapolation with a reported error
//! estimate, Jacobians of vector-valued grid functions, the weighted
//! derivative operator
//!
//! ```text
//! D f (y) = (1/T'(y)) · d/dy f(y),
//! ```
//!
//! applied `ℓ` times (`D⁰ = id`), and the weighted antiderivative
//! `∫_a^y T'(u) g(u) du`.
//!
//! All derivative routines take fallible callables so that posterior
//! evaluations failing at a stencil point surface as errors instead of NaNs.

use crate::efam::{ExpFamily, Support, SUPPORT_MARGIN};
use crate::quadrature;
use crate::{Error, Matrix, Result, Vector};

/// Stencil family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FdScheme {
    /// Second-order central differences.
    Central2,
    /// Fourth-order central differences.
    Central4,
    /// Fourth-order central differences at two step sizes combined by
    /// Richardson extrapolation; the discrepancy is reported as an error
    /// estimate.
    Richardson,
}

/// How the step size is chosen for an order-`r` derivative at `y`.
#[derive(Debug, Clone, Copy)]
pub enum StepRule {
    /// `h = base^(1/(r+2)) · max(1, |y|)`: balances truncation against
    /// rounding as the order grows.
    Schedule { base: f64 },
    /// A literal step, unscaled.
    Fixed { step: f64 },
}

/// Default base step for the schedule rule (fourth-order stencils).
pub const DEFAULT_BASE_STEP: f64 = 1e-6;
/// Default exclusion radius around zeros of `T'`, in units of the grid scale.
pub const DEFAULT_SING_MARGIN: f64 = 1e-4;
/// Maximum derivative order with direct stencils.
pub const MAX_FD_ORDER: usize = 5;
/// Maximum nesting depth of the weighted derivative operator.
pub const MAX_D_ORDER: usize = 5;

/// Finite-difference policy: scheme, step rule and the singularity margin
/// for the weighted derivative operator.
#[derive(Debug, Clone, Copy)]
pub struct FdPolicy {
    pub scheme: FdScheme,
    pub step_rule: StepRule,
    /// Points where `|T'(y)|` falls at or below this margin are treated as
    /// singular for the weighted derivative operator.
    pub sing_margin: f64,
    /// Internal per-level shrink applied while nesting the weighted
    /// derivative operator.
    step_factor: f64,
}

impl Default for FdPolicy {
    fn default() -> Self {
        Self {
            scheme: FdScheme::Central4,
            step_rule: StepRule::Schedule { base: DEFAULT_BASE_STEP },
            sing_margin: DEFAULT_SING_MARGIN,
            step_factor: 1.0,
        }
    }
}

impl FdPolicy {
    pub fn new(scheme: FdScheme, base_step: f64, sing_margin: f64) -> Self {
        Self {
            scheme,
            step_rule: StepRule::Schedule { base: base_step },
            sing_margin,
            step_factor: 1.0,
        }
    }

    pub fn with_scheme(mut self, scheme: FdScheme) -> Self {
        self.scheme = scheme;
        self
    }

    pub fn with_fixed_step(mut self, step: f64) -> Self {
        self.step_rule = StepRule::Fixed { step };
        self
    }

    fn with_step_factor(mut self, factor: f64) -> Self {
        self.step_factor *= factor;
        self
    }

    /// Step size for an order-`order` derivative at location `y`.
    pub fn step(&self, order: usize, y: f64) -> f64 {
        let raw = match self.step_rule {
            StepRule::Schedule { base } => {
                base.powf(1.0 / (order as f64 + 2.0)) * y.abs().max(1.0)
            }
            StepRule::Fixed { step } => step,
        };
        raw * self.step_factor
    }
}

/// A derivative estimate; `err_est` is populated by the Richardson scheme.
#[derive(Debug, Clone, Copy)]
pub struct Deriv {
    pub value: f64,
    pub err_est: Option<f64>,
}

/// Central stencil (offsets in units of `h`, weights to divide by `h^order`).
fn stencil(scheme: FdScheme, order: usize) -> (&'static [i32], &'static [f64]) {
    // Order five only arises deep inside nested operator applications; the
    // second-order stencil is used for it regardless of scheme.
    match (scheme, order) {
        (FdScheme::Central2, 1) => (&[-1, 1], &[-0.5, 0.5]),
        (FdScheme::Central2, 2) => (&[-1, 0, 1], &[1.0, -2.0, 1.0]),
        (FdScheme::Central2, 3) => (&[-2, -1, 1, 2], &[-0.5, 1.0, -1.0, 0.5]),
        (FdScheme::Central2, 4) => (&[-2, -1, 0, 1, 2], &[1.0, -4.0, 6.0, -4.0, 1.0]),
        (_, 5) => (&[-3, -2, -1, 1, 2, 3], &[-0.5, 2.0, -2.5, 2.5, -2.0, 0.5]),
        (_, 1) => (
            &[-2, -1, 1, 2],
            &[1.0 / 12.0, -8.0 / 12.0, 8.0 / 12.0, -1.0 / 12.0],
        ),
        (_, 2) => (
            &[-2, -1, 0, 1, 2],
            &[-1.0 / 12.0, 16.0 / 12.0, -30.0 / 12.0, 16.0 / 12.0, -1.0 / 12.0],
        ),
        (_, 3) => (
            &[-3, -2, -1, 1, 2, 3],
            &[0.125, -1.0, 1.625, -1.625, 1.0, -0.125],
        ),
        (_, 4) => (
            &[-3, -2, -1, 0, 1, 2, 3],
            &[-1.0 / 6.0, 2.0, -6.5, 28.0 / 3.0, -6.5, 2.0, -1.0 / 6.0],
        ),
        _ => panic!("unsupported derivative order {order}"),
    }
}

fn check_domain(y: f64, half_width: f64, domain: Option<(f64, f64)>) -> Result<()> {
    if let Some((lo, hi)) = domain {
        if y - half_width <= lo + SUPPORT_MARGIN || y + half_width >= hi - SUPPORT_MARGIN {
            return Err(Error::StencilOutOfSupport(format!("{y}")));
        }
    }
    Ok(())
}

fn apply_stencil<F>(
    f: &F,
    y: f64,
    order: usize,
    h: f64,
    scheme: FdScheme,
    domain: Option<(f64, f64)>,
) -> Result<(f64, f64)>
where
    F: Fn(f64) -> Result<f64>,
{
    let (offsets, coeffs) = stencil(scheme, order);
    let width = offsets.iter().map(|o| o.abs()).max().unwrap() as f64 * h;
    check_domain(y, width, domain)?;
    let mut acc = 0.0;
    let mut fmax = 0.0f64;
    for (&o, &c) in offsets.iter().zip(coeffs) {
        let val = f(y + o as f64 * h)?;
        fmax = fmax.max(val.abs());
        acc += c * val;
    }
    Ok((acc / h.powi(order as i32), fmax))
}

/// Order-`order` derivative of `f` at `y`.
///
/// `domain`, when given, is an open interval the whole stencil must stay
/// inside (with the global support margin); violations raise
/// [`Error::StencilOutOfSupport`].
pub fn fd_derivative<F>(
    f: F,
    y: f64,
    order: usize,
    policy: &FdPolicy,
    domain: Option<(f64, f64)>,
) -> Result<Deriv>
where
    F: Fn(f64) -> Result<f64>,
{
    assert!(
        (1..=MAX_FD_ORDER).contains(&order),
        "derivative order must be in 1..={MAX_FD_ORDER}"
    );
    let h = policy.step(order, y);
    match policy.scheme {
        FdScheme::Central2 | FdScheme::Central4 => {
            let (value, _) = apply_stencil(&f, y, order, h, policy.scheme, domain)?;
            Ok(Deriv { value, err_est: None })
        }
        FdScheme::Richardson => {
            let (coarse, _) = apply_stencil(&f, y, order, h, FdScheme::Central4, domain)?;
            let (fine, fmax) = apply_stencil(&f, y, order, h / 2.0, FdScheme::Central4, domain)?;
            // Fourth-order base scheme: error ratio 2^4 between steps.
            let value = (16.0 * fine - coarse) / 15.0;
            let rounding = 16.0 * f64::EPSILON * fmax.max(1e-300) / (h / 2.0).powi(order as i32);
            let err_est = (fine - coarse).abs() / 15.0 + rounding;
            Ok(Deriv { value, err_est: Some(err_est) })
        }
    }
}

/// Jacobian `J_y f ∈ R^{k×m}` of `f: R^k → R^m` by finite differences, laid
/// out with the gradients of the components of `f` as columns:
/// `J[(i, j)] = ∂f_j/∂y_i`.
///
/// Every stencil point is required to stay interior to `support`. Returns
/// the matrix together with the largest per-row Richardson error estimate
/// when that scheme is selected.
pub fn jacobian_fd<F>(
    f: F,
    y: &Vector,
    policy: &FdPolicy,
    support: &Support,
) -> Result<(Matrix, Option<f64>)>
where
    F: Fn(&Vector) -> Result<Vector>,
{
    let k = y.len();
    let sweep = |h_scale: f64| -> Result<Matrix> {
        let scheme = match policy.scheme {
            FdScheme::Central2 => FdScheme::Central2,
            _ => FdScheme::Central4,
        };
        let (offsets, coeffs) = stencil(scheme, 1);
        let mut rows: Vec<Vector> = Vec::with_capacity(k);
        for i in 0..k {
            let h = policy.step(1, y[i]) * h_scale;
            let mut acc: Option<Vector> = None;
            for (&o, &c) in offsets.iter().zip(coeffs) {
                let mut point = y.clone();
                point[i] += o as f64 * h;
                if !support.contains_interior(&point, SUPPORT_MARGIN) {
                    return Err(Error::StencilOutOfSupport(format!("{:?}", point.as_slice())));
                }
                let val = f(&point)?;
                acc = Some(match acc {
                    None => c * &val,
                    Some(a) => a + c * &val,
                });
            }
            rows.push(acc.expect("stencil is non-empty") / h);
        }
        let m = rows[0].len();
        Ok(Matrix::from_fn(k, m, |i, j| rows[i][j]))
    };

    match policy.scheme {
        FdScheme::Central2 | FdScheme::Central4 => Ok((sweep(1.0)?, None)),
        FdScheme::Richardson => {
            let coarse = sweep(1.0)?;
            let fine = sweep(0.5)?;
            let value = (16.0 * &fine - &coarse) / 15.0;
            let err = (&fine - &coarse).amax() / 15.0;
            Ok((value, Some(err)))
        }
    }
}

fn scalar_stat_deriv(model: &dyn ExpFamily, y: f64, order: usize) -> Result<f64> {
    model.stat_deriv(y, order).ok_or_else(|| {
        Error::ShapeMismatch(format!(
            "{} does not expose a scalar sufficient statistic",
            model.name()
        ))
    })
}

fn obs_interval(model: &dyn ExpFamily) -> Option<(f64, f64)> {
    model.obs_support().interval()
}

fn d_operator_rec<F>(
    f: &F,
    model: &dyn ExpFamily,
    ell: usize,
    y: f64,
    policy: &FdPolicy,
) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    if ell == 0 {
        return f(y);
    }
    let tp = scalar_stat_deriv(model, y, 1)?;
    if tp.abs() <= policy.sing_margin {
        return Err(Error::NearSingularStatistic { y, deriv: tp, margin: policy.sing_margin });
    }
    let inner_policy = policy.with_step_factor(0.5);
    let inner = |u: f64| d_operator_rec(f, model, ell - 1, u, &inner_policy);
    let d = fd_derivative(inner, y, 1, policy, obs_interval(model))?;
    Ok(d.value / tp)
}

/// The weighted derivative operator `D^{(ℓ)} = ((1/T') d/dy)^ℓ` applied to
/// `f` at `y`; `ℓ = 0` returns `f(y)`.
///
/// When the statistic is affine (`T' ≡ c`) the operator collapses to
/// `c^{−ℓ}` times the plain `ℓ`-th derivative and is computed by a single
/// stencil. Otherwise the composition is evaluated by recursive stencil
/// expansion with a per-level step shrink of two; any evaluation point with
/// `|T'| ≤ sing_margin` raises [`Error::NearSingularStatistic`].
pub fn d_operator<F>(
    f: F,
    model: &dyn ExpFamily,
    ell: usize,
    y: f64,
    policy: &FdPolicy,
) -> Result<Deriv>
where
    F: Fn(f64) -> Result<f64>,
{
    if ell > MAX_D_ORDER {
        return Err(Error::OrderOutOfRange { order: ell, max: MAX_D_ORDER });
    }
    if ell == 0 {
        return Ok(Deriv { value: f(y)?, err_est: None });
    }
    scalar_stat_deriv(model, y, 1)?;
    if let Some(slope) = model.stat_linear_slope() {
        if slope.abs() <= policy.sing_margin {
            return Err(Error::NearSingularStatistic {
                y,
                deriv: slope,
                margin: policy.sing_margin,
            });
        }
        let d = fd_derivative(f, y, ell, policy, obs_interval(model))?;
        return Ok(Deriv {
            value: d.value / slope.powi(ell as i32),
            err_est: d.err_est.map(|e| e / slope.abs().powi(ell as i32)),
        });
    }
    let value = d_operator_rec(&f, model, ell, y, policy)?;
    Ok(Deriv { value, err_est: None })
}

/// `∫_a^y T'(u) g(u) du` by self-refining Gauss–Legendre quadrature with an
/// estimated error below `1e-9` relative.
///
/// Endpoints may lie on the closure of the observation support (Gauss nodes
/// stay strictly interior); the integrand must be finite on the interval.
pub fn antiderivative_weighted<G>(g: G, a: f64, y: f64, model: &dyn ExpFamily) -> Result<f64>
where
    G: Fn(f64) -> Result<f64>,
{
    let support = model.obs_support();
    let a_v = Vector::from_element(1, a);
    let y_v = Vector::from_element(1, y);
    if !support.contains_interior(&a_v, 0.0) || !support.contains_interior(&y_v, 0.0) {
        return Err(Error::IntervalOutOfSupport(a.min(y), a.max(y)));
    }
    let integrand = |u: f64| Ok(scalar_stat_deriv(model, u, 1)? * g(u)?);
    let (value, _err) = quadrature::integrate_auto(integrand, a, y, 1e-9, 1e-12)?;
    Ok(value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::efam::{ExponentialRate, GaussianKnownVariance, GaussianZeroMeanVariance};
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};

    fn ok(f: impl Fn(f64) -> f64) -> impl Fn(f64) -> Result<f64> {
        move |y| Ok(f(y))
    }

    #[test]
    fn quadratic_first_derivative_is_exact() {
        let policy = FdPolicy::default().with_scheme(FdScheme::Central2);
        let d = fd_derivative(ok(|y| y * y), 3.0, 1, &policy, None).unwrap();
        assert_abs_diff_eq!(d.value, 6.0, epsilon = 1e-8);
    }

    #[test]
    fn exp_second_derivative_under_default_schedule() {
        let d = fd_derivative(ok(f64::exp), 0.0, 2, &FdPolicy::default(), None).unwrap();
        assert_abs_diff_eq!(d.value, 1.0, epsilon = 1e-6);
    }

    #[test]
    fn tanh_first_derivative_at_origin() {
        let d = fd_derivative(ok(f64::tanh), 0.0, 1, &FdPolicy::default(), None).unwrap();
        assert_abs_diff_eq!(d.value, 1.0, epsilon = 1e-8);
    }

    #[test]
    fn stencil_rejects_leaving_domain() {
        let res = fd_derivative(
            ok(f64::ln),
            0.005,
            1,
            &FdPolicy::default(),
            Some((0.0, f64::INFINITY)),
        );
        assert!(matches!(res, Err(Error::StencilOutOfSupport(_))));
    }

    #[test]
    fn richardson_bounds_true_error_on_analytic_battery() {
        type Pair = (Box<dyn Fn(f64) -> f64>, Box<dyn Fn(f64, usize) -> f64>);
        let battery: Vec<Pair> = vec![
            (Box::new(f64::exp), Box::new(|y: f64, _| y.exp())),
            (
                Box::new(f64::sin),
                Box::new(|y: f64, order| match order {
                    1 => y.cos(),
                    2 => -y.sin(),
                    _ => unreachable!(),
                }),
            ),
            (
                Box::new(|y: f64| 1.0 / (1.0 + y * y)),
                Box::new(|y: f64, order| {
                    let den = 1.0 + y * y;
                    match order {
                        1 => -2.0 * y / (den * den),
                        2 => (6.0 * y * y - 2.0) / (den * den * den),
                        _ => unreachable!(),
                    }
                }),
            ),
        ];
        let policy = FdPolicy::default().with_scheme(FdScheme::Richardson);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for (f, truth) in &battery {
            for _ in 0..100 {
                let y: f64 = rng.gen_range(-2.0..2.0);
                for order in 1..=2usize {
                    let d = fd_derivative(|u| Ok(f(u)), y, order, &policy, None).unwrap();
                    let err = (d.value - truth(y, order)).abs();
                    let bound = d.err_est.expect("richardson reports an estimate");
                    assert!(
                        err <= 5.0 * bound,
                        "order {order} at y={y}: err {err:.3e} > 5x bound {bound:.3e}"
                    );
                }
            }
        }
    }

    #[test]
    fn jacobian_of_linear_map_is_transpose() {
        let a = Matrix::from_row_slice(2, 3, &[1.0, -2.0, 0.5, 3.0, 4.0, -1.0]);
        let f = {
            let a = a.clone();
            move |y: &Vector| Ok(&a * y)
        };
        let y = Vector::from_vec(vec![0.3, -0.7, 1.1]);
        let (jac, _) =
            jacobian_fd(f, &y, &FdPolicy::default(), &Support::Reals { dim: 3 }).unwrap();
        assert_abs_diff_eq!(jac, a.transpose(), epsilon = 1e-8);
    }

    #[test]
    fn jacobian_of_product_map() {
        let f = |y: &Vector| Ok(Vector::from_element(1, y[0] * y[1]));
        let y = Vector::from_vec(vec![2.0, 3.0]);
        let (jac, _) =
            jacobian_fd(f, &y, &FdPolicy::default(), &Support::Reals { dim: 2 }).unwrap();
        assert_abs_diff_eq!(jac[(0, 0)], 3.0, epsilon = 1e-6);
        assert_abs_diff_eq!(jac[(1, 0)], 2.0, epsilon = 1e-6);
    }

    #[test]
    fn d_operator_identity_at_order_zero() {
        let model = GaussianKnownVariance::new(1.0).unwrap();
        let d = d_operator(ok(|y: f64| y.sin()), &model, 0, 0.7, &FdPolicy::default()).unwrap();
        assert_eq!(d.value, 0.7f64.sin());
    }

    #[test]
    fn d_operator_linear_statistic_is_plain_derivative() {
        // T(y) = y: D f = f'. f = y²/4 + 7 has f'(2) = 1.
        let model = GaussianKnownVariance::new(1.0).unwrap();
        let d =
            d_operator(ok(|y| y * y / 4.0 + 7.0), &model, 1, 2.0, &FdPolicy::default()).unwrap();
        assert_abs_diff_eq!(d.value, 1.0, epsilon = 1e-6);
    }

    #[test]
    fn d_operator_negated_statistic_flips_sign() {
        // T(y) = -y: D f = -f'. f = -3·log(1+y) has D f (1) = 3/2.
        let model = ExponentialRate;
        let d = d_operator(
            ok(|y: f64| -3.0 * (1.0 + y).ln()),
            &model,
            1,
            1.0,
            &FdPolicy::default(),
        )
        .unwrap();
        assert_abs_diff_eq!(d.value, 1.5, epsilon = 1e-6);
    }

    #[test]
    fn d_operator_linear_path_matches_scaled_fd_exactly() {
        let model = ExponentialRate;
        let policy = FdPolicy::default();
        let f = ok(|y: f64| (0.3 * y).sin() + y * y);
        for ell in 1..=3usize {
            let via_op = d_operator(&f, &model, ell, 1.4, &policy).unwrap().value;
            let via_fd = fd_derivative(&f, 1.4, ell, &policy, Some((0.0, f64::INFINITY)))
                .unwrap()
                .value
                / (-1.0f64).powi(ell as i32);
            assert_eq!(via_op, via_fd);
        }
    }

    #[test]
    fn d_operator_nonlinear_statistic_on_polynomials() {
        // T(y) = y²: D = (1/(2y)) d/dy. For f = y⁴: D f = 2y², D² f = 2, D³ f = 0.
        let model = GaussianZeroMeanVariance;
        let policy = FdPolicy::default();
        let f = ok(|y: f64| y.powi(4));
        let y = 1.5;
        assert_abs_diff_eq!(
            d_operator(&f, &model, 1, y, &policy).unwrap().value,
            2.0 * y * y,
            epsilon = 1e-6
        );
        assert_abs_diff_eq!(
            d_operator(&f, &model, 2, y, &policy).unwrap().value,
            2.0,
            epsilon = 1e-5
        );
        assert_abs_diff_eq!(
            d_operator(&f, &model, 3, y, &policy).unwrap().value,
            0.0,
            epsilon = 1e-3
        );
    }

    #[test]
    fn d_operator_flags_singular_statistic() {
        let model = GaussianZeroMeanVariance;
        let res = d_operator(ok(|y| y), &model, 1, 0.0, &FdPolicy::default());
        assert!(matches!(res, Err(Error::NearSingularStatistic { .. })));
    }

    #[test]
    fn d_operator_composes() {
        let model = GaussianZeroMeanVariance;
        let policy = FdPolicy::default();
        let f = ok(|y: f64| (0.5 * y).exp());
        let y = 1.2;
        for (l1, l2) in [(1usize, 1usize), (1, 2), (2, 1)] {
            let whole = d_operator(&f, &model, l1 + l2, y, &policy).unwrap().value;
            let inner = |u: f64| d_operator(&f, &model, l2, u, &policy).map(|d| d.value);
            let nested = d_operator(inner, &model, l1, y, &policy).unwrap().value;
            assert_abs_diff_eq!(whole, nested, epsilon = 1e-2 * whole.abs().max(1.0));
        }
    }

    #[test]
    fn antiderivative_zero_length_interval() {
        let model = GaussianKnownVariance::new(1.0).unwrap();
        let v = antiderivative_weighted(ok(f64::exp), 0.5, 0.5, &model).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn antiderivative_gaussian_statistic() {
        // T' = 1, g = u/2: ∫₀² u/2 du = 1.
        let model = GaussianKnownVariance::new(1.0).unwrap();
        let v = antiderivative_weighted(ok(|u| u / 2.0), 0.0, 2.0, &model).unwrap();
        assert_abs_diff_eq!(v, 1.0, epsilon = 1e-8);
    }

    #[test]
    fn antiderivative_negated_statistic() {
        // T' = -1, g = 3/(1+u): ∫₀¹ -3/(1+u) du = -3·log 2.
        let model = ExponentialRate;
        let v = antiderivative_weighted(ok(|u| 3.0 / (1.0 + u)), 0.0, 1.0, &model).unwrap();
        assert_abs_diff_eq!(v, -3.0 * 2.0f64.ln(), epsilon = 1e-8);
    }

    #[test]
    fn antiderivative_rejects_interval_outside_support() {
        let model = ExponentialRate;
        let res = antiderivative_weighted(ok(|_| 1.0), -1.0, 1.0, &model);
        assert!(matches!(res, Err(Error::IntervalOutOfSupport(_, _))));
    }
}
