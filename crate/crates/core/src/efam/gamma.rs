//! Exponential and gamma observation models on the positive half-line.

use rand_distr::{Distribution, Exp, Gamma as GammaDist};
use statrs::function::gamma::ln_gamma;

use crate::{Error, Matrix, Result, Vector};

use super::{get_f64, half_line_nodes, ExpFamily, ParamMap, Support};

/// Exponential observation with unknown rate.
///
/// Convention: `x = b > 0` (the rate), `T(y) = −y`, `h(y) = 1`,
/// `φ(x) = −log x`, so `f(y | b) = b·exp(−by)` on `(0, ∞)`.
#[derive(Debug, Clone, Default)]
pub struct ExponentialRate;

impl ExpFamily for ExponentialRate {
    fn name(&self) -> String {
        "ExponentialRate".to_string()
    }

    fn dim_param(&self) -> usize {
        1
    }

    fn dim_obs(&self) -> usize {
        1
    }

    fn obs_support(&self) -> Support {
        Support::PositiveReals
    }

    fn param_in_support(&self, x: &Vector) -> bool {
        x.len() == 1 && x[0].is_finite() && x[0] > 0.0
    }

    fn param_boundary_distance(&self, x: &Vector) -> f64 {
        x[0]
    }

    fn log_base_measure(&self, _y: &Vector) -> f64 {
        0.0
    }

    fn grad_log_base_measure(&self, _y: &Vector) -> Vector {
        Vector::zeros(1)
    }

    fn sufficient_stat(&self, y: &Vector) -> Vector {
        -y.clone()
    }

    fn stat_jacobian(&self, _y: &Vector) -> Matrix {
        Matrix::from_element(1, 1, -1.0)
    }

    fn log_partition(&self, x: &Vector) -> f64 {
        -x[0].ln()
    }

    fn stat_deriv(&self, _y: f64, order: usize) -> Option<f64> {
        Some(if order == 1 { -1.0 } else { 0.0 })
    }

    fn stat_linear_slope(&self) -> Option<f64> {
        Some(-1.0)
    }

    fn log_base_derivs(&self, _y: f64, max_order: usize) -> Option<Vec<f64>> {
        Some(vec![0.0; max_order])
    }

    fn sample_obs(&self, x: &Vector, rng: &mut dyn rand::RngCore) -> Option<f64> {
        let exp = Exp::new(x[0]).ok()?;
        Some(exp.sample(rng))
    }

    fn obs_quadrature(&self, xs: &[Vector], nodes_per_dim: usize) -> Result<Vec<(Vector, f64)>> {
        let min_rate = xs.iter().map(|x| x[0]).fold(f64::INFINITY, f64::min);
        let upper = if min_rate.is_finite() && min_rate > 0.0 {
            60.0 / min_rate
        } else {
            60.0
        };
        Ok(half_line_nodes(upper, nodes_per_dim)
            .into_iter()
            .map(|(y, w)| (Vector::from_element(1, y), w))
            .collect())
    }

    fn natural_param_from_source(&self, params: &ParamMap) -> Result<Vector> {
        let rate = get_f64(params, "rate")?;
        if rate <= 0.0 {
            return Err(Error::InvalidConfig("rate must be positive".into()));
        }
        Ok(Vector::from_element(1, rate))
    }
}

/// Gamma observation with unknown shape `a` and rate `b` (the scalar
/// reduction of the Wishart family in shape/rate form).
///
/// Convention: `x = [−b, a − 1]`, `T(y) = [y, log y]`, `h(y) = 1`,
/// `φ(x) = log Γ(a) − a log b`, so `f(y | a, b) = bᵃ y^{a−1} e^{−by}/Γ(a)`.
#[derive(Debug, Clone, Default)]
pub struct GammaShapeRate;

impl GammaShapeRate {
    fn shape_rate(x: &Vector) -> (f64, f64) {
        (x[1] + 1.0, -x[0])
    }
}

impl ExpFamily for GammaShapeRate {
    fn name(&self) -> String {
        "GammaShapeRate".to_string()
    }

    fn dim_param(&self) -> usize {
        2
    }

    fn dim_obs(&self) -> usize {
        1
    }

    fn obs_support(&self) -> Support {
        Support::PositiveReals
    }

    fn param_in_support(&self, x: &Vector) -> bool {
        x.len() == 2 && x.iter().all(|v| v.is_finite()) && x[0] < 0.0 && x[1] > -1.0
    }

    fn param_boundary_distance(&self, x: &Vector) -> f64 {
        (-x[0]).min(x[1] + 1.0)
    }

    fn log_base_measure(&self, _y: &Vector) -> f64 {
        0.0
    }

    fn grad_log_base_measure(&self, _y: &Vector) -> Vector {
        Vector::zeros(1)
    }

    fn sufficient_stat(&self, y: &Vector) -> Vector {
        Vector::from_vec(vec![y[0], y[0].ln()])
    }

    fn stat_jacobian(&self, y: &Vector) -> Matrix {
        Matrix::from_row_slice(1, 2, &[1.0, 1.0 / y[0]])
    }

    fn log_partition(&self, x: &Vector) -> f64 {
        let (a, b) = Self::shape_rate(x);
        ln_gamma(a) - a * b.ln()
    }

    fn sample_obs(&self, x: &Vector, rng: &mut dyn rand::RngCore) -> Option<f64> {
        let (a, b) = Self::shape_rate(x);
        let gamma = GammaDist::new(a, 1.0 / b).ok()?;
        Some(gamma.sample(rng))
    }

    fn obs_quadrature(&self, xs: &[Vector], nodes_per_dim: usize) -> Result<Vec<(Vector, f64)>> {
        let mut upper = 0.0f64;
        for x in xs {
            let (a, b) = Self::shape_rate(x);
            // Mean + many standard deviations; generous for sub-exponential tails.
            upper = upper.max((a + 16.0 * a.sqrt() + 60.0) / b);
        }
        if upper == 0.0 {
            upper = 60.0;
        }
        Ok(half_line_nodes(upper, nodes_per_dim)
            .into_iter()
            .map(|(y, w)| (Vector::from_element(1, y), w))
            .collect())
    }

    fn natural_param_from_source(&self, params: &ParamMap) -> Result<Vector> {
        let shape = get_f64(params, "shape")?;
        let rate = get_f64(params, "rate")?;
        if shape <= 0.0 || rate <= 0.0 {
            return Err(Error::InvalidConfig("shape and rate must be positive".into()));
        }
        Ok(Vector::from_vec(vec![-rate, shape - 1.0]))
    }
}
