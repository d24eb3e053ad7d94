//! Gaussian observation models.

use rand_distr::{Distribution, Normal};

use crate::quadrature::tensor_box;
use crate::{linalg, Error, Matrix, Result, Vector};

use super::{get_f64, get_matrix, get_vector, ExpFamily, ParamMap, Support};

const LN_2PI: f64 = 1.8378770664093453; // ln(2π)

/// Width of quadrature boxes in posterior/marginal standard deviations.
/// 12σ leaves Gaussian tail mass below 1e-32.
const TAIL_SIGMAS: f64 = 12.0;

/// Scalar Gaussian with known noise variance `σ²`.
///
/// Convention: `x = m/σ²`, `T(y) = y`, `h(y) = N(y; 0, σ²)` density,
/// `φ(x) = σ²x²/2`, so `y | x ~ N(σ²x, σ²)`.
#[derive(Debug, Clone)]
pub struct GaussianKnownVariance {
    pub sigma2: f64,
}

impl GaussianKnownVariance {
    pub fn new(sigma2: f64) -> Result<Self> {
        if !(sigma2.is_finite() && sigma2 > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "GaussianKnownVariance needs sigma2 > 0, got {sigma2}"
            )));
        }
        Ok(Self { sigma2 })
    }

    fn mean(&self, x: f64) -> f64 {
        self.sigma2 * x
    }
}

impl ExpFamily for GaussianKnownVariance {
    fn name(&self) -> String {
        format!("GaussianKnownVariance(sigma2={})", self.sigma2)
    }

    fn dim_param(&self) -> usize {
        1
    }

    fn dim_obs(&self) -> usize {
        1
    }

    fn obs_support(&self) -> Support {
        Support::Reals { dim: 1 }
    }

    fn param_in_support(&self, x: &Vector) -> bool {
        x.len() == 1 && x[0].is_finite()
    }

    fn param_boundary_distance(&self, _x: &Vector) -> f64 {
        f64::INFINITY
    }

    fn log_base_measure(&self, y: &Vector) -> f64 {
        -0.5 * (LN_2PI + self.sigma2.ln()) - y[0] * y[0] / (2.0 * self.sigma2)
    }

    fn grad_log_base_measure(&self, y: &Vector) -> Vector {
        Vector::from_element(1, -y[0] / self.sigma2)
    }

    fn sufficient_stat(&self, y: &Vector) -> Vector {
        y.clone()
    }

    fn stat_jacobian(&self, _y: &Vector) -> Matrix {
        Matrix::from_element(1, 1, 1.0)
    }

    fn log_partition(&self, x: &Vector) -> f64 {
        0.5 * self.sigma2 * x[0] * x[0]
    }

    fn stat_deriv(&self, _y: f64, order: usize) -> Option<f64> {
        Some(if order == 1 { 1.0 } else { 0.0 })
    }

    fn stat_linear_slope(&self) -> Option<f64> {
        Some(1.0)
    }

    fn log_base_derivs(&self, y: f64, max_order: usize) -> Option<Vec<f64>> {
        let mut d = vec![0.0; max_order];
        if max_order >= 1 {
            d[0] = -y / self.sigma2;
        }
        if max_order >= 2 {
            d[1] = -1.0 / self.sigma2;
        }
        Some(d)
    }

    fn sample_obs(&self, x: &Vector, rng: &mut dyn rand::RngCore) -> Option<f64> {
        let normal = Normal::new(self.mean(x[0]), self.sigma2.sqrt()).ok()?;
        Some(normal.sample(rng))
    }

    fn obs_quadrature(&self, xs: &[Vector], nodes_per_dim: usize) -> Result<Vec<(Vector, f64)>> {
        let sd = self.sigma2.sqrt();
        let (mut lo, mut hi) = (0.0f64, 0.0f64);
        for x in xs {
            lo = lo.min(self.mean(x[0]));
            hi = hi.max(self.mean(x[0]));
        }
        let bounds = (lo - TAIL_SIGMAS * sd, hi + TAIL_SIGMAS * sd);
        Ok(tensor_box(&[bounds], nodes_per_dim))
    }

    fn natural_param_from_source(&self, params: &ParamMap) -> Result<Vector> {
        let mean = get_f64(params, "mean")?;
        Ok(Vector::from_element(1, mean / self.sigma2))
    }
}

/// Scalar zero-mean Gaussian with unknown variance.
///
/// Convention: `x = −1/(2σ²) < 0`, `T(y) = y²`, `h(y) = (2π)^{−1/2}`,
/// `φ(x) = −½ log(−2x)`. The statistic derivative `T'(y) = 2y` vanishes at
/// the origin, which exercises the singularity handling of the weighted
/// derivative operator.
#[derive(Debug, Clone, Default)]
pub struct GaussianZeroMeanVariance;

impl GaussianZeroMeanVariance {
    fn variance(x: f64) -> f64 {
        -1.0 / (2.0 * x)
    }
}

impl ExpFamily for GaussianZeroMeanVariance {
    fn name(&self) -> String {
        "GaussianZeroMeanVariance".to_string()
    }

    fn dim_param(&self) -> usize {
        1
    }

    fn dim_obs(&self) -> usize {
        1
    }

    fn obs_support(&self) -> Support {
        Support::Reals { dim: 1 }
    }

    fn param_in_support(&self, x: &Vector) -> bool {
        x.len() == 1 && x[0].is_finite() && x[0] < 0.0
    }

    fn param_boundary_distance(&self, x: &Vector) -> f64 {
        -x[0]
    }

    fn log_base_measure(&self, _y: &Vector) -> f64 {
        -0.5 * LN_2PI
    }

    fn grad_log_base_measure(&self, _y: &Vector) -> Vector {
        Vector::zeros(1)
    }

    fn sufficient_stat(&self, y: &Vector) -> Vector {
        Vector::from_element(1, y[0] * y[0])
    }

    fn stat_jacobian(&self, y: &Vector) -> Matrix {
        Matrix::from_element(1, 1, 2.0 * y[0])
    }

    fn log_partition(&self, x: &Vector) -> f64 {
        -0.5 * (-2.0 * x[0]).ln()
    }

    fn stat_deriv(&self, y: f64, order: usize) -> Option<f64> {
        Some(match order {
            1 => 2.0 * y,
            2 => 2.0,
            _ => 0.0,
        })
    }

    fn log_base_derivs(&self, _y: f64, max_order: usize) -> Option<Vec<f64>> {
        Some(vec![0.0; max_order])
    }

    fn sample_obs(&self, x: &Vector, rng: &mut dyn rand::RngCore) -> Option<f64> {
        let normal = Normal::new(0.0, Self::variance(x[0]).sqrt()).ok()?;
        Some(normal.sample(rng))
    }

    fn obs_quadrature(&self, xs: &[Vector], nodes_per_dim: usize) -> Result<Vec<(Vector, f64)>> {
        let sd_max = xs
            .iter()
            .map(|x| Self::variance(x[0]).sqrt())
            .fold(1.0f64, f64::max);
        let half = TAIL_SIGMAS * sd_max;
        Ok(tensor_box(&[(-half, half)], nodes_per_dim))
    }

    fn natural_param_from_source(&self, params: &ParamMap) -> Result<Vector> {
        let var = get_f64(params, "variance")?;
        if var <= 0.0 {
            return Err(Error::InvalidConfig("variance must be positive".into()));
        }
        Ok(Vector::from_element(1, -1.0 / (2.0 * var)))
    }
}

/// Multivariate Gaussian with unknown mean and unknown covariance.
///
/// Convention: `x = [Σ^{-1}m; vec(−½Σ^{-1})]`, `T(y) = [y; vec(yyᵀ)]`,
/// `h(y) = (2π)^{−k/2}`, `φ(x) = ½(mᵀΣ^{-1}m + log|Σ|)`, with the
/// sufficient-statistic Jacobian `[I_k, yᵀ⊗I_k + I_k⊗yᵀ]`.
#[derive(Debug, Clone)]
pub struct GaussianUnknownMeanCov {
    pub k: usize,
}

impl GaussianUnknownMeanCov {
    pub fn new(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidConfig("observation dimension must be >= 1".into()));
        }
        Ok(Self { k })
    }

    /// Recovers `(m, Σ)` from a natural-parameter point, rejecting points
    /// whose precision part is not positive definite.
    pub fn decompose(&self, x: &Vector) -> Result<(Vector, Matrix)> {
        let k = self.k;
        if x.len() != k + k * k {
            return Err(Error::ShapeMismatch(format!(
                "natural parameter must have length {}, got {}",
                k + k * k,
                x.len()
            )));
        }
        let x2 = linalg::unvec(&Vector::from_column_slice(&x.as_slice()[k..]), k, k);
        // Only the symmetric part of the quadratic coefficient enters the density.
        let precision = -(&x2 + x2.transpose());
        if linalg::min_symmetric_eigenvalue(&precision) <= 0.0 {
            return Err(Error::OutOfSupport("precision part not positive definite".into()));
        }
        let sigma = precision
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::OutOfSupport("precision part not invertible".into()))?;
        let m = &sigma * Vector::from_column_slice(&x.as_slice()[..k]);
        Ok((m, sigma))
    }
}

impl ExpFamily for GaussianUnknownMeanCov {
    fn name(&self) -> String {
        format!("GaussianUnknownMeanCov(k={})", self.k)
    }

    fn dim_param(&self) -> usize {
        self.k + self.k * self.k
    }

    fn dim_obs(&self) -> usize {
        self.k
    }

    fn obs_support(&self) -> Support {
        Support::Reals { dim: self.k }
    }

    fn param_in_support(&self, x: &Vector) -> bool {
        x.len() == self.dim_param()
            && x.iter().all(|v| v.is_finite())
            && self.decompose(x).is_ok()
    }

    fn param_boundary_distance(&self, x: &Vector) -> f64 {
        let k = self.k;
        let x2 = linalg::unvec(&Vector::from_column_slice(&x.as_slice()[k..]), k, k);
        let precision = -(&x2 + x2.transpose());
        // Precision shifts at twice the rate of the vec(−½Σ^{-1}) block.
        linalg::min_symmetric_eigenvalue(&precision) / 2.0
    }

    fn log_base_measure(&self, _y: &Vector) -> f64 {
        -(self.k as f64) / 2.0 * LN_2PI
    }

    fn grad_log_base_measure(&self, _y: &Vector) -> Vector {
        Vector::zeros(self.k)
    }

    fn sufficient_stat(&self, y: &Vector) -> Vector {
        let k = self.k;
        let mut t = Vector::zeros(k + k * k);
        t.rows_mut(0, k).copy_from(y);
        let outer = y * y.transpose();
        t.rows_mut(k, k * k).copy_from(&linalg::vec(&outer));
        t
    }

    fn stat_jacobian(&self, y: &Vector) -> Matrix {
        let k = self.k;
        let eye = Matrix::identity(k, k);
        let yt = Matrix::from_row_slice(1, k, y.as_slice());
        let quad = linalg::kron(&yt, &eye) + linalg::kron(&eye, &yt);
        let mut jac = Matrix::zeros(k, k + k * k);
        jac.view_mut((0, 0), (k, k)).copy_from(&eye);
        jac.view_mut((0, k), (k, k * k)).copy_from(&quad);
        jac
    }

    fn log_partition(&self, x: &Vector) -> f64 {
        let (m, sigma) = self.decompose(x).expect("log_partition: x outside domain");
        let precision_m = sigma
            .clone()
            .try_inverse()
            .expect("log_partition: sigma not invertible")
            * &m;
        0.5 * (m.dot(&precision_m) + sigma.determinant().ln())
    }

    fn obs_quadrature(&self, xs: &[Vector], nodes_per_dim: usize) -> Result<Vec<(Vector, f64)>> {
        let k = self.k;
        let mut lo = vec![0.0f64; k];
        let mut hi = vec![0.0f64; k];
        let mut sd_max = 1.0f64;
        for x in xs {
            let (m, sigma) = self.decompose(x)?;
            sd_max = sd_max.max(sigma.symmetric_eigenvalues().max().sqrt());
            for i in 0..k {
                lo[i] = lo[i].min(m[i]);
                hi[i] = hi[i].max(m[i]);
            }
        }
        let bounds: Vec<(f64, f64)> = (0..k)
            .map(|i| (lo[i] - TAIL_SIGMAS * sd_max, hi[i] + TAIL_SIGMAS * sd_max))
            .collect();
        Ok(tensor_box(&bounds, nodes_per_dim))
    }

    fn natural_param_from_source(&self, params: &ParamMap) -> Result<Vector> {
        let m = get_vector(params, "mean")?;
        let cov = get_matrix(params, "cov")?;
        let k = self.k;
        if m.len() != k || cov.nrows() != k || cov.ncols() != k {
            return Err(Error::InvalidConfig(format!(
                "mean must have length {k} and cov must be {k}x{k}"
            )));
        }
        let precision = cov
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::InvalidConfig("cov is not invertible".into()))?;
        let mut x = Vector::zeros(k + k * k);
        x.rows_mut(0, k).copy_from(&(&precision * &m));
        x.rows_mut(k, k * k).copy_from(&linalg::vec(&(-0.5 * &precision)));
        Ok(x)
    }
}

