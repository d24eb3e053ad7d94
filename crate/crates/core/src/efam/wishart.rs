//! Wishart observation model on half-vectorized SPD matrices.

use statrs::function::gamma::ln_gamma;

use crate::quadrature::nodes_on_interval;
use crate::{linalg, Error, Matrix, Result, Vector};

use super::{get_f64, get_matrix, half_line_nodes, ExpFamily, ParamMap, Support};

/// Which expression to use for `∇_y log|A|` inside the sufficient-statistic
/// Jacobian.
///
/// The analytically correct gradient in `vech` coordinates is
/// `D_pᵀ·vec(A^{-1})`; [`LogDetGradient::PublishedErratum`] substitutes the
/// expression `D_pᵀ·D_p·y` that has circulated in print, which already fails
/// for `p = 1` (it evaluates to `y` where the derivative of `log y` is
/// `1/y`). The erratum variant exists so the verification suite can
/// demonstrate the failure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LogDetGradient {
    #[default]
    Exact,
    PublishedErratum,
}

/// Wishart distribution with unknown scale matrix `V` and degrees of
/// freedom `n`, observed as `y = vech(A)` for `A ∈ S^p_+`.
///
/// Convention: `x = [−½·vec(V^{-1}); (n−p−1)/2]`, `T(y) = [vec(A); log|A|]`,
/// `h(y) = 1`, `φ(x) = (n/2)·log|V| + log Γ_p(n/2) + (np/2)·log 2`, and
/// `J_y T(y) = [D_pᵀ, ∇_y log|A|]`.
#[derive(Debug, Clone)]
pub struct Wishart {
    pub p: usize,
    pub log_det_gradient: LogDetGradient,
}

impl Wishart {
    pub fn new(p: usize, log_det_gradient: LogDetGradient) -> Result<Self> {
        if !(1..=2).contains(&p) {
            return Err(Error::InvalidConfig(format!(
                "Wishart supports p in {{1, 2}}, got {p}"
            )));
        }
        Ok(Self { p, log_det_gradient })
    }

    /// Recovers `(V^{-1}, n)` from a natural-parameter point.
    pub fn decompose(&self, x: &Vector) -> Result<(Matrix, f64)> {
        let p = self.p;
        if x.len() != p * p + 1 {
            return Err(Error::ShapeMismatch(format!(
                "natural parameter must have length {}, got {}",
                p * p + 1,
                x.len()
            )));
        }
        let x1 = linalg::unvec(&Vector::from_column_slice(&x.as_slice()[..p * p]), p, p);
        let precision = -(&x1 + x1.transpose());
        let n = 2.0 * x[p * p] + p as f64 + 1.0;
        if linalg::min_symmetric_eigenvalue(&precision) <= 0.0 || n <= p as f64 - 1.0 {
            return Err(Error::OutOfSupport(
                "Wishart parameter requires positive definite V^{-1} and n > p - 1".into(),
            ));
        }
        Ok((precision, n))
    }
}

/// `log Γ_p(a)`, the multivariate gamma function.
fn ln_multivariate_gamma(p: usize, a: f64) -> f64 {
    let pf = p as f64;
    let mut val = pf * (pf - 1.0) / 4.0 * std::f64::consts::PI.ln();
    for j in 1..=p {
        val += ln_gamma(a + (1.0 - j as f64) / 2.0);
    }
    val
}

impl ExpFamily for Wishart {
    fn name(&self) -> String {
        match self.log_det_gradient {
            LogDetGradient::Exact => format!("Wishart(p={})", self.p),
            LogDetGradient::PublishedErratum => format!("Wishart(p={}, erratum)", self.p),
        }
    }

    fn dim_param(&self) -> usize {
        self.p * self.p + 1
    }

    fn dim_obs(&self) -> usize {
        self.p * (self.p + 1) / 2
    }

    fn obs_support(&self) -> Support {
        Support::SpdCone { p: self.p }
    }

    fn param_in_support(&self, x: &Vector) -> bool {
        x.iter().all(|v| v.is_finite()) && self.decompose(x).is_ok()
    }

    fn param_boundary_distance(&self, x: &Vector) -> f64 {
        match self.decompose(x) {
            // vec(−½V^{-1}) shifts at half the rate of V^{-1} itself.
            Ok((w, _)) => (linalg::min_symmetric_eigenvalue(&w) / 2.0).min(x[self.p * self.p] + 1.0),
            Err(_) => 0.0,
        }
    }

    fn log_base_measure(&self, _y: &Vector) -> f64 {
        0.0
    }

    fn grad_log_base_measure(&self, _y: &Vector) -> Vector {
        Vector::zeros(self.dim_obs())
    }

    fn sufficient_stat(&self, y: &Vector) -> Vector {
        let p = self.p;
        let a = linalg::unvech(y, p);
        let mut t = Vector::zeros(p * p + 1);
        t.rows_mut(0, p * p).copy_from(&linalg::vec(&a));
        t[p * p] = a.determinant().ln();
        t
    }

    fn stat_jacobian(&self, y: &Vector) -> Matrix {
        let p = self.p;
        let k = self.dim_obs();
        let dup_t = linalg::duplication_matrix(p).transpose();
        let grad_log_det = match self.log_det_gradient {
            LogDetGradient::Exact => {
                let a = linalg::unvech(y, p);
                let a_inv = a.try_inverse().expect("stat_jacobian: A not invertible");
                &dup_t * linalg::vec(&a_inv)
            }
            LogDetGradient::PublishedErratum => &dup_t * (linalg::duplication_matrix(p) * y),
        };
        let mut jac = Matrix::zeros(k, p * p + 1);
        jac.view_mut((0, 0), (k, p * p)).copy_from(&dup_t);
        jac.column_mut(p * p).copy_from(&grad_log_det);
        jac
    }

    fn log_partition(&self, x: &Vector) -> f64 {
        let (w, n) = self.decompose(x).expect("log_partition: x outside domain");
        let p = self.p as f64;
        -n / 2.0 * w.determinant().ln() + ln_multivariate_gamma(self.p, n / 2.0)
            + n * p / 2.0 * 2.0f64.ln()
    }

    fn obs_quadrature(&self, xs: &[Vector], nodes_per_dim: usize) -> Result<Vec<(Vector, f64)>> {
        let mut scale = 0.0f64;
        for x in xs {
            let (w, n) = self.decompose(x)?;
            let v = w
                .clone()
                .try_inverse()
                .ok_or_else(|| Error::OutOfSupport("V^{-1} not invertible".into()))?;
            let lambda_max = v.symmetric_eigenvalues().max();
            scale = scale.max(lambda_max * (n + 16.0 * (2.0 * n).sqrt() + 80.0));
        }
        if scale == 0.0 {
            scale = 100.0;
        }
        match self.p {
            1 => Ok(half_line_nodes(scale, nodes_per_dim)
                .into_iter()
                .map(|(y, w)| (Vector::from_element(1, y), w))
                .collect()),
            2 => {
                // Cholesky substitution A = LLᵀ maps the cone onto a box;
                // the volume element picks up the factor 4·l11²·l22.
                let l_max = scale.sqrt();
                let diag = nodes_on_interval(nodes_per_dim, 0.0, l_max);
                let off = nodes_on_interval(nodes_per_dim, -l_max, l_max);
                let mut out =
                    Vec::with_capacity(nodes_per_dim * nodes_per_dim * nodes_per_dim);
                for &(l11, w11) in &diag {
                    for &(l21, w21) in &off {
                        for &(l22, w22) in &diag {
                            let y = Vector::from_vec(vec![
                                l11 * l11,
                                l11 * l21,
                                l21 * l21 + l22 * l22,
                            ]);
                            let jac = 4.0 * l11 * l11 * l22;
                            out.push((y, w11 * w21 * w22 * jac));
                        }
                    }
                }
                Ok(out)
            }
            _ => unreachable!("constructor restricts p to 1 or 2"),
        }
    }

    fn natural_param_from_source(&self, params: &ParamMap) -> Result<Vector> {
        let p = self.p;
        let v = get_matrix(params, "v")?;
        let n = get_f64(params, "n")?;
        if v.nrows() != p || v.ncols() != p {
            return Err(Error::InvalidConfig(format!("v must be {p}x{p}")));
        }
        if n <= p as f64 - 1.0 {
            return Err(Error::InvalidConfig(format!("n must exceed p - 1 = {}", p - 1)));
        }
        let w = v
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::InvalidConfig("v is not invertible".into()))?;
        if linalg::min_symmetric_eigenvalue(&w) <= 0.0 {
            return Err(Error::InvalidConfig("v must be positive definite".into()));
        }
        let mut x = Vector::zeros(p * p + 1);
        x.rows_mut(0, p * p).copy_from(&linalg::vec(&(-0.5 * &w)));
        x[p * p] = (n - p as f64 - 1.0) / 2.0;
        Ok(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn multivariate_gamma_reduces_to_gamma_for_p1() {
        assert_abs_diff_eq!(ln_multivariate_gamma(1, 2.5), ln_gamma(2.5), epsilon = 1e-14);
    }

    #[test]
    fn multivariate_gamma_p2_product_form() {
        // Γ_2(a) = √π · Γ(a) · Γ(a − 1/2).
        let a = 3.0;
        let expected = 0.5 * std::f64::consts::PI.ln() + ln_gamma(a) + ln_gamma(a - 0.5);
        assert_abs_diff_eq!(ln_multivariate_gamma(2, a), expected, epsilon = 1e-14);
    }

    #[test]
    fn p1_jacobian_row_variants() {
        let exact = Wishart::new(1, LogDetGradient::Exact).unwrap();
        let erratum = Wishart::new(1, LogDetGradient::PublishedErratum).unwrap();
        let y = Vector::from_element(1, 2.0);
        let j_exact = exact.stat_jacobian(&y);
        let j_err = erratum.stat_jacobian(&y);
        assert_abs_diff_eq!(j_exact[(0, 0)], 1.0);
        assert_abs_diff_eq!(j_exact[(0, 1)], 0.5);
        assert_abs_diff_eq!(j_err[(0, 1)], 2.0);
    }
}
