//! Exponential-family observation models.
//!
//! A model describes the family of densities on an open support `𝒴`
//!
//! ```text
//! f(y | x) = h(y) · exp(⟨x, T(y)⟩ − φ(x)),   x ∈ 𝒳 ⊆ R^d,  y ∈ 𝒴 ⊆ R^k,
//! ```
//!
//! through its base measure `h`, sufficient statistic `T` (with a
//! closed-form Jacobian), log-partition `φ` and the two supports. The
//! `(T, x)` factorization is not unique; each built-in model fixes one
//! convention and documents it so scenario files are reproducible.
//!
//! Jacobians follow the gradients-as-columns layout: for `f: R^k → R^m`,
//! `J_y f` is `k×m` with `(J_y f)[i][j] = ∂f_j/∂y_i`.

mod gamma;
mod gaussian;
mod wishart;

pub mod catalog;

pub use gamma::{ExponentialRate, GammaShapeRate};
pub use gaussian::{GaussianKnownVariance, GaussianUnknownMeanCov, GaussianZeroMeanVariance};
pub use wishart::{LogDetGradient, Wishart};

use crate::{linalg, Error, Matrix, Result, Vector};

/// Default strict-interiority margin for support checks, in the
/// observation's natural scale. Supports are open sets and densities may
/// blow up at the boundary (e.g. gamma with shape below one).
pub const SUPPORT_MARGIN: f64 = 1e-8;

/// JSON-style parameter map used to construct models and natural-parameter
/// points from named source parameters.
pub type ParamMap = serde_json::Map<String, serde_json::Value>;

/// Open observation supports used by the built-in models.
#[derive(Debug, Clone, PartialEq)]
pub enum Support {
    /// All of `R^dim`.
    Reals { dim: usize },
    /// The positive half-line `(0, ∞)`.
    PositiveReals,
    /// Half-vectorized symmetric positive definite `p×p` matrices.
    SpdCone { p: usize },
}

impl Support {
    /// Dimension of the ambient coordinate space.
    pub fn dim(&self) -> usize {
        match self {
            Support::Reals { dim } => *dim,
            Support::PositiveReals => 1,
            Support::SpdCone { p } => p * (p + 1) / 2,
        }
    }

    /// Whether `y` lies in the support with distance at least `margin`
    /// from the boundary (all coordinates finite).
    pub fn contains_interior(&self, y: &Vector, margin: f64) -> bool {
        if y.len() != self.dim() || y.iter().any(|v| !v.is_finite()) {
            return false;
        }
        match self {
            Support::Reals { .. } => true,
            Support::PositiveReals => y[0] >= margin,
            Support::SpdCone { p } => {
                let a = linalg::unvech(y, *p);
                linalg::min_symmetric_eigenvalue(&a) >= margin
            }
        }
    }

    /// Interval form for one-dimensional supports, used by scalar stencil
    /// checks. `SpdCone` with `p = 1` is the positive half-line.
    pub fn interval(&self) -> Option<(f64, f64)> {
        match self {
            Support::Reals { dim: 1 } => Some((f64::NEG_INFINITY, f64::INFINITY)),
            Support::PositiveReals | Support::SpdCone { p: 1 } => Some((0.0, f64::INFINITY)),
            _ => None,
        }
    }

    pub fn describe(&self) -> String {
        match self {
            Support::Reals { dim } => format!("R^{dim}"),
            Support::PositiveReals => "(0, inf)".to_string(),
            Support::SpdCone { p } => format!("vech of SPD {p}x{p} matrices"),
        }
    }
}

/// An exponential-family observation model.
///
/// Vector-valued methods follow the dimensions `d = dim_param`,
/// `k = dim_obs`. The scalar hooks (`stat_deriv`, `log_base_derivs`,
/// `sample_obs`) are only available where they make sense and default to
/// `None` elsewhere.
pub trait ExpFamily: Send + Sync {
    /// Display name including constructor parameters.
    fn name(&self) -> String;

    /// Dimension `d` of the natural parameter.
    fn dim_param(&self) -> usize;

    /// Dimension `k` of the observation.
    fn dim_obs(&self) -> usize;

    fn obs_support(&self) -> Support;

    /// Whether `x` lies in the natural-parameter domain `𝒳`.
    fn param_in_support(&self, x: &Vector) -> bool;

    /// Distance from `x` to the boundary of `𝒳` (infinite when unbounded).
    /// Used to keep finite-difference stencils in `x` inside the domain.
    fn param_boundary_distance(&self, x: &Vector) -> f64;

    /// `log h(y)`.
    fn log_base_measure(&self, y: &Vector) -> f64;

    /// `∇_y log h(y)`.
    fn grad_log_base_measure(&self, y: &Vector) -> Vector;

    /// `T(y) ∈ R^d`.
    fn sufficient_stat(&self, y: &Vector) -> Vector;

    /// Closed-form `J_y T(y) ∈ R^{k×d}` (gradients of the components of `T`
    /// as columns).
    fn stat_jacobian(&self, y: &Vector) -> Matrix;

    /// `φ(x)`.
    fn log_partition(&self, x: &Vector) -> f64;

    /// For scalar models (`d = k = 1`): the `order`-th derivative of the
    /// scalar statistic `T` at `y`.
    fn stat_deriv(&self, _y: f64, _order: usize) -> Option<f64> {
        None
    }

    /// `Some(c)` when the scalar statistic is affine with slope `c`
    /// (`T'(y) ≡ c`), in which case the weighted derivative operator
    /// collapses to an ordinary derivative.
    fn stat_linear_slope(&self) -> Option<f64> {
        None
    }

    /// For scalar observations: derivatives `(log h)'(y), …` up to
    /// `max_order`. Enables fully analytic density derivatives downstream.
    fn log_base_derivs(&self, _y: f64, _max_order: usize) -> Option<Vec<f64>> {
        None
    }

    /// Draws `y ~ f(· | x)` for scalar-observation models.
    fn sample_obs(&self, _x: &Vector, _rng: &mut dyn rand::RngCore) -> Option<f64> {
        None
    }

    /// A deterministic quadrature rule over `𝒴` adequate for integrating
    /// the model density at each of the parameter points `xs`, returned as
    /// node/weight pairs. `nodes_per_dim` controls resolution.
    fn obs_quadrature(&self, xs: &[Vector], nodes_per_dim: usize) -> Result<Vec<(Vector, f64)>>;

    /// Builds a natural-parameter point from the model's named source
    /// parameters (e.g. mean/covariance for Gaussian models).
    fn natural_param_from_source(&self, params: &ParamMap) -> Result<Vector>;
}

fn check_point(model: &dyn ExpFamily, x: &Vector, y: &Vector) -> Result<()> {
    if !model.obs_support().contains_interior(y, SUPPORT_MARGIN) {
        return Err(Error::OutOfSupport(format!(
            "y = {:?} not interior to {}",
            y.as_slice(),
            model.obs_support().describe()
        )));
    }
    if x.len() != model.dim_param() || !model.param_in_support(x) {
        return Err(Error::OutOfSupport(format!(
            "x = {:?} not in the natural-parameter domain of {}",
            x.as_slice(),
            model.name()
        )));
    }
    Ok(())
}

/// `log f(y | x) = log h(y) + ⟨x, T(y)⟩ − φ(x)`.
pub fn eval_log_likelihood(model: &dyn ExpFamily, x: &Vector, y: &Vector) -> Result<f64> {
    check_point(model, x, y)?;
    Ok(model.log_base_measure(y) + x.dot(&model.sufficient_stat(y)) - model.log_partition(x))
}

/// The conditional score `∇_y log f(y | x) = ∇_y log h(y) + (J_y T(y)) x`.
pub fn conditional_score(model: &dyn ExpFamily, x: &Vector, y: &Vector) -> Result<Vector> {
    check_point(model, x, y)?;
    Ok(model.grad_log_base_measure(y) + model.stat_jacobian(y) * x)
}

/// Composite Gauss–Legendre rule on `(0, upper]` with geometrically shrinking
/// panels toward the origin. Resolves gamma-type integrands across many decay
/// scales with a deterministic node set.
pub(crate) fn half_line_nodes(upper: f64, nodes_per_panel: usize) -> Vec<(f64, f64)> {
    const HALVINGS: usize = 28;
    let mut nodes = Vec::with_capacity(nodes_per_panel * (HALVINGS + 1));
    let mut hi = upper;
    for level in 0..=HALVINGS {
        let lo = if level == HALVINGS { 0.0 } else { hi / 2.0 };
        nodes.extend(crate::quadrature::nodes_on_interval(nodes_per_panel, lo, hi));
        hi = lo;
    }
    nodes
}

pub(crate) fn get_f64(params: &ParamMap, key: &str) -> Result<f64> {
    params
        .get(key)
        .and_then(|v| v.as_f64())
        .ok_or_else(|| Error::InvalidConfig(format!("missing or non-numeric field `{key}`")))
}

pub(crate) fn get_vector(params: &ParamMap, key: &str) -> Result<Vector> {
    let arr = params
        .get(key)
        .and_then(|v| v.as_array())
        .ok_or_else(|| Error::InvalidConfig(format!("missing or non-array field `{key}`")))?;
    let entries: Option<Vec<f64>> = arr.iter().map(|v| v.as_f64()).collect();
    entries
        .map(Vector::from_vec)
        .ok_or_else(|| Error::InvalidConfig(format!("non-numeric entry in `{key}`")))
}

pub(crate) fn get_matrix(params: &ParamMap, key: &str) -> Result<Matrix> {
    let rows = params
        .get(key)
        .and_then(|v| v.as_array())
        .ok_or_else(|| Error::InvalidConfig(format!("missing or non-array field `{key}`")))?;
    let mut data: Vec<Vec<f64>> = Vec::with_capacity(rows.len());
    for row in rows {
        let row = row
            .as_array()
            .ok_or_else(|| Error::InvalidConfig(format!("`{key}` must be a matrix (array of rows)")))?;
        let entries: Option<Vec<f64>> = row.iter().map(|v| v.as_f64()).collect();
        data.push(entries.ok_or_else(|| {
            Error::InvalidConfig(format!("non-numeric entry in matrix `{key}`"))
        })?);
    }
    let nrows = data.len();
    if nrows == 0 || data.iter().any(|r| r.len() != data[0].len()) {
        return Err(Error::InvalidConfig(format!("`{key}` must be a non-empty rectangular matrix")));
    }
    let ncols = data[0].len();
    Ok(Matrix::from_fn(nrows, ncols, |i, j| data[i][j]))
}
