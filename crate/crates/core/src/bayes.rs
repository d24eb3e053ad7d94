//! Conditional functionals on observation grids: `E[U | Y = y]`, higher
//! conditional moments `F_ℓ(y) = E[X^ℓ | Y = y]`, the conditional
//! cumulant-generating function and cumulants, and the MMSE matrix computed
//! by two independent representations.

use serde::Serialize;

use crate::calculus::{jacobian_fd, FdPolicy};
use crate::efam::{Support, SUPPORT_MARGIN};
use crate::measures::{marginal_density, posterior, Scenario};
use crate::{Error, Matrix, Result, Vector};

/// Maximum supported moment/cumulant order. Finite-difference noise in the
/// identity checks grows quickly with order; six covers every built-in
/// scenario.
pub const MAX_MOMENT_ORDER: usize = 6;

/// An ordered set of interior observation points.
#[derive(Debug, Clone)]
pub struct Grid {
    points: Vec<Vector>,
    spacing: Option<f64>,
    margin: f64,
}

impl Grid {
    /// A uniform scalar grid of `count` points on `[min, max]`.
    pub fn uniform(min: f64, max: f64, count: usize) -> Result<Self> {
        if count < 2 || !(min.is_finite() && max.is_finite() && min < max) {
            return Err(Error::InvalidConfig(format!(
                "uniform grid needs min < max and at least two points, got [{min}, {max}] x{count}"
            )));
        }
        let spacing = (max - min) / (count - 1) as f64;
        let points = (0..count)
            .map(|i| Vector::from_element(1, min + spacing * i as f64))
            .collect();
        Ok(Self { points, spacing: Some(spacing), margin: SUPPORT_MARGIN })
    }

    /// An explicit list of (possibly vector-valued) points.
    pub fn explicit(points: Vec<Vector>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidConfig("grid needs at least one point".into()));
        }
        let dim = points[0].len();
        for (i, p) in points.iter().enumerate() {
            if p.len() != dim {
                return Err(Error::ShapeMismatch("grid points of mixed dimension".into()));
            }
            for q in &points[..i] {
                if (p - q).amax() == 0.0 {
                    return Err(Error::InvalidConfig(format!(
                        "duplicate grid point {:?}",
                        p.as_slice()
                    )));
                }
            }
        }
        Ok(Self { points, spacing: None, margin: SUPPORT_MARGIN })
    }

    pub fn with_margin(mut self, margin: f64) -> Self {
        self.margin = margin;
        self
    }

    pub fn points(&self) -> &[Vector] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points[0].len()
    }

    /// Recorded spacing for uniform scalar grids.
    pub fn spacing(&self) -> Option<f64> {
        self.spacing
    }

    pub fn margin(&self) -> f64 {
        self.margin
    }

    /// Largest coordinate magnitude, floored at one; the natural scale for
    /// singularity margins.
    pub fn scale(&self) -> f64 {
        self.points
            .iter()
            .map(|p| p.amax())
            .fold(1.0f64, f64::max)
    }

    /// Midpoint of a scalar grid (default anchor for the solved recursion).
    pub fn scalar_midpoint(&self) -> Option<f64> {
        if self.dim() != 1 {
            return None;
        }
        let lo = self.points.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min);
        let hi = self.points.iter().map(|p| p[0]).fold(f64::NEG_INFINITY, f64::max);
        Some(0.5 * (lo + hi))
    }

    /// Checks every point is interior to `support` by at least the grid
    /// margin.
    pub fn validate_for(&self, support: &Support) -> Result<()> {
        for p in &self.points {
            if !support.contains_interior(p, self.margin) {
                return Err(Error::OutOfSupport(format!(
                    "grid point {:?} within {} of the boundary of {}",
                    p.as_slice(),
                    self.margin,
                    support.describe()
                )));
            }
        }
        Ok(())
    }
}

/// A function evaluated on a grid, one value vector per point.
#[derive(Debug, Clone, Serialize)]
pub struct GridFunction {
    points: Vec<Vec<f64>>,
    values: Vec<Vec<f64>>,
}

impl GridFunction {
    pub fn new(grid: &Grid, values: Vec<Vector>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} values for {} grid points",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().any(|v| v.iter().any(|x| !x.is_finite())) {
            return Err(Error::ShapeMismatch("non-finite value in grid function".into()));
        }
        Ok(Self {
            points: grid.points().iter().map(|p| p.as_slice().to_vec()).collect(),
            values: values.into_iter().map(|v| v.as_slice().to_vec()).collect(),
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("grid function serializes")
    }

    /// Flat CSV with one row per point: coordinates then value components.
    pub fn to_csv(&self) -> String {
        let k = self.points[0].len();
        let m = self.values[0].len();
        let mut out = String::new();
        let header: Vec<String> = (0..k)
            .map(|i| format!("y{i}"))
            .chain((0..m).map(|j| format!("value{j}")))
            .collect();
        out.push_str(&header.join(","));
        out.push('\n');
        for (p, v) in self.points.iter().zip(&self.values) {
            let row: Vec<String> = p.iter().chain(v.iter()).map(|x| format!("{x}")).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

/// `E[U | Y = y]`: posterior expectation of the scenario's `U`-map.
pub fn conditional_expectation(scenario: &Scenario, y: &Vector) -> Result<Vector> {
    let post = posterior(scenario, y)?;
    Ok(post.expect(|x| scenario.u_map.apply(x)))
}

fn require_scalar(scenario: &Scenario) -> Result<()> {
    if !scenario.is_scalar() {
        return Err(Error::ShapeMismatch(format!(
            "operation needs a scalar parameter and observation; {} has d={}, k={}",
            scenario.model.name(),
            scenario.model.dim_param(),
            scenario.model.dim_obs()
        )));
    }
    Ok(())
}

fn check_order(ell: usize) -> Result<()> {
    if ell == 0 || ell > MAX_MOMENT_ORDER {
        return Err(Error::OrderOutOfRange { order: ell, max: MAX_MOMENT_ORDER });
    }
    Ok(())
}

/// All conditional moments `F_1(y), …, F_{ell}(y)` from one posterior pass.
pub fn conditional_moments_upto(scenario: &Scenario, ell: usize, y: f64) -> Result<Vec<f64>> {
    require_scalar(scenario)?;
    check_order(ell)?;
    let post = posterior(scenario, &Vector::from_element(1, y))?;
    Ok((1..=ell)
        .map(|l| post.expect_scalar(|x| x[0].powi(l as i32)))
        .collect())
}

/// `F_ℓ(y) = E[X^ℓ | Y = y]` by posterior quadrature.
pub fn conditional_moment(scenario: &Scenario, ell: usize, y: f64) -> Result<f64> {
    Ok(*conditional_moments_upto(scenario, ell, y)?
        .last()
        .expect("ell >= 1"))
}

/// The conditional cumulant-generating function
/// `K(t | y) = log E[e^{tX} | Y = y]`, evaluated in log space.
pub fn conditional_cgf(scenario: &Scenario, t: f64, y: f64) -> Result<f64> {
    require_scalar(scenario)?;
    let post = posterior(scenario, &Vector::from_element(1, y))?;
    let terms: Vec<f64> = post
        .atoms()
        .iter()
        .map(|(x, w)| w.ln() + t * x[0])
        .collect();
    let max = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return Err(Error::Overflow(format!("cgf at t = {t}, y = {y}")));
    }
    let sum: f64 = terms.iter().map(|v| (v - max).exp()).sum();
    let value = max + sum.ln();
    if !value.is_finite() {
        return Err(Error::Overflow(format!("cgf at t = {t}, y = {y}")));
    }
    Ok(value)
}

/// `d/dt K(t | y)`: the posterior mean under exponential tilting by `t`,
/// computed exactly from the atoms.
pub fn cgf_t_derivative(scenario: &Scenario, t: f64, y: f64) -> Result<f64> {
    require_scalar(scenario)?;
    let post = posterior(scenario, &Vector::from_element(1, y))?;
    let log_terms: Vec<f64> = post
        .atoms()
        .iter()
        .map(|(x, w)| w.ln() + t * x[0])
        .collect();
    let max = log_terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return Err(Error::Overflow(format!("tilted mean at t = {t}, y = {y}")));
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for ((x, _), lt) in post.atoms().iter().zip(&log_terms) {
        let w = (lt - max).exp();
        num += w * x[0];
        den += w;
    }
    Ok(num / den)
}

/// Exact moment-to-cumulant conversion:
/// `κ_n = m_n − Σ_{k=1}^{n−1} C(n−1, k−1) κ_k m_{n−k}`.
pub fn cumulants_from_moments(moments: &[f64]) -> Vec<f64> {
    let n = moments.len();
    let mut kappa = Vec::with_capacity(n);
    for i in 1..=n {
        let mut value = moments[i - 1];
        for k in 1..i {
            value -= binomial(i - 1, k - 1) * kappa[k - 1] * moments[i - k - 1];
        }
        kappa.push(value);
    }
    kappa
}

fn binomial(n: usize, k: usize) -> f64 {
    let mut out = 1.0;
    for j in 0..k {
        out = out * (n - j) as f64 / (j + 1) as f64;
    }
    out
}

/// The `ℓ`-th conditional cumulant `κ_ℓ(y)`: the `ℓ`-th `t`-derivative of
/// the conditional cumulant-generating function at `t = 0`, computed via
/// the exact moment-to-cumulant recurrence rather than finite differences
/// in `t`.
pub fn conditional_cumulant(scenario: &Scenario, ell: usize, y: f64) -> Result<f64> {
    let moments = conditional_moments_upto(scenario, ell, y)?;
    Ok(*cumulants_from_moments(&moments).last().expect("ell >= 1"))
}

/// Both representations of the MMSE matrix, with their difference.
#[derive(Debug, Clone)]
pub struct MmseEstimate {
    /// `E[Var(X | Y)]` by quadrature of the posterior variance against the
    /// marginal density.
    pub variance_side: Matrix,
    /// `E[(J_Y T(Y))^{-1} · J_Y E[X | Y]]` with the inner Jacobian by finite
    /// differences.
    pub jacobian_side: Matrix,
    pub max_difference: f64,
}

/// Default observation quadrature for [`mmse`], built from the scenario's
/// prior atoms.
pub fn default_mmse_quadrature(scenario: &Scenario, nodes: usize) -> Result<Vec<(Vector, f64)>> {
    let xs: Vec<Vector> = scenario
        .prior_atoms()
        .atoms()
        .iter()
        .filter(|(_, w)| *w > 0.0)
        .map(|(x, _)| x.clone())
        .collect();
    scenario.model.obs_quadrature(&xs, nodes)
}

const CONDITION_LIMIT: f64 = 1e12;

/// The MMSE matrix by both routes, integrating over the supplied
/// observation quadrature. Requires `U = X` and a square
/// sufficient-statistic Jacobian.
pub fn mmse(
    scenario: &Scenario,
    quad: &[(Vector, f64)],
    policy: &FdPolicy,
) -> Result<MmseEstimate> {
    if !matches!(scenario.u_map, crate::measures::UMap::Identity) {
        return Err(Error::ShapeMismatch("MMSE requires the identity U-map".into()));
    }
    let d = scenario.model.dim_param();
    let k = scenario.model.dim_obs();
    if d != k {
        return Err(Error::ShapeMismatch(format!(
            "MMSE representation needs a square statistic Jacobian (d = {d}, k = {k})"
        )));
    }
    let support = scenario.model.obs_support();
    let mut variance_side = Matrix::zeros(d, d);
    let mut jacobian_side = Matrix::zeros(d, d);
    for (y, w) in quad {
        let density = match marginal_density(scenario, y) {
            Ok(f) => f,
            // Mass beyond the representable range contributes nothing.
            Err(Error::AllWeightsVanished(_)) => continue,
            Err(e) => return Err(e),
        };
        let post = posterior(scenario, y)?;
        let var = post.cov(|x| x.clone(), |x| x.clone());
        variance_side += *w * density * var;

        let jac_t = scenario.model.stat_jacobian(y);
        let svd = jac_t.clone().svd(false, false);
        let (smax, smin) = (svd.singular_values.max(), svd.singular_values.min());
        if !(smin > 0.0) || smax / smin > CONDITION_LIMIT {
            return Err(Error::SingularJacobian(format!("{:?}", y.as_slice())));
        }
        let (jac_ce, _) = jacobian_fd(
            |p| conditional_expectation(scenario, p),
            y,
            policy,
            &support,
        )?;
        let inv = jac_t
            .try_inverse()
            .ok_or_else(|| Error::SingularJacobian(format!("{:?}", y.as_slice())))?;
        jacobian_side += *w * density * inv * jac_ce;
    }
    let max_difference = (&variance_side - &jacobian_side).amax();
    Ok(MmseEstimate { variance_side, jacobian_side, max_difference })
}
