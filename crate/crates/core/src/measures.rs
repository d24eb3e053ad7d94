//! Priors over the natural parameter, the deterministic map `U = g(X)`
//! closing the Markov chain `U ↔ X ↔ Y`, and posterior measures by Bayes
//! weighting.
//!
//! Every prior — discrete or continuous — is reduced to a finite atomic
//! [`WeightedMeasure`]; posteriors reweight the atoms by the exponentiated
//! log-likelihood, computed in log space with max-subtraction so likelihood
//! ratios far from the predictive bulk cannot overflow.

use std::sync::Arc;

use rand_distr::Distribution;

use crate::efam::{eval_log_likelihood, ExpFamily};
use crate::quadrature;
use crate::{Error, Matrix, Result, Vector};

/// A finite atomic measure over natural-parameter points: the universal
/// prior/posterior representation.
#[derive(Debug, Clone)]
pub struct WeightedMeasure {
    atoms: Vec<(Vector, f64)>,
    normalized: bool,
}

/// Tolerance on the total mass of a measure that claims to be normalized.
pub const NORMALIZATION_TOL: f64 = 1e-12;

impl WeightedMeasure {
    /// Builds a measure from atoms, validating nonnegative weights with at
    /// least one strictly positive, and consistent dimensions.
    pub fn new(atoms: Vec<(Vector, f64)>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::DegeneratePrior("no atoms".into()));
        }
        let dim = atoms[0].0.len();
        let mut positive = false;
        for (x, w) in &atoms {
            if x.len() != dim {
                return Err(Error::ShapeMismatch("atoms of mixed dimension".into()));
            }
            if !w.is_finite() || *w < 0.0 {
                return Err(Error::DegeneratePrior(format!("invalid weight {w}")));
            }
            positive |= *w > 0.0;
        }
        if !positive {
            return Err(Error::DegeneratePrior("all weights are zero".into()));
        }
        let total: f64 = atoms.iter().map(|(_, w)| w).sum();
        Ok(Self { atoms, normalized: (total - 1.0).abs() <= NORMALIZATION_TOL })
    }

    /// Builds a measure and rescales the weights to total mass one.
    pub fn normalized(mut atoms: Vec<(Vector, f64)>) -> Result<Self> {
        let total: f64 = atoms.iter().map(|(_, w)| w).sum();
        if !(total.is_finite() && total > 0.0) {
            return Err(Error::DegeneratePrior(format!("total mass {total}")));
        }
        for (_, w) in &mut atoms {
            *w /= total;
        }
        let mut m = Self::new(atoms)?;
        m.normalized = true;
        Ok(m)
    }

    /// A unit point mass at `x`.
    pub fn point_mass(x: Vector) -> Self {
        Self { atoms: vec![(x, 1.0)], normalized: true }
    }

    pub fn atoms(&self) -> &[(Vector, f64)] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.atoms[0].0.len()
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|(_, w)| w).sum()
    }

    /// `Σ wᵢ f(xᵢ)` for vector-valued `f`. Requires a normalized measure.
    pub fn expect<F>(&self, f: F) -> Vector
    where
        F: Fn(&Vector) -> Vector,
    {
        assert!(self.normalized, "expect requires a normalized measure");
        let mut acc: Option<Vector> = None;
        for (x, w) in &self.atoms {
            let val = f(x) * *w;
            acc = Some(match acc {
                None => val,
                Some(a) => a + val,
            });
        }
        acc.expect("measure has atoms")
    }

    /// `Σ wᵢ f(xᵢ)` for scalar `f`. Requires a normalized measure.
    pub fn expect_scalar<F>(&self, f: F) -> f64
    where
        F: Fn(&Vector) -> f64,
    {
        assert!(self.normalized, "expect requires a normalized measure");
        self.atoms.iter().map(|(x, w)| w * f(x)).sum()
    }

    /// Cross-covariance `Σ wᵢ f(xᵢ) g(xᵢ)ᵀ − (Σ wᵢ f(xᵢ))(Σ wᵢ g(xᵢ))ᵀ`
    /// as an `a×b` matrix. Requires a normalized measure.
    pub fn cov<F, G>(&self, f: F, g: G) -> Matrix
    where
        F: Fn(&Vector) -> Vector,
        G: Fn(&Vector) -> Vector,
    {
        assert!(self.normalized, "cov requires a normalized measure");
        let mean_f = self.expect(&f);
        let mean_g = self.expect(&g);
        let mut acc = Matrix::zeros(mean_f.len(), mean_g.len());
        for (x, w) in &self.atoms {
            let fx = f(x);
            let gx = g(x);
            acc += *w * fx * gx.transpose();
        }
        acc - mean_f * mean_g.transpose()
    }
}

/// Named scalar prior densities available to continuous priors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DensityKind {
    Normal { mean: f64, var: f64 },
    Gamma { shape: f64, rate: f64 },
}

impl DensityKind {
    pub fn log_density(&self, x: f64) -> f64 {
        match *self {
            DensityKind::Normal { mean, var } => {
                -0.5 * ((2.0 * std::f64::consts::PI * var).ln() + (x - mean) * (x - mean) / var)
            }
            DensityKind::Gamma { shape, rate } => {
                if x <= 0.0 {
                    f64::NEG_INFINITY
                } else {
                    shape * rate.ln() + (shape - 1.0) * x.ln() - rate * x
                        - statrs::function::gamma::ln_gamma(shape)
                }
            }
        }
    }

    /// Default truncation covering all but well under `1e-8` of the mass.
    pub fn default_bounds(&self) -> (f64, f64) {
        match *self {
            DensityKind::Normal { mean, var } => {
                let sd = var.sqrt();
                (mean - 8.0 * sd, mean + 8.0 * sd)
            }
            DensityKind::Gamma { shape, rate } => {
                (0.0, (shape + 12.0 * shape.sqrt() + 25.0) / rate)
            }
        }
    }

    fn sample(&self, rng: &mut dyn rand::RngCore) -> f64 {
        match *self {
            DensityKind::Normal { mean, var } => rand_distr::Normal::new(mean, var.sqrt())
                .expect("valid normal parameters")
                .sample(rng),
            DensityKind::Gamma { shape, rate } => rand_distr::Gamma::new(shape, 1.0 / rate)
                .expect("valid gamma parameters")
                .sample(rng),
        }
    }
}

/// A continuous scalar prior with its quadrature discretization rule.
#[derive(Debug, Clone)]
pub struct ContinuousPrior {
    pub density: DensityKind,
    /// Gauss–Legendre node count on the truncation interval.
    pub nodes: usize,
    /// Truncation interval; must cover essentially all prior mass.
    pub bounds: (f64, f64),
}

/// Default node count for continuous-prior discretization.
pub const DEFAULT_PRIOR_NODES: usize = 64;

impl ContinuousPrior {
    pub fn new(density: DensityKind) -> Self {
        Self { density, nodes: DEFAULT_PRIOR_NODES, bounds: density.default_bounds() }
    }

    pub fn with_rule(density: DensityKind, nodes: usize, bounds: (f64, f64)) -> Self {
        Self { density, nodes, bounds }
    }
}

/// Prior over the natural parameter: either finite atoms or a scalar density
/// with a deterministic quadrature rule.
#[derive(Debug, Clone)]
pub enum Prior {
    Discrete(WeightedMeasure),
    Continuous(ContinuousPrior),
}

impl Prior {
    /// Draws one parameter point from the prior. Continuous draws are
    /// re-sampled (deterministically in the generator sequence) until they
    /// land inside the truncation interval.
    pub fn sample(&self, rng: &mut dyn rand::RngCore) -> Vector {
        match self {
            Prior::Discrete(measure) => {
                let total = measure.total_mass();
                let mut u = rand::Rng::gen::<f64>(rng) * total;
                for (x, w) in measure.atoms() {
                    u -= w;
                    if u <= 0.0 {
                        return x.clone();
                    }
                }
                measure.atoms().last().expect("measure has atoms").0.clone()
            }
            Prior::Continuous(cont) => loop {
                let x = cont.density.sample(rng);
                if x >= cont.bounds.0 && x <= cont.bounds.1 {
                    return Vector::from_element(1, x);
                }
            },
        }
    }
}

/// Reduces a prior to a normalized atomic measure.
///
/// Continuous priors are realized at Gauss–Legendre nodes with weights
/// `density × quadrature weight` and then normalized; discrete priors pass
/// through (normalizing if needed).
pub fn discretize(prior: &Prior) -> Result<WeightedMeasure> {
    match prior {
        Prior::Discrete(measure) => WeightedMeasure::normalized(measure.atoms().to_vec()),
        Prior::Continuous(cont) => {
            let (lo, hi) = cont.bounds;
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::DegeneratePrior(format!("invalid bounds [{lo}, {hi}]")));
            }
            let atoms: Vec<(Vector, f64)> = quadrature::nodes_on_interval(cont.nodes, lo, hi)
                .into_iter()
                .map(|(x, w)| (Vector::from_element(1, x), cont.density.log_density(x).exp() * w))
                .collect();
            let total: f64 = atoms.iter().map(|(_, w)| w).sum();
            if !(total.is_finite() && total > 0.0) {
                return Err(Error::DegeneratePrior(
                    "all quadrature weights underflowed".into(),
                ));
            }
            WeightedMeasure::normalized(atoms)
        }
    }
}

/// Deterministic maps `x ↦ g(x)` defining `U = g(X)`, which makes
/// `U ↔ X ↔ Y` a Markov chain by construction.
#[derive(Debug, Clone)]
pub enum UMap {
    Identity,
    /// `x ↦ x^ℓ` (scalar parameter only).
    Power(u32),
    /// `x ↦ x_i` (zero-based component).
    Component(usize),
    /// `x ↦ A x + b`.
    Affine { a: Matrix, b: Vector },
    /// `x ↦ (x xᵀ)^ℓ x`.
    OuterPower(u32),
}

impl UMap {
    pub fn validate(&self, dim_param: usize) -> Result<()> {
        match self {
            UMap::Identity | UMap::OuterPower(_) => Ok(()),
            UMap::Power(_) => {
                if dim_param == 1 {
                    Ok(())
                } else {
                    Err(Error::ShapeMismatch("power map needs a scalar parameter".into()))
                }
            }
            UMap::Component(i) => {
                if *i < dim_param {
                    Ok(())
                } else {
                    Err(Error::ShapeMismatch(format!(
                        "component {i} out of range for dimension {dim_param}"
                    )))
                }
            }
            UMap::Affine { a, b } => {
                if a.ncols() == dim_param && a.nrows() == b.len() {
                    Ok(())
                } else {
                    Err(Error::ShapeMismatch(format!(
                        "affine map needs a {0}-column matrix and matching offset, got {1}x{2} and {3}",
                        dim_param,
                        a.nrows(),
                        a.ncols(),
                        b.len()
                    )))
                }
            }
        }
    }

    pub fn output_dim(&self, dim_param: usize) -> usize {
        match self {
            UMap::Identity | UMap::OuterPower(_) => dim_param,
            UMap::Power(_) | UMap::Component(_) => 1,
            UMap::Affine { a, .. } => a.nrows(),
        }
    }

    pub fn apply(&self, x: &Vector) -> Vector {
        match self {
            UMap::Identity => x.clone(),
            UMap::Power(ell) => Vector::from_element(1, x[0].powi(*ell as i32)),
            UMap::Component(i) => Vector::from_element(1, x[*i]),
            UMap::Affine { a, b } => a * x + b,
            UMap::OuterPower(ell) => {
                let mut v = x.clone();
                for _ in 0..*ell {
                    v = x * x.dot(&v);
                }
                v
            }
        }
    }

    pub fn describe(&self) -> String {
        match self {
            UMap::Identity => "identity".to_string(),
            UMap::Power(ell) => format!("power({ell})"),
            UMap::Component(i) => format!("component({i})"),
            UMap::Affine { a, b } => format!("affine({}x{}, offset {})", a.nrows(), a.ncols(), b.len()),
            UMap::OuterPower(ell) => format!("outer_power({ell})"),
        }
    }
}

/// An observation model with a prior over its natural parameter and a
/// deterministic `U`-map: everything the Bayes engine needs.
#[derive(Clone)]
pub struct Scenario {
    pub name: String,
    pub model: Arc<dyn ExpFamily>,
    pub prior: Prior,
    pub u_map: UMap,
    prior_atoms: WeightedMeasure,
}

impl Scenario {
    /// Validates shapes and discretizes the prior once.
    pub fn new(
        name: impl Into<String>,
        model: Arc<dyn ExpFamily>,
        prior: Prior,
        u_map: UMap,
    ) -> Result<Self> {
        let d = model.dim_param();
        u_map.validate(d)?;
        let prior_atoms = discretize(&prior)?;
        if prior_atoms.dim() != d {
            return Err(Error::ShapeMismatch(format!(
                "prior atoms have dimension {}, model expects {d}",
                prior_atoms.dim()
            )));
        }
        for (x, w) in prior_atoms.atoms() {
            if *w > 0.0 && !model.param_in_support(x) {
                return Err(Error::OutOfSupport(format!(
                    "prior atom {:?} outside the natural-parameter domain of {}",
                    x.as_slice(),
                    model.name()
                )));
            }
        }
        Ok(Self { name: name.into(), model, prior, u_map, prior_atoms })
    }

    /// The discretized prior.
    pub fn prior_atoms(&self) -> &WeightedMeasure {
        &self.prior_atoms
    }

    /// Output dimension of the `U`-map.
    pub fn dim_u(&self) -> usize {
        self.u_map.output_dim(self.model.dim_param())
    }

    /// Whether both the parameter and the observation are scalar.
    pub fn is_scalar(&self) -> bool {
        self.model.dim_param() == 1 && self.model.dim_obs() == 1
    }
}

fn atom_log_weights(scenario: &Scenario, y: &Vector) -> Result<Vec<f64>> {
    scenario
        .prior_atoms
        .atoms()
        .iter()
        .map(|(x, w)| Ok(w.ln() + eval_log_likelihood(scenario.model.as_ref(), x, y)?))
        .collect()
}

/// The posterior measure `P(X | Y = y)`: prior atoms reweighted by the
/// likelihood, normalized in log space with max-subtraction.
pub fn posterior(scenario: &Scenario, y: &Vector) -> Result<WeightedMeasure> {
    let log_w = atom_log_weights(scenario, y)?;
    let max = log_w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return Err(Error::AllWeightsVanished(format!("{:?}", y.as_slice())));
    }
    let atoms: Vec<(Vector, f64)> = scenario
        .prior_atoms
        .atoms()
        .iter()
        .zip(&log_w)
        .map(|((x, _), lw)| (x.clone(), (lw - max).exp()))
        .collect();
    WeightedMeasure::normalized(atoms)
}

/// `log f_Y(y) = log Σᵢ wᵢ·f(y | xᵢ)` over the prior atoms.
pub fn log_marginal_density(scenario: &Scenario, y: &Vector) -> Result<f64> {
    let log_w = atom_log_weights(scenario, y)?;
    let max = log_w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return Err(Error::AllWeightsVanished(format!("{:?}", y.as_slice())));
    }
    let sum: f64 = log_w.iter().map(|lw| (lw - max).exp()).sum();
    Ok(max + sum.ln())
}

/// The marginal density `f_Y(y)`, strictly positive or an error.
pub fn marginal_density(scenario: &Scenario, y: &Vector) -> Result<f64> {
    let value = log_marginal_density(scenario, y)?.exp();
    if value <= 0.0 {
        return Err(Error::AllWeightsVanished(format!("{:?}", y.as_slice())));
    }
    Ok(value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::efam::{ExponentialRate, GaussianKnownVariance};
    use crate::vector;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn two_point_scenario() -> Scenario {
        let atoms = vec![
            (vector(&[-1.0]), 0.5),
            (vector(&[1.0]), 0.5),
        ];
        Scenario::new(
            "two_point",
            Arc::new(GaussianKnownVariance::new(1.0).unwrap()),
            Prior::Discrete(WeightedMeasure::new(atoms).unwrap()),
            UMap::Identity,
        )
        .unwrap()
    }

    fn exp_gamma_scenario() -> Scenario {
        Scenario::new(
            "exp_gamma",
            Arc::new(ExponentialRate),
            Prior::Continuous(ContinuousPrior::with_rule(
                DensityKind::Gamma { shape: 2.0, rate: 1.0 },
                128,
                (0.0, 30.0),
            )),
            UMap::Identity,
        )
        .unwrap()
    }

    #[test]
    fn discrete_prior_passes_through() {
        let atoms = vec![(vector(&[-1.0]), 0.5), (vector(&[1.0]), 0.5)];
        let measure = WeightedMeasure::new(atoms.clone()).unwrap();
        let out = discretize(&Prior::Discrete(measure)).unwrap();
        assert_eq!(out.len(), 2);
        assert_abs_diff_eq!(out.atoms()[0].1, 0.5);
        assert_abs_diff_eq!(out.atoms()[1].1, 0.5);
    }

    #[test]
    fn normal_discretization_is_centered() {
        let prior = Prior::Continuous(ContinuousPrior::with_rule(
            DensityKind::Normal { mean: 0.0, var: 1.0 },
            64,
            (-8.0, 8.0),
        ));
        let atoms = discretize(&prior).unwrap();
        assert_abs_diff_eq!(atoms.total_mass(), 1.0, epsilon = 1e-14);
        let mean = atoms.expect_scalar(|x| x[0]);
        assert_abs_diff_eq!(mean, 0.0, epsilon = 1e-8);
    }

    #[test]
    fn continuous_prior_raw_mass_covers_box() {
        // Quadrature of the bare density over the truncation interval: the
        // discretization may only lose truncated tail mass.
        let density = DensityKind::Normal { mean: 0.0, var: 1.0 };
        let mass = quadrature::integrate(|x| Ok(density.log_density(x).exp()), -8.0, 8.0, 64)
            .unwrap();
        assert!(mass >= 1.0 - 1e-6 && mass <= 1.0 + 1e-9, "mass {mass}");

        let gamma = DensityKind::Gamma { shape: 2.0, rate: 1.0 };
        let (lo, hi) = gamma.default_bounds();
        let mass = quadrature::integrate(|x| Ok(gamma.log_density(x).exp()), lo, hi, 128).unwrap();
        assert!(mass >= 1.0 - 1e-6 && mass <= 1.0 + 1e-9, "mass {mass}");
    }

    #[test]
    fn gamma_discretization_reproduces_mean() {
        let prior = Prior::Continuous(ContinuousPrior::with_rule(
            DensityKind::Gamma { shape: 2.0, rate: 1.0 },
            128,
            (0.0, 30.0),
        ));
        let atoms = discretize(&prior).unwrap();
        assert_abs_diff_eq!(atoms.expect_scalar(|x| x[0]), 2.0, epsilon = 1e-6);
    }

    #[test]
    fn posterior_symmetric_at_origin() {
        let s = two_point_scenario();
        let post = posterior(&s, &vector(&[0.0])).unwrap();
        assert_abs_diff_eq!(post.atoms()[0].1, 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(post.atoms()[1].1, 0.5, epsilon = 1e-14);
    }

    #[test]
    fn posterior_likelihood_ratio() {
        // Two-point prior, Gaussian model: w(+1)/w(-1) = e^{2y}.
        let s = two_point_scenario();
        let post = posterior(&s, &vector(&[1.0])).unwrap();
        let ratio = post.atoms()[1].1 / post.atoms()[0].1;
        assert_abs_diff_eq!(ratio, (2.0f64).exp(), epsilon = 1e-12);
    }

    #[test]
    fn conjugate_gamma_exponential_update() {
        // Gamma(2,1) prior over the rate, one exponential observation y = 1:
        // posterior is Gamma(3, 2) with mean 1.5.
        let s = exp_gamma_scenario();
        let post = posterior(&s, &vector(&[1.0])).unwrap();
        assert_abs_diff_eq!(post.expect_scalar(|x| x[0]), 1.5, epsilon = 1e-6);
    }

    #[test]
    fn posterior_of_point_mass_is_point_mass() {
        let s = Scenario::new(
            "delta",
            Arc::new(GaussianKnownVariance::new(1.0).unwrap()),
            Prior::Discrete(WeightedMeasure::point_mass(vector(&[0.7]))),
            UMap::Identity,
        )
        .unwrap();
        for y in [-3.0, 0.0, 2.5] {
            let post = posterior(&s, &vector(&[y])).unwrap();
            assert_eq!(post.len(), 1);
            assert_abs_diff_eq!(post.atoms()[0].1, 1.0);
            assert_abs_diff_eq!(post.atoms()[0].0[0], 0.7);
        }
    }

    #[test]
    fn expect_and_cov_on_simple_measures() {
        let delta = WeightedMeasure::point_mass(vector(&[2.0]));
        assert_abs_diff_eq!(delta.expect_scalar(|x| x[0] * x[0]), 4.0);
        let zero_cov = delta.cov(|x| x.clone(), |x| x.clone());
        assert_abs_diff_eq!(zero_cov[(0, 0)], 0.0);

        let s = two_point_scenario();
        let post = posterior(&s, &vector(&[0.0])).unwrap();
        assert_abs_diff_eq!(post.expect(|x| x.clone())[0], 0.0, epsilon = 1e-14);
        let var = post.cov(|x| x.clone(), |x| x.clone());
        assert_abs_diff_eq!(var[(0, 0)], 1.0, epsilon = 1e-14);
    }

    #[test]
    fn gamma_posterior_variance() {
        // Gamma(3, 2) has variance 3/4.
        let s = exp_gamma_scenario();
        let post = posterior(&s, &vector(&[1.0])).unwrap();
        let var = post.cov(|x| x.clone(), |x| x.clone());
        assert_abs_diff_eq!(var[(0, 0)], 0.75, epsilon = 1e-6);
    }

    #[test]
    fn marginal_density_gaussian_convolution() {
        // N(0,1) prior, unit-variance Gaussian observation: marginal N(0, 2).
        let s = Scenario::new(
            "gaussian_conjugate",
            Arc::new(GaussianKnownVariance::new(1.0).unwrap()),
            Prior::Continuous(ContinuousPrior::with_rule(
                DensityKind::Normal { mean: 0.0, var: 1.0 },
                64,
                (-8.0, 8.0),
            )),
            UMap::Identity,
        )
        .unwrap();
        let expected = 1.0 / (4.0 * std::f64::consts::PI).sqrt();
        assert_abs_diff_eq!(
            marginal_density(&s, &vector(&[0.0])).unwrap(),
            expected,
            epsilon = 1e-6
        );
    }

    #[test]
    fn marginal_density_exp_gamma_closed_form() {
        // ∫ b e^{-by} Gamma(b; 2, 1) db = 2/(1+y)^3; at y = 1 this is 1/4.
        let s = exp_gamma_scenario();
        assert_abs_diff_eq!(
            marginal_density(&s, &vector(&[1.0])).unwrap(),
            0.25,
            epsilon = 1e-6
        );
    }

    #[test]
    fn marginal_of_point_mass_is_likelihood() {
        let model = Arc::new(GaussianKnownVariance::new(1.0).unwrap());
        let s = Scenario::new(
            "delta",
            model.clone(),
            Prior::Discrete(WeightedMeasure::point_mass(vector(&[0.7]))),
            UMap::Identity,
        )
        .unwrap();
        let y = vector(&[1.3]);
        let lik = eval_log_likelihood(model.as_ref(), &vector(&[0.7]), &y).unwrap().exp();
        assert_abs_diff_eq!(marginal_density(&s, &y).unwrap(), lik, epsilon = 1e-14);
    }

    #[test]
    fn far_tail_observation_vanishes() {
        let s = two_point_scenario();
        // log-likelihood ~ -y²/2 underflows past any finite exponent here.
        let y = vector(&[1e200]);
        assert!(matches!(posterior(&s, &y), Err(Error::AllWeightsVanished(_))));
        assert!(matches!(marginal_density(&s, &y), Err(Error::AllWeightsVanished(_))));
    }

    #[test]
    fn power_map_requires_scalar_parameter() {
        assert!(UMap::Power(2).validate(2).is_err());
        assert!(UMap::Power(2).validate(1).is_ok());
    }

    #[test]
    fn outer_power_matches_scalar_power() {
        let x = vector(&[1.5]);
        assert_abs_diff_eq!(UMap::OuterPower(1).apply(&x)[0], 1.5f64.powi(3));
        let v = vector(&[1.0, 2.0]);
        // (v vᵀ)(v) = v (vᵀv) = 5 v.
        let out = UMap::OuterPower(1).apply(&v);
        assert_abs_diff_eq!(out[0], 5.0);
        assert_abs_diff_eq!(out[1], 10.0);
    }

    proptest! {
        // Self-covariance of any atomic measure is symmetric PSD up to 1e-10.
        #[test]
        fn cov_is_positive_semidefinite(seed in any::<u64>(), n in 2usize..6) {
            let mut state = seed | 1;
            let mut next = || {
                state ^= state << 13;
                state ^= state >> 7;
                state ^= state << 17;
                (state >> 11) as f64 / (1u64 << 53) as f64
            };
            let atoms: Vec<(Vector, f64)> = (0..n)
                .map(|_| (vector(&[next() * 4.0 - 2.0, next() * 4.0 - 2.0]), next() + 1e-3))
                .collect();
            let m = WeightedMeasure::normalized(atoms).unwrap();
            let c = m.cov(|x| x.clone(), |x| x.clone());
            prop_assert!((&c - c.transpose()).amax() < 1e-12);
            let min_eig = crate::linalg::min_symmetric_eigenvalue(&c);
            prop_assert!(min_eig >= -1e-10, "min eigenvalue {min_eig}");
        }
    }
}
