//! Registry of built-in observation models, constructible by name plus a
//! parameter map (the form scenario files use).

use std::sync::Arc;

use crate::{Error, Result};

use super::{
    ExpFamily, ExponentialRate, GammaShapeRate, GaussianKnownVariance, GaussianUnknownMeanCov,
    GaussianZeroMeanVariance, LogDetGradient, ParamMap, Wishart,
};

/// One catalog row, for listings and documentation.
pub struct CatalogEntry {
    pub name: &'static str,
    /// Constructor parameters accepted in `model.params`.
    pub constructor: &'static str,
    /// Named source parameters accepted by prior atoms for this model.
    pub source_params: &'static str,
    pub summary: &'static str,
}

/// All built-in models in a fixed order.
pub fn entries() -> Vec<CatalogEntry> {
    vec![
        CatalogEntry {
            name: "GaussianKnownVariance",
            constructor: "sigma2 (default 1)",
            source_params: "mean",
            summary: "scalar Gaussian, x = mean/sigma2, T(y) = y",
        },
        CatalogEntry {
            name: "GaussianZeroMeanVariance",
            constructor: "none",
            source_params: "variance",
            summary: "scalar zero-mean Gaussian, x = -1/(2 variance), T(y) = y^2",
        },
        CatalogEntry {
            name: "GaussianUnknownMeanCov",
            constructor: "k (default 2)",
            source_params: "mean, cov",
            summary: "multivariate Gaussian, x = [cov^-1 mean; vec(-cov^-1/2)], T(y) = [y; vec(y y')]",
        },
        CatalogEntry {
            name: "ExponentialRate",
            constructor: "none",
            source_params: "rate",
            summary: "exponential, x = rate, T(y) = -y",
        },
        CatalogEntry {
            name: "GammaShapeRate",
            constructor: "none",
            source_params: "shape, rate",
            summary: "gamma, x = [-rate, shape-1], T(y) = [y, log y]",
        },
        CatalogEntry {
            name: "Wishart",
            constructor: "p in {1, 2} (default 1), erratum (default false)",
            source_params: "v, n",
            summary: "Wishart on y = vech(A), x = [-vec(V^-1)/2; (n-p-1)/2], T(y) = [vec(A), log|A|]",
        },
    ]
}

fn opt_f64(params: &ParamMap, key: &str, default: f64) -> Result<f64> {
    match params.get(key) {
        None => Ok(default),
        Some(v) => v
            .as_f64()
            .ok_or_else(|| Error::InvalidConfig(format!("field `{key}` must be numeric"))),
    }
}

fn opt_bool(params: &ParamMap, key: &str, default: bool) -> Result<bool> {
    match params.get(key) {
        None => Ok(default),
        Some(v) => v
            .as_bool()
            .ok_or_else(|| Error::InvalidConfig(format!("field `{key}` must be boolean"))),
    }
}

/// Constructs a model by catalog name. `erratum_override` forces the
/// published-erratum Wishart Jacobian regardless of the parameter map.
pub fn build_with_erratum(
    name: &str,
    params: &ParamMap,
    erratum_override: bool,
) -> Result<Arc<dyn ExpFamily>> {
    match name {
        "GaussianKnownVariance" => Ok(Arc::new(GaussianKnownVariance::new(opt_f64(
            params, "sigma2", 1.0,
        )?)?)),
        "GaussianZeroMeanVariance" => Ok(Arc::new(GaussianZeroMeanVariance)),
        "GaussianUnknownMeanCov" => {
            let k = opt_f64(params, "k", 2.0)?;
            if k.fract() != 0.0 || k < 1.0 {
                return Err(Error::InvalidConfig("k must be a positive integer".into()));
            }
            Ok(Arc::new(GaussianUnknownMeanCov::new(k as usize)?))
        }
        "ExponentialRate" => Ok(Arc::new(ExponentialRate)),
        "GammaShapeRate" => Ok(Arc::new(GammaShapeRate)),
        "Wishart" => {
            let p = opt_f64(params, "p", 1.0)?;
            if p.fract() != 0.0 || p < 1.0 {
                return Err(Error::InvalidConfig("p must be a positive integer".into()));
            }
            let erratum = erratum_override || opt_bool(params, "erratum", false)?;
            let gradient = if erratum {
                LogDetGradient::PublishedErratum
            } else {
                LogDetGradient::Exact
            };
            Ok(Arc::new(Wishart::new(p as usize, gradient)?))
        }
        other => Err(Error::InvalidConfig(format!(
            "unknown model `{other}`; known models: {}",
            entries().iter().map(|e| e.name).collect::<Vec<_>>().join(", ")
        ))),
    }
}

/// Constructs a model by catalog name with its declared parameters.
pub fn build(name: &str, params: &ParamMap) -> Result<Arc<dyn ExpFamily>> {
    build_with_erratum(name, params, false)
}
