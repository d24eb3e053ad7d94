use thiserror::Error;

/// Errors shared across the crate.
///
/// Variants distinguish caller mistakes (invalid points, incompatible
/// shapes) from genuine numerical breakdown (vanishing weights, singular
/// statistics); verification routines record the latter per grid point
/// instead of aborting a whole report.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// An observation or parameter point lies outside its open support.
    #[error("point out of support: {0}")]
    OutOfSupport(String),

    /// `vech` was applied to a matrix that is not symmetric within tolerance.
    #[error("matrix is not symmetric: max asymmetry {0:.3e}")]
    NotSymmetric(f64),

    /// A prior discretization produced no usable mass.
    #[error("degenerate prior: {0}")]
    DegeneratePrior(String),

    /// Every posterior weight underflowed; `y` is far outside the predictive
    /// support of the scenario.
    #[error("all posterior weights vanished at y = {0}")]
    AllWeightsVanished(String),

    /// A finite-difference stencil would leave the observation support.
    #[error("finite-difference stencil leaves the support near {0}")]
    StencilOutOfSupport(String),

    /// `|T'(y)|` fell below the configured singularity margin while applying
    /// the weighted derivative operator.
    #[error("sufficient statistic nearly singular: |T'({y})| = {deriv:.3e} <= margin {margin:.3e}")]
    NearSingularStatistic { y: f64, deriv: f64, margin: f64 },

    /// An integration interval is not contained in the observation support.
    #[error("integration interval [{0}, {1}] leaves the support")]
    IntervalOutOfSupport(f64, f64),

    /// Adaptive quadrature failed to reach the requested accuracy.
    #[error("quadrature did not converge: estimated error {0:.3e}")]
    QuadratureNotConverged(f64),

    /// The sufficient-statistic Jacobian is numerically singular at a
    /// quadrature node (condition number above 1e12).
    #[error("sufficient-statistic Jacobian numerically singular at {0}")]
    SingularJacobian(String),

    /// Log-space accumulation overflowed even after max-subtraction.
    #[error("overflow in log-space accumulation: {0}")]
    Overflow(String),

    /// A scenario is incompatible with the requested operation.
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// A sample is too small or has zero spread.
    #[error("degenerate sample: {0}")]
    DegenerateSample(String),

    /// A density estimate is below the reliability floor at the query point.
    #[error("estimated density too low at y = {y}: {density:.3e} <= floor {floor:.3e}")]
    LowDensity { y: f64, density: f64, floor: f64 },

    /// A requested moment or cumulant order exceeds the configured maximum.
    #[error("order {order} exceeds the configured maximum {max}")]
    OrderOutOfRange { order: usize, max: usize },

    /// A configuration document failed validation.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}
