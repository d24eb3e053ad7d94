//! Numerical laboratory for derivative identities of the conditional
//! expectation operator `y ↦ E[U | Y = y]` when the observation law
//! `P(Y | X = x)` belongs to a continuous exponential family
//!
//! ```text
//! f(y | x) = h(y) · exp(⟨x, T(y)⟩ − φ(x)),
//! ```
//!
//! with natural parameter `x`, sufficient statistic `T`, base measure `h`
//! and log-partition `φ`.
//!
//! The crate has three layers:
//!
//! * a Bayes engine ([`measures`], [`bayes`]) that represents priors over the
//!   natural parameter as finite atomic measures and evaluates posteriors,
//!   conditional moments, cumulant-generating functions and the MMSE matrix
//!   by deterministic quadrature;
//! * a finite-difference calculus ([`calculus`]) with step-size schedules,
//!   Richardson extrapolation and the weighted derivative operator
//!   `D = (1/T'(y)) d/dy` used by the moment and cumulant recursions;
//! * a verification suite ([`identities`]) that evaluates both sides of each
//!   derivative identity by independent routes over an observation grid and
//!   reports residuals, plus an empirical-Bayes estimator
//!   ([`empirical_bayes`]) that recovers posterior moments from marginal
//!   samples alone via Tweedie's formula and its higher-order form.
//!
//! Built-in observation models live in [`efam`]; scenario configuration files
//! are parsed by [`config`].

pub mod bayes;
pub mod calculus;
pub mod config;
pub mod efam;
pub mod empirical_bayes;
mod error;
pub mod identities;
pub mod linalg;
pub mod measures;
pub mod quadrature;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Dense dynamically-sized column vector of `f64`.
pub type Vector = nalgebra::DVector<f64>;
/// Dense dynamically-sized matrix of `f64`.
pub type Matrix = nalgebra::DMatrix<f64>;

/// Convenience constructor for a [`Vector`] from a slice.
pub fn vector(entries: &[f64]) -> Vector {
    Vector::from_column_slice(entries)
}
