//! Exact and asymptotic coefficients of large powers of power series with
//! nonnegative coefficients.
//!
//! The crate has two halves that check each other:
//!
//! - an exact half: truncated power-series arithmetic over arbitrary-
//!   precision rationals ([`series`], [`spec`]), coefficient extraction for
//!   `psi^n`, and Lagrange-inversion coefficients ([`lagrange`]);
//! - an asymptotic half: the mean/variance functionals of the attached
//!   family ([`khinchin`]), regime-dispatched estimators for the
//!   coefficients of `psi^n` and `h psi^n` ([`powers`]), Otter–Meir–Moon
//!   asymptotics, Lagrangian/Borel–Tanner laws with a Galton–Watson
//!   Monte Carlo referee ([`lagrangian`]), and numeric Gaussianity
//!   diagnostics ([`gaussianity`]).
//!
//! Asymptotic values are carried in log space as [`powers::LogEstimate`]
//! with a labeled factor breakdown, so they stay finite where the values
//! themselves would overflow any fixed-width float.

pub mod error;
pub mod gaussianity;
pub mod khinchin;
pub mod lagrange;
pub mod lagrangian;
pub mod powers;
pub mod rational;
pub mod series;
pub mod spec;

pub use error::{Error, Result};
pub use khinchin::{boundary_eval, evaluate, mean_limit, solve_mean, KhinchinEval, MeanLimit};
pub use series::ExactSeries;
pub use spec::{coeff_of_power, SeriesSpec};
