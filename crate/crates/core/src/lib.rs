//! Analytic inversion of randomization tests.
//!
//! Permutation-test confidence sets are usually built by grid search:
//! re-test `H0: beta = b` for thousands of candidate `b` values. This crate
//! instead represents every test and randomization statistic algebraically
//! as a function of the hypothesized parameter — a line, an absolute-value
//! line, a rational function, or a bivariate polynomial — and locates the
//! finitely many points where the test statistic's rank inside the
//! randomization distribution can change. The p-value function between
//! those points is constant, so the whole curve, and exact confidence sets
//! at any level, come out of one pass over the group.
//!
//! Module map:
//!
//! - [`algebra`]: polynomials, rational functions, polynomial matrices
//!   (division-free inversion), real root finding.
//! - [`design`]: data container, block-permutation groups, annihilator
//!   projectors.
//! - [`stats`]: per-permutation coefficient builders for each statistic
//!   family (the coefficients are computed once per permutation, which is
//!   the entire speed advantage).
//! - [`invert`]: crossing points, exact p-value step functions, confidence
//!   sets.
//! - [`region`]: two-dimensional machinery — conic classification, fast
//!   p-value grids, projected curves, approximate confidence regions.
//! - [`oracle`]: from-scratch reference implementations used to verify the
//!   fast paths, plus Monte Carlo size simulation and benchmarking.
//!
//! The numeric core is generic over the scalar type (any
//! [`scalar::Scalar`], in practice `f32` or `f64`); the aliases below pin
//! the common `f64` instantiations.

pub mod algebra;
pub mod config;
pub mod design;
pub mod error;
pub mod invert;
pub mod oracle;
pub mod region;
pub mod scalar;
pub mod stats;

pub use config::Tolerances;
pub use error::{Error, Result};
pub use scalar::Scalar;

/// `f64` instantiations of the core types.
pub type Poly64 = algebra::Poly<f64>;
pub type BiPoly64 = algebra::BiPoly<f64>;
pub type PolyMatrix64 = algebra::PolyMatrix<f64>;
pub type Rational64 = algebra::Rational<f64>;
pub type DesignData64 = design::DesignData<f64>;
pub type Projector64 = design::Projector<f64>;
pub type Tolerances64 = config::Tolerances<f64>;
pub type LinearFamily64 = stats::LinearFamily<f64>;
pub type RationalFamily64 = stats::RationalFamily<f64>;
pub type ConicFamily64 = stats::ConicFamily<f64>;
pub type BiPolyFamily64 = stats::BiPolyFamily<f64>;
pub type StepFunction64 = invert::StepFunction<f64>;
pub type ConfidenceSet64 = invert::ConfidenceSet<f64>;
pub type PValueGrid64 = region::PValueGrid<f64>;
