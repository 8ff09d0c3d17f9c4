//! Polynomial algebra: univariate and bivariate polynomials, rational
//! functions, polynomial matrices with division-free inversion, and real
//! root finding.
//!
//! Everything here is a pure function of immutable values; all types are
//! freely shareable across threads.

mod bipoly;
mod poly;
mod polymatrix;
mod rational;
mod roots;

pub use bipoly::BiPoly;
pub use poly::Poly;
pub use polymatrix::{PolyMatrix, COFACTOR_CAP};
pub use rational::Rational;
pub use roots::real_roots;
