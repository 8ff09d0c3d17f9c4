//! Per-permutation algebraic representations of the statistic families.
//!
//! Every builder walks the permutation group once and stores, for each
//! permutation, the coefficients of that statistic as a function of the
//! hypothesized parameter. Coefficient construction is independent across
//! permutations and runs in parallel; the resulting families are immutable
//! and indexed with the identity at 0.

mod conic;
mod diciccio;
mod linear;
mod rational;

pub use conic::{build_conic, ConicFamily};
pub use diciccio::{build_diciccio, BiPolyFamily};
pub use linear::{build_linear, LinearFamily};
pub use rational::{build_dhault, build_rational, RationalFamily, ResidualWaldData};
