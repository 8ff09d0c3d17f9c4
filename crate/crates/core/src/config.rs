//! Numerical tolerances, collected in one place and overridable from the
//! CLI.

use crate::scalar::{cst, Scalar};

/// Relative tolerances used across the pipeline. Every field is relative
/// to a locally computed scale (largest singular value, coefficient
/// magnitude, root magnitude, ...), never absolute.
#[derive(Debug, Clone)]
pub struct Tolerances<T> {
    /// Singular-value cutoff for numerical rank when building annihilators.
    pub rank: T,
    /// Acceptance threshold for the imaginary part of a candidate real
    /// root, and the root deduplication width.
    pub root_accept: T,
    /// Width within which two breakpoints are merged into one.
    pub breakpoint_merge: T,
    /// Slope difference below which two lines count as parallel.
    pub slope: T,
    /// `sigma_hat` below this fraction of its natural scale means the
    /// variance estimate is degenerate.
    pub variance: T,
    /// Determinant magnitude below this fraction of its scale means a
    /// covariance matrix is singular.
    pub det_zero: T,
    /// Denominator magnitude below this fraction of its scale means the
    /// rational statistic is undefined at that point.
    pub denom: T,
    /// Discriminant magnitude below this fraction of the matrix norm flags
    /// a parabola / degenerate-conic candidate.
    pub conic_degenerate: T,
    /// Margin within which two statistic values count as tied. The paper's
    /// indicator uses `<=`, and at a computed crossing the two values agree
    /// only up to root-finding error.
    pub tie: T,
}

impl<T: Scalar> Default for Tolerances<T> {
    fn default() -> Self {
        Self {
            rank: cst(1e-10),
            root_accept: cst(1e-9),
            breakpoint_merge: cst(1e-12),
            slope: cst(1e-12),
            variance: cst(1e-14),
            det_zero: cst(1e-12),
            denom: cst(1e-9),
            conic_degenerate: cst(1e-10),
            tie: cst(1e-9),
        }
    }
}
