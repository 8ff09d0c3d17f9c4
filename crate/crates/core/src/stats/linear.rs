//! The linear statistic family: every randomization statistic is a line
//! `m_g * beta + b_g` in the hypothesized coefficient.

use nalgebra::DVector;
use rayon::prelude::*;

use crate::config::Tolerances;
use crate::design::{DesignData, PermGroup, SpanKind};
use crate::error::{Error, Result};
use crate::scalar::{from_count, Scalar};

/// Slopes and intercepts of the statistic lines; index 0 is the identity
/// permutation, i.e. the test statistic.
#[derive(Debug, Clone)]
pub struct LinearFamily<T> {
    slopes: Vec<T>,
    intercepts: Vec<T>,
}

impl<T: Scalar> LinearFamily<T> {
    /// Assembles a family directly from slopes and intercepts. Mostly for
    /// tests and synthetic curves; real data goes through [`build_linear`].
    pub fn from_lines(slopes: Vec<T>, intercepts: Vec<T>) -> Self {
        assert_eq!(slopes.len(), intercepts.len());
        assert!(!slopes.is_empty());
        Self { slopes, intercepts }
    }

    pub fn m(&self) -> usize {
        self.slopes.len()
    }

    pub fn slope(&self, g: usize) -> T {
        self.slopes[g]
    }

    pub fn intercept(&self, g: usize) -> T {
        self.intercepts[g]
    }

    /// `T_g(beta)`.
    pub fn value(&self, g: usize, beta: T) -> T {
        self.slopes[g] * beta + self.intercepts[g]
    }
}

/// Builds the linear family: for each permutation `g`,
/// `T_g(beta) = [(Q1 X1)' g Y - (Q1 X1)' g X1 * beta] / sigma_hat_g` with
/// `sigma_hat_g^2 = mean_i (Q1 X1)_i^2 (Q2 g Y)_i^2`.
///
/// Requires a single regressor of interest. Fails with
/// [`Error::DegenerateVariance`] when some `sigma_hat_g` is negligible
/// relative to its scale, which signals that `Q2 g Y` or `Q1 X1` is
/// numerically zero and the data cannot support this test.
pub fn build_linear<T: Scalar>(
    data: &DesignData<T>,
    group: &PermGroup,
    tol: &Tolerances<T>,
) -> Result<LinearFamily<T>> {
    if data.x1().ncols() != 1 {
        return Err(Error::DimensionMismatch(format!(
            "linear family needs a scalar regressor of interest, got {} columns",
            data.x1().ncols()
        )));
    }
    let n = data.n();
    let q1 = crate::design::q_spans(data, group, SpanKind::Q1, tol);
    let q2 = crate::design::q_spans(data, group, SpanKind::Q2, tol);

    let a = q1.apply_vec(&data.x1().column(0).into_owned());
    let a_max = a.amax();
    let x1col = data.x1().column(0).into_owned();
    let inv_n = T::one() / from_count::<T>(n);

    let lines: Vec<Result<(T, T)>> = (0..group.m())
        .into_par_iter()
        .map(|g| {
            let perm = group.perm(g);
            let gy = perm.apply_vec(data.y());
            let gx = perm.apply_vec(&x1col);
            let q2gy = q2.apply_vec(&gy);

            let sigma_sq = a
                .iter()
                .zip(q2gy.iter())
                .map(|(&ai, &qi)| ai * ai * qi * qi)
                .sum::<T>()
                * inv_n;
            let sigma = sigma_sq.sqrt();
            let rms_q = (q2gy.iter().map(|&q| q * q).sum::<T>() * inv_n).sqrt();
            let scale = a_max * rms_q;
            if sigma <= tol.variance * scale || scale.is_zero() {
                return Err(Error::DegenerateVariance {
                    g,
                    sigma: sigma.to_f64().unwrap_or(f64::NAN),
                });
            }

            let m_g = -dot(&a, &gx) / sigma;
            let b_g = dot(&a, &gy) / sigma;
            Ok((m_g, b_g))
        })
        .collect();

    let mut slopes = Vec::with_capacity(group.m());
    let mut intercepts = Vec::with_capacity(group.m());
    for line in lines {
        let (m_g, b_g) = line?;
        slopes.push(m_g);
        intercepts.push(b_g);
    }
    Ok(LinearFamily { slopes, intercepts })
}

fn dot<T: Scalar>(a: &DVector<T>, b: &DVector<T>) -> T {
    a.iter().zip(b.iter()).map(|(&x, &y)| x * y).sum()
}
