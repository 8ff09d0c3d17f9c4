//! The conic statistic family: two regressors of interest, constant
//! covariance, so each statistic is a quadratic form in
//! `(beta_1, beta_2, 1)` represented by a symmetric 3x3 matrix.

use nalgebra::{DMatrix, Matrix3};
use rayon::prelude::*;

use crate::config::Tolerances;
use crate::design::{DesignData, PermGroup, SpanKind};
use crate::error::{Error, Result};
use crate::scalar::{cst, from_count, Scalar};

/// One symmetric 3x3 matrix per permutation; index 0 is the identity.
#[derive(Debug, Clone)]
pub struct ConicFamily<T> {
    omegas: Vec<Matrix3<T>>,
}

impl<T: Scalar> ConicFamily<T> {
    pub fn from_omegas(omegas: Vec<Matrix3<T>>) -> Self {
        assert!(!omegas.is_empty());
        Self { omegas }
    }

    pub fn m(&self) -> usize {
        self.omegas.len()
    }

    pub fn omega(&self, g: usize) -> &Matrix3<T> {
        &self.omegas[g]
    }

    /// `t_g(b1, b2) = [b1, b2, 1] Omega_g [b1, b2, 1]'`.
    pub fn value(&self, g: usize, b1: T, b2: T) -> T {
        let o = &self.omegas[g];
        let two = cst::<T>(2.0);
        o[(0, 0)] * b1 * b1
            + two * o[(0, 1)] * b1 * b2
            + o[(1, 1)] * b2 * b2
            + two * o[(0, 2)] * b1
            + two * o[(1, 2)] * b2
            + o[(2, 2)]
    }
}

/// Builds the constant-covariance Wald family for two regressors of
/// interest. The covariance uses `Q2 g Y`, which annihilates every
/// permuted regressor of interest, so it does not depend on the null.
pub fn build_conic<T: Scalar>(
    data: &DesignData<T>,
    group: &PermGroup,
    tol: &Tolerances<T>,
) -> Result<ConicFamily<T>> {
    if data.x1().ncols() != 2 {
        return Err(Error::DimensionMismatch(format!(
            "conic family needs two regressors of interest, got {}",
            data.x1().ncols()
        )));
    }
    let k = data.z().ncols();
    if k == 0 {
        return Err(Error::DimensionMismatch(
            "conic family needs at least one instrument".into(),
        ));
    }

    let n = data.n();
    let q1 = crate::design::q_spans(data, group, SpanKind::Q1, tol);
    let q2 = crate::design::q_spans(data, group, SpanKind::Q2, tol);
    let bread = q1.apply_mat(data.z());
    let inv_n = T::one() / from_count::<T>(n);

    let omegas: Vec<Result<Matrix3<T>>> = (0..group.m())
        .into_par_iter()
        .map(|g| {
            let perm = group.perm(g);
            let gy = perm.apply_vec(data.y());
            let q2gy = q2.apply_vec(&gy);

            // Sigma_g = bread' diag(q2gy)^2 bread / n, guaranteed PSD.
            let mut weighted = bread.clone();
            for i in 0..n {
                let w = q2gy[i];
                for j in 0..k {
                    weighted[(i, j)] *= w;
                }
            }
            let sigma = weighted.transpose() * &weighted * inv_n;
            // Scale-free singularity check: a healthy k x k matrix with
            // entries of size a has determinant of order a^k.
            let scale = sigma.amax().powi(k as i32);
            if sigma.determinant().abs() <= tol.det_zero * scale {
                return Err(Error::SingularSigma { g });
            }
            let sigma_inv = sigma
                .try_inverse()
                .ok_or(Error::SingularSigma { g })?;

            // C = bread' g [X1 | -Y]   (k x 3), so Omega = C' Sigma^{-1} C.
            let gx = perm.apply_mat(data.x1());
            let mut stacked = DMatrix::<T>::zeros(n, 3);
            stacked.column_mut(0).copy_from(&gx.column(0));
            stacked.column_mut(1).copy_from(&gx.column(1));
            stacked.column_mut(2).copy_from(&(-&gy));
            let c = bread.transpose() * stacked;
            let omega_dyn = c.transpose() * sigma_inv * &c;

            let mut omega = Matrix3::<T>::zeros();
            for i in 0..3 {
                for j in 0..3 {
                    omega[(i, j)] = omega_dyn[(i, j)];
                }
            }
            // Symmetrize to kill rounding asymmetry.
            let half = cst::<T>(0.5);
            let sym = (omega + omega.transpose()) * half;
            Ok(sym)
        })
        .collect();

    let omegas = omegas.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(ConicFamily { omegas })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::{enumerate_group, PermGroup, PermMode};
    use crate::oracle::{generate_dataset, DgpConfig, Oracle, TestKind};
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn data_2d(n: usize, b: usize, k: usize, seed: u64) -> (DesignData<f64>, PermGroup) {
        let data = generate_dataset(&DgpConfig::standard(n, b, 2, 1, k), seed).unwrap();
        let group =
            enumerate_group(data.blocks(), PermMode::BlockSwap, 120, Some(seed)).unwrap();
        (data, group)
    }

    #[test]
    fn constant_term_is_value_at_origin() {
        let (data, group) = data_2d(24, 4, 3, 4);
        let fam = build_conic(&data, &group, &Tolerances::default()).unwrap();
        for g in 0..group.m() {
            assert_eq!(fam.value(g, 0.0, 0.0), fam.omega(g)[(2, 2)]);
        }
    }

    #[test]
    fn quadratic_form_matches_direct_computation() {
        let tol = Tolerances::default();
        let (data, group) = data_2d(24, 4, 3, 6);
        let fam = build_conic(&data, &group, &tol).unwrap();
        let oracle = Oracle::new(&data, &group, &tol);

        let mut rng = StdRng::seed_from_u64(3);
        for _ in 0..50 {
            let b1: f64 = rng.random_range(-3.0..3.0);
            let b2: f64 = rng.random_range(-3.0..3.0);
            for g in 0..group.m() {
                let direct = oracle.statistic(TestKind::Wald2d, g, &[b1, b2]).unwrap();
                let fast = fam.value(g, b1, b2);
                assert!(
                    (fast - direct).abs() <= 1e-8 * (1.0 + direct.abs()),
                    "g={g} ({b1},{b2}): {fast} vs {direct}"
                );
            }
        }
    }

    #[test]
    fn values_nonnegative_and_omegas_symmetric() {
        let (data, group) = data_2d(24, 4, 2, 9);
        let fam = build_conic(&data, &group, &Tolerances::default()).unwrap();
        let mut rng = StdRng::seed_from_u64(5);
        for g in 0..group.m() {
            assert_eq!(fam.omega(g), &fam.omega(g).transpose());
            for _ in 0..10 {
                let (b1, b2) = (rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0));
                assert!(fam.value(g, b1, b2) >= -1e-10);
            }
        }
    }
}
