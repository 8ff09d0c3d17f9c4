//! The bivariate-polynomial family: partial-correlation randomization
//! statistics whose value at `(b1, b2)` is a stored quartic polynomial.

use nalgebra::{DVector, Matrix2, Vector2};
use rayon::prelude::*;

use crate::algebra::BiPoly;
use crate::config::Tolerances;
use crate::design::{DesignData, PermGroup};
use crate::error::{Error, Result};
use crate::scalar::{cst, from_count, Scalar};

/// One bivariate polynomial of total degree at most four per permutation;
/// index 0 is the identity.
#[derive(Debug, Clone)]
pub struct BiPolyFamily<T> {
    polys: Vec<BiPoly<T>>,
}

impl<T: Scalar> BiPolyFamily<T> {
    pub fn from_polys(polys: Vec<BiPoly<T>>) -> Self {
        assert!(!polys.is_empty());
        Self { polys }
    }

    pub fn m(&self) -> usize {
        self.polys.len()
    }

    pub fn poly(&self, g: usize) -> &BiPoly<T> {
        &self.polys[g]
    }

    pub fn value(&self, g: usize, b1: T, b2: T) -> T {
        self.polys[g].eval(b1, b2)
    }
}

/// Builds the partial-correlation family
/// `U_pi = n (bhat_pi - b)' Sxx^{-1} Omega_pi(b) Sxx^{-1} (bhat_pi - b)`
/// where `bhat_pi` regresses the permuted outcome on the two regressors and
/// `Omega_pi(b)` has quadratic entries in `(b1, b2)`.
///
/// Expects exactly two regressors of interest and no nuisance columns or
/// instruments; those belong to the other families.
pub fn build_diciccio<T: Scalar>(
    data: &DesignData<T>,
    group: &PermGroup,
    tol: &Tolerances<T>,
) -> Result<BiPolyFamily<T>> {
    if data.x1().ncols() != 2 {
        return Err(Error::DimensionMismatch(format!(
            "partial-correlation family needs two regressors, got {}",
            data.x1().ncols()
        )));
    }
    if data.x2().ncols() != 0 || data.z().ncols() != 0 {
        return Err(Error::DimensionMismatch(
            "partial-correlation family takes no nuisance regressors or instruments".into(),
        ));
    }

    let n = data.n();
    let inv_n = T::one() / from_count::<T>(n);
    let x1 = data.x1().column(0).into_owned();
    let x2 = data.x1().column(1).into_owned();

    // Sxx = X'X / n (2x2) and its inverse, shared by every permutation.
    let sxx = Matrix2::new(
        dot(&x1, &x1) * inv_n,
        dot(&x1, &x2) * inv_n,
        dot(&x1, &x2) * inv_n,
        dot(&x2, &x2) * inv_n,
    );
    let scale = sxx.amax().powi(2);
    if sxx.determinant().abs() <= tol.det_zero * scale {
        return Err(Error::SingularXX);
    }
    let sxx_inv = sxx.try_inverse().ok_or(Error::SingularXX)?;

    let polys: Vec<BiPoly<T>> = (0..group.m())
        .into_par_iter()
        .map(|g| {
            let py = group.perm(g).apply_vec(data.y());

            // OLS coefficients of the permuted outcome on (x1, x2).
            let xty = Vector2::new(dot(&x1, &py) * inv_n, dot(&x2, &py) * inv_n);
            let bhat = sxx_inv * xty;

            // Quadratic entries of Omega_pi; the weights are the Hadamard
            // products of the regressor columns.
            let omega = |xv: &DVector<T>, xw: &DVector<T>| -> BiPoly<T> {
                let mut c20 = T::zero();
                let mut c11 = T::zero();
                let mut c02 = T::zero();
                let mut c10 = T::zero();
                let mut c01 = T::zero();
                let mut c00 = T::zero();
                for i in 0..n {
                    let w = xv[i] * xw[i];
                    c20 += w * x1[i] * x1[i];
                    c11 += w * x1[i] * x2[i];
                    c02 += w * x2[i] * x2[i];
                    c10 += w * py[i] * x1[i];
                    c01 += w * py[i] * x2[i];
                    c00 += w * py[i] * py[i];
                }
                let two = cst::<T>(2.0);
                BiPoly::from_terms(
                    2,
                    &[
                        (2, 0, c20 * inv_n),
                        (1, 1, two * c11 * inv_n),
                        (0, 2, c02 * inv_n),
                        (1, 0, -two * c10 * inv_n),
                        (0, 1, -two * c01 * inv_n),
                        (0, 0, c00 * inv_n),
                    ],
                )
            };
            let omega11 = omega(&x1, &x1);
            let omega12 = omega(&x1, &x2);
            let omega22 = omega(&x2, &x2);

            // c_v(b) = row v of Sxx^{-1} (bhat - b), a degree-1 polynomial.
            let c_vec = |v: usize| -> BiPoly<T> {
                BiPoly::from_terms(
                    1,
                    &[
                        (0, 0, sxx_inv[(v, 0)] * bhat[0] + sxx_inv[(v, 1)] * bhat[1]),
                        (1, 0, -sxx_inv[(v, 0)]),
                        (0, 1, -sxx_inv[(v, 1)]),
                    ],
                )
            };
            let c0 = c_vec(0);
            let c1 = c_vec(1);

            // U = n * c' Omega c, total degree 4.
            let mut u = c0.mul(&omega11).mul(&c0);
            u = u.add(&c0.mul(&omega12).mul(&c1).scale(cst(2.0)));
            u = u.add(&c1.mul(&omega22).mul(&c1));
            u.scale(from_count::<T>(n))
        })
        .collect();

    Ok(BiPolyFamily { polys })
}

fn dot<T: Scalar>(a: &DVector<T>, b: &DVector<T>) -> T {
    a.iter().zip(b.iter()).map(|(&x, &y)| x * y).sum()
}
