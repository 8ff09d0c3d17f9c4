//! The rational statistic family: Wald-like statistics whose covariance
//! estimator depends on the null, written as `N_g(beta) / D_g(beta)`.
//!
//! Each covariance entry is the exact quadratic
//! `s_g^{vw}(beta) = a + b*beta + c*beta^2`; the matrix is inverted
//! symbolically through its adjugate and determinant, so the statistic is a
//! ratio of polynomials whose coefficients are computed once per
//! permutation.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::algebra::{Poly, PolyMatrix};
use crate::config::Tolerances;
use crate::design::{DesignData, PermGroup, SpanKind};
use crate::error::{Error, Result};
use crate::scalar::{from_count, Scalar};

/// Numerator and denominator polynomials per permutation; index 0 is the
/// identity. Degrees are at most `2k` for `k` instruments.
#[derive(Debug, Clone)]
pub struct RationalFamily<T> {
    nums: Vec<Poly<T>>,
    dens: Vec<Poly<T>>,
}

impl<T: Scalar> RationalFamily<T> {
    pub fn from_parts(nums: Vec<Poly<T>>, dens: Vec<Poly<T>>) -> Self {
        assert_eq!(nums.len(), dens.len());
        assert!(!nums.is_empty());
        assert!(dens.iter().all(|d| !d.is_zero()));
        Self { nums, dens }
    }

    pub fn m(&self) -> usize {
        self.nums.len()
    }

    pub fn num(&self, g: usize) -> &Poly<T> {
        &self.nums[g]
    }

    pub fn den(&self, g: usize) -> &Poly<T> {
        &self.dens[g]
    }

    /// `t_g(beta) = N_g(beta) / D_g(beta)`. The caller is responsible for
    /// keeping clear of denominator roots; see the inversion engine.
    pub fn value(&self, g: usize, beta: T) -> T {
        self.nums[g].eval(beta) / self.dens[g].eval(beta)
    }

    /// Scale for judging whether `D_g(beta)` is negligibly small:
    /// the largest coefficient magnitude inflated by the evaluation point.
    pub fn den_scale(&self, g: usize, beta: T) -> T {
        let deg = self.dens[g].degree().unwrap_or(0) as i32;
        self.dens[g].max_abs_coeff() * T::one().max(beta.abs()).powi(deg)
    }
}

/// Per-permutation ingredients for the shared assembly pipeline: the
/// statistic is `T(beta)' S(beta)^{-1} T(beta)` with
/// `T(beta) = num_const - num_slope * beta` and
/// `S(beta)_{vw} = mean_i bread_iv bread_iw (var_const - var_slope * beta)_i^2`.
struct RationalParts<T> {
    num_const: DVector<T>,
    num_slope: DVector<T>,
    var_const: DVector<T>,
    var_slope: DVector<T>,
}

/// Shared pipeline for every statistic of the sandwiched-covariance shape.
fn assemble_family<T: Scalar>(
    bread: &DMatrix<T>,
    parts: Vec<RationalParts<T>>,
    n: usize,
    tol: &Tolerances<T>,
) -> Result<RationalFamily<T>> {
    let k = bread.ncols();
    let inv_n = T::one() / from_count::<T>(n);

    let built: Vec<Result<(Poly<T>, Poly<T>)>> = parts
        .par_iter()
        .enumerate()
        .map(|(g, part)| {
            // Quadratic covariance entries from the diag-sandwich products,
            // each computed once per (v, w).
            let mut entries = vec![Poly::zero(); k * k];
            for v in 0..k {
                for w in v..k {
                    let dvw: Vec<T> = (0..n).map(|i| bread[(i, v)] * bread[(i, w)]).collect();
                    let mut a = T::zero();
                    let mut b = T::zero();
                    let mut c = T::zero();
                    for i in 0..n {
                        let r = part.var_const[i];
                        let s = part.var_slope[i];
                        a += dvw[i] * r * r;
                        b -= (dvw[i] * s * r) * crate::scalar::cst::<T>(2.0);
                        c += dvw[i] * s * s;
                    }
                    let entry = Poly::new(vec![a * inv_n, b * inv_n, c * inv_n]);
                    entries[v * k + w] = entry.clone();
                    entries[w * k + v] = entry;
                }
            }
            let sigma = PolyMatrix::from_entries(k, entries);
            let (det, adj) = sigma.det_adj()?;

            // Invertibility at beta = 0 is sufficient for the polynomial
            // matrix to be invertible at all but finitely many points. The
            // determinant of a healthy k x k matrix with entries of size a
            // is of order a^k, so the threshold scales that way.
            let sigma0 = sigma.eval(T::zero());
            let scale = sigma0.amax().powi(k as i32);
            if det.eval(T::zero()).abs() <= tol.det_zero * scale {
                return Err(Error::SingularAtZero { g });
            }

            let numerator: Vec<Poly<T>> = (0..k)
                .map(|i| Poly::new(vec![part.num_const[i], -part.num_slope[i]]))
                .collect();
            let mut num = Poly::zero();
            for v in 0..k {
                for w in 0..k {
                    num = &num + &(&(&numerator[v] * adj.entry(v, w)) * &numerator[w]);
                }
            }
            Ok((num, det))
        })
        .collect();

    let mut nums = Vec::with_capacity(parts.len());
    let mut dens = Vec::with_capacity(parts.len());
    for item in built {
        let (n_g, d_g) = item?;
        nums.push(n_g);
        dens.push(d_g);
    }
    Ok(RationalFamily { nums, dens })
}

/// Builds the instrumental-variable Wald family:
/// `t_g(beta) = T_g(beta)' Sigma_g(beta)^{-1} T_g(beta)` with
/// `T_g(beta) = (Q1 Z)' g (Y - X1 beta)` and covariance built from
/// `Q3 g (Y - X1 beta)`.
pub fn build_rational<T: Scalar>(
    data: &DesignData<T>,
    group: &PermGroup,
    tol: &Tolerances<T>,
) -> Result<RationalFamily<T>> {
    if data.x1().ncols() != 1 {
        return Err(Error::DimensionMismatch(format!(
            "rational family needs a scalar regressor of interest, got {} columns",
            data.x1().ncols()
        )));
    }
    if data.z().ncols() == 0 {
        return Err(Error::DimensionMismatch(
            "rational family needs at least one instrument".into(),
        ));
    }

    let q1 = crate::design::q_spans(data, group, SpanKind::Q1, tol);
    let q3 = crate::design::q_spans(data, group, SpanKind::Q3, tol);
    let bread = q1.apply_mat(data.z());
    let x1col = data.x1().column(0).into_owned();

    let parts: Vec<RationalParts<T>> = group
        .iter()
        .map(|perm| {
            let gy = perm.apply_vec(data.y());
            let gx = perm.apply_vec(&x1col);
            RationalParts {
                num_const: bread.transpose() * &gy,
                num_slope: bread.transpose() * &gx,
                var_const: q3.apply_vec(&gy),
                var_slope: q3.apply_vec(&gx),
            }
        })
        .collect();

    assemble_family(&bread, parts, data.n(), tol)
}

/// Inputs for the residual-randomization Wald statistic: the statistic is
/// `v' Xt (Xt' S(v) Xt)^{-1} Xt' v` on the permuted residual
/// `v = g(y - x beta)`, where `S(v)` is diagonal with entries `(D v)_i^2 / n`.
#[derive(Debug, Clone)]
pub struct ResidualWaldData<T> {
    pub x_tilde: DMatrix<T>,
    pub d_mat: DMatrix<T>,
    pub x: DMatrix<T>,
    pub y: DVector<T>,
}

/// Adapter for residual-permutation Wald statistics: structurally the same
/// pipeline as [`build_rational`] with `x_tilde` in the role of `Q1 Z` and
/// `d_mat` in the role of `Q3`.
pub fn build_dhault<T: Scalar>(
    wdata: &ResidualWaldData<T>,
    group: &PermGroup,
    tol: &Tolerances<T>,
) -> Result<RationalFamily<T>> {
    let n = wdata.y.nrows();
    if wdata.x.ncols() != 1 {
        return Err(Error::DimensionMismatch(format!(
            "residual Wald adapter needs a scalar coefficient, got {} columns",
            wdata.x.ncols()
        )));
    }
    if wdata.x_tilde.nrows() != n || wdata.d_mat.nrows() != n || wdata.d_mat.ncols() != n {
        return Err(Error::DimensionMismatch(
            "x_tilde and d_mat must match the sample size".into(),
        ));
    }

    let xcol = wdata.x.column(0).into_owned();
    let parts: Vec<RationalParts<T>> = group
        .iter()
        .map(|perm| {
            let gy = perm.apply_vec(&wdata.y);
            let gx = perm.apply_vec(&xcol);
            RationalParts {
                num_const: wdata.x_tilde.transpose() * &gy,
                num_slope: wdata.x_tilde.transpose() * &gx,
                var_const: &wdata.d_mat * &gy,
                var_slope: &wdata.d_mat * &gx,
            }
        })
        .collect();

    assemble_family(&wdata.x_tilde, parts, n, tol)
}
