//! Ground-truth reference implementations.
//!
//! Everything here recomputes statistics from the raw matrices at every
//! hypothesized value — the traditional per-point approach. Projectors are
//! built once per dataset, but no statistic coefficient is ever cached, and
//! covariance matrices are inverted numerically rather than through the
//! adjugate/determinant route. The point is independence: these paths share
//! no coefficient code with the fast builders they are used to verify.

use std::time::Instant;

use nalgebra::{DMatrix, DVector, Matrix2, Vector2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::Tolerances;
use crate::design::{enumerate_group, DesignData, PermGroup, PermMode, Projector, SpanKind};
use crate::error::{Error, Result};
use crate::invert::{indicator_count, pvalue_curve, Side};
use crate::region::{fast_grid, PValueGrid};
use crate::scalar::{cst, from_count, Scalar};
use crate::stats::{
    build_conic, build_diciccio, build_linear, build_rational, ResidualWaldData,
};

/// The tests the oracle knows how to recompute from scratch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TestKind {
    LinearRight,
    LinearLeft,
    TwoSided,
    WaldScalar,
    Wald2d,
    Diciccio,
}

impl TestKind {
    pub fn is_two_dimensional(&self) -> bool {
        matches!(self, TestKind::Wald2d | TestKind::Diciccio)
    }

    pub fn side(&self) -> Side {
        match self {
            TestKind::LinearRight => Side::Right,
            TestKind::LinearLeft => Side::Left,
            TestKind::TwoSided => Side::TwoSided,
            TestKind::WaldScalar | TestKind::Wald2d | TestKind::Diciccio => Side::Wald,
        }
    }
}

/// Reference evaluator for one dataset: projectors are prepared once, every
/// statistic value is recomputed from the defining formulas per call.
pub struct Oracle<'a, T> {
    data: &'a DesignData<T>,
    group: &'a PermGroup,
    q1x1: DVector<T>,
    q1z: DMatrix<T>,
    q2: Projector<T>,
    q3: Projector<T>,
}

impl<'a, T: Scalar> Oracle<'a, T> {
    pub fn new(data: &'a DesignData<T>, group: &'a PermGroup, tol: &Tolerances<T>) -> Self {
        let q1 = crate::design::q_spans(data, group, SpanKind::Q1, tol);
        let q2 = crate::design::q_spans(data, group, SpanKind::Q2, tol);
        let q3 = crate::design::q_spans(data, group, SpanKind::Q3, tol);
        let q1x1 = q1.apply_vec(&data.x1().column(0).into_owned());
        let q1z = q1.apply_mat(data.z());
        Self {
            data,
            group,
            q1x1,
            q1z,
            q2,
            q3,
        }
    }

    fn linear_stat(&self, g: usize, beta: T) -> T {
        let perm = self.group.perm(g);
        let n = self.data.n();
        let gy = perm.apply_vec(self.data.y());
        let gx = perm.apply_vec(&self.data.x1().column(0).into_owned());
        let q2gy = self.q2.apply_vec(&gy);
        let sigma_sq = (0..n)
            .map(|i| self.q1x1[i] * self.q1x1[i] * q2gy[i] * q2gy[i])
            .sum::<T>()
            / from_count::<T>(n);
        let num = (0..n)
            .map(|i| self.q1x1[i] * (gy[i] - gx[i] * beta))
            .sum::<T>();
        num / sigma_sq.sqrt()
    }

    fn wald_scalar_stat(&self, g: usize, beta: T) -> Result<T> {
        let perm = self.group.perm(g);
        let gy = perm.apply_vec(self.data.y());
        let gx = perm.apply_vec(&self.data.x1().column(0).into_owned());
        let resid = &gy - &gx * beta;
        let t_iv = self.q1z.transpose() * &resid;
        let v3 = self.q3.apply_vec(&resid);
        let sigma = scaled_gram(&self.q1z, &v3);
        let sigma_inv = sigma.try_inverse().ok_or(Error::SingularAtZero { g })?;
        Ok((t_iv.transpose() * sigma_inv * t_iv)[(0, 0)])
    }

    fn wald2d_stat(&self, g: usize, b1: T, b2: T) -> Result<T> {
        let perm = self.group.perm(g);
        let gy = perm.apply_vec(self.data.y());
        let gx = perm.apply_mat(self.data.x1());
        let resid = &gy - &(gx.column(0) * b1) - &(gx.column(1) * b2);
        let t_iv = self.q1z.transpose() * resid;
        let q2gy = self.q2.apply_vec(&gy);
        let sigma = scaled_gram(&self.q1z, &q2gy);
        let sigma_inv = sigma.try_inverse().ok_or(Error::SingularSigma { g })?;
        Ok((t_iv.transpose() * sigma_inv * t_iv)[(0, 0)])
    }

    fn diciccio_stat(&self, g: usize, b1: T, b2: T) -> Result<T> {
        let n = self.data.n();
        let inv_n = T::one() / from_count::<T>(n);
        let py = self.group.perm(g).apply_vec(self.data.y());
        let x1 = self.data.x1().column(0);
        let x2 = self.data.x1().column(1);

        let sxx = Matrix2::new(
            x1.dot(&x1) * inv_n,
            x1.dot(&x2) * inv_n,
            x1.dot(&x2) * inv_n,
            x2.dot(&x2) * inv_n,
        );
        let sxx_inv = sxx.try_inverse().ok_or(Error::SingularXX)?;
        let bhat = sxx_inv * Vector2::new(x1.dot(&py) * inv_n, x2.dot(&py) * inv_n);

        let mut omega = Matrix2::<T>::zeros();
        for i in 0..n {
            let r = py[i] - x1[i] * b1 - x2[i] * b2;
            let w = r * r;
            omega[(0, 0)] += w * x1[i] * x1[i];
            omega[(0, 1)] += w * x1[i] * x2[i];
            omega[(1, 1)] += w * x2[i] * x2[i];
        }
        omega[(1, 0)] = omega[(0, 1)];
        omega *= inv_n;

        let diff = bhat - Vector2::new(b1, b2);
        let middle = sxx_inv * omega * sxx_inv;
        Ok((diff.transpose() * middle * diff)[(0, 0)] * from_count::<T>(n))
    }

    /// One statistic value recomputed from the defining formulas.
    pub fn statistic(&self, kind: TestKind, g: usize, beta: &[T]) -> Result<T> {
        match kind {
            TestKind::LinearRight | TestKind::LinearLeft => Ok(self.linear_stat(g, beta[0])),
            TestKind::TwoSided => Ok(self.linear_stat(g, beta[0]).abs()),
            TestKind::WaldScalar => self.wald_scalar_stat(g, beta[0]),
            TestKind::Wald2d => self.wald2d_stat(g, beta[0], beta[1]),
            TestKind::Diciccio => self.diciccio_stat(g, beta[0], beta[1]),
        }
    }

    /// The indicator count `1 + #{g != Id : comparison holds}` recomputed
    /// from scratch.
    pub fn count(&self, kind: TestKind, beta: &[T]) -> Result<usize> {
        assert_eq!(
            beta.len(),
            if kind.is_two_dimensional() { 2 } else { 1 },
            "hypothesis dimension mismatch"
        );
        let t_id = self.statistic(kind, 0, beta)?;
        let mut count = 1usize;
        for g in 1..self.group.m() {
            let t_g = self.statistic(kind, g, beta)?;
            let hit = match kind {
                TestKind::LinearLeft => t_id >= t_g,
                _ => t_id <= t_g,
            };
            if hit {
                count += 1;
            }
        }
        Ok(count)
    }

    pub fn pvalue(&self, kind: TestKind, beta: &[T]) -> Result<T> {
        Ok(from_count::<T>(self.count(kind, beta)?) / from_count::<T>(self.group.m()))
    }
}

/// `bread' diag(w)^2 bread / n`.
fn scaled_gram<T: Scalar>(bread: &DMatrix<T>, w: &DVector<T>) -> DMatrix<T> {
    let (n, k) = bread.shape();
    let mut scaled = bread.clone();
    for i in 0..n {
        for j in 0..k {
            scaled[(i, j)] *= w[i];
        }
    }
    scaled.transpose() * scaled / from_count::<T>(n)
}

/// From-scratch p-value at one hypothesized point.
pub fn naive_pvalue<T: Scalar>(
    data: &DesignData<T>,
    group: &PermGroup,
    beta: &[T],
    kind: TestKind,
    tol: &Tolerances<T>,
) -> Result<T> {
    Oracle::new(data, group, tol).pvalue(kind, beta)
}

/// From-scratch p-value grid, the reference for the fast grid search.
pub fn naive_grid<T: Scalar>(
    data: &DesignData<T>,
    group: &PermGroup,
    axis1: &[T],
    axis2: &[T],
    kind: TestKind,
    tol: &Tolerances<T>,
) -> Result<PValueGrid<T>> {
    assert!(kind.is_two_dimensional(), "naive_grid needs a 2d test kind");
    let oracle = Oracle::new(data, group, tol);
    let cols = axis2.len();
    let counts: Vec<Result<usize>> = (0..axis1.len() * cols)
        .into_par_iter()
        .map(|idx| oracle.count(kind, &[axis1[idx / cols], axis2[idx % cols]]))
        .collect();
    let counts = counts.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(PValueGrid::from_counts(
        group.m(),
        axis1.to_vec(),
        axis2.to_vec(),
        counts,
    ))
}

/// From-scratch residual-permutation Wald statistic value.
pub fn naive_dhault_stat<T: Scalar>(
    wdata: &ResidualWaldData<T>,
    group: &PermGroup,
    g: usize,
    beta: T,
) -> Result<T> {
    let xcol = wdata.x.column(0).into_owned();
    let perm = group.perm(g);
    let v = perm.apply_vec(&wdata.y) - perm.apply_vec(&xcol) * beta;
    let t = wdata.x_tilde.transpose() * &v;
    let dv = &wdata.d_mat * &v;
    let s = scaled_gram(&wdata.x_tilde, &dv);
    let s_inv = s.try_inverse().ok_or(Error::SingularAtZero { g })?;
    Ok((t.transpose() * s_inv * t)[(0, 0)])
}

/// Data-generating configuration for synthetic datasets and size
/// simulations: independent standard-normal regressors and instruments,
/// homoskedastic normal errors, contiguous equal blocks.
#[derive(Debug, Clone)]
pub struct DgpConfig<T> {
    pub n: usize,
    pub n_blocks: usize,
    pub d: usize,
    pub p_nuisance: usize,
    pub k_instruments: usize,
    pub intercept: T,
    pub beta1: Vec<T>,
    pub beta2: Vec<T>,
    pub sigma: T,
    /// Draw nuisance regressors constant within each block (discrete
    /// block-level covariates). With many blocks and per-observation
    /// nuisance noise the permuted-nuisance span swallows everything
    /// outside the group's fixed subspace and the test degenerates;
    /// block-level covariates keep the annihilators informative.
    pub block_nuisance: bool,
}

impl<T: Scalar> DgpConfig<T> {
    pub fn standard(
        n: usize,
        n_blocks: usize,
        d: usize,
        p_nuisance: usize,
        k_instruments: usize,
    ) -> Self {
        Self {
            n,
            n_blocks,
            d,
            p_nuisance,
            k_instruments,
            intercept: cst(0.5),
            beta1: vec![T::one(); d],
            beta2: vec![cst(0.5); p_nuisance],
            sigma: T::one(),
            block_nuisance: false,
        }
    }
}

/// Draws one dataset from the configuration. Regressors of interest load
/// on the instruments (when present) so that instrumental-variable tests
/// have a relevant first stage.
pub fn generate_dataset<T: Scalar>(cfg: &DgpConfig<T>, seed: u64) -> Result<DesignData<T>> {
    if cfg.n % cfg.n_blocks != 0 {
        return Err(Error::DimensionMismatch(format!(
            "n = {} not divisible into {} equal blocks",
            cfg.n, cfg.n_blocks
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut normal = move || -> T {
        let x: f64 = StandardNormal.sample(&mut rng);
        cst(x)
    };

    let n = cfg.n;
    let z = DMatrix::from_fn(n, cfg.k_instruments, |_, _| normal());
    let x1 = if cfg.k_instruments > 0 {
        DMatrix::from_fn(n, cfg.d, |i, j| {
            z[(i, j % cfg.k_instruments)] * cst::<T>(0.8) + normal() * cst::<T>(0.6)
        })
    } else {
        DMatrix::from_fn(n, cfg.d, |_, _| normal())
    };
    let size = n / cfg.n_blocks;
    let x2 = if cfg.block_nuisance {
        let levels =
            DMatrix::from_fn(cfg.n_blocks, cfg.p_nuisance, |_, _| normal());
        DMatrix::from_fn(n, cfg.p_nuisance, |i, j| levels[(i / size, j)])
    } else {
        DMatrix::from_fn(n, cfg.p_nuisance, |_, _| normal())
    };

    let mut y = DVector::from_element(n, cfg.intercept);
    for j in 0..cfg.d {
        let b = cfg.beta1[j];
        for i in 0..n {
            y[i] += x1[(i, j)] * b;
        }
    }
    for j in 0..cfg.p_nuisance {
        let b = cfg.beta2[j];
        for i in 0..n {
            y[i] += x2[(i, j)] * b;
        }
    }
    for i in 0..n {
        y[i] += normal() * cfg.sigma;
    }

    let blocks = (0..cfg.n_blocks)
        .map(|b| (b * size..(b + 1) * size).collect())
        .collect();
    DesignData::new(y, x1, x2, z, blocks)
}

/// Monte Carlo size check: generates `reps` datasets under the null, runs
/// the level-`alpha` linear randomization test at the true coefficient,
/// and returns the rejection fraction. Rejection is `p <= alpha`.
///
/// Reps run in parallel with per-rep seeds `seed + rep`; the result is
/// reproducible for a fixed seed.
#[allow(clippy::too_many_arguments)]
pub fn simulate_size<T: Scalar>(
    dgp: &DgpConfig<T>,
    mode: PermMode,
    cap: usize,
    side: Side,
    alpha: T,
    reps: usize,
    seed: u64,
    tol: &Tolerances<T>,
) -> Result<T> {
    assert!(reps >= 100, "size simulation needs at least 100 reps");
    assert_eq!(dgp.d, 1, "size simulation uses the scalar linear test");

    let blocks: Vec<Vec<usize>> = {
        let size = dgp.n / dgp.n_blocks;
        (0..dgp.n_blocks)
            .map(|b| (b * size..(b + 1) * size).collect())
            .collect()
    };
    let group = enumerate_group(&blocks, mode, cap, Some(seed))?;
    let truth = dgp.beta1[0];

    let rejections: Vec<Result<bool>> = (0..reps)
        .into_par_iter()
        .map(|rep| {
            let data = generate_dataset(dgp, seed + rep as u64)?;
            let fam = build_linear(&data, &group, tol)?;
            let p = crate::invert::pvalue_at(&fam, truth, side, tol)?;
            Ok(p <= alpha)
        })
        .collect();

    let mut hits = 0usize;
    for r in rejections {
        if r? {
            hits += 1;
        }
    }
    Ok(from_count::<T>(hits) / from_count::<T>(reps))
}

/// Wall-clock comparison of the coefficient-based path against from-scratch
/// recomputation, with an exact-match verdict over integer counts.
#[derive(Debug, Clone, Serialize)]
pub struct BenchReport {
    pub method: String,
    pub n: usize,
    pub m: usize,
    pub points: usize,
    pub fast_seconds: f64,
    pub naive_seconds: f64,
    pub speedup: f64,
    pub matches: bool,
}

/// Benchmarks a one-dimensional curve: the fast path builds the family once
/// and evaluates stored coefficients at each point; the naive path
/// recomputes every statistic from the data at each point.
pub fn bench_curve<T: Scalar>(
    data: &DesignData<T>,
    group: &PermGroup,
    kind: TestKind,
    betas: &[T],
    tol: &Tolerances<T>,
) -> Result<BenchReport> {
    assert!(!kind.is_two_dimensional(), "bench_curve is one-dimensional");
    let side = kind.side();

    let fast_start = Instant::now();
    let fast_counts: Vec<usize> = match kind {
        TestKind::WaldScalar => {
            let fam = build_rational(data, group, tol)?;
            let _curve = pvalue_curve(&fam, side, tol)?;
            betas
                .par_iter()
                .map(|&b| indicator_count(&fam, b, side, tol))
                .collect()
        }
        _ => {
            let fam = build_linear(data, group, tol)?;
            let _curve = pvalue_curve(&fam, side, tol)?;
            betas
                .par_iter()
                .map(|&b| indicator_count(&fam, b, side, tol))
                .collect()
        }
    };
    let fast_seconds = fast_start.elapsed().as_secs_f64();

    let naive_start = Instant::now();
    let oracle = Oracle::new(data, group, tol);
    let naive_counts: Vec<Result<usize>> = betas
        .par_iter()
        .map(|&b| oracle.count(kind, &[b]))
        .collect();
    let naive_counts = naive_counts.into_iter().collect::<Result<Vec<_>>>()?;
    let naive_seconds = naive_start.elapsed().as_secs_f64();

    Ok(BenchReport {
        method: format!("curve-{:?}", kind).to_lowercase(),
        n: data.n(),
        m: group.m(),
        points: betas.len(),
        fast_seconds,
        naive_seconds,
        speedup: naive_seconds / fast_seconds.max(f64::MIN_POSITIVE),
        matches: fast_counts == naive_counts,
    })
}

/// Benchmarks a two-dimensional grid: stored-coefficient evaluation against
/// per-point recomputation.
pub fn bench_grid<T: Scalar>(
    data: &DesignData<T>,
    group: &PermGroup,
    kind: TestKind,
    axis1: &[T],
    axis2: &[T],
    tol: &Tolerances<T>,
) -> Result<BenchReport> {
    assert!(kind.is_two_dimensional(), "bench_grid is two-dimensional");

    let fast_start = Instant::now();
    let fast = match kind {
        TestKind::Wald2d => fast_grid(&build_conic(data, group, tol)?, axis1, axis2),
        TestKind::Diciccio => fast_grid(&build_diciccio(data, group, tol)?, axis1, axis2),
        _ => unreachable!(),
    };
    let fast_seconds = fast_start.elapsed().as_secs_f64();

    let naive_start = Instant::now();
    let naive = naive_grid(data, group, axis1, axis2, kind, tol)?;
    let naive_seconds = naive_start.elapsed().as_secs_f64();

    Ok(BenchReport {
        method: format!("grid-{:?}", kind).to_lowercase(),
        n: data.n(),
        m: group.m(),
        points: axis1.len() * axis2.len(),
        fast_seconds,
        naive_seconds,
        speedup: naive_seconds / fast_seconds.max(f64::MIN_POSITIVE),
        matches: fast.counts() == naive.counts(),
    })
}
