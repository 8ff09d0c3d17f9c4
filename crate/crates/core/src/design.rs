//! Regression data, block-permutation groups, and annihilator projectors.

use std::collections::HashSet;

use itertools::Itertools;
use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// A row reordering. `apply` sends row `perm[i]` of the input to row `i`
/// of the output.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Permutation(Vec<usize>);

impl Permutation {
    pub fn identity(n: usize) -> Self {
        Self((0..n).collect())
    }

    pub fn from_indices(indices: Vec<usize>) -> Self {
        debug_assert!(is_permutation(&indices));
        Self(indices)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().enumerate().all(|(i, &j)| i == j)
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn apply_vec<T: Scalar>(&self, v: &DVector<T>) -> DVector<T> {
        DVector::from_fn(v.nrows(), |i, _| v[self.0[i]])
    }

    pub fn apply_mat<T: Scalar>(&self, m: &DMatrix<T>) -> DMatrix<T> {
        DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(self.0[i], j)])
    }

    /// Composition acting as `self` after `other`:
    /// `compose(other).apply(v) == self.apply(other.apply(v))`.
    pub fn compose(&self, other: &Self) -> Self {
        Self(self.0.iter().map(|&i| other.0[i]).collect())
    }
}

fn is_permutation(indices: &[usize]) -> bool {
    let mut seen = vec![false; indices.len()];
    indices.iter().all(|&i| {
        if i >= seen.len() || seen[i] {
            false
        } else {
            seen[i] = true;
            true
        }
    })
}

/// Which permutations are allowed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PermMode {
    /// Equal-size blocks are moved as units (the full group has size `B!`).
    BlockSwap,
    /// Indices are shuffled independently inside each block.
    WithinBlock,
    /// All `n!` permutations.
    Full,
}

/// The permutation group (or a sampled subset of it). Element 0 is always
/// the identity, which is the test statistic's slot.
#[derive(Debug, Clone)]
pub struct PermGroup {
    perms: Vec<Permutation>,
    mode: PermMode,
    seed: Option<u64>,
    exhaustive: bool,
}

impl PermGroup {
    /// Number of permutations, `M` in the p-value denominators.
    pub fn m(&self) -> usize {
        self.perms.len()
    }

    pub fn perm(&self, g: usize) -> &Permutation {
        &self.perms[g]
    }

    pub fn iter(&self) -> impl Iterator<Item = &Permutation> {
        self.perms.iter()
    }

    pub fn mode(&self) -> PermMode {
        self.mode
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    /// Whether the whole group was enumerated. Sampled groups are a
    /// practical device only; no exactness claim is made for them.
    pub fn is_exhaustive(&self) -> bool {
        self.exhaustive
    }
}

/// Enumerates the permutation group for the given blocks, or samples from
/// it when the full group exceeds `cap`.
///
/// Exhaustive enumeration lists the identity first and contains no
/// duplicates. Sampling draws `cap - 1` distinct non-recorded permutations
/// uniformly (dedup by hashing, resample on collision) after the identity;
/// the same seed reproduces the same group.
pub fn enumerate_group(
    blocks: &[Vec<usize>],
    mode: PermMode,
    cap: usize,
    seed: Option<u64>,
) -> Result<PermGroup> {
    assert!(cap >= 2, "cap must allow at least identity plus one draw");
    let n: usize = blocks.iter().map(|b| b.len()).sum();
    validate_blocks(blocks, n)?;
    if mode == PermMode::BlockSwap {
        let sizes: Vec<usize> = blocks.iter().map(|b| b.len()).collect();
        if sizes.windows(2).any(|w| w[0] != w[1]) {
            return Err(Error::UnequalBlocks { sizes });
        }
    }

    let exhaustive = group_size_within(blocks, mode, n, cap);
    let perms = if exhaustive {
        enumerate_exhaustive(blocks, mode, n)
    } else {
        sample_group(blocks, mode, n, cap, seed)
    };
    debug_assert!(perms[0].is_identity());
    Ok(PermGroup {
        perms,
        mode,
        seed,
        exhaustive,
    })
}

fn validate_blocks(blocks: &[Vec<usize>], n: usize) -> Result<()> {
    let mut seen = vec![false; n];
    for b in blocks {
        for &i in b {
            if i >= n || seen[i] {
                return Err(Error::InvalidBlocks { n });
            }
            seen[i] = true;
        }
    }
    if seen.iter().all(|&s| s) {
        Ok(())
    } else {
        Err(Error::InvalidBlocks { n })
    }
}

/// True when the full group size is `<= cap`, computed without overflow.
fn group_size_within(blocks: &[Vec<usize>], mode: PermMode, n: usize, cap: usize) -> bool {
    let mut size: u128 = 1;
    let cap = cap as u128;
    let mut mul_factorial = |k: usize| -> bool {
        for f in 2..=k as u128 {
            size = size.saturating_mul(f);
            if size > cap {
                return false;
            }
        }
        true
    };
    match mode {
        PermMode::BlockSwap => mul_factorial(blocks.len()),
        PermMode::WithinBlock => blocks.iter().all(|b| mul_factorial(b.len())),
        PermMode::Full => mul_factorial(n),
    }
}

fn block_swap_perm(blocks: &[Vec<usize>], order: &[usize], n: usize) -> Permutation {
    let mut idx = vec![0usize; n];
    for (slot, &src) in order.iter().enumerate() {
        for (pos, &row) in blocks[slot].iter().enumerate() {
            idx[row] = blocks[src][pos];
        }
    }
    Permutation::from_indices(idx)
}

fn within_block_perm(blocks: &[Vec<usize>], per_block: &[Vec<usize>], n: usize) -> Permutation {
    let mut idx = vec![0usize; n];
    for (b, tau) in blocks.iter().zip(per_block) {
        for (pos, &src_pos) in tau.iter().enumerate() {
            idx[b[pos]] = b[src_pos];
        }
    }
    Permutation::from_indices(idx)
}

fn enumerate_exhaustive(blocks: &[Vec<usize>], mode: PermMode, n: usize) -> Vec<Permutation> {
    match mode {
        PermMode::BlockSwap => (0..blocks.len())
            .permutations(blocks.len())
            .map(|order| block_swap_perm(blocks, &order, n))
            .collect(),
        PermMode::WithinBlock => blocks
            .iter()
            .map(|b| (0..b.len()).permutations(b.len()).collect::<Vec<_>>())
            .multi_cartesian_product()
            .map(|per_block| within_block_perm(blocks, &per_block, n))
            .collect(),
        PermMode::Full => (0..n)
            .permutations(n)
            .map(Permutation::from_indices)
            .collect(),
    }
}

fn sample_group(
    blocks: &[Vec<usize>],
    mode: PermMode,
    n: usize,
    cap: usize,
    seed: Option<u64>,
) -> Vec<Permutation> {
    let mut rng = match seed {
        Some(s) => ChaCha8Rng::seed_from_u64(s),
        None => ChaCha8Rng::seed_from_u64(rand::rng().random()),
    };
    let mut perms = vec![Permutation::identity(n)];
    let mut seen: HashSet<Permutation> = perms.iter().cloned().collect();
    while perms.len() < cap {
        let p = match mode {
            PermMode::BlockSwap => {
                let mut order: Vec<usize> = (0..blocks.len()).collect();
                order.shuffle(&mut rng);
                block_swap_perm(blocks, &order, n)
            }
            PermMode::WithinBlock => {
                let per_block: Vec<Vec<usize>> = blocks
                    .iter()
                    .map(|b| {
                        let mut tau: Vec<usize> = (0..b.len()).collect();
                        tau.shuffle(&mut rng);
                        tau
                    })
                    .collect();
                within_block_perm(blocks, &per_block, n)
            }
            PermMode::Full => {
                let mut idx: Vec<usize> = (0..n).collect();
                idx.shuffle(&mut rng);
                Permutation::from_indices(idx)
            }
        };
        if seen.insert(p.clone()) {
            perms.push(p);
        }
    }
    perms
}

/// Outcome, regressors of interest, nuisance regressors, instruments, and
/// the block structure of one dataset.
#[derive(Debug, Clone)]
pub struct DesignData<T> {
    y: DVector<T>,
    x1: DMatrix<T>,
    x2: DMatrix<T>,
    z: DMatrix<T>,
    blocks: Vec<Vec<usize>>,
}

impl<T: Scalar> DesignData<T> {
    /// Validates row counts, a regressor count of one or two, and that the
    /// blocks exactly partition the row indices.
    pub fn new(
        y: DVector<T>,
        x1: DMatrix<T>,
        x2: DMatrix<T>,
        z: DMatrix<T>,
        blocks: Vec<Vec<usize>>,
    ) -> Result<Self> {
        let n = y.nrows();
        if x1.nrows() != n || x2.nrows() != n || z.nrows() != n {
            return Err(Error::DimensionMismatch(format!(
                "row counts differ: y={n}, x1={}, x2={}, z={}",
                x1.nrows(),
                x2.nrows(),
                z.nrows()
            )));
        }
        if !(1..=2).contains(&x1.ncols()) {
            return Err(Error::DimensionMismatch(format!(
                "x1 must have 1 or 2 columns, got {}",
                x1.ncols()
            )));
        }
        validate_blocks(&blocks, n)?;
        Ok(Self { y, x1, x2, z, blocks })
    }

    pub fn n(&self) -> usize {
        self.y.nrows()
    }

    pub fn y(&self) -> &DVector<T> {
        &self.y
    }

    pub fn x1(&self) -> &DMatrix<T> {
        &self.x1
    }

    pub fn x2(&self) -> &DMatrix<T> {
        &self.x2
    }

    pub fn z(&self) -> &DMatrix<T> {
        &self.z
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }
}

/// A symmetric idempotent matrix projecting onto the orthogonal
/// complement of some column span.
#[derive(Debug, Clone)]
pub struct Projector<T> {
    q: DMatrix<T>,
}

impl<T: Scalar> Projector<T> {
    pub fn matrix(&self) -> &DMatrix<T> {
        &self.q
    }

    pub fn n(&self) -> usize {
        self.q.nrows()
    }

    pub fn apply_vec(&self, v: &DVector<T>) -> DVector<T> {
        &self.q * v
    }

    pub fn apply_mat(&self, m: &DMatrix<T>) -> DMatrix<T> {
        &self.q * m
    }
}

/// Builds `Q = I - U U^T` where `U` is an orthonormal basis of the column
/// span (singular values at or below `rank_tol` times the largest are
/// dropped). An empty span yields the identity.
pub fn build_annihilator<T: Scalar>(span: &DMatrix<T>, rank_tol: T) -> Projector<T> {
    let n = span.nrows();
    let eye = DMatrix::<T>::identity(n, n);
    if span.ncols() == 0 {
        return Projector { q: eye };
    }
    let svd = span.clone().svd(true, false);
    let u = svd.u.expect("u requested");
    let smax = svd.singular_values.max();
    if smax.is_zero() {
        return Projector { q: eye };
    }
    let kept: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] > rank_tol * smax)
        .collect();
    if kept.is_empty() {
        return Projector { q: eye };
    }
    let basis = u.select_columns(&kept);
    let q = eye - &basis * basis.transpose();
    let qt = q.transpose();
    Projector {
        q: (q + qt) * crate::scalar::cst::<T>(0.5),
    }
}

/// Which annihilator span to assemble.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpanKind {
    /// Span of the permuted nuisance regressors `{g X2}`.
    Q1,
    /// Span of the constant, `{g X1}`, and `{g X2}`.
    Q2,
    /// Span of the constant, the *unpermuted* `X1`, and `{g X2}`.
    Q3,
}

/// Stacks the permuted columns prescribed by `which` over every `g` in the
/// group and annihilates their span.
pub fn q_spans<T: Scalar>(
    data: &DesignData<T>,
    group: &PermGroup,
    which: SpanKind,
    tol: &Tolerances<T>,
) -> Projector<T> {
    let n = data.n();
    let mut cols: Vec<DVector<T>> = Vec::new();
    let ones = DVector::from_element(n, T::one());

    let push_permuted = |cols: &mut Vec<DVector<T>>, m: &DMatrix<T>| {
        for g in group.iter() {
            for j in 0..m.ncols() {
                cols.push(g.apply_vec(&m.column(j).into_owned()));
            }
        }
    };

    match which {
        SpanKind::Q1 => {
            push_permuted(&mut cols, data.x2());
        }
        SpanKind::Q2 => {
            cols.push(ones);
            push_permuted(&mut cols, data.x1());
            push_permuted(&mut cols, data.x2());
        }
        SpanKind::Q3 => {
            cols.push(ones);
            for j in 0..data.x1().ncols() {
                cols.push(data.x1().column(j).into_owned());
            }
            push_permuted(&mut cols, data.x2());
        }
    }

    if cols.is_empty() {
        return build_annihilator(&DMatrix::zeros(n, 0), tol.rank);
    }
    build_annihilator(&DMatrix::from_columns(&cols), tol.rank)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::rngs::StdRng;

    fn contiguous_blocks(n: usize, b: usize) -> Vec<Vec<usize>> {
        let size = n / b;
        (0..b).map(|i| (i * size..(i + 1) * size).collect()).collect()
    }

    #[test]
    fn block_swap_three_blocks_gives_six() {
        let blocks = contiguous_blocks(6, 3);
        let g = enumerate_group(&blocks, PermMode::BlockSwap, 10, None).unwrap();
        assert_eq!(g.m(), 6);
        assert!(g.perm(0).is_identity());
        assert!(g.is_exhaustive());
    }

    #[test]
    fn full_mode_singletons_gives_factorial() {
        let blocks: Vec<Vec<usize>> = (0..4).map(|i| vec![i]).collect();
        let g = enumerate_group(&blocks, PermMode::Full, 100, None).unwrap();
        assert_eq!(g.m(), 24);
    }

    #[test]
    fn sampled_group_distinct_and_reproducible() {
        let blocks = contiguous_blocks(10, 5);
        let g = enumerate_group(&blocks, PermMode::BlockSwap, 50, Some(7)).unwrap();
        assert_eq!(g.m(), 50);
        assert!(g.perm(0).is_identity());
        assert!(!g.is_exhaustive());
        let set: HashSet<_> = g.iter().cloned().collect();
        assert_eq!(set.len(), 50);

        let g2 = enumerate_group(&blocks, PermMode::BlockSwap, 50, Some(7)).unwrap();
        for (a, b) in g.iter().zip(g2.iter()) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn unequal_blocks_rejected_for_block_swap() {
        let blocks = vec![vec![0, 1], vec![2]];
        let err = enumerate_group(&blocks, PermMode::BlockSwap, 10, None).unwrap_err();
        assert!(matches!(err, Error::UnequalBlocks { .. }));
        // ... but fine for within-block shuffling.
        let g = enumerate_group(&blocks, PermMode::WithinBlock, 10, None).unwrap();
        assert_eq!(g.m(), 2);
    }

    #[test]
    fn exhaustive_block_swap_closed_under_composition() {
        let blocks = contiguous_blocks(6, 3);
        let g = enumerate_group(&blocks, PermMode::BlockSwap, 10, None).unwrap();
        let set: HashSet<_> = g.iter().cloned().collect();
        for a in g.iter() {
            for b in g.iter() {
                assert!(set.contains(&a.compose(b)));
            }
        }
    }

    #[test]
    fn centering_projector_for_constant_span() {
        let span = DMatrix::from_column_slice(2, 1, &[1.0, 1.0]);
        let q = build_annihilator(&span, 1e-10);
        assert_relative_eq!(q.matrix()[(0, 0)], 0.5, epsilon = 1e-12);
        assert_relative_eq!(q.matrix()[(0, 1)], -0.5, epsilon = 1e-12);
        assert_relative_eq!(q.matrix()[(1, 0)], -0.5, epsilon = 1e-12);
        assert_relative_eq!(q.matrix()[(1, 1)], 0.5, epsilon = 1e-12);
    }

    #[test]
    fn empty_span_gives_identity() {
        let span = DMatrix::<f64>::zeros(4, 0);
        let q = build_annihilator(&span, 1e-10);
        assert_eq!(q.matrix(), &DMatrix::identity(4, 4));
    }

    #[test]
    fn random_span_is_annihilated() {
        let mut rng = StdRng::seed_from_u64(3);
        let span = DMatrix::<f64>::from_fn(20, 3, |_, _| rng.random_range(-1.0..1.0));
        let q = build_annihilator(&span, 1e-10);

        let qs = q.apply_mat(&span);
        assert!(qs.amax() <= 1e-10, "Q*span = {}", qs.amax());

        let qq = q.matrix() * q.matrix();
        assert!((qq - q.matrix()).amax() <= 1e-10);
        assert!((q.matrix().transpose() - q.matrix()).amax() <= 1e-12);
    }

    #[test]
    fn q1_annihilates_all_permuted_nuisance_columns() {
        let mut rng = StdRng::seed_from_u64(11);
        let n = 12;
        let blocks = contiguous_blocks(n, 3);
        let y = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
        let x1 = DMatrix::from_fn(n, 1, |_, _| rng.random_range(-1.0..1.0));
        let x2 = DMatrix::from_fn(n, 1, |_, _| rng.random_range(-1.0..1.0));
        let data = DesignData::new(y, x1, x2, DMatrix::zeros(n, 0), blocks.clone()).unwrap();
        let group = enumerate_group(&blocks, PermMode::BlockSwap, 10, None).unwrap();
        let tol = Tolerances::default();

        let q1 = q_spans(&data, &group, SpanKind::Q1, &tol);
        for g in group.iter() {
            let permuted = g.apply_mat(data.x2());
            assert!(q1.apply_mat(&permuted).amax() <= 1e-9);
        }

        let q2 = q_spans(&data, &group, SpanKind::Q2, &tol);
        let ones = DVector::from_element(n, 1.0);
        assert!(q2.apply_vec(&ones).amax() <= 1e-9);
        for g in group.iter() {
            assert!(q2.apply_mat(&g.apply_mat(data.x1())).amax() <= 1e-9);
        }
    }

    #[test]
    fn empty_x2_gives_identity_q1() {
        let n = 6;
        let blocks = contiguous_blocks(n, 3);
        let data = DesignData::new(
            DVector::zeros(n),
            DMatrix::from_element(n, 1, 1.0),
            DMatrix::zeros(n, 0),
            DMatrix::zeros(n, 0),
            blocks.clone(),
        )
        .unwrap();
        let group = enumerate_group(&blocks, PermMode::BlockSwap, 10, None).unwrap();
        let q1 = q_spans(&data, &group, SpanKind::Q1, &Tolerances::default());
        assert_eq!(q1.matrix(), &DMatrix::identity(n, n));
    }
}
