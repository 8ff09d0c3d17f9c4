//! Two-dimensional machinery: conic crossing loci and their
//! classification, fast p-value grids from stored coefficients, projected
//! p-value curves, and approximate confidence regions.

use nalgebra::Matrix3;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::Tolerances;
use crate::scalar::{cst, from_count, Scalar};
use crate::stats::{BiPolyFamily, ConicFamily};

/// Conic type by discriminant sign (`-Delta`, `Delta` the determinant of
/// the quadratic part).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ConicKind {
    Ellipse,
    Parabola,
    Hyperbola,
}

/// The locus `t_Id = t_g` as a quadratic form, with its classification.
///
/// Classification is metadata only: p-value computation never consults it
/// (any of the kinds can still be a degenerate conic).
#[derive(Debug, Clone)]
pub struct ConicDiff<T> {
    /// `Omega_Id - Omega_g`, symmetric.
    pub matrix: Matrix3<T>,
    /// `-Delta`; negative for ellipses, positive for hyperbolas.
    pub discriminant: T,
    pub kind: ConicKind,
    /// Set when the discriminant is within tolerance of zero, where the
    /// parabola call is numerically ambiguous.
    pub degenerate_candidate: bool,
    /// Ellipse subcase: no cross term and equal diagonal coefficients.
    pub circle: bool,
}

impl<T: Scalar> ConicDiff<T> {
    /// Quadratic form value at `(b1, b2)`; the crossing locus is its zero
    /// set.
    pub fn eval(&self, b1: T, b2: T) -> T {
        let m = &self.matrix;
        let two = cst::<T>(2.0);
        m[(0, 0)] * b1 * b1
            + two * m[(0, 1)] * b1 * b2
            + m[(1, 1)] * b2 * b2
            + two * m[(0, 2)] * b1
            + two * m[(1, 2)] * b2
            + m[(2, 2)]
    }
}

/// Difference conic between the test statistic and statistic `g`,
/// classified by the sign of `-Delta`.
pub fn conic_diff<T: Scalar>(
    fam: &ConicFamily<T>,
    g: usize,
    tol: &Tolerances<T>,
) -> ConicDiff<T> {
    assert!(g > 0, "the identity has no difference conic");
    let matrix = fam.omega(0) - fam.omega(g);
    let delta = matrix[(0, 0)] * matrix[(1, 1)] - matrix[(0, 1)] * matrix[(0, 1)];
    let discriminant = -delta;

    let norm = matrix.amax();
    let degenerate_candidate = discriminant.abs() <= tol.conic_degenerate * norm;
    let kind = if degenerate_candidate {
        ConicKind::Parabola
    } else if discriminant < T::zero() {
        ConicKind::Ellipse
    } else {
        ConicKind::Hyperbola
    };
    let circle = kind == ConicKind::Ellipse
        && matrix[(0, 1)].abs() <= tol.conic_degenerate * norm
        && (matrix[(0, 0)] - matrix[(1, 1)]).abs() <= tol.conic_degenerate * norm;

    ConicDiff {
        matrix,
        discriminant,
        kind,
        degenerate_candidate,
        circle,
    }
}

/// Statistic families evaluable on a two-dimensional parameter.
pub trait SurfaceFamily<T: Scalar>: Sync {
    fn m(&self) -> usize;
    fn value(&self, g: usize, b1: T, b2: T) -> T;
}

impl<T: Scalar> SurfaceFamily<T> for ConicFamily<T> {
    fn m(&self) -> usize {
        self.m()
    }

    fn value(&self, g: usize, b1: T, b2: T) -> T {
        ConicFamily::value(self, g, b1, b2)
    }
}

impl<T: Scalar> SurfaceFamily<T> for BiPolyFamily<T> {
    fn m(&self) -> usize {
        self.m()
    }

    fn value(&self, g: usize, b1: T, b2: T) -> T {
        BiPolyFamily::value(self, g, b1, b2)
    }
}

/// p-values on a rectangular grid, stored as integer indicator counts.
#[derive(Debug, Clone, PartialEq)]
pub struct PValueGrid<T> {
    m: usize,
    axis1: Vec<T>,
    axis2: Vec<T>,
    counts: Vec<usize>, // row-major: [i * axis2.len() + j]
}

impl<T: Scalar> PValueGrid<T> {
    pub fn from_counts(m: usize, axis1: Vec<T>, axis2: Vec<T>, counts: Vec<usize>) -> Self {
        assert_eq!(counts.len(), axis1.len() * axis2.len());
        Self {
            m,
            axis1,
            axis2,
            counts,
        }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn axis1(&self) -> &[T] {
        &self.axis1
    }

    pub fn axis2(&self) -> &[T] {
        &self.axis2
    }

    pub fn count(&self, i: usize, j: usize) -> usize {
        self.counts[i * self.axis2.len() + j]
    }

    pub fn value(&self, i: usize, j: usize) -> T {
        from_count::<T>(self.count(i, j)) / from_count::<T>(self.m)
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }
}

/// Evaluates the p-value surface on `axis1 x axis2` purely from stored
/// coefficients. The count at each point is
/// `1 + #{g != Id : t_Id(x, y) <= t_g(x, y)}`.
pub fn fast_grid<T: Scalar, F: SurfaceFamily<T> + ?Sized>(
    fam: &F,
    axis1: &[T],
    axis2: &[T],
) -> PValueGrid<T> {
    assert!(!axis1.is_empty() && !axis2.is_empty(), "axes must be non-empty");
    let cols = axis2.len();
    let counts: Vec<usize> = (0..axis1.len() * cols)
        .into_par_iter()
        .map(|idx| {
            let (x, y) = (axis1[idx / cols], axis2[idx % cols]);
            let t_id = fam.value(0, x, y);
            1 + (1..fam.m()).filter(|&g| t_id <= fam.value(g, x, y)).count()
        })
        .collect();
    PValueGrid {
        m: fam.m(),
        axis1: axis1.to_vec(),
        axis2: axis2.to_vec(),
        counts,
    }
}

/// A sampled projected p-value curve. Projection maximizes over the other
/// axis on the grid, so the result is approximate by construction (exact
/// projection would need the full conic arrangement).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProjectedCurve<T> {
    pub axis: Vec<T>,
    pub p: Vec<T>,
    /// Always true: grid projection is a lower bound for the true
    /// projected p-value.
    pub approximate: bool,
}

/// Projects the grid onto one axis (1 or 2) by maximizing the p-value over
/// the other.
pub fn project_pvalues<T: Scalar>(grid: &PValueGrid<T>, axis: u8) -> ProjectedCurve<T> {
    assert!(axis == 1 || axis == 2, "axis must be 1 or 2");
    let (n1, n2) = (grid.axis1().len(), grid.axis2().len());
    let (len, other) = if axis == 1 { (n1, n2) } else { (n2, n1) };
    let p = (0..len)
        .map(|i| {
            let best = (0..other)
                .map(|j| if axis == 1 { grid.count(i, j) } else { grid.count(j, i) })
                .max()
                .expect("non-empty axis");
            from_count::<T>(best) / from_count::<T>(grid.m())
        })
        .collect();
    ProjectedCurve {
        axis: if axis == 1 {
            grid.axis1().to_vec()
        } else {
            grid.axis2().to_vec()
        },
        p,
        approximate: true,
    }
}

/// One connected component of the accepted region.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegionComponent<T> {
    /// Grid cells `(i, j)` in the component, sorted.
    pub cells: Vec<(usize, usize)>,
    /// Bounding rectangle in parameter coordinates:
    /// `(min1, max1, min2, max2)` over the cells' extents.
    pub bounds: (T, T, T, T),
}

/// A conservative confidence region on the grid: cells with `p > alpha`
/// plus their 4-neighbor rejected cells, grouped into connected
/// components. Cell extents reach halfway to the neighboring grid points,
/// so reported rectangles are conservative hulls, not exact boundaries.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Region<T> {
    pub alpha: T,
    pub cells: Vec<(usize, usize)>,
    pub components: Vec<RegionComponent<T>>,
}

/// Extracts the cells with `p > alpha` together with adjacent rejected
/// cells (the conservative hull), and reports connected components with
/// bounding rectangles.
pub fn region_extract<T: Scalar>(grid: &PValueGrid<T>, alpha: T) -> Region<T> {
    let (n1, n2) = (grid.axis1().len(), grid.axis2().len());
    let m = from_count::<T>(grid.m());
    let passes =
        |i: usize, j: usize| from_count::<T>(grid.count(i, j)) / m > alpha;

    let mut keep = vec![false; n1 * n2];
    for i in 0..n1 {
        for j in 0..n2 {
            if passes(i, j) {
                keep[i * n2 + j] = true;
                if i > 0 {
                    keep[(i - 1) * n2 + j] = true;
                }
                if i + 1 < n1 {
                    keep[(i + 1) * n2 + j] = true;
                }
                if j > 0 {
                    keep[i * n2 + j - 1] = true;
                }
                if j + 1 < n2 {
                    keep[i * n2 + j + 1] = true;
                }
            }
        }
    }

    let cells: Vec<(usize, usize)> = (0..n1 * n2)
        .filter(|&idx| keep[idx])
        .map(|idx| (idx / n2, idx % n2))
        .collect();

    // Connected components by flood fill over 4-neighbors.
    let mut component_of = vec![usize::MAX; n1 * n2];
    let mut components: Vec<RegionComponent<T>> = Vec::new();
    for &(si, sj) in &cells {
        if component_of[si * n2 + sj] != usize::MAX {
            continue;
        }
        let id = components.len();
        let mut stack = vec![(si, sj)];
        let mut member_cells = Vec::new();
        component_of[si * n2 + sj] = id;
        while let Some((i, j)) = stack.pop() {
            member_cells.push((i, j));
            let mut try_push = |ni: usize, nj: usize, component_of: &mut Vec<usize>| {
                if keep[ni * n2 + nj] && component_of[ni * n2 + nj] == usize::MAX {
                    component_of[ni * n2 + nj] = id;
                    stack.push((ni, nj));
                }
            };
            if i > 0 {
                try_push(i - 1, j, &mut component_of);
            }
            if i + 1 < n1 {
                try_push(i + 1, j, &mut component_of);
            }
            if j > 0 {
                try_push(i, j - 1, &mut component_of);
            }
            if j + 1 < n2 {
                try_push(i, j + 1, &mut component_of);
            }
        }
        member_cells.sort_unstable();
        let bounds = component_bounds(grid, &member_cells);
        components.push(RegionComponent {
            cells: member_cells,
            bounds,
        });
    }

    Region {
        alpha,
        cells,
        components,
    }
}

/// Extent of cell `i` on an axis: halfway to each neighboring grid point
/// (boundary cells mirror their inner spacing).
fn cell_extent<T: Scalar>(axis: &[T], i: usize) -> (T, T) {
    let half = cst::<T>(0.5);
    let lo = if i > 0 {
        (axis[i - 1] + axis[i]) * half
    } else if axis.len() > 1 {
        axis[0] - (axis[1] - axis[0]) * half
    } else {
        axis[0]
    };
    let hi = if i + 1 < axis.len() {
        (axis[i] + axis[i + 1]) * half
    } else if axis.len() > 1 {
        axis[i] + (axis[i] - axis[i - 1]) * half
    } else {
        axis[i]
    };
    (lo, hi)
}

fn component_bounds<T: Scalar>(
    grid: &PValueGrid<T>,
    cells: &[(usize, usize)],
) -> (T, T, T, T) {
    let mut bounds: Option<(T, T, T, T)> = None;
    for &(i, j) in cells {
        let (lo1, hi1) = cell_extent(grid.axis1(), i);
        let (lo2, hi2) = cell_extent(grid.axis2(), j);
        bounds = Some(match bounds {
            None => (lo1, hi1, lo2, hi2),
            Some((a, b, c, d)) => (a.min(lo1), b.max(hi1), c.min(lo2), d.max(hi2)),
        });
    }
    bounds.expect("component has cells")
}
