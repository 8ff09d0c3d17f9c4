//! The one-dimensional inversion engine.
//!
//! The rank of the test statistic inside the randomization distribution can
//! change only where the test-statistic curve crosses a
//! randomization-statistic curve. This module computes those crossing
//! points for each statistic family, assembles the exact p-value step
//! function, and extracts exact confidence sets at any level.

use rayon::prelude::*;
use serde::Serialize;

use crate::algebra::real_roots;
use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::scalar::{from_count, Scalar};
use crate::stats::{LinearFamily, RationalFamily};

/// Which tail the p-value counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// `T_Id <= T_g` counts toward the p-value.
    Right,
    /// `T_Id >= T_g` counts.
    Left,
    /// `|T_Id| <= |T_g|` counts.
    TwoSided,
    /// `t_Id <= t_g` on Wald-type statistics; numerically identical to
    /// [`Side::Right`], kept separate for reporting.
    Wald,
}

impl Side {
    pub fn label(&self) -> &'static str {
        match self {
            Side::Right => "right",
            Side::Left => "left",
            Side::TwoSided => "two-sided",
            Side::Wald => "wald",
        }
    }
}

/// Scalar-argument statistic families the inversion engine can drive.
pub trait ScalarFamily<T: Scalar>: Sync {
    /// Number of statistics including the identity.
    fn m(&self) -> usize;

    /// Value of statistic `g` at the hypothesized parameter.
    fn value(&self, g: usize, beta: T) -> T;

    /// `(|denominator|, scale)` for rational statistics, `None` otherwise.
    fn denominator_magnitude(&self, _g: usize, _beta: T) -> Option<(T, T)> {
        None
    }

    /// Per-permutation crossing points plus singular points to split at.
    fn crossings(&self, side: Side, tol: &Tolerances<T>) -> Result<(Vec<Vec<T>>, Vec<T>)>;
}

impl<T: Scalar> ScalarFamily<T> for LinearFamily<T> {
    fn m(&self) -> usize {
        self.m()
    }

    fn value(&self, g: usize, beta: T) -> T {
        LinearFamily::value(self, g, beta)
    }

    fn crossings(&self, side: Side, tol: &Tolerances<T>) -> Result<(Vec<Vec<T>>, Vec<T>)> {
        let per_g = match side {
            Side::Right | Side::Left | Side::Wald => crossings_linear(self, tol)
                .into_iter()
                .map(|c| c.into_iter().collect())
                .collect(),
            Side::TwoSided => crossings_abs(self, tol)
                .into_iter()
                .map(|c| match c {
                    CrossingSet::Points(p) => p,
                    CrossingSet::Identical => Vec::new(),
                })
                .collect(),
        };
        Ok((per_g, Vec::new()))
    }
}

impl<T: Scalar> ScalarFamily<T> for RationalFamily<T> {
    fn m(&self) -> usize {
        self.m()
    }

    fn value(&self, g: usize, beta: T) -> T {
        RationalFamily::value(self, g, beta)
    }

    fn denominator_magnitude(&self, g: usize, beta: T) -> Option<(T, T)> {
        Some((self.den(g).eval(beta).abs(), self.den_scale(g, beta)))
    }

    fn crossings(&self, side: Side, tol: &Tolerances<T>) -> Result<(Vec<Vec<T>>, Vec<T>)> {
        if side == Side::TwoSided {
            return Err(Error::UnsupportedSide {
                side: side.label().into(),
                family: "rational".into(),
            });
        }
        let rc = crossings_rational(self, tol);
        let per_g = rc
            .per_g
            .into_iter()
            .map(|c| match c {
                CrossingSet::Points(p) => p,
                CrossingSet::Identical => Vec::new(),
            })
            .collect();
        Ok((per_g, rc.singular))
    }
}

/// Crossing points of another statistic with the test statistic. An
/// `Identical` entry means the two statistics coincide for every parameter
/// value; its indicator is constantly one and contributes no breakpoint.
#[derive(Debug, Clone, PartialEq)]
pub enum CrossingSet<T> {
    Points(Vec<T>),
    Identical,
}

/// One-sided crossings: `(b_g - b_Id) / (m_Id - m_g)` per permutation, or
/// `None` for parallel lines (entry 0, the identity against itself, is
/// always `None`).
pub fn crossings_linear<T: Scalar>(
    fam: &LinearFamily<T>,
    tol: &Tolerances<T>,
) -> Vec<Option<T>> {
    (0..fam.m())
        .map(|g| {
            if g == 0 {
                return None;
            }
            let dm = fam.slope(0) - fam.slope(g);
            let scale = T::one().max(fam.slope(0).abs()).max(fam.slope(g).abs());
            if dm.abs() <= tol.slope * scale {
                None
            } else {
                Some((fam.intercept(g) - fam.intercept(0)) / dm)
            }
        })
        .collect()
}

/// Two-sided crossings of `|T_Id|` with `|T_g|`: up to two points from
/// `-(b_Id + b_g)/(m_Id + m_g)` and `(b_Id - b_g)/(m_g - m_Id)`, with
/// near-duplicates merged. Identical absolute-value lines are reported as
/// [`CrossingSet::Identical`].
pub fn crossings_abs<T: Scalar>(
    fam: &LinearFamily<T>,
    tol: &Tolerances<T>,
) -> Vec<CrossingSet<T>> {
    (0..fam.m())
        .map(|g| {
            if g == 0 {
                return CrossingSet::Points(Vec::new());
            }
            let (m1, b1) = (fam.slope(0), fam.intercept(0));
            let (m2, b2) = (fam.slope(g), fam.intercept(g));
            let sscale = T::one().max(m1.abs()).max(m2.abs());
            let bscale = T::one().max(b1.abs()).max(b2.abs());
            let sum_ok = (m1 + m2).abs() > tol.slope * sscale;
            let diff_ok = (m2 - m1).abs() > tol.slope * sscale;

            // |T_Id| == |T_g| everywhere iff the lines agree up to sign.
            if (!diff_ok && (b1 - b2).abs() <= tol.slope * bscale)
                || (!sum_ok && (b1 + b2).abs() <= tol.slope * bscale)
            {
                return CrossingSet::Identical;
            }

            let mut pts = Vec::with_capacity(2);
            if sum_ok {
                pts.push(-(b1 + b2) / (m1 + m2));
            }
            if diff_ok {
                pts.push((b1 - b2) / (m2 - m1));
            }
            pts.sort_by(|a, b| a.partial_cmp(b).expect("finite crossings"));
            if pts.len() == 2 {
                let gap = pts[1] - pts[0];
                let scale = T::one().max(pts[0].abs()).max(pts[1].abs());
                if gap <= tol.root_accept * scale {
                    let half = crate::scalar::cst::<T>(0.5);
                    pts = vec![(pts[0] + pts[1]) * half];
                }
            }
            CrossingSet::Points(pts)
        })
        .collect()
}

/// Crossings of rational statistics plus the singular points where some
/// denominator vanishes.
#[derive(Debug, Clone)]
pub struct RationalCrossings<T> {
    pub per_g: Vec<CrossingSet<T>>,
    /// Real points where some `D_g` is zero; the statistics are undefined
    /// there, so curves split at these points and confidence sets exclude
    /// them.
    pub singular: Vec<T>,
}

/// Real roots of `D_g N_Id - D_Id N_g` per permutation. Roots where either
/// denominator is negligible are discarded as crossings and recorded as
/// singular points instead; a vanishing cross-polynomial means the two
/// statistics are identical.
pub fn crossings_rational<T: Scalar>(
    fam: &RationalFamily<T>,
    tol: &Tolerances<T>,
) -> RationalCrossings<T> {
    let mut singular: Vec<T> = Vec::new();
    // Denominator roots are singular points regardless of whether they
    // show up as crossing candidates.
    for g in 0..fam.m() {
        if let Ok(roots) = real_roots(fam.den(g), tol.root_accept) {
            singular.extend(roots);
        }
    }

    let n_id = fam.num(0).clone();
    let d_id = fam.den(0).clone();
    let per_g: Vec<CrossingSet<T>> = (0..fam.m())
        .into_par_iter()
        .map(|g| {
            if g == 0 {
                return CrossingSet::Points(Vec::new());
            }
            let cross = &(fam.den(g) * &n_id) - &(&d_id * fam.num(g));
            match real_roots(&cross, tol.root_accept) {
                Err(Error::ZeroPolynomial) => CrossingSet::Identical,
                Err(_) => unreachable!("real_roots only fails on the zero polynomial"),
                Ok(roots) => {
                    let kept = roots
                        .into_iter()
                        .filter(|&r| {
                            let id_ok = d_id.eval(r).abs() > tol.denom * fam.den_scale(0, r);
                            let g_ok =
                                fam.den(g).eval(r).abs() > tol.denom * fam.den_scale(g, r);
                            id_ok && g_ok
                        })
                        .collect();
                    CrossingSet::Points(kept)
                }
            }
        })
        .collect();

    singular.sort_by(|a, b| a.partial_cmp(b).expect("finite singular points"));
    singular.dedup_by(|a, b| {
        let scale = T::one().max(a.abs()).max(b.abs());
        (*a - *b).abs() <= tol.root_accept * scale
    });
    RationalCrossings { per_g, singular }
}

/// The exact p-value curve: a step function with breakpoints at crossing
/// points. Interval values are stored as integer indicator counts (the
/// p-value numerator), so equality checks against reference
/// implementations are exact.
#[derive(Debug, Clone, PartialEq)]
pub struct StepFunction<T> {
    m: usize,
    breakpoints: Vec<T>,
    counts: Vec<usize>,
    point_counts: Vec<Option<usize>>,
}

/// One row of the curve's interval table: the p-value on `(start, end)`,
/// with `None` standing for an infinite endpoint.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveRecord<T> {
    pub start: Option<T>,
    pub end: Option<T>,
    pub p: T,
}

/// The p-value at a breakpoint itself; `None` when the statistics are
/// undefined there (a singular denominator point).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BreakpointRecord<T> {
    pub beta: T,
    pub p: Option<T>,
}

impl<T: Scalar> StepFunction<T> {
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn breakpoints(&self) -> &[T] {
        &self.breakpoints
    }

    /// Indicator counts per open interval (p-value numerators).
    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    /// Counts at the breakpoints; `None` marks a singular point.
    pub fn point_counts(&self) -> &[Option<usize>] {
        &self.point_counts
    }

    /// p-values per open interval.
    pub fn values(&self) -> Vec<T> {
        self.counts
            .iter()
            .map(|&c| from_count::<T>(c) / from_count::<T>(self.m))
            .collect()
    }

    /// Breakpoints where the statistics are undefined.
    pub fn singular_points(&self) -> Vec<T> {
        self.breakpoints
            .iter()
            .zip(&self.point_counts)
            .filter(|(_, c)| c.is_none())
            .map(|(&b, _)| b)
            .collect()
    }

    /// The indicator count at `beta`: the containing open interval's count,
    /// or the stored point count when `beta` is exactly a breakpoint
    /// (`None` if that point is singular).
    pub fn count_at(&self, beta: T) -> Option<usize> {
        let idx = self.breakpoints.partition_point(|&b| b < beta);
        if idx < self.breakpoints.len() && self.breakpoints[idx] == beta {
            self.point_counts[idx]
        } else {
            Some(self.counts[idx])
        }
    }

    /// The p-value at `beta`; `None` at singular points.
    pub fn value_at(&self, beta: T) -> Option<T> {
        self.count_at(beta)
            .map(|c| from_count::<T>(c) / from_count::<T>(self.m))
    }

    /// Interval rows `(start, end, p)` with infinite endpoints as `None`.
    pub fn to_records(&self) -> Vec<CurveRecord<T>> {
        let m = from_count::<T>(self.m);
        let mut rows = Vec::with_capacity(self.counts.len());
        for (i, &c) in self.counts.iter().enumerate() {
            rows.push(CurveRecord {
                start: i.checked_sub(1).map(|j| self.breakpoints[j]),
                end: self.breakpoints.get(i).copied(),
                p: from_count::<T>(c) / m,
            });
        }
        rows
    }

    /// Breakpoint rows with their exact point p-values.
    pub fn point_records(&self) -> Vec<BreakpointRecord<T>> {
        let m = from_count::<T>(self.m);
        self.breakpoints
            .iter()
            .zip(&self.point_counts)
            .map(|(&beta, c)| BreakpointRecord {
                beta,
                p: c.map(|c| from_count::<T>(c) / m),
            })
            .collect()
    }

    /// Rebuilds a step function from parsed records; the inverse of
    /// [`Self::to_records`] + [`Self::point_records`].
    pub fn from_records(
        m: usize,
        records: &[CurveRecord<T>],
        points: &[BreakpointRecord<T>],
    ) -> Self {
        let to_count = |p: T| -> usize {
            let c = p * from_count::<T>(m);
            c.round().to_usize().expect("count fits usize")
        };
        Self {
            m,
            breakpoints: points.iter().map(|r| r.beta).collect(),
            counts: records.iter().map(|r| to_count(r.p)).collect(),
            point_counts: points.iter().map(|r| r.p.map(to_count)).collect(),
        }
    }
}

/// Indicator comparison with a tie margin: at a computed crossing the two
/// statistic values agree only to rounding, but the paper's `<=` indicator
/// must count the tie.
fn indicator<T: Scalar>(side: Side, v_id: T, v_g: T, tie: T) -> bool {
    let scale = T::one().max(v_id.abs()).max(v_g.abs());
    let margin = tie * scale;
    match side {
        Side::Right | Side::Wald => v_id <= v_g + margin,
        Side::Left => v_id >= v_g - margin,
        Side::TwoSided => v_id.abs() <= v_g.abs() + margin,
    }
}

/// The indicator count `1 + sum_{g != Id} 1[..]` at one point.
pub fn indicator_count<T: Scalar, F: ScalarFamily<T> + ?Sized>(
    fam: &F,
    beta: T,
    side: Side,
    tol: &Tolerances<T>,
) -> usize {
    let v_id = fam.value(0, beta);
    1 + (1..fam.m())
        .filter(|&g| indicator(side, v_id, fam.value(g, beta), tol.tie))
        .count()
}

/// Direct p-value evaluation at one point. Fails with
/// [`Error::DenominatorZero`] when a rational statistic is undefined there.
pub fn pvalue_at<T: Scalar, F: ScalarFamily<T> + ?Sized>(
    fam: &F,
    beta: T,
    side: Side,
    tol: &Tolerances<T>,
) -> Result<T> {
    for g in 0..fam.m() {
        if let Some((mag, scale)) = fam.denominator_magnitude(g, beta) {
            if mag <= tol.denom * scale {
                return Err(Error::DenominatorZero {
                    g,
                    beta: beta.to_f64().unwrap_or(f64::NAN),
                });
            }
        }
    }
    let c = indicator_count(fam, beta, side, tol);
    Ok(from_count::<T>(c) / from_count::<T>(fam.m()))
}

/// Pools per-permutation crossing points and singular points, then builds
/// the step function by evaluating the indicator count once per open
/// interval (at its midpoint, or a scale-aware offset beyond the outermost
/// breakpoint) and once at each breakpoint.
///
/// Breakpoints within the merge tolerance collapse to their mean. A
/// breakpoint is dropped when the counts on both sides and at the point all
/// agree (it changes nothing); singular breakpoints are always kept.
pub fn build_curve<T: Scalar>(
    crossings: &[Vec<T>],
    singular: &[T],
    m: usize,
    count_at: impl Fn(T) -> usize + Sync,
    tol: &Tolerances<T>,
) -> StepFunction<T> {
    // (value, is_singular), sorted then clustered.
    let mut pool: Vec<(T, bool)> = crossings
        .iter()
        .flatten()
        .map(|&b| (b, false))
        .chain(singular.iter().map(|&b| (b, true)))
        .filter(|(b, _)| b.is_finite())
        .collect();
    pool.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite breakpoints"));

    let mut breakpoints: Vec<(T, bool)> = Vec::with_capacity(pool.len());
    let mut i = 0;
    while i < pool.len() {
        let mut j = i + 1;
        let mut any_singular = pool[i].1;
        while j < pool.len() {
            let gap = pool[j].0 - pool[j - 1].0;
            let scale = T::one().max(pool[j].0.abs()).max(pool[j - 1].0.abs());
            if gap <= tol.breakpoint_merge * scale {
                any_singular |= pool[j].1;
                j += 1;
            } else {
                break;
            }
        }
        let mean = pool[i..j].iter().map(|(b, _)| *b).sum::<T>() / from_count::<T>(j - i);
        breakpoints.push((mean, any_singular));
        i = j;
    }

    let b = breakpoints.len();
    let probes: Vec<T> = if b == 0 {
        vec![T::zero()]
    } else {
        let span = breakpoints[b - 1].0 - breakpoints[0].0;
        let offset = T::one().max(span * crate::scalar::cst::<T>(0.1));
        let mut p = Vec::with_capacity(b + 1);
        p.push(breakpoints[0].0 - offset);
        for w in breakpoints.windows(2) {
            p.push((w[0].0 + w[1].0) * crate::scalar::cst::<T>(0.5));
        }
        p.push(breakpoints[b - 1].0 + offset);
        p
    };

    let counts: Vec<usize> = probes.par_iter().map(|&p| count_at(p)).collect();
    let point_counts: Vec<Option<usize>> = breakpoints
        .par_iter()
        .map(|&(beta, is_singular)| (!is_singular).then(|| count_at(beta)))
        .collect();

    // Drop breakpoints that change nothing.
    let mut kept_bp = Vec::with_capacity(b);
    let mut kept_pc = Vec::with_capacity(b);
    let mut kept_counts = vec![counts[0]];
    for j in 0..b {
        let redundant = counts[j] == counts[j + 1] && point_counts[j] == Some(counts[j]);
        if !redundant {
            kept_bp.push(breakpoints[j].0);
            kept_pc.push(point_counts[j]);
            kept_counts.push(counts[j + 1]);
        }
    }

    StepFunction {
        m,
        breakpoints: kept_bp,
        counts: kept_counts,
        point_counts: kept_pc,
    }
}

/// The exact p-value curve for a statistic family.
pub fn pvalue_curve<T: Scalar, F: ScalarFamily<T> + ?Sized>(
    fam: &F,
    side: Side,
    tol: &Tolerances<T>,
) -> Result<StepFunction<T>> {
    let (per_g, singular) = fam.crossings(side, tol)?;
    Ok(build_curve(
        &per_g,
        &singular,
        fam.m(),
        |beta| indicator_count(fam, beta, side, tol),
        tol,
    ))
}

/// Right-sided linear curve via the counter-update bookkeeping: the count
/// left of every crossing is censused once, then each crossing adjusts it
/// by one depending on the slope comparison. Kept as an independent code
/// path and cross-checked against midpoint evaluation.
pub fn linear_curve_counter<T: Scalar>(
    fam: &LinearFamily<T>,
    tol: &Tolerances<T>,
) -> StepFunction<T> {
    let m_id = fam.slope(0);
    let b_id = fam.intercept(0);

    // Census at beta -> -inf: lines with smaller slope start above the test
    // statistic; parallel lines compare by intercept for all beta.
    let mut counter = 1usize;
    let mut events: Vec<(T, isize)> = Vec::new();
    for g in 1..fam.m() {
        let dm = m_id - fam.slope(g);
        let scale = T::one().max(m_id.abs()).max(fam.slope(g).abs());
        if dm.abs() <= tol.slope * scale {
            if b_id <= fam.intercept(g) {
                counter += 1;
            }
        } else {
            if fam.slope(g) < m_id {
                counter += 1;
            }
            let cross = (fam.intercept(g) - b_id) / dm;
            let delta = if m_id < fam.slope(g) { 1 } else { -1 };
            events.push((cross, delta));
        }
    }
    events.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite crossings"));

    let mut breakpoints = Vec::new();
    let mut counts = vec![counter];
    let mut point_counts = Vec::new();
    let mut i = 0;
    while i < events.len() {
        let mut j = i + 1;
        while j < events.len() {
            let gap = events[j].0 - events[j - 1].0;
            let scale = T::one().max(events[j].0.abs()).max(events[j - 1].0.abs());
            if gap <= tol.breakpoint_merge * scale {
                j += 1;
            } else {
                break;
            }
        }
        let cluster = &events[i..j];
        let mean = cluster.iter().map(|(b, _)| *b).sum::<T>() / from_count::<T>(j - i);
        // Every line crossing here ties with the test statistic at the
        // point itself, so each one counts there.
        let rising = cluster.iter().filter(|(_, d)| *d > 0).count();
        let falling = cluster.len() - rising;
        let point = counter + rising;
        counter = counter + rising - falling;

        breakpoints.push(mean);
        point_counts.push(Some(point));
        counts.push(counter);
        i = j;
    }

    // Same redundancy filter as the midpoint path.
    let mut kept_bp = Vec::new();
    let mut kept_pc = Vec::new();
    let mut kept_counts = vec![counts[0]];
    for j in 0..breakpoints.len() {
        let redundant = counts[j] == counts[j + 1] && point_counts[j] == Some(counts[j]);
        if !redundant {
            kept_bp.push(breakpoints[j]);
            kept_pc.push(point_counts[j]);
            kept_counts.push(counts[j + 1]);
        }
    }

    StepFunction {
        m: fam.m(),
        breakpoints: kept_bp,
        counts: kept_counts,
        point_counts: kept_pc,
    }
}

/// One maximal interval of a confidence set. `None` bounds are infinite
/// (and never closed). A degenerate interval with `lower == upper`, both
/// closed, is a single parameter value that is in the set while its
/// neighborhood is not.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Interval<T> {
    pub lower: Option<T>,
    pub lower_closed: bool,
    pub upper: Option<T>,
    pub upper_closed: bool,
}

impl<T: Scalar> Interval<T> {
    pub fn contains(&self, beta: T) -> bool {
        let above = match self.lower {
            None => true,
            Some(l) => beta > l || (self.lower_closed && beta == l),
        };
        let below = match self.upper {
            None => true,
            Some(u) => beta < u || (self.upper_closed && beta == u),
        };
        above && below
    }
}

/// The set `{beta : p(beta) > alpha}` as disjoint sorted intervals.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfidenceSet<T> {
    pub alpha: T,
    pub intervals: Vec<Interval<T>>,
}

impl<T: Scalar> ConfidenceSet<T> {
    pub fn contains(&self, beta: T) -> bool {
        self.intervals.iter().any(|i| i.contains(beta))
    }
}

/// Extracts the level `1 - alpha` confidence set from a curve: the union
/// of open intervals whose p-value exceeds `alpha`, with each breakpoint
/// included exactly when its own point p-value exceeds `alpha`. Singular
/// breakpoints are never included.
pub fn confidence_set<T: Scalar>(curve: &StepFunction<T>, alpha: T) -> ConfidenceSet<T> {
    let m = from_count::<T>(curve.m());
    let passes = |c: usize| from_count::<T>(c) / m > alpha;

    let counts = curve.counts();
    let bps = curve.breakpoints();
    let mut intervals: Vec<Interval<T>> = Vec::new();
    // Lower bound of the run currently being built.
    let mut open: Option<(Option<T>, bool)> = None;

    for i in 0..counts.len() {
        if i > 0 {
            let bp = bps[i - 1];
            let pt_pass = curve.point_counts()[i - 1].map(passes).unwrap_or(false);
            let prev_pass = passes(counts[i - 1]);
            let next_pass = passes(counts[i]);
            match (prev_pass, pt_pass, next_pass) {
                (true, true, true) => {} // run continues through the point
                (true, true, false) => {
                    let (lower, lower_closed) = open.take().expect("run open");
                    intervals.push(Interval {
                        lower,
                        lower_closed,
                        upper: Some(bp),
                        upper_closed: true,
                    });
                }
                (true, false, _) => {
                    let (lower, lower_closed) = open.take().expect("run open");
                    intervals.push(Interval {
                        lower,
                        lower_closed,
                        upper: Some(bp),
                        upper_closed: false,
                    });
                }
                (false, true, true) => {
                    open = Some((Some(bp), true));
                }
                (false, true, false) => {
                    intervals.push(Interval {
                        lower: Some(bp),
                        lower_closed: true,
                        upper: Some(bp),
                        upper_closed: true,
                    });
                }
                (false, false, _) => {}
            }
        }
        if passes(counts[i]) && open.is_none() {
            let lower = i.checked_sub(1).map(|j| bps[j]);
            open = Some((lower, false));
        }
    }
    if let Some((lower, lower_closed)) = open {
        intervals.push(Interval {
            lower,
            lower_closed,
            upper: None,
            upper_closed: false,
        });
    }

    ConfidenceSet { alpha, intervals }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::Poly;
    use crate::design::{enumerate_group, PermMode};
    use crate::oracle::{generate_dataset, DgpConfig, Oracle, TestKind};
    use crate::stats::build_linear;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn tol() -> Tolerances<f64> {
        Tolerances::default()
    }

    fn lines(slopes: &[f64], intercepts: &[f64]) -> LinearFamily<f64> {
        LinearFamily::from_lines(slopes.to_vec(), intercepts.to_vec())
    }

    fn synthetic_linear(seed: u64) -> LinearFamily<f64> {
        let data = generate_dataset(&DgpConfig::standard(12, 3, 1, 1, 0), seed).unwrap();
        let group = enumerate_group(data.blocks(), PermMode::BlockSwap, 10, None).unwrap();
        build_linear(&data, &group, &tol()).unwrap()
    }

    #[test]
    fn linear_crossing_of_two_lines() {
        let fam = lines(&[1.0, -1.0], &[0.0, 2.0]);
        let c = crossings_linear(&fam, &tol());
        assert_eq!(c, vec![None, Some(1.0)]);
    }

    #[test]
    fn parallel_lines_have_no_crossing() {
        let fam = lines(&[2.0, 2.0], &[3.0, 1.0]);
        assert_eq!(crossings_linear(&fam, &tol()), vec![None, None]);
    }

    #[test]
    fn random_crossings_lie_on_both_lines() {
        let mut rng = StdRng::seed_from_u64(2);
        for _ in 0..50 {
            let m = 8;
            let fam = lines(
                &(0..m).map(|_| rng.random_range(-2.0..2.0)).collect::<Vec<_>>(),
                &(0..m).map(|_| rng.random_range(-2.0..2.0)).collect::<Vec<_>>(),
            );
            for (g, c) in crossings_linear(&fam, &tol()).iter().enumerate() {
                if let Some(b) = c {
                    let gap = (fam.value(0, *b) - fam.value(g, *b)).abs();
                    assert!(gap <= 1e-9, "gap {gap} at crossing");
                }
            }
        }
    }

    #[test]
    fn abs_crossings_of_two_lines() {
        // |x| against |3x + 3| meet at -0.75 and -1.5.
        let fam = lines(&[1.0, 3.0], &[0.0, 3.0]);
        match &crossings_abs(&fam, &tol())[1] {
            CrossingSet::Points(p) => {
                assert_eq!(p.len(), 2);
                assert!((p[0] + 1.5).abs() < 1e-12);
                assert!((p[1] + 0.75).abs() < 1e-12);
                assert!((fam.value(0, p[0]).abs() - 1.5).abs() < 1e-12);
                assert!((fam.value(0, p[1]).abs() - 0.75).abs() < 1e-12);
            }
            other => panic!("expected two points, got {other:?}"),
        }
    }

    #[test]
    fn mirrored_lines_are_identical_in_absolute_value() {
        // |x| and |-x| agree everywhere: the indicator is constantly one.
        let fam = lines(&[1.0, -1.0], &[0.0, 0.0]);
        assert_eq!(crossings_abs(&fam, &tol())[1], CrossingSet::Identical);
        let curve = pvalue_curve(&fam, Side::TwoSided, &tol()).unwrap();
        assert!(curve.breakpoints().is_empty());
        assert_eq!(curve.counts(), &[2]);
    }

    #[test]
    fn abs_crossings_touch_both_absolute_lines() {
        let mut rng = StdRng::seed_from_u64(3);
        for _ in 0..50 {
            let m = 6;
            let fam = lines(
                &(0..m).map(|_| rng.random_range(0.2..2.0)).collect::<Vec<_>>(),
                &(0..m).map(|_| rng.random_range(-2.0..2.0)).collect::<Vec<_>>(),
            );
            for (g, c) in crossings_abs(&fam, &tol()).iter().enumerate() {
                if let CrossingSet::Points(pts) = c {
                    for &b in pts {
                        let gap = (fam.value(0, b).abs() - fam.value(g, b).abs()).abs();
                        assert!(gap <= 1e-9, "gap {gap} at abs crossing");
                    }
                }
            }
        }
    }

    #[test]
    fn rational_crossings_from_simple_parts() {
        // t_Id = x^2, t_g = 1: equal where x^2 = 1.
        let fam = RationalFamily::from_parts(
            vec![Poly::new(vec![0.0, 0.0, 1.0]), Poly::new(vec![1.0])],
            vec![Poly::one(), Poly::one()],
        );
        let rc = crossings_rational(&fam, &tol());
        match &rc.per_g[1] {
            CrossingSet::Points(p) => {
                assert_eq!(p.len(), 2);
                assert!((p[0] + 1.0).abs() < 1e-9 && (p[1] - 1.0).abs() < 1e-9);
            }
            other => panic!("expected two roots, got {other:?}"),
        }
        assert!(rc.singular.is_empty());
    }

    #[test]
    fn identical_rational_statistics_detected() {
        let n = Poly::new(vec![1.0, 2.0]);
        let d = Poly::new(vec![3.0, 0.0, 1.0]);
        let fam = RationalFamily::from_parts(vec![n.clone(), n], vec![d.clone(), d]);
        let rc = crossings_rational(&fam, &tol());
        assert_eq!(rc.per_g[1], CrossingSet::Identical);
    }

    #[test]
    fn two_line_curve_right_and_left() {
        let fam = lines(&[1.0, -1.0], &[0.0, 0.0]);
        let right = pvalue_curve(&fam, Side::Right, &tol()).unwrap();
        assert_eq!(right.breakpoints(), &[0.0]);
        assert_eq!(right.values(), vec![1.0, 0.5]);
        assert_eq!(right.point_counts(), &[Some(2)]);

        let left = pvalue_curve(&fam, Side::Left, &tol()).unwrap();
        assert_eq!(left.values(), vec![0.5, 1.0]);
    }

    #[test]
    fn pvalue_far_left_of_all_crossings_is_one() {
        let fam = lines(&[1.0, -1.0], &[0.0, 0.0]);
        assert_eq!(pvalue_at(&fam, -5.0, Side::Right, &tol()).unwrap(), 1.0);
        let p = pvalue_at(&fam, 0.3, Side::Right, &tol()).unwrap();
        assert_eq!(p, 0.5);
    }

    #[test]
    fn step_values_are_count_fractions() {
        let fam = synthetic_linear(31);
        let curve = pvalue_curve(&fam, Side::Right, &tol()).unwrap();
        let m = curve.m() as f64;
        for &c in curve.counts() {
            assert!(c >= 1 && c <= curve.m());
            let p = c as f64 / m;
            assert!(p >= 1.0 / m && p <= 1.0);
        }
        // Breakpoint cap for one-sided linear families: at most M - 1.
        assert!(curve.breakpoints().len() <= curve.m() - 1);
    }

    #[test]
    fn curve_matches_direct_count_between_breakpoints() {
        let fam = synthetic_linear(17);
        for side in [Side::Right, Side::Left, Side::TwoSided] {
            let curve = pvalue_curve(&fam, side, &tol()).unwrap();
            let mut rng = StdRng::seed_from_u64(5);
            for _ in 0..200 {
                let beta: f64 = rng.random_range(-10.0..10.0);
                let direct = indicator_count(&fam, beta, side, &tol());
                assert_eq!(curve.count_at(beta), Some(direct));
            }
        }
    }

    #[test]
    fn curve_matches_oracle_recomputation() {
        let data = generate_dataset(&DgpConfig::standard(12, 3, 1, 1, 0), 47).unwrap();
        let group = enumerate_group(data.blocks(), PermMode::BlockSwap, 10, None).unwrap();
        let fam = build_linear(&data, &group, &tol()).unwrap();
        let oracle = Oracle::new(&data, &group, &tol());
        let curve = pvalue_curve(&fam, Side::Right, &tol()).unwrap();
        let mut rng = StdRng::seed_from_u64(9);
        for _ in 0..200 {
            let beta: f64 = rng.random_range(-8.0..8.0);
            let naive = oracle.count(TestKind::LinearRight, &[beta]).unwrap();
            assert_eq!(curve.count_at(beta), Some(naive), "beta = {beta}");
        }
    }

    #[test]
    fn counter_path_agrees_with_midpoint_path() {
        let mut rng = StdRng::seed_from_u64(13);
        for case in 0..20 {
            let m = rng.random_range(2..20);
            let mut slopes = Vec::with_capacity(m);
            let mut intercepts = Vec::with_capacity(m);
            for _ in 0..m {
                slopes.push(rng.random_range(-3.0..3.0));
                intercepts.push(rng.random_range(-3.0..3.0));
            }
            // Plant a parallel duplicate now and then.
            if m > 2 && case % 3 == 0 {
                slopes[m - 1] = slopes[0];
            }
            let fam = lines(&slopes, &intercepts);
            let counter = linear_curve_counter(&fam, &tol());
            let midpoint = pvalue_curve(&fam, Side::Right, &tol()).unwrap();
            assert_eq!(counter, midpoint, "case {case}");
        }
    }

    #[test]
    fn confidence_set_from_two_line_curve() {
        let fam = lines(&[1.0, -1.0], &[0.0, 0.0]);
        let curve = pvalue_curve(&fam, Side::Right, &tol()).unwrap();

        // p = 1 on (-inf, 0), 1 at 0, 0.5 on (0, inf).
        let cs = confidence_set(&curve, 0.6);
        assert_eq!(
            cs.intervals,
            vec![Interval {
                lower: None,
                lower_closed: false,
                upper: Some(0.0),
                upper_closed: true,
            }]
        );

        let all = confidence_set(&curve, 0.4);
        assert_eq!(
            all.intervals,
            vec![Interval {
                lower: None,
                lower_closed: false,
                upper: None,
                upper_closed: false,
            }]
        );

        let strict = confidence_set(&curve, 0.95);
        assert_eq!(strict.intervals.len(), 1);
        assert_eq!(strict.intervals[0].upper, Some(0.0));
        assert!(strict.intervals[0].upper_closed);
    }

    #[test]
    fn disjoint_confidence_set_with_a_hole() {
        // T_Id = 0; T_g1 = beta counts right of 0; T_g2 = -beta - 1 counts
        // left of -1. p dips to 1/3 in between.
        let fam = lines(&[0.0, 1.0, -1.0], &[0.0, 0.0, -1.0]);
        let curve = pvalue_curve(&fam, Side::Right, &tol()).unwrap();
        assert_eq!(curve.breakpoints(), &[-1.0, 0.0]);
        assert_eq!(curve.values(), vec![2.0 / 3.0, 1.0 / 3.0, 2.0 / 3.0]);

        let cs = confidence_set(&curve, 0.5);
        assert_eq!(
            cs.intervals,
            vec![
                Interval {
                    lower: None,
                    lower_closed: false,
                    upper: Some(-1.0),
                    upper_closed: true,
                },
                Interval {
                    lower: Some(0.0),
                    lower_closed: true,
                    upper: None,
                    upper_closed: false,
                },
            ]
        );
        assert!(cs.contains(-1.0));
        assert!(!cs.contains(-0.5));
        assert!(cs.contains(0.0));
    }

    #[test]
    fn isolated_point_survives_in_curve_and_set() {
        // |2x| vs |x|: equal only at the origin, where both are zero, so
        // the p-value jumps to 1 at exactly one point.
        let fam = lines(&[2.0, 1.0], &[0.0, 0.0]);
        let curve = pvalue_curve(&fam, Side::TwoSided, &tol()).unwrap();
        assert_eq!(curve.breakpoints(), &[0.0]);
        assert_eq!(curve.counts(), &[1, 1]);
        assert_eq!(curve.point_counts(), &[Some(2)]);

        let cs = confidence_set(&curve, 0.75);
        assert_eq!(
            cs.intervals,
            vec![Interval {
                lower: Some(0.0),
                lower_closed: true,
                upper: Some(0.0),
                upper_closed: true,
            }]
        );
    }

    #[test]
    fn duality_on_synthetic_curves() {
        let fam = synthetic_linear(59);
        for side in [Side::Right, Side::Left, Side::TwoSided] {
            let curve = pvalue_curve(&fam, side, &tol()).unwrap();
            for alpha in [0.05, 0.25, 0.5] {
                let cs = confidence_set(&curve, alpha);
                let mut rng = StdRng::seed_from_u64(7);
                for _ in 0..200 {
                    let beta: f64 = rng.random_range(-10.0..10.0);
                    let p = pvalue_at(&fam, beta, side, &tol()).unwrap();
                    assert_eq!(cs.contains(beta), p > alpha, "beta={beta} side={side:?}");
                }
                for &bp in curve.breakpoints() {
                    let p = pvalue_at(&fam, bp, side, &tol()).unwrap();
                    assert_eq!(cs.contains(bp), p > alpha, "bp={bp} side={side:?}");
                }
            }
        }
    }

    #[test]
    fn singular_point_splits_curve_and_is_excluded() {
        // t_Id = 1, t_g = 1 / x^2: crossings at +-1, pole at 0.
        let fam = RationalFamily::from_parts(
            vec![Poly::one(), Poly::one()],
            vec![Poly::one(), Poly::new(vec![0.0, 0.0, 1.0])],
        );
        let curve = pvalue_curve(&fam, Side::Wald, &tol()).unwrap();
        assert_eq!(curve.breakpoints().len(), 3);
        assert_eq!(curve.singular_points(), vec![0.0]);
        assert_eq!(curve.counts(), &[1, 2, 2, 1]);

        let cs = confidence_set(&curve, 0.6);
        assert_eq!(
            cs.intervals,
            vec![
                Interval {
                    lower: Some(-1.0),
                    lower_closed: true,
                    upper: Some(0.0),
                    upper_closed: false,
                },
                Interval {
                    lower: Some(0.0),
                    lower_closed: false,
                    upper: Some(1.0),
                    upper_closed: true,
                },
            ]
        );

        assert!(matches!(
            pvalue_at(&fam, 0.0, Side::Wald, &tol()),
            Err(Error::DenominatorZero { g: 1, .. })
        ));
    }

    #[test]
    fn records_round_trip_and_encode_infinities_as_null() {
        let fam = lines(&[0.0, 1.0, -1.0], &[0.0, 0.0, -1.0]);
        let curve = pvalue_curve(&fam, Side::Right, &tol()).unwrap();
        let records = curve.to_records();
        assert_eq!(records.first().unwrap().start, None);
        assert_eq!(records.last().unwrap().end, None);

        let json = serde_json::to_string(&records).unwrap();
        assert!(json.starts_with("[{\"start\":null,"));

        let rebuilt =
            StepFunction::from_records(curve.m(), &records, &curve.point_records());
        assert_eq!(rebuilt, curve);
    }

    #[test]
    fn two_sided_on_rational_family_is_rejected() {
        let fam = RationalFamily::from_parts(vec![Poly::one()], vec![Poly::one()]);
        assert!(matches!(
            pvalue_curve(&fam, Side::TwoSided, &tol()),
            Err(Error::UnsupportedSide { .. })
        ));
    }
}
