//! Real root extraction via companion-matrix eigenvalues.
//!
//! Degrees one and two are solved in closed form; everything above goes
//! through the Frobenius companion matrix of the monic-normalized
//! polynomial. Eigenvalues with a relatively tiny imaginary part are
//! accepted as real, then polished with a few guarded Newton steps.

use nalgebra::DMatrix;

use crate::algebra::Poly;
use crate::error::{Error, Result};
use crate::scalar::{cst, Scalar};

/// Coefficients at or below this fraction of the largest magnitude are
/// treated as zero when trimming the effective degree.
const STRIP_REL: f64 = 1e-13;

/// All real roots of `p`, ascending, deduplicated within
/// `tol * max(1, |root|)`.
///
/// Complex eigenvalues whose imaginary part is within `tol` of zero
/// (relative to the root magnitude) are accepted as real. Returns
/// [`Error::ZeroPolynomial`] when every coefficient vanishes, which callers
/// must interpret as "the two statistics are identical".
pub fn real_roots<T: Scalar>(p: &Poly<T>, tol: T) -> Result<Vec<T>> {
    let scale = p.max_abs_coeff();
    if scale.is_zero() {
        return Err(Error::ZeroPolynomial);
    }
    let strip = scale * cst(STRIP_REL);

    let coeffs = p.coeffs();
    let hi = match coeffs.iter().rposition(|c| c.abs() > strip) {
        Some(h) => h,
        None => return Err(Error::ZeroPolynomial),
    };
    let lo = coeffs
        .iter()
        .position(|c| c.abs() > strip)
        .expect("hi exists, so lo does");

    let mut roots: Vec<T> = Vec::new();
    if lo > 0 {
        // A stripped x^lo factor contributes a root at the origin.
        roots.push(T::zero());
    }

    let c = &coeffs[lo..=hi];
    match c.len() {
        1 => {} // non-zero constant: no further roots
        2 => roots.push(-c[0] / c[1]),
        3 => roots.extend(quadratic_roots(c[0], c[1], c[2], tol)),
        _ => roots.extend(companion_roots(p, c, tol)),
    }

    roots.sort_by(|a, b| a.partial_cmp(b).expect("roots are finite"));
    Ok(dedup_within(roots, tol))
}

/// Stable quadratic formula for `c0 + c1 x + c2 x^2`.
fn quadratic_roots<T: Scalar>(c0: T, c1: T, c2: T, tol: T) -> Vec<T> {
    let disc = c1 * c1 - cst::<T>(4.0) * c2 * c0;
    let two = cst::<T>(2.0);
    if disc < T::zero() {
        // Conjugate pair; accept as a double real root only if the
        // imaginary part is negligible at the root's own scale.
        let re = -c1 / (two * c2);
        let im = (-disc).sqrt() / (two * c2.abs());
        if im <= tol * T::one().max(re.abs()) {
            return vec![re];
        }
        return Vec::new();
    }
    let sq = disc.sqrt();
    let q = -(c1 + c1.signum() * sq) / two;
    if q.is_zero() {
        // c1 = 0 and disc = 0: double root at the origin.
        return vec![T::zero()];
    }
    let _ = tol;
    vec![q / c2, c0 / q]
}

fn companion_roots<T: Scalar>(original: &Poly<T>, c: &[T], tol: T) -> Vec<T> {
    let n = c.len() - 1;
    let lead = c[n];
    let mut m = DMatrix::<T>::zeros(n, n);
    for i in 1..n {
        m[(i, i - 1)] = T::one();
    }
    for i in 0..n {
        m[(i, n - 1)] = -c[i] / lead;
    }

    let eig = m.complex_eigenvalues();
    let mut out = Vec::new();
    for z in eig.iter() {
        let mag = T::one().max(z.re.abs().max(z.im.abs()));
        if z.im.abs() <= tol * mag {
            out.push(newton_polish(original, z.re));
        }
    }
    out
}

/// Up to three Newton steps on the original polynomial; keeps a step only
/// while the residual shrinks.
fn newton_polish<T: Scalar>(p: &Poly<T>, mut x: T) -> T {
    let dp = p.derivative();
    let mut fx = p.eval(x).abs();
    for _ in 0..3 {
        let d = dp.eval(x);
        if d.is_zero() {
            break;
        }
        let candidate = x - p.eval(x) / d;
        let fc = p.eval(candidate).abs();
        if !(fc < fx) || !candidate.is_finite() {
            break;
        }
        x = candidate;
        fx = fc;
    }
    x
}

/// Merges sorted near-duplicates, replacing each cluster by its mean.
fn dedup_within<T: Scalar>(sorted: Vec<T>, tol: T) -> Vec<T> {
    let mut out: Vec<T> = Vec::with_capacity(sorted.len());
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i + 1;
        while j < sorted.len() {
            let gap = sorted[j] - sorted[j - 1];
            let scale = T::one().max(sorted[j].abs().max(sorted[j - 1].abs()));
            if gap <= tol * scale {
                j += 1;
            } else {
                break;
            }
        }
        let count = from_len::<T>(j - i);
        let mean = sorted[i..j].iter().copied().sum::<T>() / count;
        out.push(mean);
        i = j;
    }
    out
}

fn from_len<T: Scalar>(n: usize) -> T {
    T::from_usize(n).expect("cluster length fits in scalar")
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOL: f64 = 1e-9;

    #[test]
    fn quadratic_with_unit_roots() {
        let p = Poly::new(vec![-1.0, 0.0, 1.0]);
        assert_eq!(real_roots(&p, TOL).unwrap(), vec![-1.0, 1.0]);
    }

    #[test]
    fn linear_through_origin() {
        let p = Poly::new(vec![0.0, 1.0]);
        assert_eq!(real_roots(&p, TOL).unwrap(), vec![0.0]);
    }

    #[test]
    fn nonzero_constant_has_no_roots() {
        let p = Poly::new(vec![5.0]);
        assert!(real_roots(&p, TOL).unwrap().is_empty());
    }

    #[test]
    fn zero_polynomial_errors() {
        assert_eq!(
            real_roots(&Poly::<f64>::zero(), TOL),
            Err(Error::ZeroPolynomial)
        );
    }

    #[test]
    fn complex_pair_rejected() {
        // x^2 + 1
        let p = Poly::new(vec![1.0, 0.0, 1.0]);
        assert!(real_roots(&p, TOL).unwrap().is_empty());
    }

    #[test]
    fn double_root_merged() {
        // (x - 2)^2
        let p = Poly::from_roots(&[2.0, 2.0]);
        let r = real_roots(&p, TOL).unwrap();
        assert_eq!(r.len(), 1);
        assert!((r[0] - 2.0).abs() < 1e-9);
    }

    #[test]
    fn planted_degree_six_recovered() {
        let planted = [-2.5, -1.0, -0.125, 0.5, 1.75, 3.0];
        let p = Poly::from_roots(&planted);
        let found = real_roots(&p, TOL).unwrap();
        assert_eq!(found.len(), planted.len());
        for (f, e) in found.iter().zip(planted.iter()) {
            assert!((f - e).abs() < 1e-8, "root {f} vs expected {e}");
        }
    }

    #[test]
    fn stripped_origin_factor_reports_zero_root() {
        // x^2 (x - 1) = -x^2 + x^3 ... coefficients [0, 0, -1, 1]
        let p = Poly::new(vec![0.0, 0.0, -1.0, 1.0]);
        let r = real_roots(&p, TOL).unwrap();
        assert_eq!(r.len(), 2);
        assert!((r[0] - 0.0).abs() < 1e-12);
        assert!((r[1] - 1.0).abs() < 1e-9);
    }
}
