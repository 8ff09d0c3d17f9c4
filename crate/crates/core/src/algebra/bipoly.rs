//! Dense bivariate polynomials of bounded total degree.

use crate::scalar::Scalar;

/// A bivariate polynomial stored densely over the exponent triangle
/// `{(i, j) : i + j <= max_degree}`.
///
/// `max_degree` is an upper bound on the total degree; the stored value may
/// exceed the actual degree after cancellation, which is harmless.
#[derive(Debug, Clone, PartialEq)]
pub struct BiPoly<T> {
    max_degree: usize,
    coeffs: Vec<T>,
}

impl<T: Scalar> BiPoly<T> {
    pub fn zero(max_degree: usize) -> Self {
        let len = (max_degree + 1) * (max_degree + 2) / 2;
        Self {
            max_degree,
            coeffs: vec![T::zero(); len],
        }
    }

    pub fn constant(c: T) -> Self {
        let mut p = Self::zero(0);
        p.set(0, 0, c);
        p
    }

    /// Builds from a list of `(i, j, coefficient)` terms.
    pub fn from_terms(max_degree: usize, terms: &[(usize, usize, T)]) -> Self {
        let mut p = Self::zero(max_degree);
        for &(i, j, c) in terms {
            *p.at_mut(i, j) += c;
        }
        p
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    fn index(&self, i: usize, j: usize) -> usize {
        debug_assert!(i + j <= self.max_degree);
        // Row i holds exponents (i, 0..=max_degree - i).
        let before: usize = (0..i).map(|a| self.max_degree + 1 - a).sum();
        before + j
    }

    pub fn coeff(&self, i: usize, j: usize) -> T {
        if i + j > self.max_degree {
            T::zero()
        } else {
            self.coeffs[self.index(i, j)]
        }
    }

    pub fn set(&mut self, i: usize, j: usize, c: T) {
        let idx = self.index(i, j);
        self.coeffs[idx] = c;
    }

    fn at_mut(&mut self, i: usize, j: usize) -> &mut T {
        let idx = self.index(i, j);
        &mut self.coeffs[idx]
    }

    pub fn add(&self, rhs: &Self) -> Self {
        let d = self.max_degree.max(rhs.max_degree);
        let mut out = Self::zero(d);
        for i in 0..=d {
            for j in 0..=(d - i) {
                out.set(i, j, self.coeff(i, j) + rhs.coeff(i, j));
            }
        }
        out
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        let d = self.max_degree + rhs.max_degree;
        let mut out = Self::zero(d);
        for i in 0..=self.max_degree {
            for j in 0..=(self.max_degree - i) {
                let a = self.coeff(i, j);
                if a.is_zero() {
                    continue;
                }
                for k in 0..=rhs.max_degree {
                    for l in 0..=(rhs.max_degree - k) {
                        let b = rhs.coeff(k, l);
                        if !b.is_zero() {
                            *out.at_mut(i + k, j + l) += a * b;
                        }
                    }
                }
            }
        }
        out
    }

    pub fn scale(&self, factor: T) -> Self {
        Self {
            max_degree: self.max_degree,
            coeffs: self.coeffs.iter().map(|&c| c * factor).collect(),
        }
    }

    /// Evaluation as nested Horner: a polynomial in `y` whose coefficients
    /// are Horner-evaluated polynomials in `x`.
    pub fn eval(&self, x: T, y: T) -> T {
        let d = self.max_degree;
        let mut acc = T::zero();
        for j in (0..=d).rev() {
            // coefficient of y^j is sum_i c_{i,j} x^i with i <= d - j
            let mut cx = T::zero();
            for i in (0..=(d - j)).rev() {
                cx = cx * x + self.coeff(i, j);
            }
            acc = acc * y + cx;
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    type B = BiPoly<f64>;

    fn naive_eval(p: &B, x: f64, y: f64) -> f64 {
        let mut s = 0.0;
        for i in 0..=p.max_degree() {
            for j in 0..=(p.max_degree() - i) {
                s += p.coeff(i, j) * x.powi(i as i32) * y.powi(j as i32);
            }
        }
        s
    }

    #[test]
    fn sum_of_squares() {
        let p = B::from_terms(2, &[(2, 0, 1.0), (0, 2, 1.0)]);
        assert_eq!(p.eval(3.0, 4.0), 25.0);
    }

    #[test]
    fn pure_cross_term_vanishes_on_axis() {
        let p = B::from_terms(2, &[(1, 1, 1.0)]);
        assert_eq!(p.eval(0.0, 7.0), 0.0);
    }

    #[test]
    fn horner_matches_naive_on_random_quartic() {
        let mut state = 0x1234_5678_u64;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 33) as f64 / (1u64 << 31) as f64) - 1.0
        };
        for _ in 0..20 {
            let mut p = B::zero(4);
            for i in 0..=4usize {
                for j in 0..=(4 - i) {
                    p.set(i, j, next());
                }
            }
            let (x, y) = (2.0 * next(), 2.0 * next());
            let a = p.eval(x, y);
            let b = naive_eval(&p, x, y);
            assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn mul_degree_adds() {
        let p = B::from_terms(1, &[(1, 0, 1.0), (0, 0, 2.0)]); // x + 2
        let q = B::from_terms(1, &[(0, 1, 1.0)]); // y
        let r = p.mul(&q);
        assert_eq!(r.max_degree(), 2);
        assert_eq!(r.coeff(1, 1), 1.0);
        assert_eq!(r.coeff(0, 1), 2.0);
    }
}
