//! Dense univariate polynomials with real coefficients.
//!
//! Coefficients are stored in ascending degree order (`coeffs[i]` multiplies
//! `x^i`). The zero polynomial is the empty coefficient vector. Degrees in
//! this crate stay tiny (at most a few times the instrument count), so a
//! dense representation is the right trade-off.

use std::ops::{Add, Mul, Neg, Sub};

use crate::scalar::Scalar;

/// A univariate polynomial, normalized so the trailing (highest-degree)
/// coefficient is non-zero. Only exact zeros are stripped during
/// normalization; near-zero coefficients are the root finder's business.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly<T> {
    coeffs: Vec<T>,
}

impl<T: Scalar> Poly<T> {
    /// Builds a polynomial from ascending coefficients, stripping exact
    /// trailing zeros.
    pub fn new(mut coeffs: Vec<T>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    pub fn constant(c: T) -> Self {
        Self::new(vec![c])
    }

    pub fn one() -> Self {
        Self::constant(T::one())
    }

    /// Monic product of `(x - r)` over the given roots. Used heavily by
    /// tests that plant known roots.
    pub fn from_roots(roots: &[T]) -> Self {
        let mut p = Self::one();
        for &r in roots {
            p = &p * &Self::new(vec![-r, T::one()]);
        }
        p
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    /// Coefficient of `x^i`; zero beyond the stored degree.
    pub fn coeff(&self, i: usize) -> T {
        self.coeffs.get(i).copied().unwrap_or_else(T::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    /// Horner evaluation.
    pub fn eval(&self, x: T) -> T {
        self.coeffs
            .iter()
            .rev()
            .fold(T::zero(), |acc, &c| acc * x + c)
    }

    pub fn derivative(&self) -> Self {
        if self.coeffs.len() <= 1 {
            return Self::zero();
        }
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(i, &c)| c * from_index::<T>(i))
            .collect();
        Self::new(coeffs)
    }

    pub fn scale(&self, factor: T) -> Self {
        Self::new(self.coeffs.iter().map(|&c| c * factor).collect())
    }

    /// Largest coefficient magnitude; zero for the zero polynomial.
    pub fn max_abs_coeff(&self) -> T {
        self.coeffs
            .iter()
            .fold(T::zero(), |acc, &c| acc.max(c.abs()))
    }
}

fn from_index<T: Scalar>(i: usize) -> T {
    T::from_usize(i).expect("index fits in scalar")
}

impl<T: Scalar> Add for &Poly<T> {
    type Output = Poly<T>;

    fn add(self, rhs: Self) -> Poly<T> {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        Poly::new((0..n).map(|i| self.coeff(i) + rhs.coeff(i)).collect())
    }
}

impl<T: Scalar> Sub for &Poly<T> {
    type Output = Poly<T>;

    fn sub(self, rhs: Self) -> Poly<T> {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        Poly::new((0..n).map(|i| self.coeff(i) - rhs.coeff(i)).collect())
    }
}

impl<T: Scalar> Mul for &Poly<T> {
    type Output = Poly<T>;

    fn mul(self, rhs: Self) -> Poly<T> {
        if self.is_zero() || rhs.is_zero() {
            return Poly::zero();
        }
        let mut out = vec![T::zero(); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in rhs.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly::new(out)
    }
}

impl<T: Scalar> Neg for &Poly<T> {
    type Output = Poly<T>;

    fn neg(self) -> Poly<T> {
        Poly::new(self.coeffs.iter().map(|&c| -c).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    type P = Poly<f64>;

    #[test]
    fn mul_of_conjugate_linears() {
        let a = P::new(vec![1.0, 1.0]);
        let b = P::new(vec![1.0, -1.0]);
        assert_eq!((&a * &b).coeffs(), &[1.0, 0.0, -1.0]);
    }

    #[test]
    fn add_identity() {
        let a = P::new(vec![2.0]);
        let z = P::new(vec![0.0]);
        assert_eq!((&a + &z).coeffs(), &[2.0]);
        assert!(z.is_zero());
    }

    #[test]
    fn sub_self_cancels() {
        let a = P::new(vec![1.0, 2.0, 3.0]);
        assert!((&a - &a).is_zero());
        assert_eq!((&a - &a).degree(), None);
    }

    #[test]
    fn degree_after_normalization() {
        let p = P::new(vec![1.0, 2.0, 0.0, 0.0]);
        assert_eq!(p.degree(), Some(1));
        assert_eq!(p.coeffs().len(), 2);
    }

    #[test]
    fn eval_and_derivative() {
        let p = P::new(vec![1.0, -2.0, 3.0]); // 1 - 2x + 3x^2
        assert_eq!(p.eval(2.0), 9.0);
        assert_eq!(p.derivative().coeffs(), &[-2.0, 6.0]);
    }

    #[test]
    fn from_roots_expands() {
        let p = P::from_roots(&[1.0, -2.0]);
        // (x - 1)(x + 2) = x^2 + x - 2
        assert_eq!(p.coeffs(), &[-2.0, 1.0, 1.0]);
    }

    #[test]
    fn generic_over_f32() {
        let p = Poly::<f32>::new(vec![1.0, 1.0]);
        assert_eq!(p.eval(2.0), 3.0);
    }
}
