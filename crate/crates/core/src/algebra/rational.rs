//! Rational functions: a numerator/denominator pair of polynomials.

use crate::algebra::Poly;
use crate::scalar::Scalar;

/// `num / den` with a non-zero denominator polynomial.
#[derive(Debug, Clone, PartialEq)]
pub struct Rational<T> {
    num: Poly<T>,
    den: Poly<T>,
}

impl<T: Scalar> Rational<T> {
    /// Panics if `den` is the zero polynomial; that is a construction bug,
    /// not a data condition.
    pub fn new(num: Poly<T>, den: Poly<T>) -> Self {
        assert!(!den.is_zero(), "rational denominator must be non-zero");
        Self { num, den }
    }

    pub fn num(&self) -> &Poly<T> {
        &self.num
    }

    pub fn den(&self) -> &Poly<T> {
        &self.den
    }

    /// Plain floating evaluation; the caller is responsible for avoiding
    /// denominator zeros (see the inversion engine's singular handling).
    pub fn eval(&self, x: T) -> T {
        self.num.eval(x) / self.den.eval(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn evaluates_ratio() {
        let r = Rational::new(Poly::new(vec![0.0, 0.0, 1.0]), Poly::new(vec![1.0, 1.0]));
        assert_eq!(r.eval(2.0), 4.0 / 3.0);
    }

    #[test]
    #[should_panic(expected = "non-zero")]
    fn zero_denominator_panics() {
        let _ = Rational::new(Poly::<f64>::one(), Poly::zero());
    }
}
