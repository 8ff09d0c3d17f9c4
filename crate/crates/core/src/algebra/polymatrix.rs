//! Square matrices with polynomial entries, inverted symbolically through
//! determinant and adjugate so no division is ever performed.

use nalgebra::DMatrix;

use crate::algebra::Poly;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Hard cap on cofactor expansion: the cost is factorial in `k`, and the
/// covariance matrices this crate builds never exceed the instrument count.
pub const COFACTOR_CAP: usize = 6;

/// A `k x k` matrix of univariate polynomials.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyMatrix<T> {
    k: usize,
    entries: Vec<Poly<T>>, // row-major
}

impl<T: Scalar> PolyMatrix<T> {
    pub fn from_entries(k: usize, entries: Vec<Poly<T>>) -> Self {
        assert_eq!(entries.len(), k * k, "entry count must be k*k");
        Self { k, entries }
    }

    pub fn identity(k: usize) -> Self {
        let mut entries = vec![Poly::zero(); k * k];
        for i in 0..k {
            entries[i * k + i] = Poly::one();
        }
        Self { k, entries }
    }

    pub fn dim(&self) -> usize {
        self.k
    }

    pub fn entry(&self, row: usize, col: usize) -> &Poly<T> {
        &self.entries[row * self.k + col]
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.k).all(|i| (0..i).all(|j| self.entry(i, j) == self.entry(j, i)))
    }

    /// Evaluates every entry at `x`.
    pub fn eval(&self, x: T) -> DMatrix<T> {
        DMatrix::from_fn(self.k, self.k, |i, j| self.entry(i, j).eval(x))
    }

    pub fn matmul(&self, rhs: &Self) -> Self {
        assert_eq!(self.k, rhs.k);
        let k = self.k;
        let entries = (0..k * k)
            .map(|idx| {
                let (i, j) = (idx / k, idx % k);
                let mut acc = Poly::zero();
                for l in 0..k {
                    acc = &acc + &(self.entry(i, l) * rhs.entry(l, j));
                }
                acc
            })
            .collect();
        Self { k, entries }
    }

    /// Determinant and adjugate by cofactor expansion, so that
    /// `S * adj(S) = det(S) * I` holds as a polynomial identity.
    ///
    /// Fails with [`Error::DimensionCap`] above [`COFACTOR_CAP`]: the
    /// expansion is factorial and larger systems are out of contract.
    pub fn det_adj(&self) -> Result<(Poly<T>, PolyMatrix<T>)> {
        if self.k == 0 {
            return Err(Error::EmptyMatrix);
        }
        if self.k > COFACTOR_CAP {
            return Err(Error::DimensionCap {
                k: self.k,
                cap: COFACTOR_CAP,
            });
        }
        let det = self.det_recursive();
        let k = self.k;
        let mut adj = vec![Poly::zero(); k * k];
        if k == 1 {
            adj[0] = Poly::one();
        } else {
            for i in 0..k {
                for j in 0..k {
                    let minor = self.minor(i, j).det_recursive();
                    // adj[j][i] = (-1)^{i+j} * minor_{ij}  (transposed cofactor)
                    adj[j * k + i] = if (i + j) % 2 == 0 { minor } else { -&minor };
                }
            }
        }
        Ok((det, PolyMatrix { k, entries: adj }))
    }

    fn minor(&self, drop_row: usize, drop_col: usize) -> PolyMatrix<T> {
        let k = self.k;
        let mut entries = Vec::with_capacity((k - 1) * (k - 1));
        for i in 0..k {
            if i == drop_row {
                continue;
            }
            for j in 0..k {
                if j == drop_col {
                    continue;
                }
                entries.push(self.entry(i, j).clone());
            }
        }
        PolyMatrix {
            k: k - 1,
            entries,
        }
    }

    fn det_recursive(&self) -> Poly<T> {
        match self.k {
            0 => Poly::one(),
            1 => self.entry(0, 0).clone(),
            2 => {
                &(self.entry(0, 0) * self.entry(1, 1))
                    - &(self.entry(0, 1) * self.entry(1, 0))
            }
            _ => {
                let mut acc = Poly::zero();
                for j in 0..self.k {
                    if self.entry(0, j).is_zero() {
                        continue;
                    }
                    let term = self.entry(0, j) * &self.minor(0, j).det_recursive();
                    acc = if j % 2 == 0 { &acc + &term } else { &acc - &term };
                }
                acc
            }
        }
    }
}
