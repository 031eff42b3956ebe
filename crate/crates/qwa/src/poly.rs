//! Sparse univariate polynomials over Q and matrices of them.
//!
//! Degrees are unbounded and only nonzero coefficients are stored; the
//! isolation-based zeroness test multiplies matrices of these polynomials,
//! where exponents grow to twice the alphabet size times the square of the
//! state count.

use crate::matrix::LinalgError;
use crate::rational::Q;
use num_traits::{One, Zero};
use std::collections::BTreeMap;

/// Sparse univariate polynomial; keys are exponents, no zero coefficients.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct UPoly {
    terms: BTreeMap<usize, Q>,
}

impl UPoly {
    pub fn zero() -> Self {
        UPoly::default()
    }

    pub fn constant(c: Q) -> Self {
        let mut p = UPoly::zero();
        p.add_term(0, c);
        p
    }

    /// Single monomial `c * x^e`.
    pub fn monomial(e: usize, c: Q) -> Self {
        let mut p = UPoly::zero();
        p.add_term(e, c);
        p
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add_term(&mut self, e: usize, c: Q) {
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry(e).or_insert_with(Q::zero);
        *entry += c;
        if entry.is_zero() {
            self.terms.remove(&e);
        }
    }

    pub fn add(&self, other: &UPoly) -> UPoly {
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(*e, c.clone());
        }
        out
    }

    pub fn mul(&self, other: &UPoly) -> UPoly {
        let mut out = UPoly::zero();
        for (e1, c1) in &self.terms {
            for (e2, c2) in &other.terms {
                out.add_term(e1 + e2, c1 * c2);
            }
        }
        out
    }

    pub fn coeff(&self, e: usize) -> Q {
        self.terms.get(&e).cloned().unwrap_or_else(Q::zero)
    }

    pub fn iter_terms(&self) -> impl Iterator<Item = (usize, &Q)> {
        self.terms.iter().map(|(e, c)| (*e, c))
    }

    /// Lowest-exponent monomial with a nonzero coefficient.
    pub fn min_degree_term(&self) -> Result<(usize, Q), LinalgError> {
        self.terms
            .iter()
            .next()
            .map(|(e, c)| (*e, c.clone()))
            .ok_or(LinalgError::ZeroPolynomial)
    }

    pub fn max_degree(&self) -> Option<usize> {
        self.terms.keys().next_back().copied()
    }
}

/// Sparse matrix with polynomial entries.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UPolyMatrix {
    rows: usize,
    cols: usize,
    entries: BTreeMap<(usize, usize), UPoly>,
}

impl UPolyMatrix {
    pub fn zero(rows: usize, cols: usize) -> Self {
        UPolyMatrix {
            rows,
            cols,
            entries: BTreeMap::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = UPolyMatrix::zero(n, n);
        for i in 0..n {
            m.set(i, i, UPoly::constant(Q::one()));
        }
        m
    }

    /// 1 x n matrix of constants from a row vector.
    pub fn from_row(v: &crate::matrix::QVector) -> Self {
        let mut m = UPolyMatrix::zero(1, v.len());
        for (j, c) in v.iter_nonzero() {
            m.set(0, j, UPoly::constant(c.clone()));
        }
        m
    }

    /// n x 1 matrix of constants from a column vector.
    pub fn from_col(v: &crate::matrix::QVector) -> Self {
        let mut m = UPolyMatrix::zero(v.len(), 1);
        for (i, c) in v.iter_nonzero() {
            m.set(i, 0, UPoly::constant(c.clone()));
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn set(&mut self, i: usize, j: usize, p: UPoly) {
        assert!(i < self.rows && j < self.cols);
        if p.is_zero() {
            self.entries.remove(&(i, j));
        } else {
            self.entries.insert((i, j), p);
        }
    }

    pub fn get(&self, i: usize, j: usize) -> UPoly {
        self.entries.get(&(i, j)).cloned().unwrap_or_default()
    }

    pub fn add_to(&mut self, i: usize, j: usize, p: &UPoly) {
        let sum = self.get(i, j).add(p);
        self.set(i, j, sum);
    }

    pub fn add(&self, other: &UPolyMatrix) -> UPolyMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let mut out = self.clone();
        for ((i, j), p) in &other.entries {
            out.add_to(*i, *j, p);
        }
        out
    }

    pub fn mul(&self, other: &UPolyMatrix) -> UPolyMatrix {
        assert_eq!(self.cols, other.rows, "polynomial matrix product mismatch");
        let mut out = UPolyMatrix::zero(self.rows, other.cols);
        for ((i, k), p) in &self.entries {
            for (key, q) in other.entries.range((*k, 0)..=(*k, usize::MAX)) {
                out.add_to(*i, key.1, &p.mul(q));
            }
        }
        out
    }
}

/// Product of a dimension-compatible sequence of polynomial matrices.
/// An empty sequence is rejected since its dimensions are undefined.
pub fn upoly_matrix_product(terms: &[UPolyMatrix]) -> Option<UPolyMatrix> {
    let (first, rest) = terms.split_first()?;
    let mut acc = first.clone();
    for t in rest {
        acc = acc.mul(t);
    }
    Some(acc)
}

/// Running sum of prefix products of square matrices:
/// I + T_1 + T_1 T_2 + ... + T_1 ... T_k. This is the accumulation shape of
/// the isolation-weight polynomial.
pub fn upoly_matrix_product_sum(n: usize, terms: &[UPolyMatrix]) -> UPolyMatrix {
    let mut product = UPolyMatrix::identity(n);
    let mut sum = UPolyMatrix::identity(n);
    for t in terms {
        product = product.mul(t);
        sum = sum.add(&product);
    }
    sum
}
