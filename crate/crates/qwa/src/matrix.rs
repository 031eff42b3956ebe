//! Sparse vectors and matrices over Q, with the product, rank, solve and
//! star primitives the automata layers are built on.
//!
//! Entries are stored in ordered maps keyed by index; absent entries are
//! exactly zero and entries that become zero are removed immediately, so
//! iteration order and rendered output are deterministic.

use crate::rational::Q;
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq, Clone)]
pub enum LinalgError {
    #[error("dimension mismatch in {op}: {left} vs {right}")]
    DimensionMismatch {
        op: &'static str,
        left: String,
        right: String,
    },
    #[error("matrix I - M is singular")]
    Singular,
    #[error("operation on the zero polynomial")]
    ZeroPolynomial,
}

/// Orientation of a [`QVector`]; products check it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    Row,
    Col,
}

/// Sparse vector over Q with an explicit row/column orientation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QVector {
    len: usize,
    orientation: Orientation,
    entries: BTreeMap<usize, Q>,
}

impl QVector {
    pub fn zero(len: usize, orientation: Orientation) -> Self {
        QVector {
            len,
            orientation,
            entries: BTreeMap::new(),
        }
    }

    pub fn from_dense(values: Vec<Q>, orientation: Orientation) -> Self {
        let len = values.len();
        let entries = values
            .into_iter()
            .enumerate()
            .filter(|(_, v)| !v.is_zero())
            .collect();
        QVector {
            len,
            orientation,
            entries,
        }
    }

    /// Unit vector with a single 1 at `index`.
    pub fn unit(len: usize, index: usize, orientation: Orientation) -> Self {
        assert!(index < len);
        let mut entries = BTreeMap::new();
        entries.insert(index, Q::one());
        QVector {
            len,
            orientation,
            entries,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    pub fn get(&self, i: usize) -> Q {
        assert!(i < self.len, "index {} out of range {}", i, self.len);
        self.entries.get(&i).cloned().unwrap_or_else(Q::zero)
    }

    pub fn set(&mut self, i: usize, value: Q) {
        assert!(i < self.len);
        if value.is_zero() {
            self.entries.remove(&i);
        } else {
            self.entries.insert(i, value);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter_nonzero(&self) -> impl Iterator<Item = (usize, &Q)> {
        self.entries.iter().map(|(i, v)| (*i, v))
    }

    pub fn to_dense(&self) -> Vec<Q> {
        let mut out = vec![Q::zero(); self.len];
        for (i, v) in &self.entries {
            out[*i] = v.clone();
        }
        out
    }

    pub fn transpose(&self) -> QVector {
        QVector {
            len: self.len,
            orientation: match self.orientation {
                Orientation::Row => Orientation::Col,
                Orientation::Col => Orientation::Row,
            },
            entries: self.entries.clone(),
        }
    }

    pub fn neg(&self) -> QVector {
        let entries = self.entries.iter().map(|(i, v)| (*i, -v.clone())).collect();
        QVector {
            len: self.len,
            orientation: self.orientation,
            entries,
        }
    }

    pub fn add(&self, other: &QVector) -> QVector {
        assert_eq!(self.len, other.len);
        assert_eq!(self.orientation, other.orientation);
        let mut out = self.clone();
        for (i, v) in &other.entries {
            let sum = out.get(*i) + v;
            out.set(*i, sum);
        }
        out
    }

    pub fn sub(&self, other: &QVector) -> QVector {
        self.add(&other.neg())
    }

    pub fn scale(&self, c: &Q) -> QVector {
        if c.is_zero() {
            return QVector::zero(self.len, self.orientation);
        }
        let entries = self.entries.iter().map(|(i, v)| (*i, v * c)).collect();
        QVector {
            len: self.len,
            orientation: self.orientation,
            entries,
        }
    }

    /// Dot product of a row vector with a column vector.
    pub fn dot(&self, other: &QVector) -> Q {
        assert_eq!(self.orientation, Orientation::Row, "dot expects row . col");
        assert_eq!(other.orientation, Orientation::Col, "dot expects row . col");
        assert_eq!(self.len, other.len, "dot length mismatch");
        let mut acc = Q::zero();
        for (i, v) in &self.entries {
            if let Some(w) = other.entries.get(i) {
                acc += v * w;
            }
        }
        acc
    }

    /// Kronecker product of two vectors of the same orientation.
    pub fn kron(&self, other: &QVector) -> QVector {
        assert_eq!(self.orientation, other.orientation);
        let mut entries = BTreeMap::new();
        for (i, v) in &self.entries {
            for (j, w) in &other.entries {
                entries.insert(i * other.len + j, v * w);
            }
        }
        QVector {
            len: self.len * other.len,
            orientation: self.orientation,
            entries,
        }
    }

    /// Concatenation, keeping the orientation.
    pub fn concat(&self, other: &QVector) -> QVector {
        assert_eq!(self.orientation, other.orientation);
        let mut entries = self.entries.clone();
        for (i, v) in &other.entries {
            entries.insert(self.len + i, v.clone());
        }
        QVector {
            len: self.len + other.len,
            orientation: self.orientation,
            entries,
        }
    }

    /// Row vector times matrix.
    pub fn mul_matrix(&self, m: &QMatrix) -> QVector {
        assert_eq!(self.orientation, Orientation::Row);
        assert_eq!(self.len, m.rows, "row * matrix dimension mismatch");
        let mut out = QVector::zero(m.cols, Orientation::Row);
        for (i, v) in &self.entries {
            for (j, w) in m.row_entries(*i) {
                let sum = out.get(j) + v * w;
                out.set(j, sum);
            }
        }
        out
    }
}

/// Sparse matrix over Q.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QMatrix {
    rows: usize,
    cols: usize,
    entries: BTreeMap<(usize, usize), Q>,
}

impl QMatrix {
    pub fn zero(rows: usize, cols: usize) -> Self {
        QMatrix {
            rows,
            cols,
            entries: BTreeMap::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = QMatrix::zero(n, n);
        for i in 0..n {
            m.set(i, i, Q::one());
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<Q>>) -> Self {
        let r = rows.len();
        let c = rows.first().map(|row| row.len()).unwrap_or(0);
        let mut m = QMatrix::zero(r, c);
        for (i, row) in rows.into_iter().enumerate() {
            assert_eq!(row.len(), c, "ragged rows");
            for (j, v) in row.into_iter().enumerate() {
                m.set(i, j, v);
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> Q {
        assert!(i < self.rows && j < self.cols);
        self.entries.get(&(i, j)).cloned().unwrap_or_else(Q::zero)
    }

    pub fn set(&mut self, i: usize, j: usize, value: Q) {
        assert!(i < self.rows && j < self.cols, "index out of range");
        if value.is_zero() {
            self.entries.remove(&(i, j));
        } else {
            self.entries.insert((i, j), value);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn iter_nonzero(&self) -> impl Iterator<Item = (usize, usize, &Q)> {
        self.entries.iter().map(|((i, j), v)| (*i, *j, v))
    }

    fn row_entries(&self, i: usize) -> impl Iterator<Item = (usize, &Q)> {
        self.entries
            .range((i, 0)..=(i, usize::MAX))
            .map(|((_, j), v)| (*j, v))
    }

    pub fn row(&self, i: usize) -> QVector {
        let mut v = QVector::zero(self.cols, Orientation::Row);
        for (j, w) in self.row_entries(i) {
            v.set(j, w.clone());
        }
        v
    }

    pub fn col(&self, j: usize) -> QVector {
        let mut v = QVector::zero(self.rows, Orientation::Col);
        for ((i, jj), w) in &self.entries {
            if *jj == j {
                v.set(*i, w.clone());
            }
        }
        v
    }

    /// Builds a matrix whose rows are the given row vectors.
    pub fn stack_rows(rows: &[QVector], cols: usize) -> Self {
        let mut m = QMatrix::zero(rows.len(), cols);
        for (i, r) in rows.iter().enumerate() {
            assert_eq!(r.orientation(), Orientation::Row);
            assert_eq!(r.len(), cols);
            for (j, v) in r.iter_nonzero() {
                m.set(i, j, v.clone());
            }
        }
        m
    }

    /// Builds a matrix whose columns are the given column vectors.
    pub fn stack_cols(cols: &[QVector], rows: usize) -> Self {
        let mut m = QMatrix::zero(rows, cols.len());
        for (j, c) in cols.iter().enumerate() {
            assert_eq!(c.orientation(), Orientation::Col);
            assert_eq!(c.len(), rows);
            for (i, v) in c.iter_nonzero() {
                m.set(i, j, v.clone());
            }
        }
        m
    }

    pub fn transpose(&self) -> QMatrix {
        let mut m = QMatrix::zero(self.cols, self.rows);
        for ((i, j), v) in &self.entries {
            m.set(*j, *i, v.clone());
        }
        m
    }

    pub fn neg(&self) -> QMatrix {
        let entries = self
            .entries
            .iter()
            .map(|(k, v)| (*k, -v.clone()))
            .collect();
        QMatrix {
            rows: self.rows,
            cols: self.cols,
            entries,
        }
    }

    pub fn add(&self, other: &QMatrix) -> QMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let mut out = self.clone();
        for ((i, j), v) in &other.entries {
            let sum = out.get(*i, *j) + v;
            out.set(*i, *j, sum);
        }
        out
    }

    pub fn sub(&self, other: &QMatrix) -> QMatrix {
        self.add(&other.neg())
    }

    pub fn scale(&self, c: &Q) -> QMatrix {
        if c.is_zero() {
            return QMatrix::zero(self.rows, self.cols);
        }
        let entries = self.entries.iter().map(|(k, v)| (*k, v * c)).collect();
        QMatrix {
            rows: self.rows,
            cols: self.cols,
            entries,
        }
    }

    pub fn mul(&self, other: &QMatrix) -> QMatrix {
        assert_eq!(
            self.cols, other.rows,
            "matrix product dimension mismatch: {}x{} * {}x{}",
            self.rows, self.cols, other.rows, other.cols
        );
        let mut out = QMatrix::zero(self.rows, other.cols);
        for ((i, k), v) in &self.entries {
            for (j, w) in other.row_entries(*k) {
                let sum = out.get(*i, j) + v * w;
                out.set(*i, j, sum);
            }
        }
        out
    }

    /// Matrix times column vector.
    pub fn mul_col(&self, v: &QVector) -> QVector {
        assert_eq!(v.orientation(), Orientation::Col);
        assert_eq!(self.cols, v.len(), "matrix * col dimension mismatch");
        let mut out = QVector::zero(self.rows, Orientation::Col);
        for ((i, j), w) in &self.entries {
            if let Some(x) = v.entries.get(j) {
                let sum = out.get(*i) + w * x;
                out.set(*i, sum);
            }
        }
        out
    }

    /// Block-diagonal composition.
    pub fn block_diag(&self, other: &QMatrix) -> QMatrix {
        let mut out = QMatrix::zero(self.rows + other.rows, self.cols + other.cols);
        for ((i, j), v) in &self.entries {
            out.set(*i, *j, v.clone());
        }
        for ((i, j), v) in &other.entries {
            out.set(self.rows + i, self.cols + j, v.clone());
        }
        out
    }

    /// Kronecker product: block (i,j) of the result is `self[i,j] * other`.
    pub fn kron(&self, other: &QMatrix) -> QMatrix {
        let mut out = QMatrix::zero(self.rows * other.rows, self.cols * other.cols);
        for ((i, j), v) in &self.entries {
            for ((k, l), w) in &other.entries {
                out.set(i * other.rows + k, j * other.cols + l, v * w);
            }
        }
        out
    }

    /// Entrywise product; the two matrices must have identical dimensions.
    pub fn hadamard(&self, other: &QMatrix) -> Result<QMatrix, LinalgError> {
        if (self.rows, self.cols) != (other.rows, other.cols) {
            return Err(LinalgError::DimensionMismatch {
                op: "hadamard",
                left: format!("{}x{}", self.rows, self.cols),
                right: format!("{}x{}", other.rows, other.cols),
            });
        }
        let mut out = QMatrix::zero(self.rows, self.cols);
        for (key, v) in &self.entries {
            if let Some(w) = other.entries.get(key) {
                out.set(key.0, key.1, v * w);
            }
        }
        Ok(out)
    }

    /// Rank over Q by fraction-free (Bareiss) elimination: rows are first
    /// scaled to integers, which preserves rank, and the integer elimination
    /// keeps every intermediate value an exact minor determinant.
    pub fn rank(&self) -> usize {
        if self.rows == 0 || self.cols == 0 {
            return 0;
        }
        let mut a: Vec<Vec<BigInt>> = (0..self.rows)
            .map(|i| {
                let mut lcm = BigInt::one();
                for (_, v) in self.row_entries(i) {
                    lcm = lcm.lcm(v.denom());
                }
                (0..self.cols)
                    .map(|j| {
                        let v = self.entries.get(&(i, j));
                        match v {
                            None => BigInt::zero(),
                            Some(v) => v.numer() * (&lcm / v.denom()),
                        }
                    })
                    .collect()
            })
            .collect();

        let (m, n) = (self.rows, self.cols);
        let mut rank = 0;
        let mut prev = BigInt::one();
        let mut pivot_row = 0;
        for col in 0..n {
            let Some(found) = (pivot_row..m).find(|&r| !a[r][col].is_zero()) else {
                continue;
            };
            a.swap(pivot_row, found);
            let pivot = a[pivot_row][col].clone();
            for r in pivot_row + 1..m {
                for c in (col + 1..n).rev() {
                    let t = &pivot * &a[r][c] - &a[r][col] * &a[pivot_row][c];
                    a[r][c] = &t / &prev;
                }
                a[r][col] = BigInt::zero();
            }
            prev = pivot;
            rank += 1;
            pivot_row += 1;
            if pivot_row == m {
                break;
            }
        }
        rank
    }

    /// Exact inverse by Gauss-Jordan elimination; `None` when singular.
    pub fn inverse(&self) -> Option<QMatrix> {
        assert_eq!(self.rows, self.cols, "inverse of non-square matrix");
        let n = self.rows;
        let mut a: Vec<Vec<Q>> = (0..n).map(|i| self.row(i).to_dense()).collect();
        let mut inv: Vec<Vec<Q>> = (0..n)
            .map(|i| {
                let mut row = vec![Q::zero(); n];
                row[i] = Q::one();
                row
            })
            .collect();
        for col in 0..n {
            let pivot = (col..n).find(|&r| !a[r][col].is_zero())?;
            a.swap(col, pivot);
            inv.swap(col, pivot);
            let p = a[col][col].clone();
            for j in 0..n {
                a[col][j] = &a[col][j] / &p;
                inv[col][j] = &inv[col][j] / &p;
            }
            for r in 0..n {
                if r == col || a[r][col].is_zero() {
                    continue;
                }
                let f = a[r][col].clone();
                for j in 0..n {
                    let av = &a[col][j] * &f;
                    a[r][j] = &a[r][j] - &av;
                    let iv = &inv[col][j] * &f;
                    inv[r][j] = &inv[r][j] - &iv;
                }
            }
        }
        Some(QMatrix::from_rows(inv))
    }

    /// Star of a square matrix: the exact inverse of `I - self`.
    ///
    /// Fails with [`LinalgError::Singular`] when `det(I - self) = 0`, which
    /// callers must treat as invalid input (a cycle of weight one).
    pub fn star(&self) -> Result<QMatrix, LinalgError> {
        assert_eq!(self.rows, self.cols, "star of non-square matrix");
        QMatrix::identity(self.rows)
            .sub(self)
            .inverse()
            .ok_or(LinalgError::Singular)
    }
}

/// Expresses the row vector `v` as a linear combination of the rows of
/// `basis`: returns `c` with `c * basis = v`, or `None` when `v` lies outside
/// the row space. Free coordinates of an underdetermined solution are zero.
pub fn solve_in_row_space(basis: &QMatrix, v: &QVector) -> Option<QVector> {
    assert_eq!(v.orientation(), Orientation::Row);
    assert_eq!(v.len(), basis.cols(), "solve_in_row_space length mismatch");
    let k = basis.rows();
    let n = basis.cols();
    // Solve basis^T x = v^T by Gaussian elimination on the augmented system.
    let mut a: Vec<Vec<Q>> = (0..n)
        .map(|i| {
            let mut row: Vec<Q> = (0..k).map(|j| basis.get(j, i)).collect();
            row.push(v.get(i));
            row
        })
        .collect();
    let mut pivot_cols = Vec::new();
    let mut pivot_row = 0;
    for col in 0..k {
        let Some(found) = (pivot_row..n).find(|&r| !a[r][col].is_zero()) else {
            continue;
        };
        a.swap(pivot_row, found);
        let p = a[pivot_row][col].clone();
        for j in col..=k {
            a[pivot_row][j] = &a[pivot_row][j] / &p;
        }
        for r in 0..n {
            if r == pivot_row || a[r][col].is_zero() {
                continue;
            }
            let f = a[r][col].clone();
            for j in col..=k {
                let t = &a[pivot_row][j] * &f;
                a[r][j] = &a[r][j] - &t;
            }
        }
        pivot_cols.push(col);
        pivot_row += 1;
        if pivot_row == n {
            break;
        }
    }
    // Inconsistent when a zeroed row has a nonzero right-hand side.
    for r in pivot_row..n {
        if !a[r][k].is_zero() {
            return None;
        }
    }
    let mut x = QVector::zero(k, Orientation::Row);
    for (row, col) in pivot_cols.iter().enumerate() {
        x.set(*col, a[row][k].clone());
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{qi, qr};

    fn m(rows: Vec<Vec<i64>>) -> QMatrix {
        QMatrix::from_rows(
            rows.into_iter()
                .map(|r| r.into_iter().map(qi).collect())
                .collect(),
        )
    }

    #[test]
    fn kron_identity_blocks() {
        let i2 = QMatrix::identity(2);
        assert_eq!(i2.kron(&i2), QMatrix::identity(4));
    }

    #[test]
    fn kron_of_row_and_column() {
        // Expanded by hand from the block definition: a is 1x2, b is 2x1.
        let a = m(vec![vec![1, 2]]);
        let b = m(vec![vec![3], vec![4]]);
        assert_eq!(a.kron(&b), m(vec![vec![3, 6], vec![4, 8]]));
    }

    #[test]
    fn hadamard_by_definition() {
        let a = m(vec![vec![1, 2], vec![3, 4]]);
        let b = m(vec![vec![5, 6], vec![7, 8]]);
        assert_eq!(a.hadamard(&b).unwrap(), m(vec![vec![5, 12], vec![21, 32]]));
        let ones = m(vec![vec![1, 1], vec![1, 1]]);
        assert_eq!(a.hadamard(&ones).unwrap(), a);
        let zeros = QMatrix::zero(2, 2);
        assert_eq!(a.hadamard(&zeros).unwrap(), zeros);
        assert!(a.hadamard(&QMatrix::zero(2, 3)).is_err());
    }

    #[test]
    fn rank_basics() {
        assert_eq!(QMatrix::zero(3, 3).rank(), 0);
        assert_eq!(QMatrix::identity(3).rank(), 3);
        assert_eq!(m(vec![vec![1, 2], vec![2, 4]]).rank(), 1);
        let mut frac = QMatrix::zero(2, 2);
        frac.set(0, 0, qr(1, 2));
        frac.set(0, 1, qr(1, 3));
        frac.set(1, 0, qr(3, 2));
        frac.set(1, 1, qi(1));
        assert_eq!(frac.rank(), 1);
    }

    #[test]
    fn star_cases() {
        assert_eq!(QMatrix::zero(3, 3).star().unwrap(), QMatrix::identity(3));
        let mut half = QMatrix::zero(1, 1);
        half.set(0, 0, qr(1, 2));
        let mut two = QMatrix::zero(1, 1);
        two.set(0, 0, qi(2));
        assert_eq!(half.star().unwrap(), two);
        let one = QMatrix::identity(1);
        assert_eq!(one.star(), Err(LinalgError::Singular));
    }

    #[test]
    fn star_inverts_i_minus_m() {
        let mut a = QMatrix::zero(2, 2);
        a.set(0, 0, qr(1, 2));
        a.set(0, 1, qr(1, 3));
        a.set(1, 1, qr(2, 3));
        let s = a.star().unwrap();
        let i_minus = QMatrix::identity(2).sub(&a);
        assert_eq!(s.mul(&i_minus), QMatrix::identity(2));
        assert_eq!(i_minus.mul(&s), QMatrix::identity(2));
    }

    #[test]
    fn star_of_diagonal_matches_geometric_series() {
        let mut d = QMatrix::zero(3, 3);
        d.set(0, 0, qr(1, 2));
        d.set(1, 1, qr(-1, 3));
        d.set(2, 2, qr(2, 5));
        let s = d.star().unwrap();
        assert_eq!(s.get(0, 0), qi(2));
        assert_eq!(s.get(1, 1), qr(3, 4));
        assert_eq!(s.get(2, 2), qr(5, 3));
        assert_eq!(s.get(0, 1), qi(0));
    }

    #[test]
    fn solve_in_row_space_cases() {
        let basis = QMatrix::identity(2);
        let v = QVector::from_dense(vec![qi(3), qi(5)], Orientation::Row);
        assert_eq!(
            solve_in_row_space(&basis, &v).unwrap().to_dense(),
            vec![qi(3), qi(5)]
        );

        let basis = m(vec![vec![1, 1]]);
        let v = QVector::from_dense(vec![qi(2), qi(2)], Orientation::Row);
        assert_eq!(solve_in_row_space(&basis, &v).unwrap().to_dense(), vec![qi(2)]);

        let basis = m(vec![vec![1, 0]]);
        let v = QVector::from_dense(vec![qi(0), qi(1)], Orientation::Row);
        assert_eq!(solve_in_row_space(&basis, &v), None);
    }

    #[test]
    fn solve_reproduces_vector() {
        let basis = m(vec![vec![1, 2, 0], vec![0, 1, 1]]);
        let v = QVector::from_dense(vec![qi(2), qi(5), qi(1)], Orientation::Row);
        let c = solve_in_row_space(&basis, &v).unwrap();
        assert_eq!(c.mul_matrix(&basis), v);
    }
}
