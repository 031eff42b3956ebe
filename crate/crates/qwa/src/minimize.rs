//! Minimality testing and minimisation of Q-weighted automata.
//!
//! An n-state automaton is minimal exactly when its Hankel matrix has rank
//! n, which holds exactly when both the forward and the backward word-vector
//! matrices have rank n; each rank is read off a Gram matrix computed
//! exactly from Kronecker-product power sums. Minimisation composes a
//! forward and a backward reduction over bases of the two spaces; bases come
//! either from the deterministic worklist closure or from random linear
//! combinations of reachable vectors, which succeed with probability at
//! least 1 - n/k and are retried against the deterministically known rank.

use crate::matrix::{solve_in_row_space, Orientation, QMatrix, QVector};
use crate::rational::Q;
use crate::rng::RandomSource;
use crate::wfa::{backward_basis_det, forward_basis_det, Echelon, WfaError, WFA};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq, Clone)]
pub enum ReduceError {
    #[error("basis is not closed under the transition matrices (row {row}, symbol {symbol})")]
    NotClosed { row: usize, symbol: usize },
    #[error("anchored basis required: row 0 must be the initial vector")]
    NotAnchored,
    #[error(transparent)]
    Wfa(#[from] WfaError),
}

/// Basis of the forward space (rows) or backward space (columns). When
/// `anchored` and the seed vector is nonzero, row/column 0 is exactly that
/// vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Basis {
    pub matrix: QMatrix,
    pub anchored: bool,
}

/// Gram matrix of the forward word vectors: entry (i,j) sums, over all words
/// w of length below n, the products of coordinates i and j of init*M(w).
/// Computed exactly as (init ⊗ init) Σ_{k<n} T^k with T = Σ_σ M(σ) ⊗ M(σ).
pub fn gram_forward(a: &WFA) -> QMatrix {
    let n = a.states();
    if n == 0 {
        return QMatrix::zero(0, 0);
    }
    let t = kron_square_sum(a);
    let power_sum = geometric_sum(&t, n);
    let left = a.init().kron(a.init()).mul_matrix(&power_sum);
    let mut g = QMatrix::zero(n, n);
    for (idx, v) in left.iter_nonzero() {
        g.set(idx / n, idx % n, v.clone());
    }
    g
}

/// Mirror of [`gram_forward`] for the backward word vectors M(w)*final.
pub fn gram_backward(a: &WFA) -> QMatrix {
    let n = a.states();
    if n == 0 {
        return QMatrix::zero(0, 0);
    }
    let t = kron_square_sum(a);
    let power_sum = geometric_sum(&t, n);
    let right = power_sum.mul_col(&a.final_vector().kron(a.final_vector()));
    let mut g = QMatrix::zero(n, n);
    for (idx, v) in right.iter_nonzero() {
        g.set(idx / n, idx % n, v.clone());
    }
    g
}

fn kron_square_sum(a: &WFA) -> QMatrix {
    let n = a.states();
    let mut t = QMatrix::zero(n * n, n * n);
    for symbol in 0..a.alphabet().len() {
        let m = a.transition(symbol);
        t = t.add(&m.kron(m));
    }
    t
}

/// I + T + ... + T^(terms-1).
fn geometric_sum(t: &QMatrix, terms: usize) -> QMatrix {
    let mut acc = QMatrix::identity(t.rows());
    let mut sum = QMatrix::identity(t.rows());
    for _ in 1..terms {
        acc = acc.mul(t);
        sum = sum.add(&acc);
    }
    sum
}

/// True exactly when no equivalent automaton has fewer states: both Gram
/// matrices must be nonsingular, i.e. of full rank n.
pub fn is_minimal(a: &WFA) -> bool {
    let n = a.states();
    if n == 0 {
        return true;
    }
    gram_forward(a).rank() == n && gram_backward(a).rank() == n
}

/// Evaluates the forward reachability polynomial at the drawn integer point:
/// the sum over all words of length at most n of init*M(w) times the word's
/// monomial, via the running-sum recurrence.
fn rho_forward(a: &WFA, draws: &[Vec<Q>]) -> QVector {
    let n = a.states();
    let mut acc = a.init().clone();
    let mut s = a.init().clone();
    for step in draws.iter().take(n) {
        let mut combo = QMatrix::zero(n, n);
        for (symbol, weight) in step.iter().enumerate() {
            combo = combo.add(&a.transition(symbol).scale(weight));
        }
        s = s.mul_matrix(&combo);
        acc = acc.add(&s);
    }
    acc
}

/// Randomized basis of the forward space: the initial vector is anchored as
/// row 0 and extended with random reachable vectors, keeping the maximal
/// prefix of draws that stays linearly independent. Each draw misses a
/// proper subspace with probability at most 1/k_param, so an undersized
/// result (detectable against the deterministic rank) occurs with
/// probability at most n/k_param.
pub fn forward_basis_rand(a: &WFA, k_param: u64, rng: &mut RandomSource) -> Basis {
    let n = a.states();
    let symbols = a.alphabet().len();
    let mut rows: Vec<QVector> = Vec::new();
    let mut echelon = Echelon::new(n);
    if n > 0 && !a.init().is_zero() {
        echelon.insert(a.init());
        rows.push(a.init().clone());
        let grid = k_param * n as u64;
        for _ in 0..n {
            let draws: Vec<Vec<Q>> = (0..n)
                .map(|_| {
                    (0..symbols)
                        .map(|_| Q::from_integer(rng.int_in_1_to(grid).into()))
                        .collect()
                })
                .collect();
            let v = rho_forward(a, &draws);
            if echelon.insert(&v) {
                rows.push(v);
            } else {
                break;
            }
        }
    }
    Basis {
        matrix: QMatrix::stack_rows(&rows, n),
        anchored: true,
    }
}

/// Mirror of [`forward_basis_rand`] for the backward space; columns span it
/// and the final vector is anchored as column 0.
pub fn backward_basis_rand(a: &WFA, k_param: u64, rng: &mut RandomSource) -> Basis {
    let rev = reverse_for_backward(a);
    let b = forward_basis_rand(&rev, k_param, rng);
    Basis {
        matrix: b.matrix.transpose(),
        anchored: b.anchored,
    }
}

fn reverse_for_backward(a: &WFA) -> WFA {
    WFA::new(
        a.alphabet().clone(),
        (0..a.alphabet().len())
            .map(|s| a.transition(s).transpose())
            .collect(),
        a.final_vector().transpose(),
        a.init().transpose(),
    )
    .expect("reversal preserves shape")
}

/// Forward reduction: rewrites the automaton over the basis coordinates.
/// Each reduced transition matrix is the unique solution of
/// `basis * M(σ) = M'(σ) * basis`, the reduced initial vector is the first
/// unit vector, and the reduced final vector is `basis * final`.
pub fn forward_reduce(a: &WFA, basis: &Basis) -> Result<WFA, ReduceError> {
    let f = &basis.matrix;
    let k = f.rows();
    if k == 0 {
        return Ok(WFA::zero(a.alphabet().clone()));
    }
    if !basis.anchored || f.row(0) != *a.init() {
        return Err(ReduceError::NotAnchored);
    }
    let mut trans = Vec::with_capacity(a.alphabet().len());
    for symbol in 0..a.alphabet().len() {
        let image = f.mul(a.transition(symbol));
        let mut reduced = QMatrix::zero(k, k);
        for row in 0..k {
            let coeffs = solve_in_row_space(f, &image.row(row))
                .ok_or(ReduceError::NotClosed { row, symbol })?;
            for (j, c) in coeffs.iter_nonzero() {
                reduced.set(row, j, c.clone());
            }
        }
        trans.push(reduced);
    }
    let init = QVector::unit(k, 0, Orientation::Row);
    let final_ = f.mul_col(a.final_vector());
    Ok(WFA::new(a.alphabet().clone(), trans, init, final_)?)
}

/// Backward reduction: mirror of [`forward_reduce`] with columns and the
/// final vector; the reduced automaton is `(init * basis, M'(σ), e_1)` where
/// `M(σ) * basis = basis * M'(σ)`.
pub fn backward_reduce(a: &WFA, basis: &Basis) -> Result<WFA, ReduceError> {
    let b = &basis.matrix;
    let k = b.cols();
    if k == 0 {
        return Ok(WFA::zero(a.alphabet().clone()));
    }
    if !basis.anchored || b.col(0) != *a.final_vector() {
        return Err(ReduceError::NotAnchored);
    }
    let bt = b.transpose();
    let anchored_t = Basis {
        matrix: bt.clone(),
        anchored: true,
    };
    let rev = reverse_for_backward(a);
    let reduced_rev = forward_reduce(&rev, &anchored_t)?;
    // Transpose back: transitions of the reduced automaton are the
    // transposes of the reduced reversal's transitions.
    let trans: Vec<QMatrix> = (0..a.alphabet().len())
        .map(|s| reduced_rev.transition(s).transpose())
        .collect();
    let init = a.init().mul_matrix(b);
    let final_ = QVector::unit(k, 0, Orientation::Col);
    Ok(WFA::new(a.alphabet().clone(), trans, init, final_)?)
}

/// Basis generation mode for [`minimize`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MinimizeMode {
    Deterministic,
    /// Random bases with the given error parameter; draws are retried (up to
    /// the retry limit) until the basis rank matches the deterministic rank,
    /// after which the deterministic basis is used instead.
    Randomized { k_param: Option<u64>, retries: u32 },
}

impl Default for MinimizeMode {
    fn default() -> Self {
        MinimizeMode::Deterministic
    }
}

/// Minimises an automaton by a forward reduction followed by a backward
/// reduction. The output is minimal and assigns the same value as the input
/// to every word.
pub fn minimize(a: &WFA, mode: MinimizeMode, rng: &mut RandomSource) -> WFA {
    let forward = make_forward_basis(a, mode, rng);
    let reduced = forward_reduce(a, &forward).expect("forward space is closed");
    let backward = make_backward_basis(&reduced, mode, rng);
    backward_reduce(&reduced, &backward).expect("backward space is closed")
}

fn make_forward_basis(a: &WFA, mode: MinimizeMode, rng: &mut RandomSource) -> Basis {
    match mode {
        MinimizeMode::Deterministic => Basis {
            matrix: forward_basis_det(a).0,
            anchored: true,
        },
        MinimizeMode::Randomized { k_param, retries } => {
            let target = forward_basis_det(a).0.rows();
            let k = k_param.unwrap_or_else(|| default_k(a.states()));
            for attempt in 0..retries {
                let basis = forward_basis_rand(a, k, &mut rng.derive(attempt as u64));
                if basis.matrix.rows() == target {
                    return basis;
                }
            }
            Basis {
                matrix: forward_basis_det(a).0,
                anchored: true,
            }
        }
    }
}

fn make_backward_basis(a: &WFA, mode: MinimizeMode, rng: &mut RandomSource) -> Basis {
    match mode {
        MinimizeMode::Deterministic => Basis {
            matrix: backward_basis_det(a).0,
            anchored: true,
        },
        MinimizeMode::Randomized { k_param, retries } => {
            let target = backward_basis_det(a).0.cols();
            let k = k_param.unwrap_or_else(|| default_k(a.states()));
            for attempt in 0..retries {
                let basis =
                    backward_basis_rand(a, k, &mut rng.derive(0x8000_0000 | attempt as u64));
                if basis.matrix.cols() == target {
                    return basis;
                }
            }
            Basis {
                matrix: backward_basis_det(a).0,
                anchored: true,
            }
        }
    }
}

/// Default error parameter 3n, giving failure probability at most 1/3.
fn default_k(n: usize) -> u64 {
    (3 * n.max(1)) as u64
}

/// Anchored forward basis from the deterministic worklist closure.
pub fn forward_basis_det_basis(a: &WFA) -> Basis {
    Basis {
        matrix: forward_basis_det(a).0,
        anchored: true,
    }
}

/// Anchored backward basis from the deterministic worklist closure.
pub fn backward_basis_det_basis(a: &WFA) -> Basis {
    Basis {
        matrix: backward_basis_det(a).0,
        anchored: true,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{qi, qr};
    use crate::wfa::{enumerate_oracle, equivalent_det, Alphabet};

    fn one_state(weight: Q) -> WFA {
        let mut m = QMatrix::zero(1, 1);
        m.set(0, 0, weight);
        WFA::new(
            Alphabet::from_labels(&["s"]),
            vec![m],
            QVector::from_dense(vec![qi(1)], Orientation::Row),
            QVector::from_dense(vec![qi(1)], Orientation::Col),
        )
        .unwrap()
    }

    /// Doubles every state of `a`, halving the final weights, so the value of
    /// every word is preserved but the automaton is redundant.
    fn block_duplicate(a: &WFA) -> WFA {
        let n = a.states();
        let mut trans = Vec::new();
        for s in 0..a.alphabet().len() {
            let m = a.transition(s);
            let mut big = QMatrix::zero(2 * n, 2 * n);
            for (i, j, v) in m.iter_nonzero() {
                for (bi, bj) in [(0, 0), (0, n), (n, 0), (n, n)] {
                    big.set(i + bi, j + bj, v * &qr(1, 2));
                }
            }
            trans.push(big);
        }
        let mut init = QVector::zero(2 * n, Orientation::Row);
        for (i, v) in a.init().iter_nonzero() {
            init.set(i, v.clone());
            init.set(i + n, v.clone());
        }
        let mut final_ = QVector::zero(2 * n, Orientation::Col);
        for (i, v) in a.final_vector().iter_nonzero() {
            final_.set(i, v * &qr(1, 2));
            final_.set(i + n, v * &qr(1, 2));
        }
        WFA::new(a.alphabet().clone(), trans, init, final_).unwrap()
    }

    #[test]
    fn gram_one_state() {
        let a = one_state(qr(1, 2));
        assert_eq!(gram_forward(&a), QMatrix::identity(1));
    }

    #[test]
    fn gram_zero_init() {
        let a = WFA::new(
            Alphabet::from_labels(&["s"]),
            vec![QMatrix::identity(2)],
            QVector::zero(2, Orientation::Row),
            QVector::from_dense(vec![qi(1), qi(1)], Orientation::Col),
        )
        .unwrap();
        assert!(gram_forward(&a).is_zero());
    }

    #[test]
    fn gram_matches_enumeration() {
        // Two states with distinct behaviour per word.
        let mut m = QMatrix::zero(2, 2);
        m.set(0, 0, qr(1, 2));
        m.set(0, 1, qi(1));
        m.set(1, 1, qr(-1, 3));
        let a = WFA::new(
            Alphabet::from_labels(&["s", "t"]),
            vec![m.clone(), m.transpose()],
            QVector::from_dense(vec![qi(1), qi(2)], Orientation::Row),
            QVector::from_dense(vec![qi(1), qi(0)], Orientation::Col),
        )
        .unwrap();
        let n = a.states();
        let mut expected = QMatrix::zero(n, n);
        let mut frontier = vec![a.init().clone()];
        for _ in 0..n {
            let mut next = Vec::new();
            for v in &frontier {
                for i in 0..n {
                    for j in 0..n {
                        let add = v.get(i) * v.get(j);
                        let cur = expected.get(i, j) + add;
                        expected.set(i, j, cur);
                    }
                }
                for s in 0..a.alphabet().len() {
                    next.push(v.mul_matrix(a.transition(s)));
                }
            }
            frontier = next;
        }
        assert_eq!(gram_forward(&a), expected);
    }

    #[test]
    fn minimality_basics() {
        assert!(is_minimal(&WFA::zero(Alphabet::from_labels(&["a"]))));
        let a = one_state(qr(1, 2));
        assert!(is_minimal(&a));
        assert!(!is_minimal(&block_duplicate(&a)));
    }

    #[test]
    fn forward_reduce_preserves_values() {
        let a = block_duplicate(&one_state(qr(1, 2)));
        let basis = Basis {
            matrix: forward_basis_det(&a).0,
            anchored: true,
        };
        let r = forward_reduce(&a, &basis).unwrap();
        for (w, v) in enumerate_oracle(&a, 4).unwrap() {
            assert_eq!(r.evaluate(&w).unwrap(), v);
        }
    }

    #[test]
    fn zero_automaton_minimizes_to_zero_states() {
        let z = WFA::new(
            Alphabet::from_labels(&["a"]),
            vec![QMatrix::identity(2)],
            QVector::from_dense(vec![qi(1), qi(-1)], Orientation::Row),
            QVector::from_dense(vec![qi(1), qi(1)], Orientation::Col),
        )
        .unwrap();
        assert!(crate::wfa::is_zero_det(&z).is_none());
        let mut rng = RandomSource::new(0);
        let m = minimize(&z, MinimizeMode::Deterministic, &mut rng);
        assert_eq!(m.states(), 0);
    }

    #[test]
    fn duplicated_automaton_minimizes_back() {
        let a = one_state(qr(1, 2));
        let dup = block_duplicate(&a);
        let mut rng = RandomSource::new(0);
        for mode in [
            MinimizeMode::Deterministic,
            MinimizeMode::Randomized { k_param: None, retries: 5 },
        ] {
            let m = minimize(&dup, mode, &mut rng);
            assert_eq!(m.states(), 1);
            assert!(is_minimal(&m));
            assert!(equivalent_det(&dup, &m).unwrap().is_equivalent());
        }
    }

    #[test]
    fn minimal_input_keeps_dimension() {
        let a = one_state(qr(1, 2));
        let mut rng = RandomSource::new(4);
        let m = minimize(&a, MinimizeMode::Deterministic, &mut rng);
        assert_eq!(m.states(), 1);
        assert!(equivalent_det(&a, &m).unwrap().is_equivalent());
    }

    #[test]
    fn random_basis_trivial_cases() {
        let zero_init = WFA::new(
            Alphabet::from_labels(&["s"]),
            vec![QMatrix::identity(2)],
            QVector::zero(2, Orientation::Row),
            QVector::from_dense(vec![qi(1), qi(1)], Orientation::Col),
        )
        .unwrap();
        let mut rng = RandomSource::new(1);
        let b = forward_basis_rand(&zero_init, 6, &mut rng);
        assert_eq!(b.matrix.rows(), 0);

        let single = one_state(qr(1, 2));
        let b = forward_basis_rand(&single, 3, &mut rng);
        assert_eq!(b.matrix.rows(), 1);
        assert_eq!(b.matrix.get(0, 0), qi(1));
    }

    #[test]
    fn random_basis_rank_matches_deterministic() {
        let dup = block_duplicate(&one_state(qr(1, 2)));
        let det_rank = forward_basis_det(&dup).0.rows();
        let mut agreements = 0;
        for seed in 0..20 {
            let mut rng = RandomSource::new(seed);
            let b = forward_basis_rand(&dup, default_k(dup.states()), &mut rng);
            assert!(b.matrix.rows() <= det_rank);
            if b.matrix.rows() == det_rank {
                agreements += 1;
            }
        }
        assert!(agreements >= 10, "rank agreement too rare: {agreements}/20");
    }
}
