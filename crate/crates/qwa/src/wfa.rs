//! Q-weighted finite automata: construction, word evaluation, difference
//! automata, deterministic zeroness/equivalence with witness words, and the
//! brute-force enumeration oracle used by the test suites.

use crate::matrix::{Orientation, QMatrix, QVector};
use crate::rational::Q;
use num_traits::Zero;
use std::collections::BTreeSet;
use thiserror::Error;

/// Default word budget for the enumeration oracle.
pub const DEFAULT_ENUM_BUDGET: usize = 1_000_000;

#[derive(Debug, Error, PartialEq, Eq, Clone)]
pub enum WfaError {
    #[error("alphabets differ")]
    AlphabetMismatch,
    #[error("symbol id {id} outside alphabet of size {size}")]
    ForeignSymbol { id: usize, size: usize },
    #[error("enumeration of {required} words exceeds budget {budget}")]
    BudgetExceeded { required: usize, budget: usize },
    #[error("duplicate symbol label `{0}`")]
    DuplicateSymbol(String),
    #[error("symbol label may not be empty")]
    EmptySymbol,
    #[error("transition matrix for symbol {symbol} is {got_rows}x{got_cols}, expected {n}x{n}")]
    BadMatrixShape {
        symbol: usize,
        got_rows: usize,
        got_cols: usize,
        n: usize,
    },
    #[error("{which} vector has length {got}, expected {n}")]
    BadVectorShape {
        which: &'static str,
        got: usize,
        n: usize,
    },
    #[error("{0} transition matrices given for an alphabet of {1} symbols")]
    WrongSymbolCount(usize, usize),
}

/// Ordered alphabet; a symbol's id is its index. May be empty.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Alphabet {
    labels: Vec<String>,
}

impl Alphabet {
    pub fn new(labels: Vec<String>) -> Result<Self, WfaError> {
        let mut seen = BTreeSet::new();
        for l in &labels {
            if l.is_empty() {
                return Err(WfaError::EmptySymbol);
            }
            if !seen.insert(l.clone()) {
                return Err(WfaError::DuplicateSymbol(l.clone()));
            }
        }
        Ok(Alphabet { labels })
    }

    pub fn from_labels(labels: &[&str]) -> Self {
        Alphabet::new(labels.iter().map(|s| s.to_string()).collect()).unwrap()
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn label(&self, id: usize) -> &str {
        &self.labels[id]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn id_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// Renders a word as space-separated labels; the empty word prints as "ε".
    pub fn format_word(&self, w: &[usize]) -> String {
        if w.is_empty() {
            return "ε".to_string();
        }
        w.iter()
            .map(|&id| self.label(id))
            .collect::<Vec<_>>()
            .join(" ")
    }
}

/// Word over an alphabet, as a sequence of symbol ids.
pub type Word = Vec<usize>;

/// Q-weighted finite automaton. Zero states is legal and denotes the zero
/// automaton: every word evaluates to 0.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WFA {
    n: usize,
    alphabet: Alphabet,
    trans: Vec<QMatrix>,
    init: QVector,
    final_: QVector,
}

impl WFA {
    pub fn new(
        alphabet: Alphabet,
        trans: Vec<QMatrix>,
        init: QVector,
        final_: QVector,
    ) -> Result<Self, WfaError> {
        let n = init.len();
        if trans.len() != alphabet.len() {
            return Err(WfaError::WrongSymbolCount(trans.len(), alphabet.len()));
        }
        if init.orientation() != Orientation::Row {
            return Err(WfaError::BadVectorShape {
                which: "initial",
                got: init.len(),
                n,
            });
        }
        if final_.orientation() != Orientation::Col || final_.len() != n {
            return Err(WfaError::BadVectorShape {
                which: "final",
                got: final_.len(),
                n,
            });
        }
        for (symbol, m) in trans.iter().enumerate() {
            if m.rows() != n || m.cols() != n {
                return Err(WfaError::BadMatrixShape {
                    symbol,
                    got_rows: m.rows(),
                    got_cols: m.cols(),
                    n,
                });
            }
        }
        Ok(WFA {
            n,
            alphabet,
            trans,
            init,
            final_,
        })
    }

    /// The zero automaton over the given alphabet, with no states.
    pub fn zero(alphabet: Alphabet) -> Self {
        let k = alphabet.len();
        WFA {
            n: 0,
            alphabet,
            trans: vec![QMatrix::zero(0, 0); k],
            init: QVector::zero(0, Orientation::Row),
            final_: QVector::zero(0, Orientation::Col),
        }
    }

    pub fn states(&self) -> usize {
        self.n
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn transition(&self, symbol: usize) -> &QMatrix {
        &self.trans[symbol]
    }

    pub fn init(&self) -> &QVector {
        &self.init
    }

    pub fn final_vector(&self) -> &QVector {
        &self.final_
    }

    fn check_word(&self, w: &[usize]) -> Result<(), WfaError> {
        for &id in w {
            if id >= self.alphabet.len() {
                return Err(WfaError::ForeignSymbol {
                    id,
                    size: self.alphabet.len(),
                });
            }
        }
        Ok(())
    }

    /// Exact value of a word: init * M(w_1) * ... * M(w_k) * final.
    pub fn evaluate(&self, w: &[usize]) -> Result<Q, WfaError> {
        self.check_word(w)?;
        if self.n == 0 {
            return Ok(Q::zero());
        }
        let mut v = self.init.clone();
        for &id in w {
            v = v.mul_matrix(&self.trans[id]);
        }
        Ok(v.dot(&self.final_))
    }

    /// Automaton computing `self(w) - other(w)` on every word, as a
    /// block-diagonal union with the second initial vector negated.
    pub fn difference(&self, other: &WFA) -> Result<WFA, WfaError> {
        if self.alphabet != other.alphabet {
            return Err(WfaError::AlphabetMismatch);
        }
        let trans = self
            .trans
            .iter()
            .zip(&other.trans)
            .map(|(a, b)| a.block_diag(b))
            .collect();
        let init = self.init.concat(&other.init.neg());
        let final_ = self.final_.concat(&other.final_);
        WFA::new(self.alphabet.clone(), trans, init, final_)
    }
}

/// Incremental row-echelon form used to detect rank growth while closing a
/// set of vectors under the transition matrices.
pub(crate) struct Echelon {
    dim: usize,
    rows: Vec<QVector>,
}

impl Echelon {
    pub(crate) fn new(dim: usize) -> Self {
        Echelon { dim, rows: Vec::new() }
    }

    /// Reduces `v` against the stored rows; if a nonzero residue remains it
    /// is normalized, stored, and true is returned.
    pub(crate) fn insert(&mut self, v: &QVector) -> bool {
        debug_assert_eq!(v.len(), self.dim);
        let mut v = v.clone();
        for row in &self.rows {
            let (pivot, _) = row.iter_nonzero().next().unwrap();
            let c = v.get(pivot);
            if !c.is_zero() {
                v = v.sub(&row.scale(&c));
            }
        }
        let lead = v.iter_nonzero().next().map(|(i, c)| (i, c.clone()));
        match lead {
            None => false,
            Some((pivot, c)) => {
                let inv = Q::new(c.denom().clone(), c.numer().clone());
                let normalized = v.scale(&inv);
                let pos = self
                    .rows
                    .iter()
                    .position(|r| r.iter_nonzero().next().unwrap().0 > pivot)
                    .unwrap_or(self.rows.len());
                self.rows.insert(pos, normalized);
                true
            }
        }
    }
}

struct Closure {
    basis: Vec<QVector>,
    words: Vec<Word>,
    witness: Option<Word>,
}

/// Worklist closure of the forward space. Rows are the original vectors
/// `init * M(w)`; processing is breadth-first with symbols in alphabet
/// order, so recorded words are deterministic and of minimal length.
/// When `watch_final` is set, every generated vector (kept or not) is tested
/// against the final vector and the first word with a nonzero value is
/// returned as the zeroness witness.
fn forward_closure(a: &WFA, watch_final: bool) -> Closure {
    let mut basis: Vec<QVector> = Vec::new();
    let mut words: Vec<Word> = Vec::new();
    let mut echelon = Echelon::new(a.n);
    if a.n == 0 || a.init.is_zero() {
        return Closure {
            basis,
            words,
            witness: None,
        };
    }
    if watch_final && !a.init.dot(&a.final_).is_zero() {
        return Closure {
            basis,
            words,
            witness: Some(Vec::new()),
        };
    }
    echelon.insert(&a.init);
    basis.push(a.init.clone());
    words.push(Vec::new());
    let mut next = 0;
    while next < basis.len() {
        for symbol in 0..a.alphabet.len() {
            let v = basis[next].mul_matrix(&a.trans[symbol]);
            let mut w = words[next].clone();
            w.push(symbol);
            if watch_final && !v.dot(&a.final_).is_zero() {
                return Closure {
                    basis,
                    words,
                    witness: Some(w),
                };
            }
            if echelon.insert(&v) {
                basis.push(v);
                words.push(w);
            }
        }
        next += 1;
    }
    Closure {
        basis,
        words,
        witness: None,
    }
}

/// Basis of the forward space `span { init * M(w) }` together with the word
/// generating each row. Row 0 is the initial vector whenever it is nonzero;
/// the basis has at most `n` rows.
pub fn forward_basis_det(a: &WFA) -> (QMatrix, Vec<Word>) {
    let closure = forward_closure(a, false);
    (
        QMatrix::stack_rows(&closure.basis, a.n),
        closure.words,
    )
}

/// Mirror of [`forward_basis_det`] for the backward space
/// `span { M(w) * final }`; columns of the returned matrix form the basis
/// and column 0 is the final vector whenever it is nonzero.
pub fn backward_basis_det(a: &WFA) -> (QMatrix, Vec<Word>) {
    let rev = reverse_automaton(a);
    let closure = forward_closure(&rev, false);
    let cols: Vec<QVector> = closure.basis.iter().map(|r| r.transpose()).collect();
    let words = closure
        .words
        .into_iter()
        .map(|mut w| {
            w.reverse();
            w
        })
        .collect();
    (QMatrix::stack_cols(&cols, a.n), words)
}

/// The automaton with transitions transposed and the roles of the initial
/// and final vectors swapped; its forward space is the backward space of `a`.
fn reverse_automaton(a: &WFA) -> WFA {
    WFA {
        n: a.n,
        alphabet: a.alphabet.clone(),
        trans: a.trans.iter().map(|m| m.transpose()).collect(),
        init: a.final_.transpose(),
        final_: a.init.transpose(),
    }
}

/// Deterministic zeroness test. Returns `None` when the automaton assigns 0
/// to every word, otherwise a shortest witness word (length at most n-1)
/// with a nonzero value.
pub fn is_zero_det(a: &WFA) -> Option<Word> {
    forward_closure(a, true).witness
}

/// Verdict of an equivalence check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Equivalent,
    Inequivalent,
    ProbablyEquivalent { confidence: Q },
}

/// Witness of inequivalence: a word and the two differing values.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Witness {
    pub word: Word,
    pub left: Q,
    pub right: Q,
}

/// Result of an equivalence check. A witness accompanies every
/// `Inequivalent` verdict produced by a method that can extract words; the
/// plain random-evaluation method reports only the differing length.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EquivResult {
    pub verdict: Verdict,
    pub witness: Option<Witness>,
    /// Length of a differing word when only the length is known.
    pub differing_length: Option<usize>,
}

impl EquivResult {
    pub fn equivalent() -> Self {
        EquivResult {
            verdict: Verdict::Equivalent,
            witness: None,
            differing_length: None,
        }
    }

    pub fn probably_equivalent(confidence: Q) -> Self {
        EquivResult {
            verdict: Verdict::ProbablyEquivalent { confidence },
            witness: None,
            differing_length: None,
        }
    }

    pub fn inequivalent(witness: Witness) -> Self {
        let len = witness.word.len();
        EquivResult {
            verdict: Verdict::Inequivalent,
            witness: Some(witness),
            differing_length: Some(len),
        }
    }

    pub fn is_equivalent(&self) -> bool {
        !matches!(self.verdict, Verdict::Inequivalent)
    }
}

/// Deciding equivalence deterministically: the difference automaton is zero
/// exactly when the two automata agree on every word.
pub fn equivalent_det(b: &WFA, c: &WFA) -> Result<EquivResult, WfaError> {
    let diff = b.difference(c)?;
    match is_zero_det(&diff) {
        None => Ok(EquivResult::equivalent()),
        Some(word) => {
            let left = b.evaluate(&word)?;
            let right = c.evaluate(&word)?;
            debug_assert_ne!(left, right);
            Ok(EquivResult::inequivalent(Witness { word, left, right }))
        }
    }
}

/// All words of length at most `maxlen` with their exact values, in length
/// then lexicographic order. Refuses when the word count exceeds the budget.
pub fn enumerate_oracle(a: &WFA, maxlen: usize) -> Result<Vec<(Word, Q)>, WfaError> {
    enumerate_oracle_with_budget(a, maxlen, DEFAULT_ENUM_BUDGET)
}

pub fn enumerate_oracle_with_budget(
    a: &WFA,
    maxlen: usize,
    budget: usize,
) -> Result<Vec<(Word, Q)>, WfaError> {
    let k = a.alphabet.len();
    let mut total: usize = 0;
    let mut level: usize = 1;
    for _ in 0..=maxlen {
        total = total.saturating_add(level);
        if total > budget {
            return Err(WfaError::BudgetExceeded {
                required: total,
                budget,
            });
        }
        level = level.saturating_mul(k);
        if level == 0 {
            break;
        }
    }

    // Prefix vectors are extended one symbol at a time so each word costs a
    // single vector-matrix product.
    let mut out = Vec::with_capacity(total);
    out.push((Vec::new(), a.init.dot(&a.final_)));
    let mut frontier: Vec<(Word, QVector)> = vec![(Vec::new(), a.init.clone())];
    for _ in 0..maxlen {
        let mut next = Vec::with_capacity(frontier.len() * k);
        for (word, vec) in &frontier {
            for symbol in 0..k {
                let v = vec.mul_matrix(&a.trans[symbol]);
                let mut w = word.clone();
                w.push(symbol);
                out.push((w.clone(), v.dot(&a.final_)));
                next.push((w, v));
            }
        }
        frontier = next;
    }
    Ok(out)
}
