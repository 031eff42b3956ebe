//! Q-weighted visibly pushdown automata: evaluation on well-matched words,
//! synchronous products, a randomized equivalence test through modular
//! evaluation of level sums, and the two reductions connecting weighted
//! pushdown equivalence with arithmetic-circuit equality.
//!
//! Well-matched words are generated by L_0 = internals + empty and
//! L_{i+1} = calls L_i returns + L_i L_i. The matrix semantics of level
//! L_{i} satisfies a quadratic recurrence, so the derivation-weighted sum of
//! all values up to a level can be computed by iterated matrix products;
//! multiplicities are at least one, which keeps zero tests of sums of
//! squares sound. Two automata with n states in total are equivalent exactly
//! when the level-n² sum of squared differences vanishes, and that sum is
//! evaluated modulo random primes: any nonzero residue proves inequivalence.

use crate::circuit::{Circuit, CircuitBuilder, CircuitError, Gate};
use crate::matrix::{Orientation, QMatrix, QVector};
use crate::modular::{random_prime, rational_to_residue, ResMat};
use crate::rational::Q;
use crate::rng::RandomSource;
use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Zero};
use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq, Clone)]
pub enum VpaError {
    #[error("visibly pushdown alphabets differ")]
    AlphabetMismatch,
    #[error("alphabet classes must be disjoint; `{0}` appears twice")]
    OverlappingClasses(String),
    #[error("alphabet must contain at least one symbol")]
    EmptyAlphabet,
    #[error("word is not well-matched (position {0})")]
    NotWellMatched(usize),
    #[error("symbol id {id} outside alphabet of size {size}")]
    ForeignSymbol { id: usize, size: usize },
    #[error("transition map for {what} has {got} matrices, expected {expected}")]
    WrongMapSize {
        what: &'static str,
        got: usize,
        expected: usize,
    },
    #[error("matrix for {what} is {got_rows}x{got_cols}, expected {n}x{n}")]
    BadMatrixShape {
        what: &'static str,
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
    #[error(transparent)]
    Circuit(#[from] CircuitError),
}

/// Alphabet partitioned into calls, returns and internal symbols. Symbol ids
/// are assigned in that order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VisiblyAlphabet {
    calls: Vec<String>,
    returns: Vec<String>,
    internals: Vec<String>,
}

/// Class of a symbol, with its index inside that class.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SymbolClass {
    Call(usize),
    Return(usize),
    Internal(usize),
}

impl VisiblyAlphabet {
    pub fn new(
        calls: Vec<String>,
        returns: Vec<String>,
        internals: Vec<String>,
    ) -> Result<Self, VpaError> {
        if calls.is_empty() && returns.is_empty() && internals.is_empty() {
            return Err(VpaError::EmptyAlphabet);
        }
        let mut seen = BTreeSet::new();
        for label in calls.iter().chain(&returns).chain(&internals) {
            if !seen.insert(label.clone()) {
                return Err(VpaError::OverlappingClasses(label.clone()));
            }
        }
        Ok(VisiblyAlphabet {
            calls,
            returns,
            internals,
        })
    }

    pub fn from_labels(calls: &[&str], returns: &[&str], internals: &[&str]) -> Self {
        VisiblyAlphabet::new(
            calls.iter().map(|s| s.to_string()).collect(),
            returns.iter().map(|s| s.to_string()).collect(),
            internals.iter().map(|s| s.to_string()).collect(),
        )
        .unwrap()
    }

    pub fn calls(&self) -> &[String] {
        &self.calls
    }

    pub fn returns(&self) -> &[String] {
        &self.returns
    }

    pub fn internals(&self) -> &[String] {
        &self.internals
    }

    pub fn len(&self) -> usize {
        self.calls.len() + self.returns.len() + self.internals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn classify(&self, id: usize) -> SymbolClass {
        let c = self.calls.len();
        let r = self.returns.len();
        if id < c {
            SymbolClass::Call(id)
        } else if id < c + r {
            SymbolClass::Return(id - c)
        } else {
            SymbolClass::Internal(id - c - r)
        }
    }

    pub fn label(&self, id: usize) -> &str {
        match self.classify(id) {
            SymbolClass::Call(k) => &self.calls[k],
            SymbolClass::Return(k) => &self.returns[k],
            SymbolClass::Internal(k) => &self.internals[k],
        }
    }

    pub fn id_of(&self, label: &str) -> Option<usize> {
        let c = self.calls.len();
        let r = self.returns.len();
        if let Some(k) = self.calls.iter().position(|l| l == label) {
            return Some(k);
        }
        if let Some(k) = self.returns.iter().position(|l| l == label) {
            return Some(c + k);
        }
        self.internals.iter().position(|l| l == label).map(|k| c + r + k)
    }

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

/// Q-weighted visibly pushdown automaton.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WVPA {
    n: usize,
    alphabet: VisiblyAlphabet,
    stack: Vec<String>,
    /// m_call[call][gamma]
    m_call: Vec<Vec<QMatrix>>,
    /// m_ret[ret][gamma]
    m_ret: Vec<Vec<QMatrix>>,
    m_int: Vec<QMatrix>,
    init: QVector,
    final_: QVector,
}

impl WVPA {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        alphabet: VisiblyAlphabet,
        stack: Vec<String>,
        m_call: Vec<Vec<QMatrix>>,
        m_ret: Vec<Vec<QMatrix>>,
        m_int: Vec<QMatrix>,
        init: QVector,
        final_: QVector,
    ) -> Result<Self, VpaError> {
        let n = init.len();
        if init.orientation() != Orientation::Row {
            return Err(VpaError::BadVectorShape {
                which: "initial",
                got: init.len(),
                n,
            });
        }
        if final_.orientation() != Orientation::Col || final_.len() != n {
            return Err(VpaError::BadVectorShape {
                which: "final",
                got: final_.len(),
                n,
            });
        }
        let shape = |what: &'static str, m: &QMatrix| -> Result<(), VpaError> {
            if m.rows() != n || m.cols() != n {
                return Err(VpaError::BadMatrixShape {
                    what,
                    got_rows: m.rows(),
                    got_cols: m.cols(),
                    n,
                });
            }
            Ok(())
        };
        if m_call.len() != alphabet.calls.len() {
            return Err(VpaError::WrongMapSize {
                what: "calls",
                got: m_call.len(),
                expected: alphabet.calls.len(),
            });
        }
        if m_ret.len() != alphabet.returns.len() {
            return Err(VpaError::WrongMapSize {
                what: "returns",
                got: m_ret.len(),
                expected: alphabet.returns.len(),
            });
        }
        if m_int.len() != alphabet.internals.len() {
            return Err(VpaError::WrongMapSize {
                what: "internals",
                got: m_int.len(),
                expected: alphabet.internals.len(),
            });
        }
        for per_symbol in &m_call {
            if per_symbol.len() != stack.len() {
                return Err(VpaError::WrongMapSize {
                    what: "call stack symbols",
                    got: per_symbol.len(),
                    expected: stack.len(),
                });
            }
            for m in per_symbol {
                shape("call", m)?;
            }
        }
        for per_symbol in &m_ret {
            if per_symbol.len() != stack.len() {
                return Err(VpaError::WrongMapSize {
                    what: "return stack symbols",
                    got: per_symbol.len(),
                    expected: stack.len(),
                });
            }
            for m in per_symbol {
                shape("return", m)?;
            }
        }
        for m in &m_int {
            shape("internal", m)?;
        }
        Ok(WVPA {
            n,
            alphabet,
            stack,
            m_call,
            m_ret,
            m_int,
            init,
            final_,
        })
    }

    pub fn states(&self) -> usize {
        self.n
    }

    pub fn alphabet(&self) -> &VisiblyAlphabet {
        &self.alphabet
    }

    pub fn stack_symbols(&self) -> &[String] {
        &self.stack
    }

    pub fn call_matrix(&self, call: usize, gamma: usize) -> &QMatrix {
        &self.m_call[call][gamma]
    }

    pub fn return_matrix(&self, ret: usize, gamma: usize) -> &QMatrix {
        &self.m_ret[ret][gamma]
    }

    pub fn internal_matrix(&self, internal: usize) -> &QMatrix {
        &self.m_int[internal]
    }

    pub fn init(&self) -> &QVector {
        &self.init
    }

    pub fn final_vector(&self) -> &QVector {
        &self.final_
    }

    /// All rationals appearing in the automaton, for denominator screening.
    fn all_weights(&self) -> Vec<Q> {
        let mut out: Vec<Q> = Vec::new();
        for (_, v) in self.init.iter_nonzero() {
            out.push(v.clone());
        }
        for (_, v) in self.final_.iter_nonzero() {
            out.push(v.clone());
        }
        let mats = self
            .m_int
            .iter()
            .chain(self.m_call.iter().flatten())
            .chain(self.m_ret.iter().flatten());
        for m in mats {
            for (_, _, v) in m.iter_nonzero() {
                out.push(v.clone());
            }
        }
        out
    }
}

/// One element of the nesting structure of a well-matched word.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NestItem {
    /// An internal symbol, by class-local index.
    Internal(usize),
    /// A matched call/return pair around a well-matched infix.
    Frame {
        call: usize,
        inner: Vec<NestItem>,
        ret: usize,
    },
}

/// Parses a word into its nesting structure, or `None` when some call or
/// return is unmatched.
pub fn is_well_matched(alphabet: &VisiblyAlphabet, w: &[usize]) -> Option<Vec<NestItem>> {
    let mut stack: Vec<(usize, Vec<NestItem>)> = Vec::new();
    let mut current: Vec<NestItem> = Vec::new();
    for &id in w {
        if id >= alphabet.len() {
            return None;
        }
        match alphabet.classify(id) {
            SymbolClass::Internal(k) => current.push(NestItem::Internal(k)),
            SymbolClass::Call(c) => {
                stack.push((c, std::mem::take(&mut current)));
            }
            SymbolClass::Return(r) => {
                let (call, outer) = stack.pop()?;
                let inner = std::mem::replace(&mut current, outer);
                current.push(NestItem::Frame {
                    call,
                    inner,
                    ret: r,
                });
            }
        }
    }
    if stack.is_empty() {
        Some(current)
    } else {
        None
    }
}

/// State-to-state weight matrix of a well-matched word: entry (i,j) is the
/// total weight of all runs from i to j reading the word.
pub fn vpa_word_matrix(a: &WVPA, w: &[usize]) -> Result<QMatrix, VpaError> {
    for &id in w {
        if id >= a.alphabet.len() {
            return Err(VpaError::ForeignSymbol {
                id,
                size: a.alphabet.len(),
            });
        }
    }
    match is_well_matched(&a.alphabet, w) {
        Some(items) => Ok(eval_items(a, &items)),
        None => Err(VpaError::NotWellMatched(first_mismatch(&a.alphabet, w))),
    }
}

/// Exact value of a well-matched word by structural recursion: internal
/// symbols multiply their matrix, and a matched pair sums over the stack
/// symbol threaded between its call and return matrices.
pub fn vpa_evaluate(a: &WVPA, w: &[usize]) -> Result<Q, VpaError> {
    let m = vpa_word_matrix(a, w)?;
    Ok(a.init.mul_matrix(&m).dot(&a.final_))
}

fn first_mismatch(alphabet: &VisiblyAlphabet, w: &[usize]) -> usize {
    let mut depth: isize = 0;
    for (pos, &id) in w.iter().enumerate() {
        match alphabet.classify(id) {
            SymbolClass::Call(_) => depth += 1,
            SymbolClass::Return(_) => {
                depth -= 1;
                if depth < 0 {
                    return pos;
                }
            }
            SymbolClass::Internal(_) => {}
        }
    }
    w.len().saturating_sub(1)
}

fn eval_items(a: &WVPA, items: &[NestItem]) -> QMatrix {
    let mut acc = QMatrix::identity(a.n);
    for item in items {
        let m = match item {
            NestItem::Internal(k) => a.m_int[*k].clone(),
            NestItem::Frame { call, inner, ret } => {
                let inner_m = eval_items(a, inner);
                let mut sum = QMatrix::zero(a.n, a.n);
                for gamma in 0..a.stack.len() {
                    sum = sum.add(&a.m_call[*call][gamma].mul(&inner_m).mul(&a.m_ret[*ret][gamma]));
                }
                sum
            }
        };
        acc = acc.mul(&m);
    }
    acc
}

/// Synchronous product: `(a ⊗ b)(w) = a(w) * b(w)` on every well-matched
/// word. States and stack symbols are pairs; transition matrices are
/// Kronecker products.
pub fn vpa_product(a: &WVPA, b: &WVPA) -> Result<WVPA, VpaError> {
    if a.alphabet != b.alphabet {
        return Err(VpaError::AlphabetMismatch);
    }
    let stack: Vec<String> = a
        .stack
        .iter()
        .flat_map(|ga| b.stack.iter().map(move |gb| format!("{ga}.{gb}")))
        .collect();
    let pair_matrices = |xa: &[QMatrix], xb: &[QMatrix]| -> Vec<QMatrix> {
        xa.iter()
            .flat_map(|ma| xb.iter().map(move |mb| ma.kron(mb)))
            .collect()
    };
    let m_call = a
        .m_call
        .iter()
        .zip(&b.m_call)
        .map(|(xa, xb)| pair_matrices(xa, xb))
        .collect();
    let m_ret = a
        .m_ret
        .iter()
        .zip(&b.m_ret)
        .map(|(xa, xb)| pair_matrices(xa, xb))
        .collect();
    let m_int = a
        .m_int
        .iter()
        .zip(&b.m_int)
        .map(|(ma, mb)| ma.kron(mb))
        .collect();
    WVPA::new(
        a.alphabet.clone(),
        stack,
        m_call,
        m_ret,
        m_int,
        a.init.kron(&b.init),
        a.final_.kron(&b.final_),
    )
}

/// Exact matrix of the derivation-weighted level sum: S_0 = I + Σ internals,
/// S_{i+1} = Σ_{c,r,γ} M_c(c,γ) S_i M_r(r,γ) + S_i S_i.
pub fn level_sum_matrix(a: &WVPA, levels: usize) -> QMatrix {
    let mut s = QMatrix::identity(a.n);
    for m in &a.m_int {
        s = s.add(m);
    }
    for _ in 0..levels {
        let mut next = s.mul(&s);
        for call in 0..a.alphabet.calls.len() {
            for ret in 0..a.alphabet.returns.len() {
                for gamma in 0..a.stack.len() {
                    next = next.add(&a.m_call[call][gamma].mul(&s).mul(&a.m_ret[ret][gamma]));
                }
            }
        }
        s = next;
    }
    s
}

/// Exact derivation-weighted sum of all word values up to a level.
pub fn level_sum_exact(a: &WVPA, levels: usize) -> Q {
    a.init.mul_matrix(&level_sum_matrix(a, levels)).dot(&a.final_)
}

/// Sparse view of a rational matrix reduced modulo a prime.
fn sparse_residues(m: &QMatrix, prime: u64) -> Vec<(usize, usize, u64)> {
    m.iter_nonzero()
        .map(|(i, j, v)| {
            let r = rational_to_residue(v, prime).expect("prime screened against denominators");
            (i, j, r.value)
        })
        .collect()
}

/// left * dense * right for sparse left/right, in O(nnz_l * nnz_r) updates.
fn sandwich(
    left: &[(usize, usize, u64)],
    dense: &ResMat,
    right: &[(usize, usize, u64)],
) -> ResMat {
    let p = dense.prime as u128;
    let mut out = ResMat::zero(dense.n, dense.prime);
    for &(i, k1, v1) in left {
        for &(k2, j, v2) in right {
            let mid = dense.get(k1, k2);
            if mid == 0 {
                continue;
            }
            let term = (v1 as u128 * mid as u128 % p) * v2 as u128 % p;
            let cur = out.get(i, j) as u128;
            out.set(i, j, ((cur + term) % p) as u64);
        }
    }
    out
}

/// The modular level-sum value init * S_levels * final for one automaton.
fn level_sum_mod(a: &WVPA, levels: usize, prime: u64) -> u64 {
    let n = a.n;
    let mut s = ResMat::identity(n, prime);
    for m in &a.m_int {
        for (i, j, v) in sparse_residues(m, prime) {
            let cur = s.get(i, j);
            s.set(i, j, (cur + v) % prime);
        }
    }
    let calls: Vec<Vec<Vec<(usize, usize, u64)>>> = a
        .m_call
        .iter()
        .map(|per| per.iter().map(|m| sparse_residues(m, prime)).collect())
        .collect();
    let rets: Vec<Vec<Vec<(usize, usize, u64)>>> = a
        .m_ret
        .iter()
        .map(|per| per.iter().map(|m| sparse_residues(m, prime)).collect())
        .collect();
    for _ in 0..levels {
        let mut next = s.mul(&s);
        for per_call in &calls {
            for per_ret in &rets {
                for gamma in 0..a.stack.len() {
                    next = next.add(&sandwich(&per_call[gamma], &s, &per_ret[gamma]));
                }
            }
        }
        s = next;
    }
    let p = prime as u128;
    let init = sparse_residues(
        &row_to_matrix(&a.init),
        prime,
    );
    let final_ = sparse_residues(&col_to_matrix(&a.final_), prime);
    let mut total: u128 = 0;
    for &(_, i, vi) in &init {
        for &(j, _, vj) in &final_ {
            let term = (vi as u128 * s.get(i, j) as u128 % p) * vj as u128 % p;
            total = (total + term) % p;
        }
    }
    total as u64
}

fn row_to_matrix(v: &QVector) -> QMatrix {
    let mut m = QMatrix::zero(1, v.len());
    for (j, x) in v.iter_nonzero() {
        m.set(0, j, x.clone());
    }
    m
}

fn col_to_matrix(v: &QVector) -> QMatrix {
    let mut m = QMatrix::zero(v.len(), 1);
    for (i, x) in v.iter_nonzero() {
        m.set(i, 0, x.clone());
    }
    m
}

/// Verdict of the randomized pushdown equivalence test. Inequivalence is
/// exact; equivalence is one-sided over the primes tried.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum VpaVerdict {
    ProbablyEquivalent { primes: Vec<u64> },
    Inequivalent { prime: u64 },
}

impl VpaVerdict {
    pub fn is_equivalent(&self) -> bool {
        matches!(self, VpaVerdict::ProbablyEquivalent { .. })
    }
}

/// Equivalence of two weighted visibly pushdown automata: the sum over all
/// words of level n² (n the total state count) of
/// (a(w) - b(w))² = (a⊗a)(w) + (b⊗b)(w) - 2(a⊗b)(w), with derivation
/// multiplicities, vanishes exactly when the automata agree on every
/// well-matched word. The three product sums are evaluated modulo `trials`
/// random primes; primes dividing any transition denominator are redrawn.
pub fn vpa_equivalent(
    a: &WVPA,
    b: &WVPA,
    trials: u32,
    rng: &mut RandomSource,
) -> Result<VpaVerdict, VpaError> {
    assert!(trials >= 1, "at least one trial required");
    if a.alphabet != b.alphabet {
        return Err(VpaError::AlphabetMismatch);
    }
    let aa = vpa_product(a, a)?;
    let bb = vpa_product(b, b)?;
    let ab = vpa_product(a, b)?;
    let levels = (a.n + b.n) * (a.n + b.n);
    let mut denominators: BTreeSet<BigUint> = BTreeSet::new();
    for auto in [&aa, &bb, &ab] {
        for w in auto.all_weights() {
            denominators.insert(w.denom().magnitude().clone());
        }
    }
    let mut primes = Vec::with_capacity(trials as usize);
    for trial in 0..trials {
        let mut trial_rng = rng.derive(trial as u64);
        let prime = loop {
            let p = random_prime(&mut trial_rng);
            let divides = denominators
                .iter()
                .any(|d| (d % BigUint::from(p)).is_zero());
            if !divides {
                break p;
            }
        };
        primes.push(prime);
        let va = level_sum_mod(&aa, levels, prime);
        let vb = level_sum_mod(&bb, levels, prime);
        let vab = level_sum_mod(&ab, levels, prime);
        let total = (va as u128 + vb as u128 + 2 * (prime as u128 - vab as u128))
            % prime as u128;
        if total != 0 {
            return Ok(VpaVerdict::Inequivalent { prime });
        }
    }
    Ok(VpaVerdict::ProbablyEquivalent { primes })
}

/// Level-sum circuit: an arithmetic circuit over constants 0/1 whose output,
/// divided by the returned denominator, equals the exact level sum
/// init * S_levels * final. Weights are cleared to integers by the least
/// common denominator D, and the recurrence tracks the matching power of D.
#[derive(Debug, Clone)]
pub struct LevelSumCircuit {
    pub circuit: Circuit,
    pub denominator: BigInt,
    pub levels: usize,
}

pub fn level_sum_circuit(a: &WVPA, levels: usize) -> LevelSumCircuit {
    let mut denom = BigInt::one();
    for w in a.all_weights() {
        denom = denom.lcm(w.denom());
    }
    let n = a.n;
    let mut builder = CircuitBuilder::new();
    let scaled =
        |b: &mut CircuitBuilder, m: &QMatrix, d: &BigInt| -> Vec<Vec<usize>> {
            let mut gates = vec![vec![usize::MAX; m.cols()]; m.rows()];
            for i in 0..m.rows() {
                for j in 0..m.cols() {
                    let v = m.get(i, j);
                    let int = v.numer() * (d / v.denom());
                    gates[i][j] = b.constant(&int);
                }
            }
            gates
        };
    let mat_mul = |b: &mut CircuitBuilder, x: &[Vec<usize>], y: &[Vec<usize>]| -> Vec<Vec<usize>> {
        let rows = x.len();
        let inner = y.len();
        let cols = y[0].len();
        let mut out = vec![vec![usize::MAX; cols]; rows];
        for i in 0..rows {
            for j in 0..cols {
                let terms: Vec<usize> =
                    (0..inner).map(|k| b.mul(x[i][k], y[k][j])).collect();
                out[i][j] = b.sum(&terms);
            }
        }
        out
    };
    let mat_add = |b: &mut CircuitBuilder, x: &[Vec<usize>], y: &[Vec<usize>]| -> Vec<Vec<usize>> {
        x.iter()
            .zip(y)
            .map(|(xr, yr)| xr.iter().zip(yr).map(|(&p, &q)| b.add(p, q)).collect())
            .collect()
    };
    let mat_scale = |b: &mut CircuitBuilder, x: &[Vec<usize>], c: usize| -> Vec<Vec<usize>> {
        x.iter()
            .map(|row| row.iter().map(|&p| b.mul(p, c)).collect())
            .collect()
    };

    // s = D*I + Σ D*M_int, a matrix of gates over exponent 1 of D.
    let mut ident = QMatrix::identity(n);
    for m in &a.m_int {
        ident = ident.add(m);
    }
    let mut s = scaled(&mut builder, &ident, &denom);
    let mut exponent: u32 = 1;
    for _ in 0..levels {
        let next_exponent = (exponent + 2).max(2 * exponent);
        // Push terms carry exponent e+2; the square carries 2e.
        let mut parts: Vec<Vec<Vec<usize>>> = Vec::new();
        let square = mat_mul(&mut builder, &s, &s);
        let adjust = next_exponent - 2 * exponent;
        let square = if adjust > 0 {
            let c = builder.constant(&denom.pow(adjust));
            mat_scale(&mut builder, &square, c)
        } else {
            square
        };
        parts.push(square);
        for call in 0..a.alphabet.calls.len() {
            for ret in 0..a.alphabet.returns.len() {
                for gamma in 0..a.stack.len() {
                    let mc = scaled(&mut builder, &a.m_call[call][gamma], &denom);
                    let mr = scaled(&mut builder, &a.m_ret[ret][gamma], &denom);
                    let mid = mat_mul(&mut builder, &mc, &s);
                    let term = mat_mul(&mut builder, &mid, &mr);
                    let adjust = next_exponent - (exponent + 2);
                    let term = if adjust > 0 {
                        let c = builder.constant(&denom.pow(adjust));
                        mat_scale(&mut builder, &term, c)
                    } else {
                        term
                    };
                    parts.push(term);
                }
            }
        }
        let mut acc = parts.remove(0);
        for part in parts {
            acc = mat_add(&mut builder, &acc, &part);
        }
        s = acc;
        exponent = next_exponent;
    }
    let init = scaled(&mut builder, &row_to_matrix(&a.init), &denom);
    let final_ = scaled(&mut builder, &col_to_matrix(&a.final_), &denom);
    let left = mat_mul(&mut builder, &init, &s);
    let scalar = mat_mul(&mut builder, &left, &final_);
    let output = scalar[0][0];
    LevelSumCircuit {
        circuit: builder.finish(output),
        denominator: denom.pow(exponent + 2),
        levels,
    }
}

/// Gates of a circuit normalized to the alternating form required by the
/// pushdown encoding: adds at even depth, muls at odd depth, constants at
/// uniform depth d.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum NGate {
    Add(usize, usize),
    Mul(usize, usize),
    One,
    Zero,
}

struct Normalized {
    gates: Vec<NGate>,
    output: usize,
}

/// Minimal feasible uniform constant depth: the deepest constant position
/// under parity wrapping, rounded up to odd (a bare constant stays at 0).
fn minimal_depth(c: &Circuit) -> Result<usize, CircuitError> {
    let gates = c.gates();
    let mut max_level = 0usize;
    let mut seen: HashSet<(usize, usize)> = HashSet::new();
    let mut stack = vec![(c.output(), 0usize)];
    while let Some((g, level)) = stack.pop() {
        if !seen.insert((g, level)) {
            continue;
        }
        match gates[g] {
            Gate::Const0 | Gate::Const1 => max_level = max_level.max(level),
            Gate::Var(k) => return Err(CircuitError::Variable(k)),
            Gate::Sub(_, _) => return Err(CircuitError::SubGate(g)),
            Gate::Add(x, y) => {
                if level % 2 == 0 {
                    stack.push((x, level + 1));
                    stack.push((y, level + 1));
                } else {
                    stack.push((g, level + 1));
                }
            }
            Gate::Mul(x, y) => {
                if level % 2 == 1 {
                    stack.push((x, level + 1));
                    stack.push((y, level + 1));
                } else {
                    stack.push((g, level + 1));
                }
            }
        }
    }
    if max_level == 0 {
        Ok(0)
    } else if max_level % 2 == 1 {
        Ok(max_level)
    } else {
        Ok(max_level + 1)
    }
}

/// Normalizes a {add,mul,const} circuit to depth `d`: parity mismatches are
/// wrapped with value-preserving x+0 / x*1 gates and constants are padded
/// down to the uniform depth.
fn normalize_to_depth(c: &Circuit, d: usize) -> Result<Normalized, CircuitError> {
    struct Ctx<'a> {
        gates: &'a [Gate],
        out: Vec<NGate>,
        memo: HashMap<(usize, usize), usize>,
        zeros: HashMap<usize, usize>,
        ones: HashMap<usize, usize>,
        d: usize,
    }
    impl Ctx<'_> {
        fn zero_at(&mut self, level: usize) -> usize {
            if let Some(&id) = self.zeros.get(&level) {
                return id;
            }
            let id = if level == self.d {
                self.out.push(NGate::Zero);
                self.out.len() - 1
            } else if level % 2 == 0 {
                let z = self.zero_at(level + 1);
                self.out.push(NGate::Add(z, z));
                self.out.len() - 1
            } else {
                let z = self.zero_at(level + 1);
                let o = self.one_at(level + 1);
                self.out.push(NGate::Mul(z, o));
                self.out.len() - 1
            };
            self.zeros.insert(level, id);
            id
        }

        fn one_at(&mut self, level: usize) -> usize {
            if let Some(&id) = self.ones.get(&level) {
                return id;
            }
            let id = if level == self.d {
                self.out.push(NGate::One);
                self.out.len() - 1
            } else if level % 2 == 0 {
                let o = self.one_at(level + 1);
                let z = self.zero_at(level + 1);
                self.out.push(NGate::Add(o, z));
                self.out.len() - 1
            } else {
                let o = self.one_at(level + 1);
                self.out.push(NGate::Mul(o, o));
                self.out.len() - 1
            };
            self.ones.insert(level, id);
            id
        }

        fn expand(&mut self, g: usize, level: usize) -> Result<usize, CircuitError> {
            if let Some(&id) = self.memo.get(&(g, level)) {
                return Ok(id);
            }
            let id = match self.gates[g] {
                Gate::Var(k) => return Err(CircuitError::Variable(k)),
                Gate::Sub(_, _) => return Err(CircuitError::SubGate(g)),
                Gate::Const0 => {
                    if level == self.d {
                        self.out.push(NGate::Zero);
                        self.out.len() - 1
                    } else {
                        self.zero_at(level)
                    }
                }
                Gate::Const1 => {
                    if level == self.d {
                        self.out.push(NGate::One);
                        self.out.len() - 1
                    } else if level % 2 == 0 {
                        let inner = self.expand(g, level + 1)?;
                        let z = self.zero_at(level + 1);
                        self.out.push(NGate::Add(inner, z));
                        self.out.len() - 1
                    } else {
                        let inner = self.expand(g, level + 1)?;
                        let o = self.one_at(level + 1);
                        self.out.push(NGate::Mul(inner, o));
                        self.out.len() - 1
                    }
                }
                Gate::Add(x, y) => {
                    if level % 2 == 0 {
                        let a = self.expand(x, level + 1)?;
                        let b = self.expand(y, level + 1)?;
                        self.out.push(NGate::Add(a, b));
                        self.out.len() - 1
                    } else {
                        let inner = self.expand(g, level + 1)?;
                        let o = self.one_at(level + 1);
                        self.out.push(NGate::Mul(inner, o));
                        self.out.len() - 1
                    }
                }
                Gate::Mul(x, y) => {
                    if level % 2 == 1 {
                        let a = self.expand(x, level + 1)?;
                        let b = self.expand(y, level + 1)?;
                        self.out.push(NGate::Mul(a, b));
                        self.out.len() - 1
                    } else {
                        let inner = self.expand(g, level + 1)?;
                        let z = self.zero_at(level + 1);
                        self.out.push(NGate::Add(inner, z));
                        self.out.len() - 1
                    }
                }
            };
            self.memo.insert((g, level), id);
            Ok(id)
        }
    }
    let mut ctx = Ctx {
        gates: c.gates(),
        out: Vec::new(),
        memo: HashMap::new(),
        zeros: HashMap::new(),
        ones: HashMap::new(),
        d,
    };
    let output = ctx.expand(c.output(), 0)?;
    Ok(Normalized {
        gates: ctx.out,
        output,
    })
}

/// The word accepted by the pushdown encoding of a depth-d circuit, over the
/// alphabet {c, r, i} with ids 0, 1, 2.
pub fn canonical_word(d: usize) -> Vec<usize> {
    assert!(d <= 24, "canonical word for depth {d} would be huge");
    fn word_at(level: usize, d: usize, out: &mut Vec<usize>) {
        if level == d {
            out.push(2);
        } else if level % 2 == 0 {
            out.push(2);
            word_at(level + 1, d, out);
        } else {
            out.push(0);
            word_at(level + 1, d, out);
            out.push(1);
            word_at(level + 1, d, out);
        }
    }
    let mut out = Vec::new();
    word_at(0, d, &mut out);
    out
}

/// Normalizing mass of the encoding: the circuit value N satisfies
/// value(word_d) * mass(d) = N. Masses double through add levels (odd
/// height) and square through mul levels (even height).
pub fn canonical_mass(d: usize) -> BigUint {
    let mut m = BigUint::one();
    for height in 1..=d {
        if height % 2 == 1 {
            m *= BigUint::from(2u32);
        } else {
            m = &m * &m;
        }
    }
    m
}

/// The minimal normalized depth the encoding will use for a circuit.
pub fn encoding_depth(c: &Circuit) -> Result<usize, CircuitError> {
    minimal_depth(c)
}

/// Encodes an add/mul circuit over constants 0/1 as a weighted visibly
/// pushdown automaton over calls {c}, returns {r}, internals {i} that
/// assigns weight N / mass(d) to the canonical depth-d word (N the circuit
/// value) and weight zero to every other well-matched word. Add gates
/// branch with probability 1/2 on an internal symbol, mul gates push their
/// right operand and continue into the left, constants 1 step to a shared
/// sink that pops pending frames.
pub fn acit_to_vpa(c: &Circuit) -> Result<WVPA, VpaError> {
    let d = minimal_depth(c)?;
    acit_to_vpa_with_depth(c, d)
}

/// As [`acit_to_vpa`] at an explicit depth, which must be the minimal depth
/// or any larger odd value; two circuits become comparable automata exactly
/// when encoded at one shared depth.
pub fn acit_to_vpa_with_depth(c: &Circuit, d: usize) -> Result<WVPA, VpaError> {
    let dmin = minimal_depth(c)?;
    assert!(
        d == dmin || (d >= dmin && d % 2 == 1),
        "encoding depth {d} infeasible (minimal {dmin}, larger depths must be odd)"
    );
    let normalized = normalize_to_depth(c, d)?;
    let gates = &normalized.gates;
    let states = gates.len() + 1;
    let sink = gates.len();

    // Stack symbols: one per gate that is pushed as a mul right-operand.
    let mut pushed: BTreeSet<usize> = BTreeSet::new();
    for gate in gates {
        if let NGate::Mul(_, right) = gate {
            pushed.insert(*right);
        }
    }
    let stack_index: BTreeMap<usize, usize> =
        pushed.iter().enumerate().map(|(idx, &g)| (g, idx)).collect();
    let stack: Vec<String> = pushed.iter().map(|g| format!("s{g}")).collect();

    let alphabet = VisiblyAlphabet::from_labels(&["c"], &["r"], &["i"]);
    let half = Q::new(1.into(), 2.into());
    let mut internal = QMatrix::zero(states, states);
    let mut call = vec![QMatrix::zero(states, states); stack.len()];
    let mut ret = vec![QMatrix::zero(states, states); stack.len()];
    for (g, gate) in gates.iter().enumerate() {
        match *gate {
            NGate::Add(x, y) => {
                let cur = internal.get(g, x) + &half;
                internal.set(g, x, cur);
                let cur = internal.get(g, y) + &half;
                internal.set(g, y, cur);
            }
            NGate::Mul(x, y) => {
                call[stack_index[&y]].set(g, x, Q::one());
            }
            NGate::One => {
                internal.set(g, sink, Q::one());
            }
            NGate::Zero => {}
        }
    }
    for (&g, &idx) in &stack_index {
        ret[idx].set(sink, g, Q::one());
    }
    let init = QVector::unit(states, normalized.output, Orientation::Row);
    let final_ = QVector::unit(states, sink, Orientation::Col);
    WVPA::new(
        alphabet,
        stack,
        vec![call],
        vec![ret],
        vec![internal],
        init,
        final_,
    )
}
