//! Randomized zeroness and equivalence procedures with counterexample
//! extraction, on top of the seedable deterministic random source.
//!
//! Two methods are provided. The first evaluates the polynomial whose
//! monomials are words and whose coefficients are word values at random
//! integer points (Schwartz-Zippel); a backward variant keeps the vector
//! history so a witness word can be rebuilt after a nonzero evaluation. The
//! second draws random per-position letter weights so that, with probability
//! at least 1/2, a unique minimum-weight nonzero word exists (isolation
//! lemma); the witness is then read off the minimum-degree monomial of a
//! univariate polynomial under single-weight perturbations.
//!
//! Nonzero and inequivalent verdicts are always sound: whenever a witness is
//! emitted it has been re-evaluated exactly. Error is one-sided, on the
//! "probably zero" answers only.

use crate::matrix::{Orientation, QVector};
use crate::poly::{UPoly, UPolyMatrix};
use crate::rational::Q;
use crate::rng::RandomSource;
use crate::wfa::{EquivResult, Verdict, WfaError, Witness, Word, WFA};
use num_traits::{One, Zero};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq, Clone)]
pub enum IsolationError {
    #[error("perturbation tests selected {count} letters for position {position}")]
    AmbiguousLetter { position: usize, count: usize },
    #[error("perturbation tests flagged position {later} after empty position {empty}")]
    GapAtPosition { empty: usize, later: usize },
    #[error("extracted word does not re-evaluate to the minimum-degree coefficient")]
    ValueMismatch,
}

/// Outcome of a randomized zeroness test.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ZeroResult {
    Nonzero(NonzeroEvidence),
    ProbablyZero { confidence: Q },
}

/// Evidence for a nonzero verdict. The plain random-evaluation method only
/// learns the length of some differing word; the counterexample-producing
/// methods always carry a word that re-evaluates to a nonzero value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NonzeroEvidence {
    pub length: Option<usize>,
    pub witness: Option<Word>,
    pub value: Option<Q>,
}

impl ZeroResult {
    pub fn is_nonzero(&self) -> bool {
        matches!(self, ZeroResult::Nonzero(_))
    }

    fn nonzero_with_witness(word: Word, value: Q) -> ZeroResult {
        ZeroResult::Nonzero(NonzeroEvidence {
            length: Some(word.len()),
            witness: Some(word),
            value: Some(value),
        })
    }
}

/// Confidence bound (k-1)/k of a single random-evaluation run.
fn sz_confidence(k_param: u64) -> Q {
    Q::new((k_param - 1).into(), k_param.into())
}

/// Confidence bound 1 - 2^-t of t isolation trials.
fn isolation_confidence(trials: u32) -> Q {
    Q::one() - Q::new(1.into(), num_bigint::BigInt::from(2).pow(trials))
}

fn draw_symbol_weights(rng: &mut RandomSource, symbols: usize, grid: u64) -> Vec<Q> {
    (0..symbols)
        .map(|_| Q::from_integer(rng.int_in_1_to(grid).into()))
        .collect()
}

/// Zeroness by backward random evaluation: starting from the final vector,
/// each step multiplies by a fresh random combination of the transition
/// matrices and tests against the initial vector. Words of every length up
/// to n-1 are covered, so a zero answer is wrong with probability at most
/// 1/k_param. The triggering step length is reported, but no word; use
/// [`zero_sz_cex`] or [`zero_isolation`] to obtain witnesses.
pub fn zero_sz(a: &WFA, k_param: u64, rng: &mut RandomSource) -> ZeroResult {
    assert!(k_param >= 2, "k_param must be at least 2");
    let n = a.states();
    if n == 0 {
        return ZeroResult::ProbablyZero { confidence: Q::one() };
    }
    let empty = a.init().dot(a.final_vector());
    if !empty.is_zero() {
        return ZeroResult::nonzero_with_witness(Vec::new(), empty);
    }
    let grid = k_param * n as u64;
    let symbols = a.alphabet().len();
    let mut v = a.final_vector().clone();
    for i in 1..n {
        let r = draw_symbol_weights(rng, symbols, grid);
        let mut next = QVector::zero(n, Orientation::Col);
        for (symbol, weight) in r.iter().enumerate() {
            next = next.add(&a.transition(symbol).mul_col(&v).scale(weight));
        }
        v = next;
        if !a.init().dot(&v).is_zero() {
            return ZeroResult::Nonzero(NonzeroEvidence {
                length: Some(i),
                witness: None,
                value: None,
            });
        }
    }
    ZeroResult::ProbablyZero {
        confidence: sz_confidence(k_param),
    }
}

/// Zeroness by backward random evaluation, keeping the vector of every step
/// so a triggering evaluation can be walked forward into a witness word: at
/// each position the first letter whose one-step extension still evaluates
/// nonzero is chosen. The returned witness always satisfies
/// `a.evaluate(witness) != 0`, checked exactly.
pub fn zero_sz_cex(a: &WFA, k_param: u64, rng: &mut RandomSource) -> ZeroResult {
    assert!(k_param >= 2, "k_param must be at least 2");
    let n = a.states();
    if n == 0 {
        return ZeroResult::ProbablyZero { confidence: Q::one() };
    }
    let empty = a.init().dot(a.final_vector());
    if !empty.is_zero() {
        return ZeroResult::nonzero_with_witness(Vec::new(), empty);
    }
    let grid = k_param * n as u64;
    let symbols = a.alphabet().len();
    let mut history = vec![a.final_vector().clone()];
    for i in 1..n {
        let r = draw_symbol_weights(rng, symbols, grid);
        let mut v = QVector::zero(n, Orientation::Col);
        for (symbol, weight) in r.iter().enumerate() {
            v = v.add(&a.transition(symbol).mul_col(&history[i - 1]).scale(weight));
        }
        history.push(v);
        if a.init().dot(&history[i]).is_zero() {
            continue;
        }
        // Walk forward, maintaining u with u . history[j] != 0.
        let mut u = a.init().clone();
        let mut word = Vec::with_capacity(i);
        for j in (1..=i).rev() {
            let symbol = (0..symbols)
                .find(|&s| !u.mul_matrix(a.transition(s)).dot(&history[j - 1]).is_zero())
                .expect(
                    "no letter extends a nonzero partial evaluation; \
                     this contradicts the partial-evaluation identity",
                );
            word.push(symbol);
            u = u.mul_matrix(a.transition(symbol));
        }
        let value = u.dot(a.final_vector());
        assert!(!value.is_zero(), "walked witness must evaluate nonzero");
        debug_assert_eq!(a.evaluate(&word).unwrap(), value);
        return ZeroResult::nonzero_with_witness(word, value);
    }
    ZeroResult::ProbablyZero {
        confidence: sz_confidence(k_param),
    }
}

/// Random letter weights for one isolation trial: `weights[i][s]` is the
/// weight of symbol `s` at position `i+1`, drawn uniformly from
/// `1..=2*|alphabet|*n`. Positions are drawn outer-first, symbols inner.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IsolationWeights(pub Vec<Vec<u64>>);

impl IsolationWeights {
    fn draw(rng: &mut RandomSource, n: usize, symbols: usize) -> Self {
        let grid = 2 * symbols as u64 * n as u64;
        IsolationWeights(
            (0..n)
                .map(|_| (0..symbols).map(|_| rng.int_in_1_to(grid)).collect())
                .collect(),
        )
    }

    fn bumped(&self, position: usize, symbol: usize) -> Self {
        let mut w = self.clone();
        w.0[position - 1][symbol] += 1;
        w
    }
}

/// The univariate polynomial whose monomial exponents are word weights and
/// whose coefficients collect the values of the words sharing a weight, over
/// all words of length at most n.
pub fn isolation_polynomial(a: &WFA, weights: &IsolationWeights) -> UPoly {
    let n = a.states();
    let symbols = a.alphabet().len();
    let init = UPolyMatrix::from_row(a.init());
    let final_ = UPolyMatrix::from_col(a.final_vector());
    let steps: Vec<UPolyMatrix> = (1..=n)
        .map(|position| {
            let mut step = UPolyMatrix::zero(n, n);
            for symbol in 0..symbols {
                let exponent = weights.0[position - 1][symbol] as usize;
                for (i, j, v) in a.transition(symbol).iter_nonzero() {
                    step.add_to(i, j, &UPoly::monomial(exponent, v.clone()));
                }
            }
            step
        })
        .collect();
    let sum = crate::poly::upoly_matrix_product_sum(n, &steps);
    init.mul(&sum).mul(&final_).get(0, 0)
}

/// Reads the isolated minimum-weight word out of the polynomial: for each
/// position and letter independently, bumping that letter's weight moves the
/// minimum-degree monomial exactly when the letter occurs at that position
/// in the isolated word. The assembled word must re-evaluate to the
/// minimum-degree coefficient; any inconsistency means the minimum-weight
/// word was not unique this trial and the caller retries with a fresh one.
pub fn isolation_cex(
    a: &WFA,
    weights: &IsolationWeights,
    p: &UPoly,
) -> Result<(Word, Q), IsolationError> {
    let n = a.states();
    let symbols = a.alphabet().len();
    let reference = p
        .min_degree_term()
        .expect("isolation_cex requires a nonzero polynomial");
    let mut per_position: Vec<Vec<usize>> = vec![Vec::new(); n];
    for position in 1..=n {
        for symbol in 0..symbols {
            let bumped = isolation_polynomial(a, &weights.bumped(position, symbol));
            let changed = match bumped.min_degree_term() {
                Err(_) => true,
                Ok(term) => term != reference,
            };
            if changed {
                per_position[position - 1].push(symbol);
            }
        }
    }
    let mut word = Vec::new();
    let mut first_empty = None;
    for (idx, letters) in per_position.iter().enumerate() {
        let position = idx + 1;
        match (letters.len(), first_empty) {
            (0, None) => first_empty = Some(position),
            (0, Some(_)) => {}
            (1, None) => word.push(letters[0]),
            (1, Some(empty)) => {
                return Err(IsolationError::GapAtPosition {
                    empty,
                    later: position,
                })
            }
            (count, _) => return Err(IsolationError::AmbiguousLetter { position, count }),
        }
    }
    let value = a.evaluate(&word).expect("witness letters are alphabet ids");
    if value != reference.1 {
        return Err(IsolationError::ValueMismatch);
    }
    Ok((word, value))
}

/// Zeroness by the isolation method. Each trial draws fresh letter weights,
/// builds the weight polynomial exactly, and reports nonzero as soon as the
/// polynomial is nonzero; a witness is extracted whenever the perturbation
/// tests single out a consistent word. After `trials` all-zero trials the
/// automaton is declared zero with confidence 1 - 2^-trials.
pub fn zero_isolation(a: &WFA, trials: u32, rng: &mut RandomSource) -> ZeroResult {
    assert!(trials >= 1, "at least one trial required");
    let n = a.states();
    if n == 0 {
        return ZeroResult::ProbablyZero { confidence: Q::one() };
    }
    let symbols = a.alphabet().len();
    let mut nonzero_seen = false;
    for trial in 0..trials {
        let mut trial_rng = rng.derive(trial as u64);
        let weights = IsolationWeights::draw(&mut trial_rng, n, symbols);
        let p = isolation_polynomial(a, &weights);
        if p.is_zero() {
            continue;
        }
        nonzero_seen = true;
        match isolation_cex(a, &weights, &p) {
            Ok((word, value)) => return ZeroResult::nonzero_with_witness(word, value),
            // Minimum-weight word not unique this trial; retry fresh.
            Err(_) => continue,
        }
    }
    if nonzero_seen {
        // Some trial proved the polynomial nonzero even though no witness
        // could be isolated; the verdict is still definite.
        return ZeroResult::Nonzero(NonzeroEvidence {
            length: None,
            witness: None,
            value: None,
        });
    }
    ZeroResult::ProbablyZero {
        confidence: isolation_confidence(trials),
    }
}

/// Method selector for randomized equivalence checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Random evaluation, verdict only; `trials` independent runs.
    Sz { k_param: u64, trials: u32 },
    /// Random evaluation with witness extraction.
    SzCex { k_param: u64, trials: u32 },
    /// Isolation-weight polynomial with witness extraction.
    Isolation { trials: u32 },
}

impl Default for Method {
    fn default() -> Self {
        Method::SzCex {
            k_param: 10,
            trials: 1,
        }
    }
}

/// Randomized equivalence: runs the chosen zeroness procedure on the
/// difference automaton. Inequivalent verdicts from witness-producing
/// methods carry the word and both exact values, re-checked here.
pub fn equivalent_randomized(
    b: &WFA,
    c: &WFA,
    method: Method,
    rng: &mut RandomSource,
) -> Result<EquivResult, WfaError> {
    let diff = b.difference(c)?;
    let outcome = match method {
        Method::Sz { k_param, trials } => {
            run_trials(&diff, trials, rng, |d, r| zero_sz(d, k_param, r), k_param)
        }
        Method::SzCex { k_param, trials } => run_trials(
            &diff,
            trials,
            rng,
            |d, r| zero_sz_cex(d, k_param, r),
            k_param,
        ),
        Method::Isolation { trials } => zero_isolation(&diff, trials, rng),
    };
    Ok(match outcome {
        ZeroResult::ProbablyZero { confidence } => EquivResult::probably_equivalent(confidence),
        ZeroResult::Nonzero(evidence) => match evidence.witness {
            Some(word) => {
                let left = b.evaluate(&word)?;
                let right = c.evaluate(&word)?;
                assert_ne!(left, right, "witness must separate the automata");
                EquivResult::inequivalent(Witness { word, left, right })
            }
            None => EquivResult {
                verdict: Verdict::Inequivalent,
                witness: None,
                differing_length: evidence.length,
            },
        },
    })
}

/// Repeats a single-run zeroness procedure with independently derived seeds;
/// any nonzero run decides, and t all-zero runs give confidence 1 - k^-t.
fn run_trials(
    diff: &WFA,
    trials: u32,
    rng: &mut RandomSource,
    run: impl Fn(&WFA, &mut RandomSource) -> ZeroResult,
    k_param: u64,
) -> ZeroResult {
    assert!(trials >= 1);
    for trial in 0..trials {
        let mut trial_rng = rng.derive(trial as u64);
        match run(diff, &mut trial_rng) {
            ZeroResult::Nonzero(e) => return ZeroResult::Nonzero(e),
            ZeroResult::ProbablyZero { .. } => {}
        }
    }
    if diff.states() == 0 {
        return ZeroResult::ProbablyZero { confidence: Q::one() };
    }
    ZeroResult::ProbablyZero {
        confidence: Q::one()
            - Q::new(1.into(), num_bigint::BigInt::from(k_param).pow(trials)),
    }
}
