//! Probabilistic reward automata: sub-stochastic transition automata whose
//! transitions carry integer reward vectors with entries in {-1,0,1}.
//!
//! Two equivalence notions are decided by reduction to Q-weighted automata.
//! Expectation equivalence compares the expected total reward of every word;
//! for automata without silent transitions the transition probabilities and
//! rewards are combined into a doubled automaton whose value on a word is
//! exactly the expected reward, and for automata with silent transitions the
//! expectation is computed through an exact first-moment (jet) automaton
//! after eliminating the silent steps with a matrix star.
//!
//! Distribution equivalence treats rewards as exponents of formal variables,
//! turning each automaton into one weighted by Laurent monomials; the
//! automata are compared after substituting random integers for the
//! variables, which is sound (a failed identity at a point fails as an
//! identity) and misses a difference with probability at most 1/2 per trial.

use crate::matrix::{LinalgError, Orientation, QMatrix, QVector};
use crate::rational::Q;
use crate::rng::RandomSource;
use crate::wfa::{equivalent_det, Alphabet, EquivResult, Verdict, WfaError, Witness, Word, WFA};
use crate::randomized::{equivalent_randomized, Method};
use num_traits::{One, Signed, Zero};
use std::collections::BTreeMap;
use thiserror::Error;

/// Reserved alphabet label for the silent symbol.
pub const EPSILON_LABEL: &str = "eps";

/// Default path budget for the enumeration oracles.
pub const DEFAULT_PATH_BUDGET: u128 = 1_000_000;

/// Redraw attempts per trial when a substitution point makes the silent-step
/// star singular.
const SUBSTITUTION_REDRAWS: u32 = 16;

#[derive(Debug, Error, PartialEq, Eq, Clone)]
pub enum PraError {
    #[error("transition matrix for `{symbol}` has a negative entry at ({row},{col})")]
    NegativeProbability { symbol: String, row: usize, col: usize },
    #[error("row {row} of transition matrix for `{symbol}` sums to {sum}, above 1")]
    RowSumTooLarge { symbol: String, row: usize, sum: String },
    #[error("initial vector sums to {sum}, expected exactly 1")]
    InitNotStochastic { sum: String },
    #[error("initial vector entry {index} is negative")]
    InitNegative { index: usize },
    #[error("final vector entry {index} is outside [0,1]")]
    FinalOutOfRange { index: usize },
    #[error("reward on `{symbol}` transition ({from},{to}) has a component outside -1..=1")]
    RewardOutOfRange { symbol: String, from: usize, to: usize },
    #[error("reward vector on `{symbol}` transition ({from},{to}) has length {got}, expected {expected}")]
    RewardWrongLength { symbol: String, from: usize, to: usize, got: usize, expected: usize },
    #[error("operation requires an automaton without the silent symbol `eps`")]
    EpsilonPresent,
    #[error("silent transitions admit a weight-one cycle through states {states:?}")]
    EpsilonRecurrent { states: Vec<usize> },
    #[error("automata disagree in {what}")]
    ShapeMismatch { what: &'static str },
    #[error("substitution made the silent-step star singular {0} times in a row")]
    SubstitutionSingular(u32),
    #[error("enumerating {required} paths exceeds budget {budget}")]
    BudgetExceeded { required: u128, budget: u128 },
    #[error("reward index {index} out of range for {count} reward types")]
    RewardIndexOutOfRange { index: usize, count: usize },
    #[error(transparent)]
    Wfa(#[from] WfaError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Reward matrix for one symbol: a vector in {-1,0,1}^s per transition,
/// stored sparsely; absent entries are all-zero vectors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RewardMat {
    n: usize,
    s: usize,
    entries: BTreeMap<(usize, usize), Vec<i8>>,
}

impl RewardMat {
    pub fn zero(n: usize, s: usize) -> Self {
        RewardMat {
            n,
            s,
            entries: BTreeMap::new(),
        }
    }

    pub fn set(&mut self, i: usize, j: usize, reward: Vec<i8>) {
        assert!(i < self.n && j < self.n);
        assert_eq!(reward.len(), self.s);
        if reward.iter().all(|&r| r == 0) {
            self.entries.remove(&(i, j));
        } else {
            self.entries.insert((i, j), reward);
        }
    }

    pub fn get(&self, i: usize, j: usize) -> Vec<i8> {
        self.entries
            .get(&(i, j))
            .cloned()
            .unwrap_or_else(|| vec![0; self.s])
    }

    pub fn component(&self, i: usize, j: usize, k: usize) -> i8 {
        self.entries.get(&(i, j)).map(|v| v[k]).unwrap_or(0)
    }

    pub fn iter_nonzero(&self) -> impl Iterator<Item = (usize, usize, &Vec<i8>)> {
        self.entries.iter().map(|((i, j), v)| (*i, *j, v))
    }
}

/// Probabilistic reward automaton.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PRA {
    n: usize,
    s: usize,
    alphabet: Alphabet,
    epsilon: Option<usize>,
    trans: Vec<QMatrix>,
    rewards: Vec<RewardMat>,
    init: QVector,
    final_: QVector,
}

impl PRA {
    pub fn new(
        alphabet: Alphabet,
        s: usize,
        trans: Vec<QMatrix>,
        rewards: Vec<RewardMat>,
        init: QVector,
        final_: QVector,
    ) -> Result<Self, PraError> {
        let n = init.len();
        if trans.len() != alphabet.len() || rewards.len() != alphabet.len() {
            return Err(PraError::ShapeMismatch {
                what: "symbol count of transition or reward maps",
            });
        }
        let base = WFA::new(alphabet.clone(), trans, init, final_)?;
        let (alphabet, trans, init, final_) = (
            base.alphabet().clone(),
            (0..base.alphabet().len())
                .map(|i| base.transition(i).clone())
                .collect::<Vec<_>>(),
            base.init().clone(),
            base.final_vector().clone(),
        );
        for (sym, m) in trans.iter().enumerate() {
            for (i, j, v) in m.iter_nonzero() {
                if v.is_negative() {
                    return Err(PraError::NegativeProbability {
                        symbol: alphabet.label(sym).to_string(),
                        row: i,
                        col: j,
                    });
                }
            }
            for row in 0..n {
                let sum: Q = m.row(row).iter_nonzero().map(|(_, v)| v.clone()).sum();
                if sum > Q::one() {
                    return Err(PraError::RowSumTooLarge {
                        symbol: alphabet.label(sym).to_string(),
                        row,
                        sum: sum.to_string(),
                    });
                }
            }
        }
        for (i, v) in init.iter_nonzero() {
            if v.is_negative() {
                return Err(PraError::InitNegative { index: i });
            }
        }
        let init_sum: Q = init.iter_nonzero().map(|(_, v)| v.clone()).sum();
        if init_sum != Q::one() {
            return Err(PraError::InitNotStochastic {
                sum: init_sum.to_string(),
            });
        }
        for (i, v) in final_.iter_nonzero() {
            if v.is_negative() || v > &Q::one() {
                return Err(PraError::FinalOutOfRange { index: i });
            }
        }
        for (sym, r) in rewards.iter().enumerate() {
            if r.n != n || r.s != s {
                return Err(PraError::ShapeMismatch {
                    what: "reward matrix dimensions",
                });
            }
            for (i, j, vec) in r.iter_nonzero() {
                if vec.len() != s {
                    return Err(PraError::RewardWrongLength {
                        symbol: alphabet.label(sym).to_string(),
                        from: i,
                        to: j,
                        got: vec.len(),
                        expected: s,
                    });
                }
                if vec.iter().any(|&x| !(-1..=1).contains(&x)) {
                    return Err(PraError::RewardOutOfRange {
                        symbol: alphabet.label(sym).to_string(),
                        from: i,
                        to: j,
                    });
                }
            }
        }
        let epsilon = alphabet.id_of(EPSILON_LABEL);
        Ok(PRA {
            n,
            s,
            alphabet,
            epsilon,
            trans,
            rewards,
            init,
            final_,
        })
    }

    pub fn states(&self) -> usize {
        self.n
    }

    pub fn reward_types(&self) -> usize {
        self.s
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn epsilon(&self) -> Option<usize> {
        self.epsilon
    }

    pub fn transition(&self, symbol: usize) -> &QMatrix {
        &self.trans[symbol]
    }

    pub fn rewards(&self, symbol: usize) -> &RewardMat {
        &self.rewards[symbol]
    }

    pub fn init(&self) -> &QVector {
        &self.init
    }

    pub fn final_vector(&self) -> &QVector {
        &self.final_
    }

    /// Reward component `k` of symbol `symbol` as a rational matrix.
    fn reward_component(&self, symbol: usize, k: usize) -> QMatrix {
        let mut m = QMatrix::zero(self.n, self.n);
        for (i, j, vec) in self.rewards[symbol].iter_nonzero() {
            let r = vec[k];
            if r != 0 {
                m.set(i, j, Q::from_integer(r.into()));
            }
        }
        m
    }

    fn require_epsilon_free(&self) -> Result<(), PraError> {
        if self.epsilon.is_some() {
            return Err(PraError::EpsilonPresent);
        }
        Ok(())
    }

    fn check_budget(&self, word_len: usize, budget: u128) -> Result<(), PraError> {
        let mut required: u128 = 1;
        for _ in 0..=word_len {
            required = required.saturating_mul(self.n as u128);
        }
        if required > budget {
            return Err(PraError::BudgetExceeded { required, budget });
        }
        Ok(())
    }
}

/// Exact expected total reward of a word, one value per reward type,
/// computed by enumerating all state paths. Ground truth for tests; the
/// automaton must not contain the silent symbol.
pub fn expected_reward_oracle(a: &PRA, w: &[usize]) -> Result<Vec<Q>, PraError> {
    expected_reward_oracle_with_budget(a, w, DEFAULT_PATH_BUDGET)
}

pub fn expected_reward_oracle_with_budget(
    a: &PRA,
    w: &[usize],
    budget: u128,
) -> Result<Vec<Q>, PraError> {
    a.require_epsilon_free()?;
    a.check_budget(w.len(), budget)?;
    let mut totals = vec![Q::zero(); a.s];
    walk_paths(a, w, &mut |prob, reward| {
        for (t, r) in totals.iter_mut().zip(reward) {
            *t += prob * Q::from_integer((*r).into());
        }
    });
    Ok(totals)
}

/// Exact distribution of the total reward vector of a word over all paths.
pub fn reward_distribution_oracle(
    a: &PRA,
    w: &[usize],
) -> Result<BTreeMap<Vec<i64>, Q>, PraError> {
    reward_distribution_oracle_with_budget(a, w, DEFAULT_PATH_BUDGET)
}

pub fn reward_distribution_oracle_with_budget(
    a: &PRA,
    w: &[usize],
    budget: u128,
) -> Result<BTreeMap<Vec<i64>, Q>, PraError> {
    a.require_epsilon_free()?;
    a.check_budget(w.len(), budget)?;
    let mut dist: BTreeMap<Vec<i64>, Q> = BTreeMap::new();
    walk_paths(a, w, &mut |prob, reward| {
        let entry = dist.entry(reward.to_vec()).or_insert_with(Q::zero);
        *entry += prob;
    });
    dist.retain(|_, p| !p.is_zero());
    Ok(dist)
}

/// Visits every path over `w`, calling `visit(probability, total_reward)`
/// for paths of nonzero probability.
fn walk_paths(a: &PRA, w: &[usize], visit: &mut impl FnMut(&Q, &[i64])) {
    fn rec(
        a: &PRA,
        w: &[usize],
        pos: usize,
        state: usize,
        prob: Q,
        reward: &mut Vec<i64>,
        visit: &mut impl FnMut(&Q, &[i64]),
    ) {
        if pos == w.len() {
            let p = &prob * &a.final_.get(state);
            if !p.is_zero() {
                visit(&p, reward);
            }
            return;
        }
        let symbol = w[pos];
        for next in 0..a.n {
            let step = a.trans[symbol].get(state, next);
            if step.is_zero() {
                continue;
            }
            let r = a.rewards[symbol].get(state, next);
            for (acc, delta) in reward.iter_mut().zip(&r) {
                *acc += *delta as i64;
            }
            rec(a, w, pos + 1, next, &prob * &step, reward, visit);
            for (acc, delta) in reward.iter_mut().zip(&r) {
                *acc -= *delta as i64;
            }
        }
    }
    let mut reward = vec![0i64; a.s];
    for (state, p) in a.init.iter_nonzero() {
        rec(a, w, 0, state, p.clone(), &mut reward, visit);
    }
}

/// Reduces one reward component to a Q-weighted automaton of twice the
/// size whose value on every word equals the expected reward: probabilities
/// ride on a doubled state space and rewards are injected through a
/// nilpotent block, so exactly one reward factor is picked up per path.
pub fn expectation_reduce(a: &PRA, reward_index: usize) -> Result<WFA, PraError> {
    a.require_epsilon_free()?;
    if reward_index >= a.s {
        return Err(PraError::RewardIndexOutOfRange {
            index: reward_index,
            count: a.s,
        });
    }
    let pick_first = QVector::from_dense(vec![Q::one(), Q::zero()], Orientation::Row);
    let pick_second = QVector::from_dense(vec![Q::zero(), Q::one()], Orientation::Col);
    let mut shift = QMatrix::zero(2, 2);
    shift.set(0, 1, Q::one());
    let i2 = QMatrix::identity(2);

    let init = a.init.kron(&pick_first);
    let final_ = a.final_.kron(&pick_second);
    let mut trans = Vec::with_capacity(a.alphabet.len());
    for symbol in 0..a.alphabet.len() {
        let m = &a.trans[symbol];
        let weighted = m.hadamard(&a.reward_component(symbol, reward_index))?;
        trans.push(m.kron(&i2).add(&weighted.kron(&shift)));
    }
    Ok(WFA::new(a.alphabet.clone(), trans, init, final_)?)
}

/// Verifies that the silent transition matrix cannot sustain weight: every
/// strongly connected component of its support graph either has no cycle or
/// reaches a state whose silent row sum is below one. Equivalent to the
/// spectral radius being strictly below one for a sub-stochastic matrix.
/// Automata without the silent symbol pass trivially.
pub fn epsilon_check(a: &PRA) -> Result<(), PraError> {
    let Some(eps) = a.epsilon else {
        return Ok(());
    };
    let m = &a.trans[eps];
    let n = a.n;
    let adj: Vec<Vec<usize>> = (0..n)
        .map(|i| {
            m.row(i)
                .iter_nonzero()
                .map(|(j, _)| j)
                .collect::<Vec<_>>()
        })
        .collect();
    let deficit: Vec<bool> = (0..n)
        .map(|i| {
            let sum: Q = m.row(i).iter_nonzero().map(|(_, v)| v.clone()).sum();
            sum < Q::one()
        })
        .collect();
    // Backward reachability from deficit states.
    let mut radj = vec![Vec::new(); n];
    for (i, out) in adj.iter().enumerate() {
        for &j in out {
            radj[j].push(i);
        }
    }
    let mut reaches_deficit = deficit.clone();
    let mut stack: Vec<usize> = (0..n).filter(|&i| deficit[i]).collect();
    while let Some(j) = stack.pop() {
        for &i in &radj[j] {
            if !reaches_deficit[i] {
                reaches_deficit[i] = true;
                stack.push(i);
            }
        }
    }
    for component in strongly_connected_components(&adj) {
        let has_cycle = component.len() > 1
            || adj[component[0]].contains(&component[0]);
        if !has_cycle {
            continue;
        }
        if component.iter().any(|&i| reaches_deficit[i]) {
            continue;
        }
        let mut states = component;
        states.sort_unstable();
        return Err(PraError::EpsilonRecurrent { states });
    }
    Ok(())
}

/// Kosaraju's algorithm; components are returned in some deterministic order.
fn strongly_connected_components(adj: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let n = adj.len();
    let mut order = Vec::with_capacity(n);
    let mut seen = vec![false; n];
    for start in 0..n {
        if seen[start] {
            continue;
        }
        // Iterative DFS recording finish order.
        let mut stack = vec![(start, 0usize)];
        seen[start] = true;
        while let Some((node, idx)) = stack.pop() {
            if idx < adj[node].len() {
                stack.push((node, idx + 1));
                let next = adj[node][idx];
                if !seen[next] {
                    seen[next] = true;
                    stack.push((next, 0));
                }
            } else {
                order.push(node);
            }
        }
    }
    let mut radj = vec![Vec::new(); n];
    for (i, out) in adj.iter().enumerate() {
        for &j in out {
            radj[j].push(i);
        }
    }
    let mut assigned = vec![false; n];
    let mut components = Vec::new();
    for &start in order.iter().rev() {
        if assigned[start] {
            continue;
        }
        let mut component = Vec::new();
        let mut stack = vec![start];
        assigned[start] = true;
        while let Some(node) = stack.pop() {
            component.push(node);
            for &next in &radj[node] {
                if !assigned[next] {
                    assigned[next] = true;
                    stack.push(next);
                }
            }
        }
        components.push(component);
    }
    components
}

/// Monomial-weighted transition matrix: each nonzero entry is a coefficient
/// together with an integer exponent per reward variable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MonomialMatrix {
    pub n: usize,
    pub s: usize,
    entries: BTreeMap<(usize, usize), (Q, Vec<i64>)>,
}

impl MonomialMatrix {
    pub fn get(&self, i: usize, j: usize) -> Option<&(Q, Vec<i64>)> {
        self.entries.get(&(i, j))
    }

    pub fn iter_nonzero(&self) -> impl Iterator<Item = (usize, usize, &(Q, Vec<i64>))> {
        self.entries.iter().map(|((i, j), v)| (*i, *j, v))
    }

    /// Evaluates every entry at the given positive rational point.
    pub fn substitute(&self, point: &[Q]) -> QMatrix {
        let mut m = QMatrix::zero(self.n, self.n);
        for ((i, j), (coeff, exps)) in &self.entries {
            let mut v = coeff.clone();
            for (r, &e) in point.iter().zip(exps) {
                match e.cmp(&0) {
                    std::cmp::Ordering::Equal => {}
                    std::cmp::Ordering::Greater => {
                        for _ in 0..e {
                            v *= r;
                        }
                    }
                    std::cmp::Ordering::Less => {
                        for _ in 0..(-e) {
                            v /= r;
                        }
                    }
                }
            }
            m.set(*i, *j, v);
        }
        m
    }
}

/// The monomial-weighted view of the automaton: transition probabilities
/// become coefficients and rewards become exponents, one matrix per symbol.
pub fn laurent_automaton(a: &PRA) -> Vec<MonomialMatrix> {
    (0..a.alphabet.len())
        .map(|symbol| {
            let mut entries = BTreeMap::new();
            for (i, j, v) in a.trans[symbol].iter_nonzero() {
                let exps: Vec<i64> = a.rewards[symbol]
                    .get(i, j)
                    .iter()
                    .map(|&r| r as i64)
                    .collect();
                entries.insert((i, j), (v.clone(), exps));
            }
            MonomialMatrix {
                n: a.n,
                s: a.s,
                entries,
            }
        })
        .collect()
}

/// The alphabet with the silent symbol removed, along with the map from
/// folded ids back to original ids.
fn folded_alphabet(a: &PRA) -> (Alphabet, Vec<usize>) {
    match a.epsilon {
        None => (a.alphabet.clone(), (0..a.alphabet.len()).collect()),
        Some(eps) => {
            let mut labels = Vec::new();
            let mut back = Vec::new();
            for (id, label) in a.alphabet.labels().iter().enumerate() {
                if id != eps {
                    labels.push(label.clone());
                    back.push(id);
                }
            }
            (Alphabet::new(labels).expect("labels stay distinct"), back)
        }
    }
}

/// Folds the silent transitions of a substituted monomial automaton into a
/// plain weighted automaton: with E the star of the substituted silent
/// matrix, the folded automaton is (init*E, σ -> M(σ)*E, final), which
/// telescopes to the interleaved-star product semantics.
fn fold_substituted(a: &PRA, monomials: &[MonomialMatrix], point: &[Q]) -> Result<WFA, PraError> {
    let (alphabet, back) = folded_alphabet(a);
    let eliminator = match a.epsilon {
        None => QMatrix::identity(a.n),
        Some(eps) => monomials[eps].substitute(point).star()?,
    };
    let trans: Vec<QMatrix> = back
        .iter()
        .map(|&orig| monomials[orig].substitute(point).mul(&eliminator))
        .collect();
    let init = a.init.mul_matrix(&eliminator);
    Ok(WFA::new(alphabet, trans, init, a.final_.clone())?)
}

/// First-moment automaton for one reward component, valid with or without
/// silent transitions: states are doubled into (value, derivative) jets,
/// silent steps are folded by the star of the jet matrix, and the value of a
/// word is exactly its expected reward for that component.
pub fn first_moment_automaton(a: &PRA, reward_index: usize) -> Result<WFA, PraError> {
    if reward_index >= a.s {
        return Err(PraError::RewardIndexOutOfRange {
            index: reward_index,
            count: a.s,
        });
    }
    if a.epsilon.is_some() {
        epsilon_check(a)?;
    }
    let n = a.n;
    let jet = |symbol: usize| -> Result<QMatrix, PraError> {
        let m = &a.trans[symbol];
        let d = m.hadamard(&a.reward_component(symbol, reward_index))?;
        let mut b = QMatrix::zero(2 * n, 2 * n);
        for (i, j, v) in m.iter_nonzero() {
            b.set(i, j, v.clone());
            b.set(n + i, n + j, v.clone());
        }
        for (i, j, v) in d.iter_nonzero() {
            b.set(i, n + j, v.clone());
        }
        Ok(b)
    };
    let eliminator = match a.epsilon {
        None => QMatrix::identity(2 * n),
        Some(eps) => jet(eps)?.star()?,
    };
    let (alphabet, back) = folded_alphabet(a);
    let trans = back
        .iter()
        .map(|&orig| Ok(jet(orig)?.mul(&eliminator)))
        .collect::<Result<Vec<_>, PraError>>()?;
    let mut init = QVector::zero(2 * n, Orientation::Row);
    for (i, v) in a.init.iter_nonzero() {
        init.set(i, v.clone());
    }
    let init = init.mul_matrix(&eliminator);
    let mut final_ = QVector::zero(2 * n, Orientation::Col);
    for (i, v) in a.final_.iter_nonzero() {
        final_.set(n + i, v.clone());
    }
    Ok(WFA::new(alphabet, trans, init, final_)?)
}

/// Exact expected reward of a word for one component, silent transitions
/// included; the word is given over the folded (silent-free) alphabet of
/// [`first_moment_automaton`].
pub fn expected_reward_eps(a: &PRA, w: &[usize], reward_index: usize) -> Result<Q, PraError> {
    Ok(first_moment_automaton(a, reward_index)?.evaluate(w)?)
}

/// Acceptance probability of a word, silent transitions folded; the word is
/// over the folded alphabet.
pub fn acceptance_value(a: &PRA, w: &[usize]) -> Result<Q, PraError> {
    if a.epsilon.is_some() {
        epsilon_check(a)?;
    }
    let monomials = laurent_automaton(a);
    let ones = vec![Q::one(); a.s];
    let folded = fold_substituted(a, &monomials, &ones)?;
    Ok(folded.evaluate(w)?)
}

/// How an equivalence of reduced weighted automata is decided.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckMethod {
    Deterministic,
    Randomized(Method),
}

/// Outcome of a componentwise expectation-equivalence check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExpectationOutcome {
    /// Reward component the verdict came from, for inequivalence.
    pub component: Option<usize>,
    pub result: EquivResult,
}

/// Expectation equivalence: the two automata must give every word the same
/// expected reward, checked per reward component on the reduced weighted
/// automata. Automata with silent transitions are compared through their
/// first-moment automata.
pub fn expectation_equivalent(
    a: &PRA,
    b: &PRA,
    method: CheckMethod,
    rng: &mut RandomSource,
) -> Result<ExpectationOutcome, PraError> {
    if a.alphabet != b.alphabet {
        return Err(PraError::ShapeMismatch { what: "alphabets" });
    }
    if a.s != b.s {
        return Err(PraError::ShapeMismatch {
            what: "reward type counts",
        });
    }
    let silent = a.epsilon.is_some();
    let mut residual_error = Q::zero();
    for component in 0..a.s {
        let (left, right) = if silent {
            (
                first_moment_automaton(a, component)?,
                first_moment_automaton(b, component)?,
            )
        } else {
            (
                expectation_reduce(a, component)?,
                expectation_reduce(b, component)?,
            )
        };
        let result = match method {
            CheckMethod::Deterministic => equivalent_det(&left, &right)?,
            CheckMethod::Randomized(m) => {
                equivalent_randomized(&left, &right, m, &mut rng.derive(component as u64))?
            }
        };
        match result.verdict {
            Verdict::Inequivalent => {
                return Ok(ExpectationOutcome {
                    component: Some(component),
                    result,
                });
            }
            Verdict::ProbablyEquivalent { ref confidence } => {
                residual_error += Q::one() - confidence;
            }
            Verdict::Equivalent => {}
        }
    }
    let result = if residual_error.is_zero() {
        EquivResult::equivalent()
    } else {
        let confidence = (Q::one() - residual_error).max(Q::zero());
        EquivResult::probably_equivalent(confidence)
    };
    Ok(ExpectationOutcome {
        component: None,
        result,
    })
}

/// Distribution equivalence: every word must induce identical reward
/// distributions. Decided by drawing a random integer point for the reward
/// variables from a grid of twice the degree bound (sn+1)n, substituting it
/// into both monomial automata, folding silent steps, and comparing the
/// resulting weighted automata exactly. A difference found at any point is
/// definitive; agreement at `trials` independent points bounds the error by
/// 2^-trials. Witness words are over the silent-free alphabet, with ids
/// mapped back to the original alphabet, and witness values are the two
/// substituted automaton values for the drawn point.
pub fn distribution_equivalent(
    a: &PRA,
    b: &PRA,
    trials: u32,
    rng: &mut RandomSource,
) -> Result<EquivResult, PraError> {
    assert!(trials >= 1, "at least one trial required");
    if a.alphabet != b.alphabet {
        return Err(PraError::ShapeMismatch { what: "alphabets" });
    }
    if a.s != b.s {
        return Err(PraError::ShapeMismatch {
            what: "reward type counts",
        });
    }
    epsilon_check(a)?;
    epsilon_check(b)?;
    let monomials_a = laurent_automaton(a);
    let monomials_b = laurent_automaton(b);
    let n = (a.n + b.n) as u64;
    let s = a.s as u64;
    let degree_bound = (s * n + 1) * n;
    let grid = 2 * degree_bound;
    let (_, back) = folded_alphabet(a);
    for trial in 0..trials {
        let mut trial_rng = rng.derive(trial as u64);
        let mut folded = None;
        for _ in 0..SUBSTITUTION_REDRAWS {
            let point: Vec<Q> = (0..a.s)
                .map(|_| Q::from_integer(trial_rng.int_in_1_to(grid.max(1)).into()))
                .collect();
            let fa = fold_substituted(a, &monomials_a, &point);
            let fb = fold_substituted(b, &monomials_b, &point);
            match (fa, fb) {
                (Ok(fa), Ok(fb)) => {
                    folded = Some((fa, fb));
                    break;
                }
                // The star was singular at this unlucky point; the silent
                // matrices themselves passed epsilon_check, so redraw.
                (Err(PraError::Linalg(LinalgError::Singular)), _)
                | (_, Err(PraError::Linalg(LinalgError::Singular))) => continue,
                (Err(e), _) | (_, Err(e)) => return Err(e),
            }
        }
        let Some((fa, fb)) = folded else {
            return Err(PraError::SubstitutionSingular(SUBSTITUTION_REDRAWS));
        };
        let result = equivalent_det(&fa, &fb)?;
        if let Verdict::Inequivalent = result.verdict {
            let witness = result.witness.expect("deterministic witness");
            let word: Word = witness.word.iter().map(|&id| back[id]).collect();
            return Ok(EquivResult::inequivalent(Witness {
                word,
                left: witness.left,
                right: witness.right,
            }));
        }
    }
    let confidence =
        Q::one() - Q::new(1.into(), num_bigint::BigInt::from(2).pow(trials));
    Ok(EquivResult::probably_equivalent(confidence))
}
