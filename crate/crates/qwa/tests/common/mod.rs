//! Seeded corpus generators shared by the integration suites. Everything is
//! driven by the crate's own deterministic source so corpora are identical
//! across platforms and runs.

#![allow(dead_code)]

use qwa::matrix::{Orientation, QMatrix, QVector};
use qwa::pra::{RewardMat, PRA};
use qwa::rational::{qi, qr, Q};
use qwa::rng::RandomSource;
use qwa::vpa::{VisiblyAlphabet, WVPA};
use qwa::wfa::{Alphabet, WFA};

/// Rational with numerator in -2..=2 and denominator 1 or 2.
pub fn random_weight(rng: &mut RandomSource) -> Q {
    let p = rng.below(5) as i64 - 2;
    let q = rng.below(2) as i64 + 1;
    qr(p, q)
}

/// Strictly positive rational with numerator 1..=2, denominator 1..=3.
pub fn random_positive_weight(rng: &mut RandomSource) -> Q {
    qr(rng.below(2) as i64 + 1, rng.below(3) as i64 + 1)
}

pub fn alphabet_of(size: usize) -> Alphabet {
    let names = ["a", "b", "c", "d"];
    Alphabet::new(names[..size].iter().map(|s| s.to_string()).collect()).unwrap()
}

/// Random automaton with up to 4 states over up to 3 symbols; roughly 60%
/// of matrix entries are nonzero.
pub fn random_wfa(rng: &mut RandomSource) -> WFA {
    let n = rng.below(4) as usize + 1;
    let symbols = rng.below(3) as usize + 1;
    random_wfa_sized(rng, n, symbols)
}

pub fn random_wfa_sized(rng: &mut RandomSource, n: usize, symbols: usize) -> WFA {
    let alphabet = alphabet_of(symbols);
    let trans = (0..symbols)
        .map(|_| {
            let mut m = QMatrix::zero(n, n);
            for i in 0..n {
                for j in 0..n {
                    if rng.below(10) < 6 {
                        m.set(i, j, random_weight(rng));
                    }
                }
            }
            m
        })
        .collect();
    let dense_vec = |rng: &mut RandomSource, orientation| {
        QVector::from_dense((0..n).map(|_| random_weight(rng)).collect(), orientation)
    };
    let init = dense_vec(rng, Orientation::Row);
    let final_ = dense_vec(rng, Orientation::Col);
    WFA::new(alphabet, trans, init, final_).unwrap()
}

/// Copy of `a` with states renamed by a random permutation; equivalent to
/// `a` on every word.
pub fn permuted_copy(a: &WFA, rng: &mut RandomSource) -> WFA {
    let n = a.states();
    let mut perm: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = rng.below(i as u64 + 1) as usize;
        perm.swap(i, j);
    }
    let trans = (0..a.alphabet().len())
        .map(|s| {
            let m = a.transition(s);
            let mut out = QMatrix::zero(n, n);
            for (i, j, v) in m.iter_nonzero() {
                out.set(perm[i], perm[j], v.clone());
            }
            out
        })
        .collect();
    let mut init = QVector::zero(n, Orientation::Row);
    for (i, v) in a.init().iter_nonzero() {
        init.set(perm[i], v.clone());
    }
    let mut final_ = QVector::zero(n, Orientation::Col);
    for (i, v) in a.final_vector().iter_nonzero() {
        final_.set(perm[i], v.clone());
    }
    WFA::new(a.alphabet().clone(), trans, init, final_).unwrap()
}

/// Doubles every state, splitting mass evenly, preserving all word values.
pub fn block_duplicate(a: &WFA) -> WFA {
    let n = a.states();
    let half = qr(1, 2);
    let trans = (0..a.alphabet().len())
        .map(|s| {
            let m = a.transition(s);
            let mut big = QMatrix::zero(2 * n, 2 * n);
            for (i, j, v) in m.iter_nonzero() {
                for (bi, bj) in [(0, 0), (0, n), (n, 0), (n, n)] {
                    big.set(i + bi, j + bj, v * &half);
                }
            }
            big
        })
        .collect();
    let mut init = QVector::zero(2 * n, Orientation::Row);
    for (i, v) in a.init().iter_nonzero() {
        init.set(i, v.clone());
        init.set(i + n, v.clone());
    }
    let mut final_ = QVector::zero(2 * n, Orientation::Col);
    for (i, v) in a.final_vector().iter_nonzero() {
        final_.set(i, v * &half);
        final_.set(i + n, v * &half);
    }
    WFA::new(a.alphabet().clone(), trans, init, final_).unwrap()
}

/// All words over `symbols` symbols with length at most `maxlen`.
pub fn words_up_to(symbols: usize, maxlen: usize) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = vec![Vec::new()];
    let mut frontier: Vec<Vec<usize>> = vec![Vec::new()];
    for _ in 0..maxlen {
        let mut next = Vec::new();
        for w in &frontier {
            for s in 0..symbols {
                let mut v = w.clone();
                v.push(s);
                next.push(v);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

/// Random silent-free reward automaton: up to 3 states, up to 2 symbols,
/// `s` reward types, probabilities in quarters.
pub fn random_pra(rng: &mut RandomSource, s: usize) -> PRA {
    let n = rng.below(3) as usize + 1;
    let symbols = rng.below(2) as usize + 1;
    let alphabet = alphabet_of(symbols);
    let mut trans = Vec::new();
    let mut rewards = Vec::new();
    for _ in 0..symbols {
        let mut m = QMatrix::zero(n, n);
        let mut r = RewardMat::zero(n, s);
        for i in 0..n {
            let mut quarters_left = 4u64;
            for j in 0..n {
                if quarters_left == 0 {
                    break;
                }
                let take = rng.below(quarters_left + 1);
                quarters_left -= take;
                if take > 0 {
                    m.set(i, j, qr(take as i64, 4));
                    let vec: Vec<i8> =
                        (0..s).map(|_| rng.below(3) as i8 - 1).collect();
                    r.set(i, j, vec);
                }
            }
        }
        trans.push(m);
        rewards.push(r);
    }
    // Stochastic initial vector in quarters over the first states.
    let mut init = vec![Q::from_integer(0.into()); n];
    let mut left = 4u64;
    for (idx, slot) in init.iter_mut().enumerate() {
        let take = if idx + 1 == n {
            left
        } else {
            rng.below(left + 1)
        };
        left -= take;
        *slot = qr(take as i64, 4);
    }
    let final_ = (0..n).map(|_| qr(rng.below(5) as i64, 4)).collect();
    PRA::new(
        alphabet,
        s,
        trans,
        rewards,
        QVector::from_dense(init, Orientation::Row),
        QVector::from_dense(final_, Orientation::Col),
    )
    .unwrap()
}

/// Random pushdown automaton with one call, one return, one internal
/// symbol, up to `max_n` states and up to `max_stack` stack symbols.
/// Positive mode keeps every weight strictly positive so any single-entry
/// perturbation changes some word value.
pub fn random_wvpa(
    rng: &mut RandomSource,
    max_n: usize,
    max_stack: usize,
    positive: bool,
) -> WVPA {
    let n = rng.below(max_n as u64) as usize + 1;
    let stack_size = rng.below(max_stack as u64) as usize + 1;
    let alphabet = VisiblyAlphabet::from_labels(&["c"], &["r"], &["i"]);
    let stack: Vec<String> = (0..stack_size).map(|g| format!("g{g}")).collect();
    let weight = |rng: &mut RandomSource| {
        if positive {
            random_positive_weight(rng)
        } else {
            random_weight(rng)
        }
    };
    let matrix = |rng: &mut RandomSource| {
        let mut m = QMatrix::zero(n, n);
        for i in 0..n {
            for j in 0..n {
                if positive || rng.below(10) < 6 {
                    m.set(i, j, weight(rng));
                }
            }
        }
        m
    };
    let m_call = vec![(0..stack_size).map(|_| matrix(rng)).collect::<Vec<_>>()];
    let m_ret = vec![(0..stack_size).map(|_| matrix(rng)).collect::<Vec<_>>()];
    let m_int = vec![matrix(rng)];
    let vec_of = |rng: &mut RandomSource, orientation| {
        QVector::from_dense(
            (0..n)
                .map(|_| {
                    if positive {
                        random_positive_weight(rng)
                    } else {
                        random_weight(rng)
                    }
                })
                .collect(),
            orientation,
        )
    };
    let init = vec_of(rng, Orientation::Row);
    let final_ = vec_of(rng, Orientation::Col);
    WVPA::new(alphabet, stack, m_call, m_ret, m_int, init, final_).unwrap()
}

/// Random well-matched word over the {c, r, i} alphabet (ids 0, 1, 2) with
/// at most `budget` symbols.
pub fn random_well_matched(rng: &mut RandomSource, budget: usize) -> Vec<usize> {
    fn items(rng: &mut RandomSource, budget: &mut usize, out: &mut Vec<usize>, depth: usize) {
        loop {
            if *budget == 0 || rng.below(3) == 0 {
                return;
            }
            if *budget >= 2 && depth < 4 && rng.below(2) == 0 {
                *budget -= 2;
                out.push(0);
                items(rng, budget, out, depth + 1);
                out.push(1);
            } else {
                *budget -= 1;
                out.push(2);
            }
        }
    }
    let mut out = Vec::new();
    let mut budget = budget;
    items(rng, &mut budget, &mut out, 0);
    out
}

/// Random circuit over {add, mul} and constants in the alternating layered
/// shape the pushdown encoding needs natively: adds at even levels, muls at
/// odd levels, constants at level `depth` (rounded to odd when above zero).
/// At most one level has width two, keeping the gate count at most depth+3,
/// so the encoded automata stay small enough for the level-n² recurrence.
pub fn random_normal_circuit(rng: &mut RandomSource, depth: usize) -> qwa::circuit::Circuit {
    use qwa::circuit::Gate;
    let depth = if depth == 0 {
        0
    } else if depth % 2 == 1 {
        depth
    } else {
        depth + 1
    };
    let mut gates: Vec<Gate> = Vec::new();
    let wide_level = if (1..=3).contains(&depth) {
        Some(1 + rng.below(depth as u64) as usize)
    } else {
        None
    };
    let width_at = |level: usize| if wide_level == Some(level) { 2 } else { 1 };
    let mut layer: Vec<usize> = (0..width_at(depth))
        .map(|_| {
            let g = if rng.below(4) == 0 {
                Gate::Const0
            } else {
                Gate::Const1
            };
            gates.push(g);
            gates.len() - 1
        })
        .collect();
    for level in (0..depth).rev() {
        let next: Vec<usize> = (0..width_at(level))
            .map(|_| {
                let a = layer[rng.below(layer.len() as u64) as usize];
                let b = layer[rng.below(layer.len() as u64) as usize];
                let g = if level % 2 == 0 {
                    Gate::Add(a, b)
                } else {
                    Gate::Mul(a, b)
                };
                gates.push(g);
                gates.len() - 1
            })
            .collect();
        layer = next;
    }
    qwa::circuit::Circuit::new(gates, layer[0]).unwrap()
}

/// Value-preserving rewrite that keeps the depth: swaps the operands of
/// every binary gate.
pub fn mirror_circuit(c: &qwa::circuit::Circuit) -> qwa::circuit::Circuit {
    use qwa::circuit::Gate;
    let gates = c
        .gates()
        .iter()
        .map(|g| match *g {
            Gate::Add(a, b) => Gate::Add(b, a),
            Gate::Mul(a, b) => Gate::Mul(b, a),
            Gate::Sub(a, b) => Gate::Sub(a, b),
            other => other,
        })
        .collect();
    qwa::circuit::Circuit::new(gates, c.output()).unwrap()
}

/// Properly nested sanity fixture: simple one-state identity-style WVPA.
pub fn one_state_vpa(call: Q, ret: Q, int: Q) -> WVPA {
    let alphabet = VisiblyAlphabet::from_labels(&["c"], &["r"], &["i"]);
    let mk = |v: Q| {
        let mut m = QMatrix::zero(1, 1);
        m.set(0, 0, v);
        m
    };
    WVPA::new(
        alphabet,
        vec!["g".into()],
        vec![vec![mk(call)]],
        vec![vec![mk(ret)]],
        vec![mk(int)],
        QVector::from_dense(vec![qi(1)], Orientation::Row),
        QVector::from_dense(vec![qi(1)], Orientation::Col),
    )
    .unwrap()
}
