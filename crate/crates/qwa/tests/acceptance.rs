//! Acceptance suite: every criterion runs at its stated threshold and prints
//! one PASS line on success (a failed assertion is the FAIL line).

mod common;

use common::*;
use num_traits::Zero;
use qwa::circuit::acit_equal;
use qwa::matrix::QMatrix;
use qwa::minimize::{
    backward_basis_det_basis, gram_forward, is_minimal, minimize, MinimizeMode,
};
use qwa::pra::{expectation_reduce, expected_reward_oracle};
use qwa::randomized::{
    equivalent_randomized, zero_isolation, zero_sz, Method, ZeroResult,
};
use qwa::rational::{qi, qr};
use qwa::rng::RandomSource;
use qwa::vpa::{
    acit_to_vpa_with_depth, canonical_mass, canonical_word, encoding_depth, vpa_equivalent,
    vpa_evaluate, vpa_product, WVPA,
};
use qwa::wfa::{
    enumerate_oracle, equivalent_det, forward_basis_det, is_zero_det, Verdict, WFA,
};
use std::time::Instant;

/// Fixed certified-nonzero three-state automaton with sign mixing, used by
/// the statistical criteria.
fn nonzero_fixture() -> WFA {
    use qwa::matrix::{Orientation, QVector};
    let mut ma = QMatrix::zero(3, 3);
    ma.set(0, 1, qi(1));
    ma.set(1, 2, qi(1));
    ma.set(2, 2, qi(1));
    let mut mb = QMatrix::zero(3, 3);
    mb.set(0, 1, qi(-1));
    mb.set(1, 2, qi(1));
    mb.set(2, 2, qr(1, 2));
    WFA::new(
        qwa::wfa::Alphabet::from_labels(&["a", "b"]),
        vec![ma, mb],
        QVector::from_dense(vec![qi(1), qi(0), qi(0)], Orientation::Row),
        QVector::from_dense(vec![qi(0), qi(0), qi(1)], Orientation::Col),
    )
    .unwrap()
}

#[test]
fn criterion_01_deterministic_equivalence_matches_enumeration() {
    let started = Instant::now();
    let mut rng = RandomSource::new(0xC1);
    for pair in 0..200u64 {
        let b = random_wfa(&mut rng);
        let c = if pair % 5 == 0 {
            permuted_copy(&b, &mut rng)
        } else {
            let states = rng.below(4) as usize + 1;
            random_wfa_sized(&mut rng, states, b.alphabet().len())
        };
        let verdict = equivalent_det(&b, &c).unwrap();
        let bound = b.states() + c.states();
        let maxlen = bound.saturating_sub(1);
        let left = enumerate_oracle(&b, maxlen).unwrap();
        let right = enumerate_oracle(&c, maxlen).unwrap();
        let oracle_equal = left
            .iter()
            .zip(&right)
            .all(|((wl, vl), (wr, vr))| wl == wr && vl == vr);
        assert_eq!(
            verdict.is_equivalent(),
            oracle_equal,
            "pair {pair} disagrees with enumeration"
        );
        if let Some(w) = &verdict.witness {
            assert_ne!(w.left, w.right);
            assert!(w.word.len() <= maxlen);
        }
    }
    let elapsed = started.elapsed();
    assert!(
        elapsed.as_secs() < 60,
        "criterion 1 exceeded 60s: {elapsed:?}"
    );
    println!(
        "ACCEPTANCE 1 PASS: equivalent_det matches enumeration on 200 pairs in {:?}",
        elapsed
    );
}

#[test]
fn criterion_02_randomized_witnesses_are_sound() {
    let mut rng = RandomSource::new(0xC2);
    // Corpus of certified-inequivalent pairs, small sizes for the
    // polynomial-based method.
    let mut pairs = Vec::new();
    while pairs.len() < 25 {
        let nb = rng.below(2) as usize + 1;
        let b = random_wfa_sized(&mut rng, nb, 2);
        let nc = rng.below(2) as usize + 1;
        let c = random_wfa_sized(&mut rng, nc, 2);
        if !equivalent_det(&b, &c).unwrap().is_equivalent() {
            pairs.push((b, c));
        }
    }
    let mut runs = 0u32;
    let mut witnesses = 0u32;
    for (idx, (b, c)) in pairs.iter().enumerate() {
        let bound = b.states() + c.states() - 1;
        for seed in 0..14u64 {
            let seed = seed + 100 * idx as u64;
            for method in [
                Method::Sz { k_param: 10, trials: 1 },
                Method::SzCex { k_param: 10, trials: 1 },
                Method::Isolation { trials: 1 },
            ] {
                runs += 1;
                let mut rng = RandomSource::new(seed);
                let r = equivalent_randomized(b, c, method, &mut rng).unwrap();
                if let Verdict::Inequivalent = r.verdict {
                    if let Some(w) = &r.witness {
                        witnesses += 1;
                        assert_eq!(b.evaluate(&w.word).unwrap(), w.left);
                        assert_eq!(c.evaluate(&w.word).unwrap(), w.right);
                        assert_ne!(w.left, w.right, "witness values must differ");
                        if matches!(method, Method::SzCex { .. }) {
                            assert!(
                                w.word.len() <= bound,
                                "witness length {} above bound {bound}",
                                w.word.len()
                            );
                        }
                    }
                }
            }
        }
    }
    assert!(runs >= 1000, "only {runs} runs");
    assert!(witnesses > 0);
    println!(
        "ACCEPTANCE 2 PASS: {witnesses} witnesses over {runs} randomized runs all re-evaluate to differing values"
    );
}

#[test]
fn criterion_03_random_evaluation_detection_rate() {
    let a = nonzero_fixture();
    assert!(is_zero_det(&a).is_some(), "fixture must be nonzero");
    let mut nonzero = 0u32;
    for seed in 0..1000u64 {
        let mut rng = RandomSource::new(seed);
        if zero_sz(&a, 10, &mut rng).is_nonzero() {
            nonzero += 1;
        }
    }
    assert!(
        nonzero >= 800,
        "detection rate too low: {nonzero}/1000 (bound 800)"
    );
    println!("ACCEPTANCE 3 PASS: random evaluation detected nonzero in {nonzero}/1000 runs");
}

#[test]
fn criterion_04_isolation_detection_rate() {
    let a = nonzero_fixture();
    let mut nonzero = 0u32;
    let mut extracted = 0u32;
    for seed in 0..500u64 {
        let mut rng = RandomSource::new(seed);
        match zero_isolation(&a, 1, &mut rng) {
            ZeroResult::Nonzero(e) => {
                nonzero += 1;
                if let Some(w) = &e.witness {
                    extracted += 1;
                    let v = a.evaluate(w).unwrap();
                    assert!(!v.is_zero(), "extracted witness must verify");
                    assert_eq!(Some(v), e.value);
                }
            }
            ZeroResult::ProbablyZero { .. } => {}
        }
    }
    assert!(
        nonzero >= 200,
        "detection rate too low: {nonzero}/500 (bound 200)"
    );
    println!(
        "ACCEPTANCE 4 PASS: isolation detected nonzero in {nonzero}/500 single-trial runs, {extracted} verified witnesses"
    );
}

#[test]
fn criterion_05_minimisation() {
    let mut rng = RandomSource::new(0xC5);
    let mut checked = 0;
    for round in 0..100u64 {
        let a = random_wfa(&mut rng);
        let mode = if round % 5 == 4 {
            MinimizeMode::Randomized {
                k_param: None,
                retries: 5,
            }
        } else {
            MinimizeMode::Deterministic
        };
        let mut mrng = RandomSource::new(round);
        let m = minimize(&a, mode, &mut mrng);
        assert!(is_minimal(&m), "round {round}: output not minimal");
        assert!(
            equivalent_det(&a, &m).unwrap().is_equivalent(),
            "round {round}: output not equivalent"
        );
        assert!(m.states() <= a.states());

        // Hankel bound: the forward rank of the backward-reduced automaton.
        let backward = backward_basis_det_basis(&a);
        let intermediate = qwa::minimize::backward_reduce(&a, &backward).unwrap();
        let hankel_rank = gram_forward(&intermediate).rank();
        assert_eq!(
            m.states(),
            hankel_rank,
            "round {round}: dimension differs from the Hankel bound"
        );

        if round % 4 == 0 {
            let dup = block_duplicate(&a);
            let mut drng = RandomSource::new(round ^ 0xD);
            let dm = minimize(&dup, MinimizeMode::Deterministic, &mut drng);
            assert_eq!(
                dm.states(),
                m.states(),
                "round {round}: equivalent inputs minimized to different dimensions"
            );
            assert!(equivalent_det(&dup, &dm).unwrap().is_equivalent());
        }
        checked += 1;
    }
    println!("ACCEPTANCE 5 PASS: {checked} random automata minimize to minimal equivalent form");
}

#[test]
fn criterion_06_gram_rank_agrees_with_worklist() {
    let mut rng = RandomSource::new(0xC6);
    for round in 0..100u64 {
        let a = random_wfa(&mut rng);
        let gram_rank = gram_forward(&a).rank();
        let worklist_rows = forward_basis_det(&a).0.rows();
        assert_eq!(gram_rank, worklist_rows, "round {round}");
    }
    println!("ACCEPTANCE 6 PASS: forward Gram rank equals worklist basis size on 100 automata");
}

#[test]
fn criterion_07_expectation_reduction_matches_oracle() {
    let mut rng = RandomSource::new(0xC7);
    for round in 0..50u64 {
        let s = rng.below(2) as usize + 1;
        let a = random_pra(&mut rng, s);
        let words = words_up_to(a.alphabet().len(), 4);
        for j in 0..s {
            let reduced = expectation_reduce(&a, j).unwrap();
            for w in &words {
                let direct = expected_reward_oracle(&a, w).unwrap();
                let via_reduction = reduced.evaluate(w).unwrap();
                assert_eq!(
                    via_reduction, direct[j],
                    "round {round}, component {j}, word {w:?}"
                );
            }
        }
    }
    println!(
        "ACCEPTANCE 7 PASS: expectation reduction equals path-enumeration oracle on 50 automata, all words up to length 4"
    );
}

#[test]
fn criterion_09_vpa_product_multiplicativity() {
    let mut rng = RandomSource::new(0xC9);
    let mut words_checked = 0u32;
    for pair in 0..20u64 {
        let a = random_wvpa(&mut rng, 3, 2, false);
        let b = random_wvpa(&mut rng, 3, 2, false);
        let p = vpa_product(&a, &b).unwrap();
        for _ in 0..25 {
            let w = random_well_matched(&mut rng, 8);
            let va = vpa_evaluate(&a, &w).unwrap();
            let vb = vpa_evaluate(&b, &w).unwrap();
            let vp = vpa_evaluate(&p, &w).unwrap();
            assert_eq!(vp, &va * &vb, "pair {pair}, word {w:?}");
            words_checked += 1;
        }
    }
    assert!(words_checked >= 500);
    println!(
        "ACCEPTANCE 9 PASS: product law exact on {words_checked} sampled well-matched words over 20 pairs"
    );
}

#[test]
fn criterion_10_acit_round_trip() {
    let mut rng = RandomSource::new(0xCA);
    let depths = [1usize, 1, 2, 2, 3, 3, 3, 5];
    let mut agreements = 0u32;
    for round in 0..50u64 {
        let depth = depths[(round % depths.len() as u64) as usize];
        let c1 = random_normal_circuit(&mut rng, depth);
        let c2 = if round % 2 == 0 {
            // Equal-value partner with the same depth.
            mirror_circuit(&c1)
        } else {
            random_normal_circuit(&mut rng, depth.min(3))
        };
        let v1 = c1.eval_exact().unwrap();
        let v2 = c2.eval_exact().unwrap();
        let truly_equal = v1 == v2;

        let mut arng = RandomSource::new(round);
        let acit = acit_equal(&c1, &c2, 2, &mut arng);
        assert_eq!(acit.equal, truly_equal, "round {round}: acit vs exact");

        let d = encoding_depth(&c1)
            .unwrap()
            .max(encoding_depth(&c2).unwrap());
        let a1 = acit_to_vpa_with_depth(&c1, d).unwrap();
        let a2 = acit_to_vpa_with_depth(&c2, d).unwrap();

        // Weight law: value(word_d) * mass_d = circuit value, per circuit.
        let word = canonical_word(d);
        let mass = canonical_mass(d);
        for (vpa, value) in [(&a1, &v1), (&a2, &v2)] {
            let got = vpa_evaluate(vpa, &word).unwrap();
            let scaled = got * qwa::rational::Q::from_integer(mass.clone().into());
            assert_eq!(scaled, qwa::rational::Q::from_integer(value.clone()));
        }

        let mut vrng = RandomSource::new(round ^ 0xF00);
        let vpa_verdict = vpa_equivalent(&a1, &a2, 2, &mut vrng).unwrap();
        assert_eq!(
            vpa_verdict.is_equivalent(),
            truly_equal,
            "round {round}: pushdown equivalence vs exact equality"
        );
        agreements += 1;
    }
    println!(
        "ACCEPTANCE 10 PASS: acit_equal, exact evaluation and the pushdown round trip agree on {agreements} circuit pairs"
    );
}

#[test]
fn criterion_11_vpa_equivalence_soundness() {
    let mut rng = RandomSource::new(0xCB);
    for round in 0..30u64 {
        let a = random_wvpa(&mut rng, 3, 2, true);
        let mut srng = RandomSource::new(round);
        assert!(
            vpa_equivalent(&a, &a, 3, &mut srng).unwrap().is_equivalent(),
            "round {round}: self-pair must be equivalent"
        );
        let b = perturb_one_weight(&a, &mut rng);
        let mut prng = RandomSource::new(round ^ 0xAB);
        assert!(
            !vpa_equivalent(&a, &b, 10, &mut prng).unwrap().is_equivalent(),
            "round {round}: perturbation must be detected within 10 primes"
        );
    }
    println!(
        "ACCEPTANCE 11 PASS: 30 self-pairs equivalent; all single-weight perturbations detected within 10 primes"
    );
}

/// Adds one to a randomly chosen existing transition weight. All fixture
/// weights are strictly positive, so every entry contributes to some word
/// and the change is observable.
fn perturb_one_weight(a: &WVPA, rng: &mut RandomSource) -> WVPA {
    let n = a.states();
    let stack = a.stack_symbols().len();
    let kind = rng.below(3);
    let gamma = rng.below(stack as u64) as usize;
    let i = rng.below(n as u64) as usize;
    let j = rng.below(n as u64) as usize;
    let bump = |m: &QMatrix| {
        let mut m = m.clone();
        let cur = m.get(i, j) + qi(1);
        m.set(i, j, cur);
        m
    };
    let mut m_call = vec![(0..stack)
        .map(|g| a.call_matrix(0, g).clone())
        .collect::<Vec<_>>()];
    let mut m_ret = vec![(0..stack)
        .map(|g| a.return_matrix(0, g).clone())
        .collect::<Vec<_>>()];
    let mut m_int = vec![a.internal_matrix(0).clone()];
    match kind {
        0 => m_call[0][gamma] = bump(&m_call[0][gamma]),
        1 => m_ret[0][gamma] = bump(&m_ret[0][gamma]),
        _ => m_int[0] = bump(&m_int[0]),
    }
    WVPA::new(
        a.alphabet().clone(),
        a.stack_symbols().to_vec(),
        m_call,
        m_ret,
        m_int,
        a.init().clone(),
        a.final_vector().clone(),
    )
    .unwrap()
}
