//! Exact-arithmetic toolkit for automata with weights in the field Q.
//!
//! The crate decides equivalence and zeroness of Q-weighted finite automata
//! (deterministically and with two randomized methods that produce
//! counterexample words), decides and performs minimisation, decides
//! expectation- and distribution-equivalence of probabilistic reward
//! automata, and decides equivalence of weighted visibly pushdown automata
//! through an arithmetic-circuit reduction tested modulo random primes.
//!
//! All arithmetic is exact: scalars are arbitrary-precision rationals and no
//! operation ever rounds. Randomized procedures draw from a seedable,
//! platform-independent generator, so identical seeds reproduce identical
//! results bit for bit.

pub mod circuit;
pub mod matrix;
pub mod minimize;
pub mod modular;
pub mod poly;
pub mod pra;
pub mod randomized;
pub mod rational;
pub mod rng;
pub mod vpa;
pub mod wfa;

pub use matrix::{QMatrix, QVector};
pub use rational::Q;
pub use rng::RandomSource;
pub use wfa::{Alphabet, EquivResult, Verdict, Witness, Word, WFA};
