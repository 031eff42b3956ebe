//! Arithmetic circuits: DAGs of add/multiply/subtract gates over constants
//! 0 and 1 and optional variables, with exact (big-integer) and modular
//! evaluation, a text format, and randomized equality testing.
//!
//! Variable-free circuits of size O(n) can compute values as large as
//! 2^(2^n), so exact evaluation is budgeted and equality is normally decided
//! modulo random 32-bit primes: a mismatch at any prime is definitive, and
//! matching residues at t primes make a difference increasingly unlikely.
//! Circuits containing variables are compared after substituting a random
//! 32-bit integer for each variable; the substitution is recorded in the
//! verdict so a reported equality can be replayed.

use crate::modular::{random_prime, Residue};
use crate::rng::RandomSource;
use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};
use std::collections::BTreeMap;
use thiserror::Error;

/// Default budget for exact evaluation, in estimated result bits.
pub const DEFAULT_BIT_BUDGET: u64 = 1_000_000;

#[derive(Debug, Error, PartialEq, Eq, Clone)]
pub enum CircuitError {
    #[error("gate g{gate} references undefined gate g{input}")]
    UndefinedInput { gate: usize, input: usize },
    #[error("circuit contains a cycle through gate g{0}")]
    Cycle(usize),
    #[error("output gate g{0} is undefined")]
    UndefinedOutput(usize),
    #[error("operation requires a variable-free circuit, found x{0}")]
    Variable(usize),
    #[error("operation supports only add and mul gates, found sub at g{0}")]
    SubGate(usize),
    #[error("estimated result size {required} bits exceeds budget {budget}")]
    BudgetExceeded { required: u64, budget: u64 },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// A single gate; `Add`, `Mul` and `Sub` reference earlier gates by index
/// (the two inputs may coincide).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gate {
    Const0,
    Const1,
    Var(usize),
    Add(usize, usize),
    Mul(usize, usize),
    Sub(usize, usize),
}

impl Gate {
    fn inputs(&self) -> Option<(usize, usize)> {
        match *self {
            Gate::Add(a, b) | Gate::Mul(a, b) | Gate::Sub(a, b) => Some((a, b)),
            _ => None,
        }
    }
}

/// Arithmetic circuit: a gate list in topological order (inputs strictly
/// earlier) and a distinguished output gate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Circuit {
    gates: Vec<Gate>,
    output: usize,
}

impl Circuit {
    /// Validates that all references point to earlier gates.
    pub fn new(gates: Vec<Gate>, output: usize) -> Result<Self, CircuitError> {
        if output >= gates.len() {
            return Err(CircuitError::UndefinedOutput(output));
        }
        for (idx, gate) in gates.iter().enumerate() {
            if let Some((a, b)) = gate.inputs() {
                for input in [a, b] {
                    if input >= gates.len() {
                        return Err(CircuitError::UndefinedInput { gate: idx, input });
                    }
                    if input >= idx {
                        return Err(CircuitError::Cycle(idx));
                    }
                }
            }
        }
        Ok(Circuit { gates, output })
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn output(&self) -> usize {
        self.output
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    /// Largest variable index plus one, or zero for variable-free circuits.
    pub fn variable_count(&self) -> usize {
        self.gates
            .iter()
            .filter_map(|g| match g {
                Gate::Var(k) => Some(k + 1),
                _ => None,
            })
            .max()
            .unwrap_or(0)
    }

    pub fn is_variable_free(&self) -> bool {
        self.variable_count() == 0
    }

    /// Upper bound on the bit size of every intermediate value.
    fn bit_estimate(&self) -> u64 {
        let mut bits = vec![0u64; self.gates.len()];
        for (idx, gate) in self.gates.iter().enumerate() {
            bits[idx] = match *gate {
                Gate::Const0 | Gate::Const1 => 1,
                Gate::Var(_) => 32,
                Gate::Add(a, b) | Gate::Sub(a, b) => bits[a].max(bits[b]).saturating_add(1),
                Gate::Mul(a, b) => bits[a].saturating_add(bits[b]),
            };
        }
        bits[self.output]
    }

    /// Exact value of a variable-free circuit, guarded by a bit budget.
    pub fn eval_exact(&self) -> Result<BigInt, CircuitError> {
        self.eval_exact_with_budget(DEFAULT_BIT_BUDGET)
    }

    pub fn eval_exact_with_budget(&self, budget: u64) -> Result<BigInt, CircuitError> {
        if let Some(k) = self.gates.iter().find_map(|g| match g {
            Gate::Var(k) => Some(*k),
            _ => None,
        }) {
            return Err(CircuitError::Variable(k));
        }
        let required = self.bit_estimate();
        if required > budget {
            return Err(CircuitError::BudgetExceeded { required, budget });
        }
        let mut values: Vec<BigInt> = Vec::with_capacity(self.gates.len());
        for gate in &self.gates {
            let v = match *gate {
                Gate::Const0 => BigInt::zero(),
                Gate::Const1 => BigInt::from(1),
                Gate::Var(_) => unreachable!("checked variable-free"),
                Gate::Add(a, b) => &values[a] + &values[b],
                Gate::Mul(a, b) => &values[a] * &values[b],
                Gate::Sub(a, b) => &values[a] - &values[b],
            };
            values.push(v);
        }
        Ok(values.swap_remove(self.output))
    }

    /// Value modulo a prime, substituting `substitution[k]` for variable k.
    pub fn eval_mod(&self, prime: u64, substitution: &[u64]) -> Residue {
        let mut values: Vec<Residue> = Vec::with_capacity(self.gates.len());
        for gate in &self.gates {
            let v = match *gate {
                Gate::Const0 => Residue::zero(prime),
                Gate::Const1 => Residue::one(prime),
                Gate::Var(k) => Residue::new(substitution[k], prime),
                Gate::Add(a, b) => values[a].add(values[b]),
                Gate::Mul(a, b) => values[a].mul(values[b]),
                Gate::Sub(a, b) => values[a].sub(values[b]),
            };
            values.push(v);
        }
        values[self.output]
    }

    /// Renders the text format: one `g<i> = ...` line per gate and a final
    /// `output g<i>` line.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for (idx, gate) in self.gates.iter().enumerate() {
            let rhs = match *gate {
                Gate::Const0 => "0".to_string(),
                Gate::Const1 => "1".to_string(),
                Gate::Var(k) => format!("x{k}"),
                Gate::Add(a, b) => format!("add g{a} g{b}"),
                Gate::Mul(a, b) => format!("mul g{a} g{b}"),
                Gate::Sub(a, b) => format!("sub g{a} g{b}"),
            };
            out.push_str(&format!("g{idx} = {rhs}\n"));
        }
        out.push_str(&format!("output g{}\n", self.output));
        out
    }

    /// Parses the text format. Gates may be defined in any order; the parsed
    /// circuit is re-indexed into a topological order.
    pub fn parse(text: &str) -> Result<Self, CircuitError> {
        let mut defs: BTreeMap<usize, (Gate2, usize)> = BTreeMap::new();
        let mut output: Option<(usize, usize)> = None;
        for (lineno, raw) in text.lines().enumerate() {
            let line = lineno + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let mut tokens = content.split_whitespace();
            let first = tokens.next().unwrap();
            if first == "output" {
                let id = parse_gate_ref(tokens.next(), line)?;
                if tokens.next().is_some() {
                    return Err(CircuitError::Parse {
                        line,
                        message: "trailing tokens after output".into(),
                    });
                }
                if output.is_some() {
                    return Err(CircuitError::Parse {
                        line,
                        message: "duplicate output line".into(),
                    });
                }
                output = Some((id, line));
                continue;
            }
            let id = parse_gate_name(first, line)?;
            if defs.contains_key(&id) {
                return Err(CircuitError::Parse {
                    line,
                    message: format!("gate g{id} defined twice"),
                });
            }
            match tokens.next() {
                Some("=") => {}
                _ => {
                    return Err(CircuitError::Parse {
                        line,
                        message: "expected `=` after gate name".into(),
                    })
                }
            }
            let op = tokens.next().ok_or_else(|| CircuitError::Parse {
                line,
                message: "missing right-hand side".into(),
            })?;
            let gate = match op {
                "0" => Gate2::Const0,
                "1" => Gate2::Const1,
                _ if op.starts_with('x') => {
                    let k = op[1..].parse::<usize>().map_err(|_| CircuitError::Parse {
                        line,
                        message: format!("malformed variable `{op}`"),
                    })?;
                    Gate2::Var(k)
                }
                "add" | "mul" | "sub" => {
                    let a = parse_gate_ref(tokens.next(), line)?;
                    let b = parse_gate_ref(tokens.next(), line)?;
                    match op {
                        "add" => Gate2::Add(a, b),
                        "mul" => Gate2::Mul(a, b),
                        _ => Gate2::Sub(a, b),
                    }
                }
                _ => {
                    return Err(CircuitError::Parse {
                        line,
                        message: format!("unknown operation `{op}`"),
                    })
                }
            };
            if tokens.next().is_some() {
                return Err(CircuitError::Parse {
                    line,
                    message: "trailing tokens".into(),
                });
            }
            defs.insert(id, (gate, line));
        }
        let (output_id, output_line) = output.ok_or(CircuitError::Parse {
            line: text.lines().count(),
            message: "missing `output` line".into(),
        })?;
        if !defs.contains_key(&output_id) {
            return Err(CircuitError::Parse {
                line: output_line,
                message: format!("output gate g{output_id} is undefined"),
            });
        }

        // Topological re-indexing with cycle detection.
        let mut order: Vec<usize> = Vec::with_capacity(defs.len());
        let mut state: BTreeMap<usize, u8> = BTreeMap::new(); // 1 = visiting, 2 = done
        let ids: Vec<usize> = defs.keys().copied().collect();
        for &start in &ids {
            if state.get(&start).copied().unwrap_or(0) == 2 {
                continue;
            }
            let mut stack = vec![(start, false)];
            while let Some((id, expanded)) = stack.pop() {
                if expanded {
                    state.insert(id, 2);
                    order.push(id);
                    continue;
                }
                match state.get(&id).copied().unwrap_or(0) {
                    2 => continue,
                    1 => continue,
                    _ => {}
                }
                state.insert(id, 1);
                stack.push((id, true));
                let (gate, line) = &defs[&id];
                if let Some((a, b)) = gate.inputs() {
                    for input in [b, a] {
                        match state.get(&input).copied().unwrap_or(0) {
                            0 => {
                                if !defs.contains_key(&input) {
                                    return Err(CircuitError::Parse {
                                        line: *line,
                                        message: format!("gate g{input} is undefined"),
                                    });
                                }
                                stack.push((input, false));
                            }
                            1 => return Err(CircuitError::Cycle(input)),
                            _ => {}
                        }
                    }
                }
            }
        }
        let index: BTreeMap<usize, usize> =
            order.iter().enumerate().map(|(new, old)| (*old, new)).collect();
        let gates = order
            .iter()
            .map(|old| match defs[old].0 {
                Gate2::Const0 => Gate::Const0,
                Gate2::Const1 => Gate::Const1,
                Gate2::Var(k) => Gate::Var(k),
                Gate2::Add(a, b) => Gate::Add(index[&a], index[&b]),
                Gate2::Mul(a, b) => Gate::Mul(index[&a], index[&b]),
                Gate2::Sub(a, b) => Gate::Sub(index[&a], index[&b]),
            })
            .collect();
        Circuit::new(gates, index[&output_id])
    }
}

/// Parsed gate with file-local ids, before topological re-indexing.
#[derive(Debug, Clone, Copy)]
enum Gate2 {
    Const0,
    Const1,
    Var(usize),
    Add(usize, usize),
    Mul(usize, usize),
    Sub(usize, usize),
}

impl Gate2 {
    fn inputs(&self) -> Option<(usize, usize)> {
        match *self {
            Gate2::Add(a, b) | Gate2::Mul(a, b) | Gate2::Sub(a, b) => Some((a, b)),
            _ => None,
        }
    }
}

fn parse_gate_name(token: &str, line: usize) -> Result<usize, CircuitError> {
    token
        .strip_prefix('g')
        .and_then(|t| t.parse::<usize>().ok())
        .ok_or_else(|| CircuitError::Parse {
            line,
            message: format!("malformed gate name `{token}`"),
        })
}

fn parse_gate_ref(token: Option<&str>, line: usize) -> Result<usize, CircuitError> {
    let token = token.ok_or_else(|| CircuitError::Parse {
        line,
        message: "missing gate reference".into(),
    })?;
    parse_gate_name(token, line)
}

/// Incremental circuit construction; children are appended before parents,
/// so the gate list is in topological order by construction.
#[derive(Debug, Default)]
pub struct CircuitBuilder {
    gates: Vec<Gate>,
    const_cache: BTreeMap<BigInt, usize>,
}

impl CircuitBuilder {
    pub fn new() -> Self {
        CircuitBuilder::default()
    }

    pub fn push(&mut self, gate: Gate) -> usize {
        if let Some((a, b)) = gate.inputs() {
            assert!(a < self.gates.len() && b < self.gates.len());
        }
        self.gates.push(gate);
        self.gates.len() - 1
    }

    pub fn zero(&mut self) -> usize {
        self.constant(&BigInt::zero())
    }

    pub fn one(&mut self) -> usize {
        self.constant(&BigInt::from(1))
    }

    pub fn add(&mut self, a: usize, b: usize) -> usize {
        self.push(Gate::Add(a, b))
    }

    pub fn mul(&mut self, a: usize, b: usize) -> usize {
        self.push(Gate::Mul(a, b))
    }

    /// Gate computing an arbitrary integer constant, built from 0/1 gates by
    /// binary expansion; results are cached per value.
    pub fn constant(&mut self, value: &BigInt) -> usize {
        if let Some(&id) = self.const_cache.get(value) {
            return id;
        }
        let id = if value.is_zero() {
            self.push(Gate::Const0)
        } else if value.is_negative() {
            let pos = self.constant(&-value);
            let zero = self.zero();
            self.push(Gate::Sub(zero, pos))
        } else if value.to_u8() == Some(1) {
            self.push(Gate::Const1)
        } else {
            // Horner over the binary expansion, most significant bit first.
            let bits = value.to_str_radix(2);
            let one = self.one();
            let two = self.push(Gate::Add(one, one));
            let mut acc = one; // leading bit is 1
            for bit in bits.bytes().skip(1) {
                acc = self.push(Gate::Mul(acc, two));
                if bit == b'1' {
                    acc = self.push(Gate::Add(acc, one));
                }
            }
            acc
        };
        self.const_cache.insert(value.clone(), id);
        id
    }

    /// Sum of a list of gates; empty sums are the constant 0.
    pub fn sum(&mut self, terms: &[usize]) -> usize {
        match terms.split_first() {
            None => self.zero(),
            Some((&first, rest)) => {
                let mut acc = first;
                for &t in rest {
                    acc = self.add(acc, t);
                }
                acc
            }
        }
    }

    pub fn finish(self, output: usize) -> Circuit {
        Circuit::new(self.gates, output).expect("builder output is topological")
    }
}

/// Verdict of a randomized circuit-equality check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AcitVerdict {
    pub equal: bool,
    /// Primes at which both circuits were evaluated.
    pub primes: Vec<u64>,
    /// The prime exposing a difference, when unequal.
    pub mismatch: Option<u64>,
    /// Values substituted for variables, when any were present.
    pub substitution: Option<Vec<u64>>,
}

/// Tests whether two circuits compute the same number by evaluating both
/// modulo `trials` random 32-bit primes. Circuits with variables are first
/// specialized with one shared random 32-bit value per variable. Any residue
/// mismatch is a definitive inequality.
pub fn acit_equal(
    c1: &Circuit,
    c2: &Circuit,
    trials: u32,
    rng: &mut RandomSource,
) -> AcitVerdict {
    assert!(trials >= 1, "at least one trial required");
    let vars = c1.variable_count().max(c2.variable_count());
    let substitution: Vec<u64> = (0..vars).map(|_| rng.below(1 << 32)).collect();
    let mut primes = Vec::with_capacity(trials as usize);
    for trial in 0..trials {
        let mut trial_rng = rng.derive(trial as u64);
        let prime = random_prime(&mut trial_rng);
        primes.push(prime);
        let r1 = c1.eval_mod(prime, &substitution);
        let r2 = c2.eval_mod(prime, &substitution);
        if r1 != r2 {
            return AcitVerdict {
                equal: false,
                primes,
                mismatch: Some(prime),
                substitution: (vars > 0).then_some(substitution),
            };
        }
    }
    AcitVerdict {
        equal: true,
        primes,
        mismatch: None,
        substitution: (vars > 0).then_some(substitution),
    }
}
