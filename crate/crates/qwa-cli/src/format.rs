//! Text formats for the three automaton kinds.
//!
//! A file starts with its kind (`wfa`, `pra` or `vpa`), declares the
//! alphabet(s) and state count, gives dense initial and final vectors, and
//! lists transitions sparsely, one per line. Rationals are written `p/q` or
//! as plain integers; decimal notation is rejected. `#` starts a comment.
//!
//! ```text
//! wfa
//! alphabet a b
//! states 2
//! init 1 0
//! final 0 1/2
//! trans a 0 1 1/3
//! ```
//!
//! Probabilistic reward automata add a `rewards <s>` line and append `s`
//! integers in -1..=1 to each transition; the silent symbol is spelled
//! `eps`. Visibly pushdown automata declare `calls`, `returns`, `internals`
//! and `stack`, with `call`/`ret` lines naming a stack symbol:
//!
//! ```text
//! vpa
//! calls c
//! returns r
//! internals i
//! stack g
//! states 1
//! init 1
//! final 1
//! call c g 0 0 1/2
//! ret r g 0 0 1/3
//! int i 0 0 5
//! ```

use qwa::matrix::{Orientation, QMatrix, QVector};
use qwa::pra::{RewardMat, PRA};
use qwa::rational::{parse_rational, Q};
use qwa::vpa::{SymbolClass, VisiblyAlphabet, WVPA};
use qwa::wfa::{Alphabet, WFA};
use std::collections::BTreeSet;
use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FormatError {
    Syntax { line: usize, message: String },
    Semantic { message: String },
}

impl fmt::Display for FormatError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FormatError::Syntax { line, message } => write!(f, "line {line}: {message}"),
            FormatError::Semantic { message } => write!(f, "{message}"),
        }
    }
}

impl std::error::Error for FormatError {}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Automaton {
    Wfa(WFA),
    Pra(PRA),
    Vpa(WVPA),
}

impl Automaton {
    pub fn kind(&self) -> &'static str {
        match self {
            Automaton::Wfa(_) => "wfa",
            Automaton::Pra(_) => "pra",
            Automaton::Vpa(_) => "vpa",
        }
    }
}

fn syntax(line: usize, message: impl Into<String>) -> FormatError {
    FormatError::Syntax {
        line,
        message: message.into(),
    }
}

fn semantic(err: impl fmt::Display) -> FormatError {
    FormatError::Semantic {
        message: err.to_string(),
    }
}

/// Numbered, comment-stripped, non-empty lines.
struct Lines {
    items: Vec<(usize, Vec<String>)>,
    pos: usize,
}

impl Lines {
    fn new(text: &str) -> Self {
        let items = text
            .lines()
            .enumerate()
            .filter_map(|(idx, raw)| {
                let content = raw.split('#').next().unwrap_or("").trim();
                if content.is_empty() {
                    None
                } else {
                    Some((
                        idx + 1,
                        content.split_whitespace().map(|t| t.to_string()).collect(),
                    ))
                }
            })
            .collect();
        Lines { items, pos: 0 }
    }

    fn next(&mut self) -> Option<&(usize, Vec<String>)> {
        let item = self.items.get(self.pos);
        if item.is_some() {
            self.pos += 1;
        }
        item
    }

    fn expect_keyword(&mut self, keyword: &str) -> Result<(usize, Vec<String>), FormatError> {
        let last_line = self.items.last().map(|(l, _)| *l).unwrap_or(0);
        let (line, tokens) = self
            .next()
            .ok_or_else(|| syntax(last_line, format!("missing `{keyword}` line")))?
            .clone();
        if tokens[0] != keyword {
            return Err(syntax(
                line,
                format!("expected `{keyword}`, found `{}`", tokens[0]),
            ));
        }
        Ok((line, tokens))
    }
}

fn check_label(label: &str, line: usize) -> Result<(), FormatError> {
    if label.contains('#') {
        return Err(syntax(line, format!("label `{label}` contains `#`")));
    }
    Ok(())
}

fn parse_usize(token: &str, line: usize, what: &str) -> Result<usize, FormatError> {
    token
        .parse::<usize>()
        .map_err(|_| syntax(line, format!("malformed {what} `{token}`")))
}

fn parse_q(token: &str, line: usize) -> Result<Q, FormatError> {
    parse_rational(token).map_err(|e| syntax(line, e.to_string()))
}

fn parse_vector(
    tokens: &[String],
    line: usize,
    n: usize,
    orientation: Orientation,
    which: &str,
) -> Result<QVector, FormatError> {
    if tokens.len() != n {
        return Err(syntax(
            line,
            format!("{which} vector has {} entries, expected {n}", tokens.len()),
        ));
    }
    let values = tokens
        .iter()
        .map(|t| parse_q(t, line))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(QVector::from_dense(values, orientation))
}

/// Parses any of the three automaton kinds, dispatching on the first line.
pub fn parse_automaton(text: &str) -> Result<Automaton, FormatError> {
    let mut lines = Lines::new(text);
    let (line, tokens) = lines
        .next()
        .ok_or_else(|| syntax(1, "empty automaton file"))?
        .clone();
    if tokens.len() != 1 {
        return Err(syntax(line, "kind line must be exactly `wfa`, `pra` or `vpa`"));
    }
    match tokens[0].as_str() {
        "wfa" => parse_wfa_body(lines).map(Automaton::Wfa),
        "pra" => parse_pra_body(lines).map(Automaton::Pra),
        "vpa" => parse_vpa_body(lines).map(Automaton::Vpa),
        other => Err(syntax(line, format!("unknown automaton kind `{other}`"))),
    }
}

fn parse_alphabet_line(
    lines: &mut Lines,
    keyword: &str,
    allow_eps: bool,
) -> Result<(usize, Vec<String>), FormatError> {
    let (line, tokens) = lines.expect_keyword(keyword)?;
    let labels: Vec<String> = tokens[1..].to_vec();
    for label in &labels {
        check_label(label, line)?;
        if !allow_eps && label == qwa::pra::EPSILON_LABEL {
            return Err(syntax(
                line,
                format!("label `{}` is reserved for silent transitions in pra files", label),
            ));
        }
    }
    Ok((line, labels))
}

fn parse_wfa_body(mut lines: Lines) -> Result<WFA, FormatError> {
    let (alpha_line, labels) = parse_alphabet_line(&mut lines, "alphabet", false)?;
    let alphabet = Alphabet::new(labels).map_err(|e| syntax(alpha_line, e.to_string()))?;
    let (line, tokens) = lines.expect_keyword("states")?;
    if tokens.len() != 2 {
        return Err(syntax(line, "states line takes exactly one number"));
    }
    let n = parse_usize(&tokens[1], line, "state count")?;
    let (line, tokens) = lines.expect_keyword("init")?;
    let init = parse_vector(&tokens[1..], line, n, Orientation::Row, "init")?;
    let (line, tokens) = lines.expect_keyword("final")?;
    let final_ = parse_vector(&tokens[1..], line, n, Orientation::Col, "final")?;
    let mut trans = vec![QMatrix::zero(n, n); alphabet.len()];
    let mut seen = BTreeSet::new();
    while let Some((line, tokens)) = lines.next().cloned() {
        if tokens[0] != "trans" {
            return Err(syntax(line, format!("expected `trans`, found `{}`", tokens[0])));
        }
        if tokens.len() != 5 {
            return Err(syntax(line, "trans line: trans <symbol> <from> <to> <weight>"));
        }
        let symbol = alphabet
            .id_of(&tokens[1])
            .ok_or_else(|| syntax(line, format!("unknown symbol `{}`", tokens[1])))?;
        let i = parse_usize(&tokens[2], line, "state")?;
        let j = parse_usize(&tokens[3], line, "state")?;
        if i >= n || j >= n {
            return Err(syntax(line, format!("state out of range 0..{n}")));
        }
        if !seen.insert((symbol, i, j)) {
            return Err(syntax(line, "duplicate transition"));
        }
        trans[symbol].set(i, j, parse_q(&tokens[4], line)?);
    }
    WFA::new(alphabet, trans, init, final_).map_err(semantic)
}

fn parse_pra_body(mut lines: Lines) -> Result<PRA, FormatError> {
    let (alpha_line, labels) = parse_alphabet_line(&mut lines, "alphabet", true)?;
    let alphabet = Alphabet::new(labels).map_err(|e| syntax(alpha_line, e.to_string()))?;
    let (line, tokens) = lines.expect_keyword("rewards")?;
    if tokens.len() != 2 {
        return Err(syntax(line, "rewards line takes exactly one number"));
    }
    let s = parse_usize(&tokens[1], line, "reward count")?;
    let (line, tokens) = lines.expect_keyword("states")?;
    if tokens.len() != 2 {
        return Err(syntax(line, "states line takes exactly one number"));
    }
    let n = parse_usize(&tokens[1], line, "state count")?;
    let (line, tokens) = lines.expect_keyword("init")?;
    let init = parse_vector(&tokens[1..], line, n, Orientation::Row, "init")?;
    let (line, tokens) = lines.expect_keyword("final")?;
    let final_ = parse_vector(&tokens[1..], line, n, Orientation::Col, "final")?;
    let mut trans = vec![QMatrix::zero(n, n); alphabet.len()];
    let mut rewards = vec![RewardMat::zero(n, s); alphabet.len()];
    let mut seen = BTreeSet::new();
    while let Some((line, tokens)) = lines.next().cloned() {
        if tokens[0] != "trans" {
            return Err(syntax(line, format!("expected `trans`, found `{}`", tokens[0])));
        }
        if tokens.len() != 5 + s {
            return Err(syntax(
                line,
                format!("trans line: trans <symbol> <from> <to> <prob> <{s} reward integers>"),
            ));
        }
        let symbol = alphabet
            .id_of(&tokens[1])
            .ok_or_else(|| syntax(line, format!("unknown symbol `{}`", tokens[1])))?;
        let i = parse_usize(&tokens[2], line, "state")?;
        let j = parse_usize(&tokens[3], line, "state")?;
        if i >= n || j >= n {
            return Err(syntax(line, format!("state out of range 0..{n}")));
        }
        if !seen.insert((symbol, i, j)) {
            return Err(syntax(line, "duplicate transition"));
        }
        trans[symbol].set(i, j, parse_q(&tokens[4], line)?);
        let reward = tokens[5..]
            .iter()
            .map(|t| {
                t.parse::<i8>()
                    .map_err(|_| syntax(line, format!("malformed reward `{t}`")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        if reward.iter().any(|&r| !(-1..=1).contains(&r)) {
            return Err(syntax(line, "reward components must be -1, 0 or 1"));
        }
        rewards[symbol].set(i, j, reward);
    }
    PRA::new(alphabet, s, trans, rewards, init, final_).map_err(semantic)
}

fn parse_vpa_body(mut lines: Lines) -> Result<WVPA, FormatError> {
    let (calls_line, calls) = parse_alphabet_line(&mut lines, "calls", false)?;
    let (_, returns) = parse_alphabet_line(&mut lines, "returns", false)?;
    let (_, internals) = parse_alphabet_line(&mut lines, "internals", false)?;
    let alphabet = VisiblyAlphabet::new(calls, returns, internals)
        .map_err(|e| syntax(calls_line, e.to_string()))?;
    let (stack_line, tokens) = lines.expect_keyword("stack")?;
    let stack: Vec<String> = tokens[1..].to_vec();
    let mut stack_seen = BTreeSet::new();
    for label in &stack {
        check_label(label, stack_line)?;
        if !stack_seen.insert(label.clone()) {
            return Err(syntax(stack_line, format!("duplicate stack symbol `{label}`")));
        }
    }
    let (line, tokens) = lines.expect_keyword("states")?;
    if tokens.len() != 2 {
        return Err(syntax(line, "states line takes exactly one number"));
    }
    let n = parse_usize(&tokens[1], line, "state count")?;
    let (line, tokens) = lines.expect_keyword("init")?;
    let init = parse_vector(&tokens[1..], line, n, Orientation::Row, "init")?;
    let (line, tokens) = lines.expect_keyword("final")?;
    let final_ = parse_vector(&tokens[1..], line, n, Orientation::Col, "final")?;

    let gamma_of = |token: &str, line: usize| -> Result<usize, FormatError> {
        stack
            .iter()
            .position(|g| g == token)
            .ok_or_else(|| syntax(line, format!("unknown stack symbol `{token}`")))
    };
    let mut m_call = vec![vec![QMatrix::zero(n, n); stack.len()]; alphabet.calls().len()];
    let mut m_ret = vec![vec![QMatrix::zero(n, n); stack.len()]; alphabet.returns().len()];
    let mut m_int = vec![QMatrix::zero(n, n); alphabet.internals().len()];
    let mut seen = BTreeSet::new();
    while let Some((line, tokens)) = lines.next().cloned() {
        match tokens[0].as_str() {
            "call" | "ret" => {
                if tokens.len() != 6 {
                    return Err(syntax(
                        line,
                        format!("{} line: {} <symbol> <stack> <from> <to> <weight>", tokens[0], tokens[0]),
                    ));
                }
                let id = alphabet
                    .id_of(&tokens[1])
                    .ok_or_else(|| syntax(line, format!("unknown symbol `{}`", tokens[1])))?;
                let gamma = gamma_of(&tokens[2], line)?;
                let i = parse_usize(&tokens[3], line, "state")?;
                let j = parse_usize(&tokens[4], line, "state")?;
                if i >= n || j >= n {
                    return Err(syntax(line, format!("state out of range 0..{n}")));
                }
                let weight = parse_q(&tokens[5], line)?;
                match (tokens[0].as_str(), alphabet.classify(id)) {
                    ("call", SymbolClass::Call(k)) => {
                        if !seen.insert(("call", k, gamma, i, j)) {
                            return Err(syntax(line, "duplicate transition"));
                        }
                        m_call[k][gamma].set(i, j, weight);
                    }
                    ("ret", SymbolClass::Return(k)) => {
                        if !seen.insert(("ret", k, gamma, i, j)) {
                            return Err(syntax(line, "duplicate transition"));
                        }
                        m_ret[k][gamma].set(i, j, weight);
                    }
                    _ => {
                        return Err(syntax(
                            line,
                            format!("symbol `{}` is not in the {} class", tokens[1], tokens[0]),
                        ))
                    }
                }
            }
            "int" => {
                if tokens.len() != 5 {
                    return Err(syntax(line, "int line: int <symbol> <from> <to> <weight>"));
                }
                let id = alphabet
                    .id_of(&tokens[1])
                    .ok_or_else(|| syntax(line, format!("unknown symbol `{}`", tokens[1])))?;
                let SymbolClass::Internal(k) = alphabet.classify(id) else {
                    return Err(syntax(
                        line,
                        format!("symbol `{}` is not an internal symbol", tokens[1]),
                    ));
                };
                let i = parse_usize(&tokens[2], line, "state")?;
                let j = parse_usize(&tokens[3], line, "state")?;
                if i >= n || j >= n {
                    return Err(syntax(line, format!("state out of range 0..{n}")));
                }
                if !seen.insert(("int", k, 0, i, j)) {
                    return Err(syntax(line, "duplicate transition"));
                }
                m_int[k].set(i, j, parse_q(&tokens[4], line)?);
            }
            other => {
                return Err(syntax(
                    line,
                    format!("expected `call`, `ret` or `int`, found `{other}`"),
                ))
            }
        }
    }
    WVPA::new(alphabet, stack, m_call, m_ret, m_int, init, final_).map_err(semantic)
}

fn render_labeled(keyword: &str, items: &[String]) -> String {
    if items.is_empty() {
        format!("{keyword}\n")
    } else {
        format!("{keyword} {}\n", items.join(" "))
    }
}

fn render_vector(keyword: &str, v: &QVector) -> String {
    let items: Vec<String> = v.to_dense().iter().map(|q| q.to_string()).collect();
    render_labeled(keyword, &items)
}

pub fn render_wfa(a: &WFA) -> String {
    let mut out = String::from("wfa\n");
    out.push_str(&render_labeled("alphabet", a.alphabet().labels()));
    out.push_str(&format!("states {}\n", a.states()));
    out.push_str(&render_vector("init", a.init()));
    out.push_str(&render_vector("final", a.final_vector()));
    for symbol in 0..a.alphabet().len() {
        for (i, j, v) in a.transition(symbol).iter_nonzero() {
            out.push_str(&format!(
                "trans {} {} {} {}\n",
                a.alphabet().label(symbol),
                i,
                j,
                v
            ));
        }
    }
    out
}

pub fn render_pra(a: &PRA) -> String {
    let mut out = String::from("pra\n");
    out.push_str(&render_labeled("alphabet", a.alphabet().labels()));
    out.push_str(&format!("rewards {}\n", a.reward_types()));
    out.push_str(&format!("states {}\n", a.states()));
    out.push_str(&render_vector("init", a.init()));
    out.push_str(&render_vector("final", a.final_vector()));
    for symbol in 0..a.alphabet().len() {
        for (i, j, v) in a.transition(symbol).iter_nonzero() {
            let reward = a
                .rewards(symbol)
                .get(i, j)
                .iter()
                .map(|r| r.to_string())
                .collect::<Vec<_>>()
                .join(" ");
            let sep = if reward.is_empty() { "" } else { " " };
            out.push_str(&format!(
                "trans {} {} {} {}{sep}{reward}\n",
                a.alphabet().label(symbol),
                i,
                j,
                v
            ));
        }
    }
    out
}

pub fn render_vpa(a: &WVPA) -> String {
    let mut out = String::from("vpa\n");
    out.push_str(&render_labeled("calls", a.alphabet().calls()));
    out.push_str(&render_labeled("returns", a.alphabet().returns()));
    out.push_str(&render_labeled("internals", a.alphabet().internals()));
    out.push_str(&render_labeled("stack", a.stack_symbols()));
    out.push_str(&format!("states {}\n", a.states()));
    out.push_str(&render_vector("init", a.init()));
    out.push_str(&render_vector("final", a.final_vector()));
    for (k, label) in a.alphabet().calls().iter().enumerate() {
        for (g, gamma) in a.stack_symbols().iter().enumerate() {
            for (i, j, v) in a.call_matrix(k, g).iter_nonzero() {
                out.push_str(&format!("call {label} {gamma} {i} {j} {v}\n"));
            }
        }
    }
    for (k, label) in a.alphabet().returns().iter().enumerate() {
        for (g, gamma) in a.stack_symbols().iter().enumerate() {
            for (i, j, v) in a.return_matrix(k, g).iter_nonzero() {
                out.push_str(&format!("ret {label} {gamma} {i} {j} {v}\n"));
            }
        }
    }
    for (k, label) in a.alphabet().internals().iter().enumerate() {
        for (i, j, v) in a.internal_matrix(k).iter_nonzero() {
            out.push_str(&format!("int {label} {i} {j} {v}\n"));
        }
    }
    out
}

pub fn render_automaton(a: &Automaton) -> String {
    match a {
        Automaton::Wfa(x) => render_wfa(x),
        Automaton::Pra(x) => render_pra(x),
        Automaton::Vpa(x) => render_vpa(x),
    }
}
