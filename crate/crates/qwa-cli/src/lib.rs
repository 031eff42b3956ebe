//! Command-line front-end for the exact automata toolkit.
//!
//! Exit codes: 0 for affirmative verdicts (equivalent, zero, minimal, equal
//! values), 1 for negative verdicts (a witness is printed when the chosen
//! method produces one), 2 for usage or input errors.

pub mod format;
pub mod report;

use clap::{Parser, Subcommand, ValueEnum};
use format::{parse_automaton, render_wfa, Automaton};
use qwa::circuit::{acit_equal, Circuit};
use qwa::minimize::{is_minimal, minimize, MinimizeMode};
use qwa::pra::{
    acceptance_value, distribution_equivalent, expectation_equivalent, expected_reward_eps,
    CheckMethod, PRA,
};
use qwa::randomized::{zero_isolation, zero_sz, zero_sz_cex, Method, ZeroResult};
use qwa::rational::Q;
use qwa::vpa::{vpa_equivalent, vpa_evaluate, VpaVerdict, WVPA};
use qwa::wfa::{equivalent_det, is_zero_det, EquivResult, Verdict, Witness, Word, WFA};
use qwa::RandomSource;
use report::{Report, WitnessReport};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

#[derive(Parser, Debug)]
#[command(
    name = "qwa",
    version,
    about = "Exact equivalence, zeroness and minimisation for Q-weighted automata",
    disable_help_subcommand = true
)]
struct Cli {
    /// Emit the report as a single JSON object.
    #[arg(long, global = true)]
    json: bool,
    /// Refuse randomized methods where a deterministic one exists.
    #[arg(long, global = true)]
    require_deterministic: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Default)]
enum MethodArg {
    #[default]
    Det,
    Sz,
    SzCex,
    Isolation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Default)]
enum ModeArg {
    #[default]
    Det,
    Rand,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PraModeArg {
    Expectation,
    Distribution,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate an automaton on a word given as symbol labels.
    Eval {
        file: PathBuf,
        /// Word symbols; empty for the empty word.
        word: Vec<String>,
    },
    /// Decide zeroness of a weighted automaton.
    Zero {
        file: PathBuf,
        #[arg(long, value_enum, default_value_t)]
        method: MethodArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Error parameter of the random-evaluation methods.
        #[arg(long, default_value_t = 10)]
        k: u64,
        #[arg(long, default_value_t = 1)]
        trials: u32,
    },
    /// Decide equivalence of two weighted automata.
    Equiv {
        left: PathBuf,
        right: PathBuf,
        #[arg(long, value_enum, default_value_t)]
        method: MethodArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 10)]
        k: u64,
        #[arg(long, default_value_t = 1)]
        trials: u32,
    },
    /// Decide whether a weighted automaton is minimal.
    Minimal { file: PathBuf },
    /// Minimise a weighted automaton and write the result.
    Minimize {
        file: PathBuf,
        /// Output path; defaults to stdout inclusion in the report only.
        #[arg(long, short)]
        output: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t)]
        mode: ModeArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Error parameter for the randomized basis draws; defaults to 3n.
        #[arg(long)]
        k: Option<u64>,
    },
    /// Decide equivalence of two probabilistic reward automata.
    PraEquiv {
        left: PathBuf,
        right: PathBuf,
        #[arg(long, value_enum)]
        mode: PraModeArg,
        #[arg(long, value_enum, default_value_t)]
        method: MethodArg,
        #[arg(long)]
        trials: Option<u32>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 10)]
        k: u64,
    },
    /// Decide equivalence of two weighted visibly pushdown automata.
    VpaEquiv {
        left: PathBuf,
        right: PathBuf,
        /// Number of random primes.
        #[arg(long, default_value_t = 10)]
        trials: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Decide whether two arithmetic circuits compute the same number.
    Acit {
        left: PathBuf,
        right: PathBuf,
        /// Number of random primes.
        #[arg(long, default_value_t = 10)]
        trials: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

/// Affirmative verdicts exit 0, negative ones exit 1, errors exit 2.
pub const EXIT_AFFIRMATIVE: i32 = 0;
pub const EXIT_NEGATIVE: i32 = 1;
pub const EXIT_ERROR: i32 = 2;

struct Failure {
    message: String,
}

impl Failure {
    fn new(message: impl Into<String>) -> Self {
        Failure {
            message: message.into(),
        }
    }
}

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure {
            message: e.to_string(),
        }
    }
}

/// Runs the command line given as argv (including the program name),
/// writing the report to `out` and diagnostics to `err`.
pub fn run(
    args: impl IntoIterator<Item = String>,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> i32 {
    let started = Instant::now();
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests are not errors.
            if e.use_stderr() {
                let _ = write!(err, "{e}");
                return EXIT_ERROR;
            }
            let _ = write!(out, "{e}");
            return 0;
        }
    };
    let json = cli.json;
    let result = dispatch(cli);
    let code = match result {
        Ok((code, report)) => {
            let _ = write!(out, "{}", report.render(json));
            code
        }
        Err(failure) => {
            let _ = writeln!(err, "error: {}", failure.message);
            EXIT_ERROR
        }
    };
    let _ = writeln!(err, "elapsed: {}ms", started.elapsed().as_millis());
    code
}

fn read_file(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path)
        .map_err(|e| Failure::new(format!("{}: {e}", path.display())))
}

fn load_automaton(path: &Path) -> Result<Automaton, Failure> {
    let text = read_file(path)?;
    parse_automaton(&text).map_err(|e| Failure::new(format!("{}: {e}", path.display())))
}

fn load_wfa(path: &Path) -> Result<WFA, Failure> {
    match load_automaton(path)? {
        Automaton::Wfa(a) => Ok(a),
        other => Err(Failure::new(format!(
            "{}: expected a wfa file, found {}",
            path.display(),
            other.kind()
        ))),
    }
}

fn load_pra(path: &Path) -> Result<PRA, Failure> {
    match load_automaton(path)? {
        Automaton::Pra(a) => Ok(a),
        other => Err(Failure::new(format!(
            "{}: expected a pra file, found {}",
            path.display(),
            other.kind()
        ))),
    }
}

fn load_vpa(path: &Path) -> Result<WVPA, Failure> {
    match load_automaton(path)? {
        Automaton::Vpa(a) => Ok(a),
        other => Err(Failure::new(format!(
            "{}: expected a vpa file, found {}",
            path.display(),
            other.kind()
        ))),
    }
}

fn load_circuit(path: &Path) -> Result<Circuit, Failure> {
    let text = read_file(path)?;
    Circuit::parse(&text).map_err(|e| Failure::new(format!("{}: {e}", path.display())))
}

fn method_to_library(method: MethodArg, k: u64, trials: u32) -> Option<Method> {
    match method {
        MethodArg::Det => None,
        MethodArg::Sz => Some(Method::Sz { k_param: k, trials }),
        MethodArg::SzCex => Some(Method::SzCex { k_param: k, trials }),
        MethodArg::Isolation => Some(Method::Isolation { trials }),
    }
}

fn words_to_ids(
    labels: &[String],
    lookup: impl Fn(&str) -> Option<usize>,
) -> Result<Word, Failure> {
    labels
        .iter()
        .map(|l| lookup(l).ok_or_else(|| Failure::new(format!("unknown symbol `{l}`"))))
        .collect()
}

fn witness_report(word: &str, values: &[Q]) -> WitnessReport {
    WitnessReport {
        word: word.to_string(),
        values: values.iter().map(|v| v.to_string()).collect(),
    }
}

fn equiv_to_report(
    mut report: Report,
    result: &EquivResult,
    format_word: impl Fn(&Word) -> String,
) -> (i32, Report) {
    match &result.verdict {
        Verdict::Equivalent => {
            report.verdict = "equivalent".into();
            (EXIT_AFFIRMATIVE, report)
        }
        Verdict::ProbablyEquivalent { confidence } => {
            report.verdict = "probably_equivalent".into();
            report.confidence = Some(confidence.to_string());
            (EXIT_AFFIRMATIVE, report)
        }
        Verdict::Inequivalent => {
            report.verdict = "inequivalent".into();
            if let Some(Witness { word, left, right }) = &result.witness {
                report.witness =
                    Some(witness_report(&format_word(word), &[left.clone(), right.clone()]));
            }
            report.differing_length = result.differing_length;
            (EXIT_NEGATIVE, report)
        }
    }
}

fn dispatch(cli: Cli) -> Result<(i32, Report), Failure> {
    match cli.command {
        Command::Eval { file, word } => eval_command(&file, &word),
        Command::Zero {
            file,
            method,
            seed,
            k,
            trials,
        } => {
            let method = if cli.require_deterministic {
                MethodArg::Det
            } else {
                method
            };
            zero_command(&file, method, seed, k, trials)
        }
        Command::Equiv {
            left,
            right,
            method,
            seed,
            k,
            trials,
        } => {
            let method = if cli.require_deterministic {
                MethodArg::Det
            } else {
                method
            };
            equiv_command(&left, &right, method, seed, k, trials)
        }
        Command::Minimal { file } => {
            let a = load_wfa(&file)?;
            let minimal = is_minimal(&a);
            let mut report = Report::new("minimal", if minimal { "minimal" } else { "not_minimal" });
            report.states = Some(a.states());
            Ok((
                if minimal { EXIT_AFFIRMATIVE } else { EXIT_NEGATIVE },
                report,
            ))
        }
        Command::Minimize {
            file,
            output,
            mode,
            seed,
            k,
        } => {
            let a = load_wfa(&file)?;
            let mode = match mode {
                ModeArg::Det => MinimizeMode::Deterministic,
                ModeArg::Rand => {
                    if cli.require_deterministic {
                        MinimizeMode::Deterministic
                    } else {
                        MinimizeMode::Randomized {
                            k_param: k,
                            retries: 5,
                        }
                    }
                }
            };
            let mut rng = RandomSource::new(seed);
            let minimized = minimize(&a, mode, &mut rng);
            let rendered = render_wfa(&minimized);
            let mut report = Report::new("minimize", "minimized");
            report.states = Some(minimized.states());
            if matches!(mode, MinimizeMode::Randomized { .. }) {
                report.seed = Some(seed);
            }
            match &output {
                Some(path) => {
                    std::fs::write(path, rendered)
                        .map_err(|e| Failure::new(format!("{}: {e}", path.display())))?;
                    report.output_path = Some(path.display().to_string());
                }
                None => {
                    report.value = Some(rendered);
                }
            }
            Ok((EXIT_AFFIRMATIVE, report))
        }
        Command::PraEquiv {
            left,
            right,
            mode,
            method,
            trials,
            seed,
            k,
        } => pra_equiv_command(
            &left,
            &right,
            mode,
            method,
            trials,
            seed,
            k,
            cli.require_deterministic,
        ),
        Command::VpaEquiv {
            left,
            right,
            trials,
            seed,
        } => {
            if cli.require_deterministic {
                return Err(Failure::new(
                    "vpa-equiv has no deterministic method; drop --require-deterministic",
                ));
            }
            let a = load_vpa(&left)?;
            let b = load_vpa(&right)?;
            let mut rng = RandomSource::new(seed);
            let verdict = vpa_equivalent(&a, &b, trials, &mut rng)?;
            let mut report = Report::new("vpa-equiv", "");
            report.seed = Some(seed);
            match verdict {
                VpaVerdict::ProbablyEquivalent { primes } => {
                    report.verdict = "probably_equivalent".into();
                    report.primes = Some(primes);
                    Ok((EXIT_AFFIRMATIVE, report))
                }
                VpaVerdict::Inequivalent { prime } => {
                    report.verdict = "inequivalent".into();
                    report.mismatch_prime = Some(prime);
                    Ok((EXIT_NEGATIVE, report))
                }
            }
        }
        Command::Acit {
            left,
            right,
            trials,
            seed,
        } => {
            if cli.require_deterministic {
                return Err(Failure::new(
                    "acit has no deterministic method; drop --require-deterministic",
                ));
            }
            let c1 = load_circuit(&left)?;
            let c2 = load_circuit(&right)?;
            let mut rng = RandomSource::new(seed);
            let verdict = acit_equal(&c1, &c2, trials, &mut rng);
            let mut report = Report::new("acit", if verdict.equal { "equal" } else { "not_equal" });
            report.seed = Some(seed);
            report.primes = Some(verdict.primes);
            report.mismatch_prime = verdict.mismatch;
            report.substitution = verdict.substitution;
            Ok((
                if verdict.equal {
                    EXIT_AFFIRMATIVE
                } else {
                    EXIT_NEGATIVE
                },
                report,
            ))
        }
    }
}

fn eval_command(file: &Path, word: &[String]) -> Result<(i32, Report), Failure> {
    let automaton = load_automaton(file)?;
    let mut report = Report::new("eval", "value");
    match automaton {
        Automaton::Wfa(a) => {
            let ids = words_to_ids(word, |l| a.alphabet().id_of(l))?;
            report.value = Some(a.evaluate(&ids)?.to_string());
        }
        Automaton::Pra(a) => {
            // The word is over the silent-free alphabet; the report carries
            // the acceptance probability and the expected reward vector.
            let ids = words_to_ids(word, |l| {
                if l == qwa::pra::EPSILON_LABEL {
                    None
                } else {
                    a.alphabet().id_of(l).map(|id| {
                        match a.epsilon() {
                            Some(eps) if id > eps => id - 1,
                            _ => id,
                        }
                    })
                }
            })?;
            report.value = Some(acceptance_value(&a, &ids)?.to_string());
            let rewards = (0..a.reward_types())
                .map(|j| expected_reward_eps(&a, &ids, j).map(|q| q.to_string()))
                .collect::<Result<Vec<_>, _>>()?;
            report.values = Some(rewards);
        }
        Automaton::Vpa(a) => {
            let ids = words_to_ids(word, |l| a.alphabet().id_of(l))?;
            report.value = Some(vpa_evaluate(&a, &ids)?.to_string());
        }
    }
    Ok((EXIT_AFFIRMATIVE, report))
}

fn zero_command(
    file: &Path,
    method: MethodArg,
    seed: u64,
    k: u64,
    trials: u32,
) -> Result<(i32, Report), Failure> {
    let a = load_wfa(file)?;
    let mut report = Report::new("zero", "");
    let format_word = |w: &Word| a.alphabet().format_word(w);
    match method {
        MethodArg::Det => match is_zero_det(&a) {
            None => {
                report.verdict = "zero".into();
                Ok((EXIT_AFFIRMATIVE, report))
            }
            Some(word) => {
                let value = a.evaluate(&word)?;
                report.verdict = "nonzero".into();
                report.witness = Some(witness_report(&format_word(&word), &[value]));
                Ok((EXIT_NEGATIVE, report))
            }
        },
        _ => {
            report.seed = Some(seed);
            let mut rng = RandomSource::new(seed);
            let outcome = match method {
                MethodArg::Sz => {
                    let mut last = zero_sz(&a, k, &mut rng.derive(0));
                    for t in 1..trials {
                        if last.is_nonzero() {
                            break;
                        }
                        last = zero_sz(&a, k, &mut rng.derive(t as u64));
                    }
                    last
                }
                MethodArg::SzCex => {
                    let mut last = zero_sz_cex(&a, k, &mut rng.derive(0));
                    for t in 1..trials {
                        if last.is_nonzero() {
                            break;
                        }
                        last = zero_sz_cex(&a, k, &mut rng.derive(t as u64));
                    }
                    last
                }
                MethodArg::Isolation => zero_isolation(&a, trials, &mut rng),
                MethodArg::Det => unreachable!(),
            };
            match outcome {
                ZeroResult::ProbablyZero { confidence } => {
                    report.verdict = "probably_zero".into();
                    report.confidence = Some(confidence.to_string());
                    Ok((EXIT_AFFIRMATIVE, report))
                }
                ZeroResult::Nonzero(evidence) => {
                    report.verdict = "nonzero".into();
                    if let (Some(word), Some(value)) = (&evidence.witness, &evidence.value) {
                        report.witness =
                            Some(witness_report(&format_word(word), &[value.clone()]));
                    }
                    report.differing_length = evidence.length;
                    Ok((EXIT_NEGATIVE, report))
                }
            }
        }
    }
}

fn equiv_command(
    left: &Path,
    right: &Path,
    method: MethodArg,
    seed: u64,
    k: u64,
    trials: u32,
) -> Result<(i32, Report), Failure> {
    let a = load_wfa(left)?;
    let b = load_wfa(right)?;
    let mut report = Report::new("equiv", "");
    let result = match method_to_library(method, k, trials) {
        None => equivalent_det(&a, &b)?,
        Some(m) => {
            report.seed = Some(seed);
            let mut rng = RandomSource::new(seed);
            qwa::randomized::equivalent_randomized(&a, &b, m, &mut rng)?
        }
    };
    let alphabet = a.alphabet().clone();
    Ok(equiv_to_report(report, &result, move |w| {
        alphabet.format_word(w)
    }))
}

#[allow(clippy::too_many_arguments)]
fn pra_equiv_command(
    left: &Path,
    right: &Path,
    mode: PraModeArg,
    method: MethodArg,
    trials: Option<u32>,
    seed: u64,
    k: u64,
    require_deterministic: bool,
) -> Result<(i32, Report), Failure> {
    let a = load_pra(left)?;
    let b = load_pra(right)?;
    let mut report = Report::new("pra-equiv", "");
    match mode {
        PraModeArg::Expectation => {
            let method = if require_deterministic {
                MethodArg::Det
            } else {
                method
            };
            let check = match method_to_library(method, k, trials.unwrap_or(1)) {
                None => CheckMethod::Deterministic,
                Some(m) => {
                    report.seed = Some(seed);
                    CheckMethod::Randomized(m)
                }
            };
            let mut rng = RandomSource::new(seed);
            let outcome = expectation_equivalent(&a, &b, check, &mut rng)?;
            report.component = outcome.component;
            // Witness words of silent automata are over the folded alphabet.
            let labels: Vec<String> = a
                .alphabet()
                .labels()
                .iter()
                .filter(|l| l.as_str() != qwa::pra::EPSILON_LABEL)
                .cloned()
                .collect();
            Ok(equiv_to_report(report, &outcome.result, move |w| {
                if w.is_empty() {
                    "ε".to_string()
                } else {
                    w.iter()
                        .map(|&id| labels[id].as_str())
                        .collect::<Vec<_>>()
                        .join(" ")
                }
            }))
        }
        PraModeArg::Distribution => {
            if require_deterministic {
                return Err(Failure::new(
                    "distribution equivalence has no deterministic method; \
                     drop --require-deterministic",
                ));
            }
            report.seed = Some(seed);
            let mut rng = RandomSource::new(seed);
            let result = distribution_equivalent(&a, &b, trials.unwrap_or(2), &mut rng)?;
            let alphabet = a.alphabet().clone();
            Ok(equiv_to_report(report, &result, move |w| {
                alphabet.format_word(w)
            }))
        }
    }
}
