//! Structured result reports. The JSON and pretty renderings carry the same
//! facts; timing is written to stderr by the driver so reports for a fixed
//! seed and input are byte-identical across runs.

use serde::Serialize;

#[derive(Debug, Clone, Serialize, PartialEq, Eq)]
pub struct WitnessReport {
    /// Space-separated symbol labels; the empty word renders as "ε".
    pub word: String,
    /// One value for zeroness witnesses, two for equivalence witnesses.
    pub values: Vec<String>,
}

#[derive(Debug, Clone, Serialize, PartialEq, Eq, Default)]
pub struct Report {
    pub command: String,
    pub verdict: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub confidence: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<WitnessReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub differing_length: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub component: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub states: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_path: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub primes: Option<Vec<u64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mismatch_prime: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub substitution: Option<Vec<u64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl Report {
    pub fn new(command: &str, verdict: &str) -> Self {
        Report {
            command: command.to_string(),
            verdict: verdict.to_string(),
            ..Report::default()
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn to_pretty(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("verdict: {}\n", self.verdict));
        if let Some(c) = &self.confidence {
            out.push_str(&format!("confidence: {c}\n"));
        }
        if let Some(w) = &self.witness {
            out.push_str(&format!("witness: {}\n", w.word));
            match w.values.as_slice() {
                [v] => out.push_str(&format!("  value: {v}\n")),
                [l, r] => {
                    out.push_str(&format!("  left:  {l}\n"));
                    out.push_str(&format!("  right: {r}\n"));
                }
                vs => {
                    for v in vs {
                        out.push_str(&format!("  value: {v}\n"));
                    }
                }
            }
        }
        if let Some(l) = self.differing_length {
            out.push_str(&format!("differing length: {l}\n"));
        }
        if let Some(c) = self.component {
            out.push_str(&format!("reward component: {c}\n"));
        }
        if let Some(v) = &self.value {
            out.push_str(&format!("value: {v}\n"));
        }
        if let Some(vs) = &self.values {
            out.push_str(&format!("values: {}\n", vs.join(" ")));
        }
        if let Some(n) = self.states {
            out.push_str(&format!("states: {n}\n"));
        }
        if let Some(p) = &self.output_path {
            out.push_str(&format!("written: {p}\n"));
        }
        if let Some(ps) = &self.primes {
            let rendered: Vec<String> = ps.iter().map(|p| p.to_string()).collect();
            out.push_str(&format!("primes: {}\n", rendered.join(" ")));
        }
        if let Some(p) = self.mismatch_prime {
            out.push_str(&format!("mismatch prime: {p}\n"));
        }
        if let Some(sub) = &self.substitution {
            let rendered: Vec<String> = sub.iter().map(|v| v.to_string()).collect();
            out.push_str(&format!("substitution: {}\n", rendered.join(" ")));
        }
        if let Some(s) = self.seed {
            out.push_str(&format!("seed: {s}\n"));
        }
        out
    }

    pub fn render(&self, json: bool) -> String {
        if json {
            self.to_json()
        } else {
            self.to_pretty()
        }
    }
}
