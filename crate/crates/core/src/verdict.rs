use serde::{Deserialize, Serialize};

/// Three-valued outcome of a check on finite evidence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

impl Verdict {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    /// Conjunction: any fail wins, then any inconclusive, else pass.
    pub fn all<I: IntoIterator<Item = Verdict>>(items: I) -> Self {
        let mut out = Verdict::Pass;
        for v in items {
            match v {
                Verdict::Fail => return Verdict::Fail,
                Verdict::Inconclusive => out = Verdict::Inconclusive,
                Verdict::Pass => {}
            }
        }
        out
    }

    pub fn is_pass(self) -> bool {
        self == Verdict::Pass
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Where a check located its strongest counterexample or extremum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum Witness {
    /// Matrix entry, 1-based.
    Entry { k: usize, l: usize },
    /// Pair of coefficient indices, 1-based.
    Pair { l: usize, r: usize },
    /// Sample point in `ℝ^m`.
    Point { x: Vec<f64> },
    /// Ray direction along which a quantity grows.
    Ray { direction: Vec<f64> },
    Monomial { term: String },
    /// Index of a sampled parameter (e.g. `n`).
    Index { n: u64 },
}

/// One labelled check with its numeric evidence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Finding {
    pub label: String,
    pub verdict: Verdict,
    pub evidence: std::collections::BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub note: String,
}

impl Finding {
    pub fn new(label: impl Into<String>, verdict: Verdict) -> Self {
        Finding {
            label: label.into(),
            verdict,
            evidence: Default::default(),
            witness: None,
            note: String::new(),
        }
    }

    pub fn with(mut self, key: &str, value: f64) -> Self {
        self.evidence.insert(key.to_owned(), value);
        self
    }

    pub fn witness(mut self, w: Witness) -> Self {
        self.witness = Some(w);
        self
    }

    pub fn maybe_witness(mut self, w: Option<Witness>) -> Self {
        self.witness = w;
        self
    }

    pub fn note(mut self, note: impl Into<String>) -> Self {
        self.note = note.into();
        self
    }
}
