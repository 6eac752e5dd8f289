//! The JSON report and its companion CSV files.

use opdomain::{Finding, Verdict, Witness};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tool {
    pub name: String,
    pub version: String,
}

impl Default for Tool {
    fn default() -> Self {
        Tool {
            name: "opdomain".into(),
            version: env!("CARGO_PKG_VERSION").into(),
        }
    }
}

/// One certificate: the result it instantiates, its findings and the
/// conclusion drawn from them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stage {
    pub stage: String,
    pub result: String,
    pub verdict: Verdict,
    pub conclusion: String,
    pub checks: Vec<Finding>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub csv: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub tool: Tool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<String>,
    /// The resolved configuration, with defaults filled in.
    pub job: serde_json::Value,
    pub stages: Vec<Stage>,
    pub overall: Verdict,
    pub exit_code: i32,
}

/// 0 when everything passes, 1 on any failure, 2 when the worst outcome is
/// inconclusive.
pub fn exit_code(v: Verdict) -> i32 {
    match v {
        Verdict::Pass => 0,
        Verdict::Fail => 1,
        Verdict::Inconclusive => 2,
    }
}

/// Exit code for configuration, usage and runtime errors.
pub const EXIT_ERROR: i32 = 3;

pub fn format_witness(w: &Witness) -> String {
    let list = |x: &[f64]| x.iter().map(|v| format!("{v}")).collect::<Vec<_>>().join(", ");
    match w {
        Witness::Entry { k, l } => format!("entry (k, l) = ({k}, {l})"),
        Witness::Pair { l, r } => format!("pair (l, r) = ({l}, {r})"),
        Witness::Point { x } => format!("point x = ({})", list(x)),
        Witness::Ray { direction } => format!("ray direction ({})", list(direction)),
        Witness::Monomial { term } => format!("monomial {term}"),
        Witness::Index { n } => format!("n = {n}"),
    }
}

impl Report {
    /// Human-readable summary, one line per check.
    pub fn summary(&self) -> String {
        let mut out = String::new();
        for s in &self.stages {
            out.push_str(&format!("[{}] {}: {}\n", s.stage, s.result, s.verdict));
            for f in &s.checks {
                out.push_str(&format!("  {:<12} {}", f.verdict.as_str(), f.label));
                if let Some(w) = &f.witness {
                    out.push_str(&format!("  witness {}", format_witness(w)));
                }
                out.push('\n');
            }
            out.push_str(&format!("  => {}\n", s.conclusion));
        }
        out.push_str(&format!("overall: {} (exit {})\n", self.overall, self.exit_code));
        out
    }

    pub fn all_checks(&self) -> impl Iterator<Item = &Finding> {
        self.stages.iter().flat_map(|s| s.checks.iter())
    }
}
