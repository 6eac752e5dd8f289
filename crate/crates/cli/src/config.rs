//! Job configuration: JSON with optional `{"file": path}` indirection for
//! any spec object.

use std::path::{Path, PathBuf};

use num_complex::Complex64 as C64;
use opdomain::approx_unit::UnitFamily;
use opdomain::diffop::DiffopSpec;
use opdomain::matrix_criteria::Route;
use opdomain::operator::{DiagonalSpec, EntryGen, OperatorSpec, PairingSpec, Seq};
use opdomain::Settings;
use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum JobKind {
    CheckMatrix,
    CheckDiffop,
    ApproxUnit,
    Oracle,
    All,
}

impl JobKind {
    pub fn as_str(self) -> &'static str {
        match self {
            JobKind::CheckMatrix => "check-matrix",
            JobKind::CheckDiffop => "check-diffop",
            JobKind::ApproxUnit => "approx-unit",
            JobKind::Oracle => "oracle",
            JobKind::All => "all",
        }
    }
}

fn default_z() -> C64 {
    C64::new(0.0, 1.0)
}

fn default_lp_sizes() -> Vec<usize> {
    vec![16, 32, 64, 128, 256, 512, 1024, 2048, 4096]
}

/// Weyl limit-point probe for a Jacobi matrix. `diag`/`offdiag` default to
/// the operator's own when it is a Jacobi generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LimitPointSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diag: Option<Seq>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub offdiag: Option<Seq>,
    #[serde(default = "default_z")]
    pub z: C64,
    #[serde(default = "default_lp_sizes")]
    pub sizes: Vec<usize>,
}

fn default_window() -> usize {
    256
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HSymmetrySpec {
    #[serde(default = "default_window")]
    pub window: usize,
}

fn default_lo() -> usize {
    1
}

fn default_random() -> usize {
    4
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphRatioSpec {
    #[serde(default = "default_lo")]
    pub lo: usize,
    #[serde(default = "default_window")]
    pub hi: usize,
    #[serde(default = "default_random")]
    pub random: usize,
}

fn default_w() -> C64 {
    C64::new(0.0, 1.0)
}

fn default_resolvent_sizes() -> Vec<usize> {
    vec![256, 512, 1024, 2048]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResolventSpec {
    #[serde(default = "default_z")]
    pub z: C64,
    #[serde(default = "default_w")]
    pub w: C64,
    #[serde(default = "default_resolvent_sizes")]
    pub sizes: Vec<usize>,
}

/// Independent oracle probes; each one is optional.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub limit_point: Option<LimitPointSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h_symmetry: Option<HSymmetrySpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub graph_ratio: Option<GraphRatioSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resolvent: Option<ResolventSpec>,
}

impl OracleSpec {
    pub fn is_empty(&self) -> bool {
        self.limit_point.is_none()
            && self.h_symmetry.is_none()
            && self.graph_ratio.is_none()
            && self.resolvent.is_none()
    }
}

fn default_report() -> String {
    "report.json".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    #[serde(default = "default_report")]
    pub report: String,
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec {
            dir: None,
            report: default_report(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobConfig {
    pub job: JobKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub operator: Option<OperatorSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pairing: Option<PairingSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagonal: Option<DiagonalSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub route: Option<Route>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unit: Option<UnitFamily>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diffop: Option<DiffopSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleSpec>,
    #[serde(default)]
    pub settings: Settings,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output: OutputSpec,
    /// Copied into the report verbatim; reports carry no clock reading
    /// otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<String>,
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}:{line}:{column}: {msg}", location(path))]
    Syntax { path: Option<PathBuf>, line: usize, column: usize, msg: String },
    #[error("at `{path}`: {msg}")]
    Field { path: String, msg: String },
    #[error("{0}")]
    Invalid(String),
}

fn location(path: &Option<PathBuf>) -> String {
    path.as_ref().map_or_else(|| "<config>".into(), |p| p.display().to_string())
}

fn parse_json(text: &str, path: Option<&Path>) -> Result<Value, ConfigError> {
    serde_json::from_str(text).map_err(|e| ConfigError::Syntax {
        path: path.map(Path::to_path_buf),
        line: e.line(),
        column: e.column(),
        msg: e.to_string(),
    })
}

fn read_json(path: &Path) -> Result<Value, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_json(&text, Some(path))
}

/// Replaces every `{"file": "..."}` object by the JSON it points to,
/// relative to `base`. Nested references resolve against their own file.
fn resolve_refs(v: Value, base: &Path, depth: usize) -> Result<Value, ConfigError> {
    if depth > 16 {
        return Err(ConfigError::Invalid("file references nest deeper than 16 levels".into()));
    }
    match v {
        Value::Object(map) => {
            if map.len() == 1 {
                if let Some(Value::String(rel)) = map.get("file") {
                    let path = base.join(rel);
                    let inner = read_json(&path)?;
                    let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
                    return resolve_refs(inner, &dir, depth + 1);
                }
            }
            let mut out = serde_json::Map::with_capacity(map.len());
            for (k, v) in map {
                out.insert(k, resolve_refs(v, base, depth)?);
            }
            Ok(Value::Object(out))
        }
        Value::Array(items) => items
            .into_iter()
            .map(|v| resolve_refs(v, base, depth))
            .collect::<Result<Vec<_>, _>>()
            .map(Value::Array),
        other => Ok(other),
    }
}

impl JobConfig {
    /// Reads, resolves and validates a configuration file.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let v = read_json(path)?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_value(v, &base)
    }

    /// Parses configuration text; file references resolve against `base`.
    pub fn from_str_in(text: &str, base: &Path) -> Result<Self, ConfigError> {
        Self::from_value(parse_json(text, None)?, base)
    }

    fn from_value(v: Value, base: &Path) -> Result<Self, ConfigError> {
        let v = resolve_refs(v, base, 0)?;
        let cfg: JobConfig = serde_path_to_error::deserialize(v).map_err(|e| ConfigError::Field {
            path: e.path().to_string(),
            msg: e.into_inner().to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Checks that the job kind has the specs it needs and that the specs
    /// are internally consistent.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let need = |present: bool, what: &str| {
            if present {
                Ok(())
            } else {
                Err(ConfigError::Invalid(format!(
                    "job `{}` needs an `{what}` section",
                    self.job.as_str()
                )))
            }
        };
        match self.job {
            JobKind::CheckMatrix | JobKind::ApproxUnit => need(self.operator.is_some(), "operator")?,
            JobKind::CheckDiffop => need(self.diffop.is_some(), "diffop")?,
            JobKind::Oracle => need(self.oracle.as_ref().is_some_and(|o| !o.is_empty()), "oracle")?,
            JobKind::All => {
                if self.operator.is_none() && self.diffop.is_none() && self.oracle.is_none() {
                    return Err(ConfigError::Invalid(
                        "job `all` needs at least one of `operator`, `diffop`, `oracle`".into(),
                    ));
                }
            }
        }
        let invalid = |what: &str, e: opdomain::Error| ConfigError::Invalid(format!("{what}: {e}"));
        if let Some(op) = &self.operator {
            op.validate().map_err(|e| invalid("operator", e))?;
        }
        if let Some(p) = &self.pairing {
            p.h.check().map_err(|e| invalid("pairing.h", e))?;
            p.g.check().map_err(|e| invalid("pairing.g", e))?;
        }
        if let Some(d) = &self.diffop {
            d.validate().map_err(|e| invalid("diffop", e))?;
        }
        if let Some(o) = &self.oracle {
            let uses_operator = o.h_symmetry.is_some() || o.graph_ratio.is_some() || o.resolvent.is_some();
            if uses_operator && self.operator.is_none() {
                return Err(ConfigError::Invalid(
                    "oracle probes h_symmetry, graph_ratio and resolvent need an `operator`".into(),
                ));
            }
            if let Some(lp) = &o.limit_point {
                if (lp.diag.is_none() || lp.offdiag.is_none()) && self.jacobi_coefficients().is_none() {
                    return Err(ConfigError::Invalid(
                        "oracle.limit_point needs `diag` and `offdiag` unless the operator is a Jacobi matrix".into(),
                    ));
                }
            }
        }
        let s = &self.settings;
        if s.ladder.is_empty() || s.ladder.contains(&0) {
            return Err(ConfigError::Invalid("settings.ladder must list positive window sizes".into()));
        }
        if s.n_values.is_empty() {
            return Err(ConfigError::Invalid("settings.n_values must not be empty".into()));
        }
        Ok(())
    }

    pub fn pairing_or_identity(&self) -> PairingSpec {
        self.pairing.clone().unwrap_or_else(PairingSpec::identity)
    }

    pub fn diagonal_or_index(&self) -> DiagonalSpec {
        self.diagonal.clone().unwrap_or_default()
    }

    pub fn route_or_default(&self) -> Route {
        self.route.unwrap_or(Route::Explicit { m: 1 })
    }

    /// `(diag, offdiag)` when the operator is a Jacobi generator.
    pub fn jacobi_coefficients(&self) -> Option<(Seq, Seq)> {
        match &self.operator.as_ref()?.entries {
            EntryGen::Jacobi { diag, offdiag } => Some((diag.clone(), offdiag.clone())),
            _ => None,
        }
    }

    /// Applies command-line overrides.
    pub fn apply_overrides(&mut self, seed: Option<u64>, max_window: Option<usize>, out: Option<PathBuf>) {
        if let Some(s) = seed {
            self.seed = s;
        }
        if let Some(n) = max_window {
            self.settings = std::mem::take(&mut self.settings).with_max_window(n);
        }
        if let Some(dir) = out {
            self.output.dir = Some(dir);
        }
    }
}
