//! Executes a job and collects its report and CSV files.

use std::path::{Path, PathBuf};

use num_complex::Complex64 as C64;
use opdomain::approx_unit::{self, UnitFamily};
use opdomain::diffop::{self, rays_csv, DiffopResult};
use opdomain::matrix_criteria::{certify_h_selfadjoint, Route};
use opdomain::operator::{Entries, Window};
use opdomain::oracle;
use opdomain::{Finding, Settings, Verdict, Witness};

use crate::config::{JobConfig, JobKind};
use crate::report::{exit_code, Report, Stage, Tool};

/// A finished job: the report plus `(file name, contents)` CSV pairs.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub report: Report,
    pub csv: Vec<(String, String)>,
}

pub const DEFAULT_OUT_DIR: &str = "opdomain-out";

fn settings_of(cfg: &JobConfig) -> Settings {
    let mut s = cfg.settings.clone();
    s.norm.seed = cfg.seed;
    s
}

struct Collector {
    stages: Vec<Stage>,
    csv: Vec<(String, String)>,
}

impl Collector {
    fn push(&mut self, mut stage: Stage, files: Vec<(String, String)>) {
        for (name, body) in files {
            let name = format!("{}_{name}", stage.stage.replace('-', "_"));
            stage.csv.push(name.clone());
            self.csv.push((name, body));
        }
        self.stages.push(stage);
    }
}

pub fn run(cfg: &JobConfig) -> opdomain::Result<Outcome> {
    let settings = settings_of(cfg);
    let mut col = Collector {
        stages: Vec::new(),
        csv: Vec::new(),
    };
    let all = cfg.job == JobKind::All;
    if cfg.job == JobKind::CheckMatrix || (all && cfg.operator.is_some()) {
        let (s, f) = matrix_stage(cfg, &settings)?;
        col.push(s, f);
    }
    if cfg.job == JobKind::ApproxUnit || (all && cfg.operator.is_some() && cfg.unit.is_some()) {
        let (s, f) = approx_unit_stage(cfg, &settings)?;
        col.push(s, f);
    }
    if cfg.job == JobKind::CheckDiffop || (all && cfg.diffop.is_some()) {
        let (s, f) = diffop_stage(cfg)?;
        col.push(s, f);
    }
    if cfg.job == JobKind::Oracle || (all && cfg.oracle.is_some()) {
        let (s, f) = oracle_stage(cfg, &settings)?;
        col.push(s, f);
    }

    let overall = Verdict::all(col.stages.iter().map(|s| s.verdict));
    let mut echo = cfg.clone();
    echo.output.dir = None;
    echo.timestamp = None;
    let report = Report {
        tool: Tool::default(),
        timestamp: cfg.timestamp.clone(),
        job: serde_json::to_value(&echo).expect("configuration serializes"),
        stages: col.stages,
        overall,
        exit_code: exit_code(overall),
    };
    Ok(Outcome { report, csv: col.csv })
}

type StageOut = (Stage, Vec<(String, String)>);

fn matrix_stage(cfg: &JobConfig, settings: &Settings) -> opdomain::Result<StageOut> {
    let a = cfg.operator.as_ref().expect("validated");
    let pair = cfg.pairing_or_identity();
    let r = certify_h_selfadjoint(a, &pair, &cfg.diagonal_or_index(), cfg.route_or_default(), settings)?;
    let mut files = Vec::new();
    let p = pair.p as i64;
    for (i, b) in r.m1.iter().enumerate() {
        files.push((format!("m1_q{}.csv", i as i64 - p), b.csv()));
    }
    if let Some(b) = &r.m2 {
        files.push(("m2.csv".into(), b.csv()));
    }
    files.push(("komintro.csv".into(), r.komintro.csv()));
    let stage = Stage {
        stage: "check-matrix".into(),
        result: "Proposition (infinite H-selfadjoint matrices)".into(),
        verdict: r.overall,
        conclusion: r.conclusion.clone(),
        checks: r.findings().into_iter().cloned().collect(),
        csv: Vec::new(),
    };
    Ok((stage, files))
}

fn unit_family(cfg: &JobConfig, settings: &Settings) -> UnitFamily {
    cfg.unit.clone().unwrap_or_else(|| {
        let m = match cfg.route_or_default() {
            Route::Explicit { m } => m,
            Route::Modakl { s, .. } => opdomain::matrix_criteria::suggested_m(s),
        };
        UnitFamily::resolvent_power(cfg.diagonal_or_index(), m, settings.n_values.clone())
    })
}

/// Window used for the dense adjoint-symmetry comparison.
const KOMCOND_WINDOW: usize = 64;

fn approx_unit_stage(cfg: &JobConfig, settings: &Settings) -> opdomain::Result<StageOut> {
    let a = cfg.operator.as_ref().expect("validated");
    let family = unit_family(cfg, settings);
    let kom = approx_unit::komintro_check(&family, a, settings)?;

    let wot_len = settings.ladder.iter().copied().max().unwrap_or(64);
    let one = C64::new(1.0, 0.0);
    let vectors = vec![vec![one], vec![C64::new(0.0, 0.0), one]];
    let wot = approx_unit::wot_convergence_check(&family, &vectors, &Window::first(wot_len))?;

    let w = Window::first(KOMCOND_WINDOW);
    let mut worst: Option<(u64, approx_unit::KomcondResult)> = None;
    let mut verdicts = Vec::new();
    for &n in &family.n_values {
        let r = approx_unit::komcond_adjoint_symmetry(&family, n, a, &w, &settings.norm)?;
        verdicts.push(r.finding.verdict);
        if worst.as_ref().is_none_or(|(_, b)| r.rel_diff > b.rel_diff) {
            worst = Some((n, r));
        }
    }
    let (n_worst, worst) = worst.expect("n_values is non-empty");
    let komcond = Finding::new("(komcond)", Verdict::all(verdicts))
        .with("max_rel_diff", worst.rel_diff)
        .with("direct", worst.direct)
        .with("adjoint", worst.adjoint)
        .with("window", KOMCOND_WINDOW as f64)
        .witness(Witness::Index { n: n_worst });

    let checks = vec![kom.finding.clone(), wot.finding.clone(), komcond];
    let verdict = Verdict::all(checks.iter().map(|f| f.verdict));
    let verdict_text = match verdict {
        Verdict::Pass => "the family is an approximate unit commuting asymptotically with A: the commutator bound, weak convergence and adjoint symmetry hold on finite evidence",
        Verdict::Inconclusive => "approximate-unit hypotheses inconclusive on finite evidence",
        Verdict::Fail => "an approximate-unit hypothesis fails, no conclusion",
    };
    let conclusion = format!("{verdict_text}; (f1) and (f2), dense definedness of the commutators, are assumed and not checked");
    let mut wot_csv = String::from("n,deviation\n");
    for p in &wot.per_n {
        wot_csv.push_str(&format!("{},{:e}\n", p.n, p.deviation));
    }
    let stage = Stage {
        stage: "approx-unit".into(),
        result: "Theorem (approximate units and adjoint domains)".into(),
        verdict,
        conclusion,
        checks,
        csv: Vec::new(),
    };
    Ok((stage, vec![("komintro.csv".into(), kom.csv()), ("wot.csv".into(), wot_csv)]))
}

fn diffop_stage(cfg: &JobConfig) -> opdomain::Result<StageOut> {
    let spec = cfg.diffop.as_ref().expect("validated");
    let r = diffop::run(spec, cfg.seed)?;
    let mut files: Vec<(String, String)> = r
        .ray_sets()
        .into_iter()
        .map(|(name, rays)| (format!("rays_{name}.csv"), rays_csv(rays)))
        .collect();
    let result = match &r {
        DiffopResult::Dirac(d) => {
            files.push(("holder.csv".into(), d.holder.csv()));
            "Proposition (Dirac-type operators)"
        }
        DiffopResult::FirstOrder(_) => "Proposition (first-order operators with matrix coefficients)",
        DiffopResult::Domination(_) => "Lemma (symbol domination)",
    };
    let stage = Stage {
        stage: "check-diffop".into(),
        result: result.into(),
        verdict: r.overall(),
        conclusion: r.conclusion(),
        checks: r.findings().into_iter().cloned().collect(),
        csv: Vec::new(),
    };
    Ok((stage, files))
}

fn oracle_stage(cfg: &JobConfig, settings: &Settings) -> opdomain::Result<StageOut> {
    let spec = cfg.oracle.as_ref().expect("validated");
    let mut checks = Vec::new();
    let mut conclusions = Vec::new();
    let mut files = Vec::new();

    if let Some(lp) = &spec.limit_point {
        let (d0, o0) = cfg.jacobi_coefficients().unzip();
        let diag = lp.diag.clone().or(d0).expect("validated");
        let offdiag = lp.offdiag.clone().or(o0).expect("validated");
        let r = oracle::jacobi_limit_point_probe(&diag, &offdiag, lp.z, &lp.sizes)?;
        conclusions.push(r.conclusion.clone());
        checks.push(r.finding.clone());
        files.push(("limit_point.csv".into(), r.csv()));
    }
    if let Some(hs) = &spec.h_symmetry {
        let a = cfg.operator.as_ref().expect("validated");
        let r = oracle::finite_h_symmetry_residual(
            a,
            &cfg.pairing_or_identity(),
            &Window::first(hs.window),
            settings.identity_tol,
        )?;
        checks.push(r.finding.clone());
    }
    if let Some(g) = &spec.graph_ratio {
        let a = cfg.operator.as_ref().expect("validated");
        let pad = a.band().map(|b| b.width()).unwrap_or(0);
        let w = Window::new(g.lo, g.hi, pad)?;
        let vectors = oracle::probe_vectors(&w, g.random, cfg.seed);
        let r = oracle::graph_norm_ratio_probe(a, &w, &vectors)?;
        conclusions.push(r.conclusion.clone());
        checks.push(r.finding.clone());
    }
    if let Some(rs) = &spec.resolvent {
        let a = cfg.operator.as_ref().expect("validated");
        let r = oracle::resolvent_commute_check(a, &cfg.diagonal_or_index(), rs.z, rs.w, &rs.sizes, settings)?;
        conclusions.push(r.conclusion.clone());
        checks.push(r.finding.clone());
        files.push(("resolvent.csv".into(), r.csv()));
    }
    let verdict = Verdict::all(checks.iter().map(|f| f.verdict));
    let conclusion = if conclusions.is_empty() {
        format!("oracle checks: {verdict}")
    } else {
        conclusions.join("; ")
    };
    let stage = Stage {
        stage: "oracle".into(),
        result: "Independent oracles (advisory)".into(),
        verdict,
        conclusion,
        checks,
        csv: Vec::new(),
    };
    Ok((stage, files))
}

/// Output directory: command line, then config, then the default.
pub fn out_dir(cfg: &JobConfig) -> PathBuf {
    cfg.output.dir.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
}

/// Writes the report and CSV files under `dir`; returns the report path.
pub fn write_outputs(outcome: &Outcome, dir: &Path, report_name: &str) -> std::io::Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    for (name, body) in &outcome.csv {
        std::fs::write(dir.join(name), body)?;
    }
    let path = dir.join(report_name);
    let mut text = serde_json::to_string_pretty(&outcome.report).expect("report serializes");
    text.push('\n');
    std::fs::write(&path, text)?;
    Ok(path)
}
