//! Approximate units built from a real diagonal `S = [δ_{k,l} c_l]` and the
//! commutator checks that feed the main domain criterion.
//!
//! Two families are provided: resolvent powers `T_n = n^m (S − in)^{−m}` and
//! spectral projections `T_n = 1{|S| ≤ n}`. Both are diagonal, so the
//! commutator with an infinite matrix `A` has the closed-form kernel
//! `(t_j − t_l) a_{j,l}` and every section of it is exact.

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::linalg::{self, NormCurve, NormOptions};
use crate::matrix::{BandMatrix, DenseMatrix, LinOp, Section};
use crate::operator::{truncate_section, DiagonalSpec, Entries, Window};
use crate::trend::{self, Trend};
use crate::{parallel, Error, Finding, Result, Settings, Verdict, Witness};

const ZERO: C64 = C64::new(0.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UnitKind {
    ResolventPower,
    SpectralProjection,
}

fn default_m() -> u32 {
    1
}

fn default_n_values() -> Vec<u64> {
    Settings::default().n_values
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UnitFamily {
    pub kind: UnitKind,
    #[serde(default)]
    pub c: DiagonalSpec,
    #[serde(default = "default_m")]
    pub m: u32,
    #[serde(default = "default_n_values")]
    pub n_values: Vec<u64>,
}

impl UnitFamily {
    pub fn resolvent_power(c: DiagonalSpec, m: u32, n_values: Vec<u64>) -> Self {
        UnitFamily {
            kind: UnitKind::ResolventPower,
            c,
            m,
            n_values,
        }
    }

    pub fn spectral_projection(c: DiagonalSpec, n_values: Vec<u64>) -> Self {
        UnitFamily {
            kind: UnitKind::SpectralProjection,
            c,
            m: 1,
            n_values,
        }
    }

    fn check(&self) -> Result<()> {
        if self.kind == UnitKind::ResolventPower && self.m == 0 {
            return Err(Error::Precondition("resolvent power m must be at least 1".into()));
        }
        if self.n_values.contains(&0) {
            return Err(Error::Precondition("n values must be at least 1".into()));
        }
        Ok(())
    }
}

/// Diagonal of `T_n` on `w`: `n^m/(c_k − in)^m`, or `1{|c_k| ≤ n}`.
pub fn unit_diagonal(kind: UnitKind, c: &DiagonalSpec, m: u32, n: u64, w: &Window) -> Result<Vec<C64>> {
    w.check()?;
    if n == 0 {
        return Err(Error::Precondition("n must be at least 1".into()));
    }
    let nf = n as f64;
    let cs = c.values(w)?;
    Ok(match kind {
        UnitKind::ResolventPower => {
            if m == 0 {
                return Err(Error::Precondition("resolvent power m must be at least 1".into()));
            }
            cs.iter()
                .map(|&ck| (C64::new(nf, 0.0) / C64::new(ck, -nf)).powu(m))
                .collect()
        }
        UnitKind::SpectralProjection => cs
            .iter()
            .map(|&ck| if ck.abs() <= nf { C64::new(1.0, 0.0) } else { ZERO })
            .collect(),
    })
}

/// `T_n` on `w` as a diagonal band matrix.
pub fn build_unit(kind: UnitKind, c: &DiagonalSpec, m: u32, n: u64, w: &Window) -> Result<BandMatrix> {
    unit_diagonal(kind, c, m, n, w).map(|d| BandMatrix::from_diagonal(&d))
}

/// Diagonal of the phase-normalised resolvent power `(in/(in − c_k))^m`,
/// i.e. `(−i)^m n^m (S − in)^{−m}`, which tends to the identity.
pub fn normalized_unit_diagonal(c: &DiagonalSpec, m: u32, n: u64, w: &Window) -> Result<Vec<C64>> {
    let nf = n as f64;
    Ok(c
        .values(w)?
        .into_iter()
        .map(|ck| {
            let z = C64::new(0.0, nf);
            (z / (z - ck)).powu(m)
        })
        .collect())
}

/// Section of `ad(T, A) = TA − AT` for diagonal `T = diag(t)` on `w`.
pub fn commutator_section<E: Entries + ?Sized>(t: &[C64], a: &E, w: &Window) -> Result<Section> {
    if t.len() != w.len() {
        return Err(Error::Dimension(format!(
            "{} diagonal values for a window of length {}",
            t.len(),
            w.len()
        )));
    }
    Ok(match truncate_section(a, w)? {
        Section::Band(mut b) => {
            for i in 0..b.dim() {
                let (lo, hi) = b.row_span(i);
                for j in lo..hi {
                    b.set(i, j, (t[i] - t[j]) * b.get(i, j));
                }
            }
            Section::Band(b)
        }
        Section::Dense(d) => {
            let n = d.rows();
            Section::Dense(DenseMatrix::from_fn(n, n, |i, j| (t[i] - t[j]) * d.get(i, j)))
        }
    })
}

/// Window-ladder curve of `‖ad(T_n, A)‖` for one `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerN {
    pub n: u64,
    pub curve: NormCurve,
    /// Estimate at the largest window.
    pub value: f64,
    /// The last two windows agree to the flatness threshold and every
    /// estimate converged.
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommutatorCurve {
    pub kind: UnitKind,
    pub m: u32,
    pub ladder: Vec<usize>,
    pub per_n: Vec<PerN>,
    /// `max_n` of the per-`n` values.
    pub sup: f64,
    pub n_trend: Trend,
    pub n_slope: f64,
    pub finding: Finding,
}

impl CommutatorCurve {
    /// CSV rows `n,window,norm,converged`.
    pub fn csv(&self) -> String {
        let mut out = String::from("n,window,norm,converged\n");
        for p in &self.per_n {
            for pt in &p.curve.points {
                out.push_str(&format!(
                    "{},{},{:e},{}\n",
                    p.n, pt.size, pt.estimate.value, pt.estimate.converged
                ));
            }
        }
        out
    }
}

/// A per-`n` curve is judged only when `|c_N| ≥ RESOLVE_FACTOR·n` at the
/// largest window.
pub const RESOLVE_FACTOR: f64 = 4.0;

/// Per-`n` commutator norms `‖ad(T_n, A)‖` over the window ladder.
///
/// Bounded (pass) when every per-`n` curve is flat and the values do not
/// grow with `n`; unbounded (fail) when a resolved per-`n` curve or the
/// sequence over `n` grows; inconclusive otherwise.
pub fn komintro_check<E: Entries + ?Sized>(
    family: &UnitFamily,
    a: &E,
    settings: &Settings,
) -> Result<CommutatorCurve> {
    family.check()?;
    let ladder = settings.ladder_for(a.band().is_some());
    let per_n = parallel::try_map(&family.n_values, |&n| {
        let curve = linalg::norm_curve(&ladder, &settings.norm, settings.flatness, |size| {
            let w = Window::first(size);
            let t = unit_diagonal(family.kind, &family.c, family.m, n, &w)?;
            commutator_section(&t, a, &w)
        })?;
        Ok::<_, Error>(PerN {
            n,
            value: curve.last(),
            converged: curve.flat && curve.all_converged,
            curve,
        })
    })?;
    let xs: Vec<f64> = per_n.iter().map(|p| p.n as f64).collect();
    let ys: Vec<f64> = per_n.iter().map(|p| p.value).collect();
    let (n_trend, n_slope) = trend::classify_tail(&xs, &ys);
    let (sup, arg) = per_n
        .iter()
        .map(|p| (p.value, p.n))
        .fold((0.0, None), |acc, (v, n)| if v > acc.0 { (v, Some(n)) } else { acc });
    // Growth in the window direction only counts once the ladder reaches
    // well past the scale n; before that the curve is still filling in.
    let c_top = family.c.value(ladder.iter().copied().max().unwrap_or(1))?.abs();
    let resolved = |n: u64| c_top >= RESOLVE_FACTOR * n as f64;
    let window_growth = per_n
        .iter()
        .find(|p| p.curve.trend == Trend::Growing && resolved(p.n));
    let verdict = if window_growth.is_some() || n_trend == Trend::Growing {
        Verdict::Fail
    } else if per_n.iter().all(|p| p.converged) {
        Verdict::Pass
    } else {
        Verdict::Inconclusive
    };
    let mut finding = Finding::new("(komintro)", verdict)
        .with("sup", sup)
        .with("n_slope", n_slope)
        .with("unconverged_n", per_n.iter().filter(|p| !p.converged).count() as f64);
    if let Some(p) = window_growth {
        finding = finding
            .witness(Witness::Index { n: p.n })
            .note(format!("window curve grows for n = {} (slope {:.3})", p.n, p.curve.slope));
    } else if n_trend == Trend::Growing {
        finding = finding
            .maybe_witness(arg.map(|n| Witness::Index { n }))
            .note(format!("commutator norms grow with n (log-log slope {n_slope:.3})"));
    } else if let Some(n) = arg {
        finding = finding.witness(Witness::Index { n });
    }
    Ok(CommutatorCurve {
        kind: family.kind,
        m: family.m,
        ladder,
        per_n,
        sup,
        n_trend,
        n_slope,
        finding,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sqrt3Result {
    pub samples: u64,
    pub violations: u64,
    /// `max LHS/RHS` over the samples.
    pub max_ratio: f64,
    pub argmax: (u64, usize, usize),
    pub finding: Finding,
}

/// Checks `n/(|ni − c_k||ni − c_l|) ≤ √3/(1 + |c_k| + |c_l|)` on the full
/// grid `ns × ks × ls`.
pub fn sqrt3_inequality_check(c: &DiagonalSpec, ns: &[u64], ks: &[usize], ls: &[usize]) -> Result<Sqrt3Result> {
    let kmax = ks.iter().chain(ls).copied().max().unwrap_or(1);
    let cs = c.c.values(1, kmax.max(1))?;
    let sqrt3 = 3f64.sqrt();
    let per_n = parallel::map(ns, |&n| {
        let nf = n as f64;
        let mut worst = (0.0f64, (n, 0usize, 0usize));
        let mut bad = 0u64;
        for &k in ks {
            let ck = cs[k - 1];
            let dk = (nf * nf + ck * ck).sqrt();
            for &l in ls {
                let cl = cs[l - 1];
                let dl = (nf * nf + cl * cl).sqrt();
                let lhs = nf / (dk * dl);
                let rhs = sqrt3 / (1.0 + ck.abs() + cl.abs());
                let ratio = lhs / rhs;
                if ratio > 1.0 {
                    bad += 1;
                }
                if ratio > worst.0 {
                    worst = (ratio, (n, k, l));
                }
            }
        }
        (worst, bad)
    });
    let samples = (ns.len() * ks.len() * ls.len()) as u64;
    let violations: u64 = per_n.iter().map(|p| p.1).sum();
    let (max_ratio, argmax) = per_n
        .iter()
        .map(|p| p.0)
        .fold((0.0, (0, 0, 0)), |acc, w| if w.0 > acc.0 { w } else { acc });
    let finding = Finding::new("(sqrt3)", Verdict::from_bool(violations == 0))
        .with("samples", samples as f64)
        .with("violations", violations as f64)
        .with("max_ratio", max_ratio)
        .witness(Witness::Entry {
            k: argmax.1,
            l: argmax.2,
        })
        .note(format!("maximum ratio attained at n = {}", argmax.0));
    Ok(Sqrt3Result {
        samples,
        violations,
        max_ratio,
        argmax,
        finding,
    })
}

/// Both sides of the power-commutator bound on one section.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LemmaPoint {
    pub size: usize,
    /// `‖ad((S − z)^{−m}, A)‖`.
    pub lhs: f64,
    /// `m ‖(S − z)^{−1}‖^{m−1} ‖ad((S − z)^{−1}, A)‖`.
    pub rhs: f64,
    pub holds: bool,
}

/// Compares `‖ad(R^m, A)‖` with `m‖R‖^{m−1}‖ad(R, A)‖` for `R = (S − z)^{−1}`
/// on a finite section `a` with diagonal `c`.
pub fn lemma_bound_section(a: &Section, c: &[f64], z: C64, m: u32, opts: &NormOptions) -> Result<LemmaPoint> {
    if m == 0 {
        return Err(Error::Precondition("m must be at least 1".into()));
    }
    if c.len() != a.dim() {
        return Err(Error::Dimension(format!("{} diagonal values for a section of size {}", c.len(), a.dim())));
    }
    let mut r = Vec::with_capacity(c.len());
    for (i, &ck) in c.iter().enumerate() {
        let d = C64::new(ck, 0.0) - z;
        if d.norm() < linalg::RESOLVENT_EPS {
            return Err(Error::SingularResolvent {
                k: i + 1,
                distance: d.norm(),
                eps: linalg::RESOLVENT_EPS,
            });
        }
        r.push(d.inv());
    }
    let rm: Vec<C64> = r.iter().map(|x| x.powu(m)).collect();
    let comm = |t: &[C64]| -> Section {
        match a {
            Section::Band(b) => {
                let mut out = b.clone();
                for i in 0..out.dim() {
                    let (lo, hi) = out.row_span(i);
                    for j in lo..hi {
                        out.set(i, j, (t[i] - t[j]) * b.get(i, j));
                    }
                }
                Section::Band(out)
            }
            Section::Dense(d) => {
                let n = d.rows();
                Section::Dense(DenseMatrix::from_fn(n, n, |i, j| (t[i] - t[j]) * d.get(i, j)))
            }
        }
    };
    let lhs = linalg::section_norm(&comm(&rm), opts)?.value;
    let first = linalg::section_norm(&comm(&r), opts)?.value;
    let rnorm = r.iter().map(|x| x.norm()).fold(0.0, f64::max);
    let rhs = m as f64 * rnorm.powi(m as i32 - 1) * first;
    Ok(LemmaPoint {
        size: a.dim(),
        lhs,
        rhs,
        holds: lhs <= rhs * (1.0 + 1e-8),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaResult {
    pub m: u32,
    pub points: Vec<LemmaPoint>,
    pub finding: Finding,
}

/// The power-commutator bound on the sections `[1, N]`, `N ∈ sizes`.
pub fn lemma_bound_check<E: Entries + ?Sized>(
    a: &E,
    c: &DiagonalSpec,
    z: C64,
    m: u32,
    sizes: &[usize],
    opts: &NormOptions,
) -> Result<LemmaResult> {
    if z.im == 0.0 {
        return Err(Error::Precondition("z must lie off the real axis".into()));
    }
    let points = parallel::try_map(sizes, |&n| {
        let w = Window::first(n);
        let sec = truncate_section(a, &w)?;
        lemma_bound_section(&sec, &c.values(&w)?, z, m, opts)
    })?;
    let worst = points
        .iter()
        .map(|p| if p.rhs > 0.0 { p.lhs / p.rhs } else if p.lhs > 0.0 { f64::INFINITY } else { 0.0 })
        .fold(0.0, f64::max);
    let holds = points.iter().all(|p| p.holds);
    let finding = Finding::new("(orazoraz)", Verdict::from_bool(holds))
        .with("max_lhs_over_rhs", worst)
        .with("m", m as f64);
    Ok(LemmaResult { m, points, finding })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WotPoint {
    pub n: u64,
    pub deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WotResult {
    pub per_n: Vec<WotPoint>,
    pub final_deviation: f64,
    pub finding: Finding,
}

/// Threshold for the deviation at the largest `n`.
pub const WOT_TARGET: f64 = 1e-6;

/// `max_{f,g} |⟨T_n f, g⟩ − ⟨f, g⟩|` over all ordered pairs of test vectors,
/// each given by its values on `w` starting at `w.lo`.
///
/// Resolvent powers are taken phase-normalised, `(in/(in − c_k))^m`, so that
/// they converge to the identity rather than to a multiple of it; this does
/// not change any commutator norm.
pub fn wot_convergence_check(family: &UnitFamily, vectors: &[Vec<C64>], w: &Window) -> Result<WotResult> {
    family.check()?;
    if let Some(v) = vectors.iter().find(|v| v.len() > w.len()) {
        return Err(Error::Dimension(format!(
            "test vector of length {} exceeds the window length {}",
            v.len(),
            w.len()
        )));
    }
    let per_n = parallel::try_map(&family.n_values, |&n| {
        let t = match family.kind {
            UnitKind::ResolventPower => normalized_unit_diagonal(&family.c, family.m, n, w)?,
            UnitKind::SpectralProjection => unit_diagonal(family.kind, &family.c, 1, n, w)?,
        };
        let mut dev: f64 = 0.0;
        for f in vectors {
            for g in vectors {
                // ⟨T f, g⟩ − ⟨f, g⟩ = Σ (t_k − 1) f_k conj(g_k)
                let d: C64 = f
                    .iter()
                    .zip(g)
                    .zip(&t)
                    .map(|((fk, gk), tk)| (tk - 1.0) * fk * gk.conj())
                    .sum();
                dev = dev.max(d.norm());
            }
        }
        Ok::<_, Error>(WotPoint { n, deviation: dev })
    })?;
    let final_deviation = per_n.last().map_or(0.0, |p| p.deviation);
    let xs: Vec<f64> = per_n.iter().map(|p| p.n as f64).collect();
    let ys: Vec<f64> = per_n.iter().map(|p| p.deviation).collect();
    let (tr, slope) = trend::classify_tail(&xs, &ys);
    let verdict = if final_deviation <= WOT_TARGET {
        Verdict::Pass
    } else if tr == Trend::Decaying {
        Verdict::Inconclusive
    } else {
        Verdict::Fail
    };
    let finding = Finding::new("(WOT)", verdict)
        .with("final_deviation", final_deviation)
        .with("slope", slope);
    Ok(WotResult {
        per_n,
        final_deviation,
        finding,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KomcondResult {
    /// `‖ad(T, A)‖`.
    pub direct: f64,
    /// `‖ad(Tᴴ, Aᴴ)‖`.
    pub adjoint: f64,
    pub rel_diff: f64,
    pub finding: Finding,
}

/// `‖ad(T, A)‖` against `‖ad(Tᴴ, Aᴴ)‖` on finite sections.
pub fn komcond_sections(t: &DenseMatrix, a: &DenseMatrix, opts: &NormOptions) -> Result<KomcondResult> {
    if t.rows() != t.cols() || a.rows() != a.cols() || t.rows() != a.rows() {
        return Err(Error::Dimension("komcond needs square sections of equal size".into()));
    }
    let direct_m = t.matmul(a).sub(&a.matmul(t));
    let (th, ah) = (t.adjoint(), a.adjoint());
    let adj_m = th.matmul(&ah).sub(&ah.matmul(&th));
    let direct = linalg::op_norm(&direct_m, opts)?.value;
    let adjoint = linalg::op_norm(&adj_m, opts)?.value;
    let rel_diff = linalg::relative_change(direct, adjoint);
    let tol = if t.rows() <= opts.svd_threshold { 1e-10 } else { (2.0 * opts.tol).max(1e-10) };
    let finding = Finding::new("(komcond)", Verdict::from_bool(rel_diff <= tol))
        .with("direct", direct)
        .with("adjoint", adjoint)
        .with("rel_diff", rel_diff);
    Ok(KomcondResult {
        direct,
        adjoint,
        rel_diff,
        finding,
    })
}

/// [`komcond_sections`] for `T = T_n` of a family and an operator on `w`.
pub fn komcond_adjoint_symmetry<E: Entries + ?Sized>(
    family: &UnitFamily,
    n: u64,
    a: &E,
    w: &Window,
    opts: &NormOptions,
) -> Result<KomcondResult> {
    let t = DenseMatrix::from_diagonal(&unit_diagonal(family.kind, &family.c, family.m, n, w)?);
    let a = crate::operator::truncate(a, w)?;
    komcond_sections(&t, &a, opts)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DominationPoint {
    pub size: usize,
    /// `sup ‖ad(S, A)f‖ / (‖f‖ + ‖Sf‖)` over the sample.
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominationResult {
    pub points: Vec<DominationPoint>,
    pub sup: f64,
    pub trend: Trend,
    pub slope: f64,
    pub finding: Finding,
}

fn vnorm(x: &[C64]) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Smallest `c` with `‖ad(S, A)f‖ ≤ c(‖f‖ + ‖Sf‖)` on a sample of finitely
/// supported vectors, for a growing ladder of windows `[1, N]`.
///
/// Without explicit vectors the sample is every unit vector `e_k` and
/// `random` seeded random vectors, all supported in `[1, N/2]`.
pub fn domination_check<E: Entries + ?Sized>(
    c: &DiagonalSpec,
    a: &E,
    vectors: Option<&[Vec<C64>]>,
    sizes: &[usize],
    settings: &Settings,
) -> Result<DominationResult> {
    const RANDOM: usize = 4;
    let points = parallel::try_map(sizes, |&size| {
        let w = Window::first(size);
        let cs: Vec<C64> = c.values(&w)?.into_iter().map(|v| C64::new(v, 0.0)).collect();
        let k = commutator_section(&cs, a, &w)?;
        let support = (size / 2).max(1);
        let mut best: f64 = 0.0;
        let mut ratio = |f: &[C64]| {
            let mut full = f.to_vec();
            full.resize(size, ZERO);
            let sf: Vec<C64> = full.iter().zip(&cs).map(|(x, s)| x * s).collect();
            let denom = vnorm(&full) + vnorm(&sf);
            if denom > 0.0 {
                best = best.max(vnorm(&k.apply(&full)) / denom);
            }
        };
        match vectors {
            Some(vs) => {
                for v in vs {
                    ratio(&v[..v.len().min(size)]);
                }
            }
            None => {
                let mut rng = ChaCha8Rng::seed_from_u64(settings.norm.seed);
                for _ in 0..RANDOM {
                    let f: Vec<C64> = (0..support)
                        .map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                        .collect();
                    ratio(&f);
                }
                // unit vectors via column norms of the commutator kernel
                let mut col = vec![0.0; size];
                for i in 0..size {
                    let (lo, hi) = k.row_span(i);
                    for (j, cj) in col.iter_mut().enumerate().take(hi).skip(lo) {
                        *cj += k.get(i, j).norm_sqr();
                    }
                }
                for j in 0..support {
                    best = best.max(col[j].sqrt() / (1.0 + cs[j].norm()));
                }
            }
        }
        Ok::<_, Error>(DominationPoint { size, ratio: best })
    })?;
    let xs: Vec<f64> = points.iter().map(|p| p.size as f64).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.ratio).collect();
    let (tr, slope) = trend::classify_tail(&xs, &ys);
    let sup = ys.iter().copied().fold(0.0, f64::max);
    let flat = match ys.as_slice() {
        [.., a, b] => linalg::relative_change(*a, *b) <= settings.flatness,
        _ => false,
    };
    let verdict = if tr == Trend::Growing {
        Verdict::Fail
    } else if flat {
        Verdict::Pass
    } else {
        Verdict::Inconclusive
    };
    let finding = Finding::new("([S,A]f)", verdict)
        .with("sup_ratio", sup)
        .with("slope", slope);
    Ok(DominationResult {
        points,
        sup,
        trend: tr,
        slope,
        finding,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{EntryGen, Seq};

    fn small_settings() -> Settings {
        Settings {
            ladder: vec![64, 128, 256],
            n_values: vec![1, 2, 4, 8],
            ..Settings::default()
        }
    }

    #[test]
    fn unit_entries() {
        let c = DiagonalSpec::default();
        let t = unit_diagonal(UnitKind::ResolventPower, &c, 1, 1, &Window::first(1)).unwrap();
        assert!((t[0] - C64::new(0.5, 0.5)).norm() < 1e-15);
        let p = unit_diagonal(UnitKind::SpectralProjection, &c, 1, 3, &Window::first(5)).unwrap();
        let re: Vec<f64> = p.iter().map(|z| z.re).collect();
        assert_eq!(re, vec![1.0, 1.0, 1.0, 0.0, 0.0]);
        for n in [1, 5, 50] {
            let t = unit_diagonal(UnitKind::ResolventPower, &c, 3, n, &Window::first(200)).unwrap();
            assert!(t.iter().all(|z| z.norm() <= 1.0 + 1e-15));
        }
    }

    #[test]
    fn commutator_of_shift() {
        let t: Vec<C64> = (1..=5).map(|k| C64::new(k as f64 * k as f64, 1.0)).collect();
        let s = commutator_section(&t, &EntryGen::shift(1), &Window::first(5)).unwrap();
        for i in 0..4 {
            assert_eq!(s.get(i, i + 1), t[i] - t[i + 1]);
        }
        let d = commutator_section(&t, &EntryGen::diagonal(Seq::index()), &Window::first(5)).unwrap();
        assert_eq!(d.max_abs(), 0.0);
    }

    #[test]
    fn komintro_diagonal_and_growth() {
        let st = small_settings();
        let fam = UnitFamily::resolvent_power(DiagonalSpec::default(), 1, st.n_values.clone());
        let diag = komintro_check(&fam, &EntryGen::diagonal(Seq::index()), &st).unwrap();
        assert_eq!(diag.sup, 0.0);
        assert_eq!(diag.finding.verdict, Verdict::Pass);
        let grow = EntryGen::jacobi(Seq::Const(0.0), Seq::formula("k^2").unwrap());
        let g = komintro_check(&fam, &grow, &st).unwrap();
        assert_eq!(g.finding.verdict, Verdict::Fail);
    }

    #[test]
    fn sqrt3_small_grid() {
        let ks: Vec<usize> = (1..=20).collect();
        let r = sqrt3_inequality_check(&DiagonalSpec::default(), &[1, 2, 3, 10], &ks, &ks).unwrap();
        assert_eq!(r.violations, 0);
        assert!(r.max_ratio <= 1.0);
        let zero = DiagonalSpec::new(Seq::Const(0.0));
        let r = sqrt3_inequality_check(&zero, &[1], &[1], &[1]).unwrap();
        assert!((r.max_ratio - 1.0 / 3f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn lemma_m1_and_diagonal() {
        let jac = EntryGen::jacobi(Seq::Const(0.0), Seq::index());
        let o = NormOptions::default();
        let r = lemma_bound_check(&jac, &DiagonalSpec::default(), C64::new(0.0, 2.0), 1, &[32], &o).unwrap();
        assert!((r.points[0].lhs - r.points[0].rhs).abs() <= 1e-12 * r.points[0].rhs);
        let r = lemma_bound_check(&jac, &DiagonalSpec::default(), C64::new(0.0, 2.0), 2, &[32, 100], &o).unwrap();
        assert_eq!(r.finding.verdict, Verdict::Pass);
        let d = lemma_bound_check(&EntryGen::Identity, &DiagonalSpec::default(), C64::new(0.0, 2.0), 3, &[16], &o).unwrap();
        assert_eq!((d.points[0].lhs, d.points[0].rhs), (0.0, 0.0));
    }

    #[test]
    fn wot_closed_form() {
        let fam = UnitFamily::resolvent_power(DiagonalSpec::default(), 1, (1..=20).collect());
        let e1 = vec![C64::new(1.0, 0.0)];
        let r = wot_convergence_check(&fam, &[e1.clone()], &Window::first(4)).unwrap();
        for p in &r.per_n {
            let n = p.n as f64;
            assert!((p.deviation - 1.0 / (n * n + 1.0).sqrt()).abs() < 1e-14);
        }
        let proj = UnitFamily::spectral_projection(DiagonalSpec::default(), vec![1, 2, 3, 4]);
        let f = vec![C64::new(1.0, 0.0), C64::new(0.0, 2.0), C64::new(-1.0, 0.0)];
        let r = wot_convergence_check(&proj, &[e1, f], &Window::first(4)).unwrap();
        assert!(r.per_n[0].deviation > 0.0);
        assert_eq!(r.per_n[2].deviation, 0.0);
        assert_eq!(r.finding.verdict, Verdict::Pass);
    }

    #[test]
    fn domination_examples() {
        let st = small_settings();
        let sizes = [64, 128, 256];
        let c = DiagonalSpec::default();
        let d = domination_check(&c, &EntryGen::diagonal(Seq::index()), None, &sizes, &st).unwrap();
        assert_eq!(d.sup, 0.0);
        let s = domination_check(&c, &EntryGen::shift(1), None, &sizes, &st).unwrap();
        assert!(s.sup <= 1.0);
        assert_eq!(s.finding.verdict, Verdict::Pass);
        let g = EntryGen::Band {
            diagonals: vec![crate::operator::Diagonal {
                offset: 1,
                values: Seq::formula("k^2").unwrap(),
            }],
        };
        let r = domination_check(&c, &g, None, &sizes, &st).unwrap();
        assert_eq!(r.finding.verdict, Verdict::Fail);
    }
}
