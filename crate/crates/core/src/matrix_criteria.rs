//! Hypotheses for essential `H`-selfadjointness of an infinite matrix `A`
//! with respect to a Gram pair `(H, G = H⁻¹)`, and the pipeline combining
//! them.
//!
//! Labels follow the usual naming of the conditions: `(h1)`–`(h4)` for the
//! pair, `(AG)` for `AG = GAᴴ`, `(M1)`/`(M2)` for the weighted kernels and
//! `(modakl)` for the entrywise power bound.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::approx_unit::{self, CommutatorCurve, UnitFamily};
use crate::linalg::{self, NormCurve, SchurCertificate};
use crate::operator::{
    exact_product_window, truncate_section, Adjoint, Band, DiagonalSpec, Entries, OperatorSpec,
    PairingSpec, Window,
};
use crate::trend::{self, Trend};
use crate::{parallel, Error, Finding, Result, Settings, Verdict, Witness};

const ZERO: C64 = C64::new(0.0, 0.0);

/// Leading block sampled exhaustively by the pair checks.
const LEAD: usize = 32;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HConditions {
    pub h1: Finding,
    pub h2: Finding,
    pub h3: Finding,
    pub h4: Finding,
    /// `max |g_{k,l}|` over the sample.
    pub s_g: f64,
    pub h_norm: NormCurve,
}

impl HConditions {
    pub fn findings(&self) -> [&Finding; 4] {
        [&self.h1, &self.h2, &self.h3, &self.h4]
    }
}

/// Index pairs sampled for the pair checks: the leading `LEAD × LEAD`
/// block, then a band of half-width `reach` around the diagonal of each
/// window.
fn sample_pairs(windows: &[Window], reach: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for k in 1..=LEAD {
        for l in 1..=LEAD {
            out.push((k, l));
        }
    }
    for w in windows {
        for k in w.indices() {
            for l in k.saturating_sub(reach).max(1)..=k + reach {
                if k > LEAD || l > LEAD {
                    out.push((k, l));
                }
            }
        }
    }
    out.sort_unstable();
    out.dedup();
    out
}

fn herm_defect<E: Entries + ?Sized>(x: &E, pairs: &[(usize, usize)]) -> Result<(f64, Option<(usize, usize)>)> {
    let per = parallel::try_map(pairs, |&(k, l)| {
        if l < k {
            return Ok((0.0, (k, l)));
        }
        let a = x.entry(k, l)?;
        let b = x.entry(l, k)?.conj();
        let d = (a - b).norm();
        Ok::<_, Error>((if d > 1e-14 * (1.0 + a.norm()) { d } else { 0.0 }, (k, l)))
    })?;
    Ok(per
        .into_iter()
        .fold((0.0, None), |acc, (d, at)| if d > acc.0 { (d, Some(at)) } else { acc }))
}

/// Checks `(h1)`–`(h4)` on the given windows.
///
/// `(h1)` and `(h2)` sample the leading block and a band around the diagonal
/// of each window; `(h3)` records the sampled `sup |g_{k,l}|` and the norm
/// curve of the `H` sections; `(h4)` forms `HG` and `GH` exactly (padding
/// at least `p`) and requires `‖HG − I‖_∞, ‖GH − I‖_∞ ≤ identity_tol`.
pub fn check_h_conditions(pair: &PairingSpec, windows: &[Window], settings: &Settings) -> Result<HConditions> {
    if windows.is_empty() {
        return Err(Error::Precondition("at least one window is required".into()));
    }
    pair.h.check()?;
    pair.g.check()?;
    let pairs = sample_pairs(windows, pair.p + 2);

    let (dh, at_h) = herm_defect(&pair.h, &pairs)?;
    let (dg, at_g) = herm_defect(&pair.g, &pairs)?;
    let h1 = Finding::new("(h1)", Verdict::from_bool(dh == 0.0 && dg == 0.0))
        .with("h_defect", dh)
        .with("g_defect", dg)
        .maybe_witness(at_h.or(at_g).map(|(k, l)| Witness::Entry { k, l }));

    // (h2): first non-zero outside the declared band, in scan order
    let outside = parallel::try_map(&pairs, |&(k, l)| {
        if k.abs_diff(l) > pair.p {
            pair.g.entry(k, l).map(|v| v.norm())
        } else {
            Ok(0.0)
        }
    })?;
    let first_bad = outside.iter().position(|&v| v != 0.0);
    let max_out = outside.iter().copied().fold(0.0, f64::max);
    let h2 = Finding::new("(h2)", Verdict::from_bool(first_bad.is_none()))
        .with("p", pair.p as f64)
        .with("max_outside_band", max_out)
        .maybe_witness(first_bad.map(|i| Witness::Entry {
            k: pairs[i].0,
            l: pairs[i].1,
        }));

    // (h3)
    let in_band = parallel::try_map(&pairs, |&(k, l)| {
        if k.abs_diff(l) <= pair.p {
            pair.g.entry(k, l).map(|v| v.norm())
        } else {
            Ok(0.0)
        }
    })?;
    let s_g = in_band.iter().copied().fold(0.0, f64::max);
    let h_banded = pair.h.band().is_some();
    let sizes: Vec<usize> = windows
        .iter()
        .map(|w| w.len())
        .filter(|&n| h_banded || n <= settings.dense_cap)
        .collect();
    let sizes = if sizes.is_empty() {
        vec![windows.iter().map(|w| w.len()).min().unwrap_or(1).min(settings.dense_cap)]
    } else {
        sizes
    };
    let h_norm = linalg::norm_curve(&sizes, &settings.norm, settings.flatness, |n| {
        truncate_section(&pair.h, &Window::first(n))
    })?;
    let declared_ok = pair.s_g.is_none_or(|d| s_g <= d * (1.0 + 1e-12));
    let h_bounded = if h_norm.trend == Trend::Growing {
        Verdict::Fail
    } else if h_norm.points.len() < 2 || (h_norm.flat && h_norm.all_converged) {
        Verdict::Pass
    } else {
        Verdict::Inconclusive
    };
    let h3 = Finding::new(
        "(h3)",
        Verdict::all([Verdict::from_bool(s_g.is_finite() && declared_ok), h_bounded]),
    )
    .with("s_g", s_g)
    .with("h_norm", h_norm.last())
    .with("h_norm_slope", h_norm.slope);
    let h3 = match pair.s_g {
        Some(d) => h3.with("s_g_declared", d),
        None => h3,
    };

    // (h4)
    let residuals = parallel::try_map(windows, |w| {
        let w = w.with_pad(w.pad.max(pair.p));
        let g = pair.g_op();
        let hg = exact_product_window(&pair.h, &g, &w)?.minus_identity();
        let gh = exact_product_window(&g, &pair.h, &w)?.minus_identity();
        Ok::<_, Error>((hg.inf_norm(), gh.inf_norm()))
    })?;
    let hg = residuals.iter().map(|r| r.0).fold(0.0, f64::max);
    let gh = residuals.iter().map(|r| r.1).fold(0.0, f64::max);
    let h4 = Finding::new(
        "(h4)",
        Verdict::from_bool(hg <= settings.identity_tol && gh <= settings.identity_tol),
    )
    .with("hg_residual", hg)
    .with("gh_residual", gh);

    Ok(HConditions {
        h1,
        h2,
        h3,
        h4,
        s_g,
        h_norm,
    })
}

/// Residual of `Σ_q a_{k,l+q} g_{l+q,l} = Σ_q g_{k,k+q} conj(a_{l,k+q})`,
/// i.e. of `AG = GAᴴ`, on `w`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgResidual {
    pub residual: f64,
    pub scale: f64,
    pub witness: Option<(usize, usize)>,
}

pub fn ag_residual<E: Entries + ?Sized>(a: &E, pair: &PairingSpec, w: &Window) -> Result<AgResidual> {
    let w = w.with_pad(w.pad.max(pair.p));
    let g = pair.g_op();
    let left = exact_product_window(a, &g, &w)?;
    let right = exact_product_window(&g, &Adjoint(a), &w)?;
    let (residual, at) = left.max_abs_diff(&right);
    Ok(AgResidual {
        residual,
        scale: left.max_abs().max(right.max_abs()),
        witness: at.map(|(i, j)| (w.lo + i, w.lo + j)),
    })
}

/// `(AG)`: passes iff the residual is at most `identity_tol·(1 + scale)`.
pub fn check_ag<E: Entries + ?Sized>(a: &E, pair: &PairingSpec, w: &Window, settings: &Settings) -> Result<Finding> {
    let r = ag_residual(a, pair, w)?;
    let ok = r.residual <= settings.identity_tol * (1.0 + r.scale);
    Ok(Finding::new("(AG)", Verdict::from_bool(ok))
        .with("residual", r.residual)
        .with("scale", r.scale)
        .with("window", w.len() as f64)
        .maybe_witness(if ok {
            None
        } else {
            r.witness.map(|(k, l)| Witness::Entry { k, l })
        }))
}

/// `|a_{k,l+q}| / (1 + |c_l|^m)`, with `a_{k,r} = 0` for `r ≤ 0`.
pub struct M1Kernel<'a, E: ?Sized> {
    pub a: &'a E,
    pub c: &'a DiagonalSpec,
    pub m: u32,
    pub q: i64,
}

impl<E: Entries + ?Sized> Entries for M1Kernel<'_, E> {
    fn entry(&self, k: usize, l: usize) -> Result<C64> {
        let r = l as i64 + self.q;
        if r <= 0 {
            return Ok(ZERO);
        }
        let v = self.a.entry(k, r as usize)?.norm();
        if v == 0.0 {
            return Ok(ZERO);
        }
        let cl = self.c.value(l)?.abs();
        Ok(C64::new(v / (1.0 + cl.powi(self.m as i32)), 0.0))
    }

    fn band(&self) -> Option<Band> {
        // a_{k,r} ≠ 0 only for r ∈ [k − lower, k + upper], r = l + q
        self.a.band().map(|b| Band {
            lower: (b.lower as i64 + self.q).max(0) as usize,
            upper: (b.upper as i64 - self.q).max(0) as usize,
        })
    }
}

/// `|a_{k,l}| |c_k − c_l| / (1 + |c_k| + |c_l|)`.
pub struct M2Kernel<'a, E: ?Sized> {
    pub a: &'a E,
    pub c: &'a DiagonalSpec,
}

impl<E: Entries + ?Sized> Entries for M2Kernel<'_, E> {
    fn entry(&self, k: usize, l: usize) -> Result<C64> {
        let v = self.a.entry(k, l)?.norm();
        if v == 0.0 || k == l {
            return Ok(ZERO);
        }
        let (ck, cl) = (self.c.value(k)?, self.c.value(l)?);
        Ok(C64::new(v * (ck - cl).abs() / (1.0 + ck.abs() + cl.abs()), 0.0))
    }

    fn band(&self) -> Option<Band> {
        self.a.band()
    }
}

/// Norm curve and Schur certificate for a non-negative kernel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Boundedness {
    pub finding: Finding,
    pub curve: NormCurve,
    pub schur: Option<SchurCertificate>,
}

impl Boundedness {
    /// CSV rows `window,norm,converged`.
    pub fn csv(&self) -> String {
        let mut out = String::from("window,norm,converged\n");
        for p in &self.curve.points {
            out.push_str(&format!("{},{:e},{}\n", p.size, p.estimate.value, p.estimate.converged));
        }
        out
    }
}

/// Pass when the curve is flat with converged estimates or the Schur test
/// gives a finite bound; fail when the curve grows and no certificate
/// exists; inconclusive otherwise.
fn boundedness<K: Entries + ?Sized>(
    label: &str,
    kernel: &K,
    weights_m: u32,
    c: &DiagonalSpec,
    settings: &Settings,
) -> Result<Boundedness> {
    let banded = kernel.band().is_some();
    let sizes = settings.ladder_for(banded);
    let curve = linalg::norm_curve(&sizes, &settings.norm, settings.flatness, |n| {
        truncate_section(kernel, &Window::first(n))
    })?;
    let probe_len = sizes
        .iter()
        .copied()
        .max()
        .unwrap_or(64)
        .min(settings.schur_cap)
        .min(if banded { usize::MAX } else { settings.dense_cap });
    let probe = Window::first(probe_len);
    let weights = settings.schur_weights.values(c, weights_m, &probe)?;
    let schur = linalg::schur_bound(kernel, &weights, &probe)?;
    let flat = curve.flat && curve.all_converged;
    let verdict = if flat || schur.bound.is_some() {
        Verdict::Pass
    } else if curve.trend == Trend::Growing {
        Verdict::Fail
    } else {
        Verdict::Inconclusive
    };
    let mut finding = Finding::new(label, verdict)
        .with("norm", curve.last())
        .with("slope", curve.slope)
        .with("flat", if flat { 1.0 } else { 0.0 })
        .with("monotone", if curve.is_monotone(1e-9) { 1.0 } else { 0.0 });
    if let Some(b) = schur.bound {
        finding = finding.with("schur_bound", b);
    }
    finding = finding.note(schur.label.clone());
    Ok(Boundedness {
        finding,
        curve,
        schur: Some(schur),
    })
}

/// Boundedness of `[|a_{k,l+q}| / (1 + |c_l|^m)]`.
pub fn check_m1<E: Entries + ?Sized>(
    a: &E,
    c: &DiagonalSpec,
    m: u32,
    q: i64,
    settings: &Settings,
) -> Result<Boundedness> {
    let kernel = M1Kernel { a, c, m, q };
    let mut b = boundedness(&format!("(M1) q={q}"), &kernel, m, c, settings)?;
    b.finding = b.finding.with("q", q as f64).with("m", m as f64);
    Ok(b)
}

/// Boundedness of `[|a_{k,l}| |c_k − c_l| / (1 + |c_k| + |c_l|)]`.
pub fn check_m2<E: Entries + ?Sized>(a: &E, c: &DiagonalSpec, settings: &Settings) -> Result<Boundedness> {
    let kernel = M2Kernel { a, c };
    boundedness("(M2)", &kernel, 1, c, settings)
}

/// Smallest integer strictly greater than `s + 3/2`.
pub fn suggested_m(s: f64) -> u32 {
    (s + 1.5).floor() as u32 + 1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModaklResult {
    pub finding: Finding,
    pub suggested_m: u32,
    /// Log-log slope of `Σ_k |a_{k,l}|²` against `l`.
    pub column_slope: f64,
    /// `max |a_{k,l}| / bound_{k,l}` on the window.
    pub max_ratio: f64,
}

/// Entrywise bound `d(1+k+l)/|k−l|^α` off the diagonal and `d(k+1)^s` on it,
/// plus the growth of the column sums of squares, which must not exceed
/// `O(l² + l^{2s})` (log-log slope at most `max(2, 2s) + 0.2`).
pub fn check_modakl<E: Entries + ?Sized>(a: &E, d: f64, s: f64, alpha: f64, w: &Window) -> Result<ModaklResult> {
    if !(alpha > 2.0) {
        return Err(Error::Precondition(format!("alpha = {alpha} must exceed 2")));
    }
    if !(d >= 0.0 && s >= 0.0) {
        return Err(Error::Precondition("d and s must be non-negative".into()));
    }
    w.check()?;
    let band = a.band();
    let cols = |k: usize| -> (usize, usize) {
        match band {
            Some(b) => (k.saturating_sub(b.lower).max(w.lo), (k + b.upper).min(w.hi)),
            None => (w.lo, w.hi),
        }
    };
    let rows = parallel::try_map_range(w.len(), |i| {
        let k = w.lo + i;
        let (c0, c1) = cols(k);
        let mut worst = (0.0f64, (k, k));
        for l in c0..=c1 {
            let v = a.entry(k, l)?.norm();
            if v == 0.0 {
                continue;
            }
            let bound = if k == l {
                d * ((k + 1) as f64).powf(s)
            } else {
                d * (1 + k + l) as f64 / (k.abs_diff(l) as f64).powf(alpha)
            };
            let ratio = if bound > 0.0 { v / bound } else { f64::INFINITY };
            if ratio > worst.0 {
                worst = (ratio, (k, l));
            }
        }
        Ok::<_, Error>(worst)
    })?;
    let (max_ratio, at) = rows
        .iter()
        .fold((0.0, None), |acc, &(r, at)| if r > acc.0 { (r, Some(at)) } else { acc });
    let entry_ok = max_ratio <= 1.0 + 1e-12;

    // column sums of squares at l = 8, 16, … ≤ hi/2
    let mut ls = Vec::new();
    let mut l = 8usize.max(w.lo);
    while l <= w.hi / 2 {
        ls.push(l);
        l *= 2;
    }
    if ls.len() < 2 {
        ls = vec![w.lo.max(1), w.hi.max(2) / 2].into_iter().filter(|&x| x >= w.lo).collect();
        ls.dedup();
    }
    let sums = parallel::try_map(&ls, |&l| {
        let (k0, k1) = match band {
            Some(b) => (l.saturating_sub(b.upper).max(w.lo), (l + b.lower).min(w.hi)),
            None => (w.lo, w.hi),
        };
        let mut acc = 0.0;
        for k in k0..=k1 {
            acc += a.entry(k, l)?.norm_sqr();
        }
        Ok::<_, Error>(acc)
    })?;
    let xs: Vec<f64> = ls.iter().map(|&l| l as f64).collect();
    let column_slope = trend::loglog_slope(&xs, &sums).unwrap_or(0.0);
    let slope_cap = 2f64.max(2.0 * s) + 0.2;
    let slope_ok = column_slope <= slope_cap;
    let m = suggested_m(s);
    let finding = Finding::new("(modakl)", Verdict::from_bool(entry_ok && slope_ok))
        .with("max_ratio", max_ratio)
        .with("column_slope", column_slope)
        .with("slope_cap", slope_cap)
        .with("suggested_m", m as f64)
        .maybe_witness(if entry_ok {
            None
        } else {
            at.map(|(k, l)| Witness::Entry { k, l })
        });
    Ok(ModaklResult {
        finding,
        suggested_m: m,
        column_slope,
        max_ratio,
    })
}

/// How the weighted-kernel hypotheses are established.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum Route {
    /// Check `(M1)` for every `q ∈ [−p, p]` and `(M2)` with the given `m`.
    Explicit { m: u32 },
    /// Use the entrywise power bound instead of `(M1)`/`(M2)`.
    Modakl { d: f64, s: f64, alpha: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HsaResult {
    pub h: HConditions,
    pub ag: Finding,
    pub m1: Vec<Boundedness>,
    pub m2: Option<Boundedness>,
    pub modakl: Option<ModaklResult>,
    pub suggested_m: u32,
    pub komintro: CommutatorCurve,
    pub overall: Verdict,
    pub conclusion: String,
}

impl HsaResult {
    /// All constituent findings in pipeline order.
    pub fn findings(&self) -> Vec<&Finding> {
        let mut out: Vec<&Finding> = self.h.findings().to_vec();
        out.push(&self.ag);
        out.extend(self.m1.iter().map(|b| &b.finding));
        out.extend(self.m2.iter().map(|b| &b.finding));
        out.extend(self.modakl.iter().map(|r| &r.finding));
        out.push(&self.komintro.finding);
        out
    }
}

/// Runs `(h1)`–`(h4)`, `(AG)`, the weighted kernels (or the power bound)
/// and the resolvent-power commutator curve; the overall verdict is the
/// conjunction of all stages.
pub fn certify_h_selfadjoint(
    a: &OperatorSpec,
    pair: &PairingSpec,
    c: &DiagonalSpec,
    route: Route,
    settings: &Settings,
) -> Result<HsaResult> {
    a.validate()?;
    let a_banded = a.band().is_some();
    let h_windows: Vec<Window> = settings
        .ladder_for(pair.h.band().is_some())
        .into_iter()
        .map(|n| Window::first(n).with_pad(pair.p))
        .collect();
    let h = check_h_conditions(pair, &h_windows, settings)?;
    let ag_len = settings.ladder_for(a_banded).into_iter().max().unwrap_or(64);
    let ag = check_ag(a, pair, &Window::first(ag_len).with_pad(pair.p), settings)?;

    let (m1, m2, modakl, m) = match route {
        Route::Explicit { m } => {
            let p = pair.p as i64;
            let qs: Vec<i64> = (-p..=p).collect();
            let m1 = parallel::try_map(&qs, |&q| check_m1(a, c, m, q, settings))?;
            let m2 = check_m2(a, c, settings)?;
            (m1, Some(m2), None, m)
        }
        Route::Modakl { d, s, alpha } => {
            let len = settings.ladder_for(a_banded).into_iter().max().unwrap_or(64);
            let r = check_modakl(a, d, s, alpha, &Window::first(len))?;
            let m = r.suggested_m;
            (Vec::new(), None, Some(r), m)
        }
    };
    let family = UnitFamily::resolvent_power(c.clone(), m, settings.n_values.clone());
    let komintro = approx_unit::komintro_check(&family, a, settings)?;

    let mut verdicts: Vec<Verdict> = h.findings().iter().map(|f| f.verdict).collect();
    verdicts.push(ag.verdict);
    verdicts.extend(m1.iter().map(|b| b.finding.verdict));
    verdicts.extend(m2.iter().map(|b| b.finding.verdict));
    verdicts.extend(modakl.iter().map(|r| r.finding.verdict));
    verdicts.push(komintro.finding.verdict);
    let overall = Verdict::all(verdicts);
    let conclusion = match overall {
        Verdict::Pass => "essentially H-selfadjoint, with the maximal matrix operator equal to the closure: hypotheses certified on finite evidence",
        Verdict::Inconclusive => "essential H-selfadjointness: hypotheses inconclusive on finite evidence",
        Verdict::Fail => "essential H-selfadjointness: a hypothesis fails, no conclusion (the criteria are sufficient only)",
    }
    .to_owned();
    Ok(HsaResult {
        h,
        ag,
        m1,
        m2,
        modakl,
        suggested_m: m,
        komintro,
        overall,
        conclusion,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{EntryGen, Seq, Symmetry};
    use std::collections::BTreeMap;

    fn small() -> Settings {
        Settings {
            ladder: vec![64, 128, 256],
            n_values: vec![1, 2, 4, 8],
            ..Settings::default()
        }
    }

    #[test]
    fn h_conditions_identity_and_antidiagonal() {
        let st = small();
        let ws: Vec<Window> = [64, 128].iter().map(|&n| Window::first(n)).collect();
        let id = check_h_conditions(&PairingSpec::identity(), &ws, &st).unwrap();
        assert!(id.findings().iter().all(|f| f.verdict == Verdict::Pass));
        assert_eq!(id.s_g, 1.0);
        let g = EntryGen::AntidiagonalBlock {
            sizes: vec![2],
            signs: vec![1.0],
        };
        let pair = PairingSpec {
            h: g.clone(),
            g,
            p: 1,
            s_g: Some(1.0),
        };
        let r = check_h_conditions(&pair, &ws, &st).unwrap();
        assert!(r.findings().iter().all(|f| f.verdict == Verdict::Pass), "{r:?}");
    }

    #[test]
    fn h2_violation_witness() {
        let mut t = BTreeMap::new();
        for k in 1..=8 {
            t.insert((k, k), C64::new(1.0, 0.0));
        }
        t.insert((1, 5), C64::new(1.0, 0.0));
        t.insert((5, 1), C64::new(1.0, 0.0));
        let pair = PairingSpec {
            h: EntryGen::Identity,
            g: EntryGen::Table { entries: t },
            p: 2,
            s_g: None,
        };
        let r = check_h_conditions(&pair, &[Window::first(8)], &small()).unwrap();
        assert_eq!(r.h2.verdict, Verdict::Fail);
        assert_eq!(r.h2.witness, Some(Witness::Entry { k: 1, l: 5 }));
    }

    #[test]
    fn ag_reduces_to_symmetry_for_identity() {
        let st = small();
        let id = PairingSpec::identity();
        let jac = EntryGen::jacobi(Seq::index(), Seq::index());
        assert_eq!(check_ag(&jac, &id, &Window::first(50), &st).unwrap().verdict, Verdict::Pass);
        let skew = EntryGen::expr("(k-l)*(1+i)").unwrap();
        let f = check_ag(&skew, &id, &Window::first(20), &st).unwrap();
        assert_eq!(f.verdict, Verdict::Fail);
        let hermitian = OperatorSpec::new(EntryGen::expr("i*(k-l)/(1+(k-l)^2)").unwrap())
            .with_symmetry(Symmetry::Hermitian);
        hermitian.validate().unwrap();
        assert_eq!(check_ag(&hermitian, &id, &Window::first(20), &st).unwrap().verdict, Verdict::Pass);
    }

    #[test]
    fn m1_m2_examples() {
        let st = small();
        let c = DiagonalSpec::default();
        let z = check_m2(&EntryGen::Zero, &c, &st).unwrap();
        assert_eq!(z.curve.last(), 0.0);
        assert_eq!(z.finding.verdict, Verdict::Pass);
        let grow = EntryGen::diagonal(Seq::index());
        let g = check_m1(&grow, &c, 0, 0, &st).unwrap();
        assert_ne!(g.finding.verdict, Verdict::Pass);
        assert!((g.curve.last() - 256.0 / 2.0).abs() < 1e-9);
        let ones = EntryGen::expr("1").unwrap();
        let o = check_m2(&ones, &c, &st).unwrap();
        assert_ne!(o.finding.verdict, Verdict::Pass);
    }

    #[test]
    fn modakl_examples() {
        let pb = EntryGen::power_band(1.0, 1.0, 3.0);
        let r = check_modakl(&pb, 1.0, 1.0, 3.0, &Window::first(256)).unwrap();
        assert_eq!(r.finding.verdict, Verdict::Pass);
        assert_eq!(r.suggested_m, 3);
        assert_eq!(check_modakl(&EntryGen::Zero, 0.5, 0.0, 2.5, &Window::first(64)).unwrap().finding.verdict, Verdict::Pass);
        let twice = EntryGen::expr("2*(1+k+l)/abs(k-l)^3").unwrap();
        let f = check_modakl(&FnOff(twice), 1.0, 0.0, 3.0, &Window::first(32)).unwrap();
        assert_eq!(f.finding.verdict, Verdict::Fail);
        assert!(f.finding.witness.is_some());
        assert!(matches!(check_modakl(&pb, 1.0, 1.0, 2.0, &Window::first(8)), Err(Error::Precondition(_))));
    }

    /// The generator with its diagonal forced to zero (the formula divides
    /// by `|k − l|`).
    struct FnOff(EntryGen);

    impl Entries for FnOff {
        fn entry(&self, k: usize, l: usize) -> Result<C64> {
            if k == l {
                Ok(ZERO)
            } else {
                self.0.entry(k, l)
            }
        }
        fn band(&self) -> Option<Band> {
            None
        }
    }

    #[test]
    fn suggested_m_is_minimal() {
        for s in [0.0, 0.25, 0.5, 1.0, 1.49, 2.5, 7.3] {
            let m = suggested_m(s);
            assert!(m as f64 > s + 1.5);
            assert!((m - 1) as f64 <= s + 1.5);
        }
    }
}
