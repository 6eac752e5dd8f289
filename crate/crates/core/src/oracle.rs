//! Independent probes that cross-check conclusions on concrete instances.
//!
//! None of these reuse the sufficient conditions they are compared with:
//! the `H`-symmetry residual is an algebraic reformulation of `(AG)`, the
//! limit-point probe is the classical Jacobi-matrix criterion, the
//! graph-norm ratio tests `‖Aᴴf‖ = √q‖Af‖` directly, and the resolvent probe
//! measures commutation of resolvents on sections.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::linalg::{self, BandLu};
use crate::matrix::{LinOp, Section};
use crate::matrix_criteria::ag_residual;
use crate::operator::{
    exact_product_window, truncate_band, truncate_section, Adjoint, DiagonalSpec, Entries, PairingSpec,
    Seq, Window,
};
use crate::trend::{self, Trend};
use crate::{parallel, Error, Finding, Result, Settings, Verdict, Witness};

const ZERO: C64 = C64::new(0.0, 0.0);

/// Per-size evidence with a log-log trend.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeResult {
    pub quantity: String,
    pub sizes: Vec<usize>,
    pub values: Vec<f64>,
    pub trend: Trend,
    pub slope: f64,
    pub conclusion: String,
    pub finding: Finding,
}

impl ProbeResult {
    /// CSV with columns `size,value`.
    pub fn csv(&self) -> String {
        let mut out = String::from("size,value\n");
        for (n, v) in self.sizes.iter().zip(&self.values) {
            out.push_str(&format!("{n},{v}\n"));
        }
        out
    }
}

fn check_sizes(sizes: &[usize]) -> Result<()> {
    if sizes.is_empty() || sizes[0] == 0 || sizes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Contract("probe sizes must be positive and strictly increasing".into()));
    }
    Ok(())
}

// ------------------------------------------------------------------ H-symmetry

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HSymmetry {
    /// `‖HA − AᴴH‖_∞` on the window.
    pub residual: f64,
    pub scale: f64,
    /// Max-abs residual of `AG = GAᴴ` on the same window.
    pub ag_residual: f64,
    /// Both residuals vanish, or neither does.
    pub agree: bool,
    pub finding: Finding,
}

/// `‖HA − AᴴH‖_∞` on the exact section over `w`, cross-checked against the
/// `(AG)` residual. Passes iff the residual is at most `tol·(1 + scale)`.
pub fn finite_h_symmetry_residual<E: Entries + ?Sized>(
    a: &E,
    pair: &PairingSpec,
    w: &Window,
    tol: f64,
) -> Result<HSymmetry> {
    let h = pair.h_op();
    let needed = match (h.band(), a.band()) {
        (Some(x), Some(y)) => x.width().min(y.width()),
        (Some(x), None) => x.width(),
        (None, Some(y)) => y.width(),
        (None, None) => return Err(Error::NoExactness),
    };
    let w = w.with_pad(w.pad.max(needed).max(pair.p));
    let left = exact_product_window(&h, a, &w)?;
    let right = exact_product_window(&Adjoint(a), &h, &w)?;
    let (_, at) = left.max_abs_diff(&right);
    let residual = left.to_dense().sub(&right.to_dense()).inf_norm();
    let scale = left.inf_norm().max(right.inf_norm());
    let ag = ag_residual(a, pair, &w)?;
    let ok = residual <= tol * (1.0 + scale);
    let ag_ok = ag.residual <= tol * (1.0 + ag.scale);
    let mut finding = Finding::new("oracle:h-symmetry", Verdict::from_bool(ok))
        .with("residual", residual)
        .with("scale", scale)
        .with("ag_residual", ag.residual)
        .with("window", w.len() as f64);
    if !ok {
        if let Some((i, j)) = at {
            finding = finding.witness(Witness::Entry {
                k: w.lo + i,
                l: w.lo + j,
            });
        }
    }
    if ok != ag_ok {
        finding = finding.note("HA = AᴴH and AG = GAᴴ disagree on this window");
    }
    Ok(HSymmetry {
        residual,
        scale,
        ag_residual: ag.residual,
        agree: ok == ag_ok,
        finding,
    })
}

// ----------------------------------------------------------------- limit point

fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

pub const LIMIT_POINT_LABEL: &str = "classical limit-point criterion (advisory, independent of the certified hypotheses)";

/// Solves `b_{k−1}u_{k−1} + d_k u_k + b_k u_{k+1} = z u_k` from `u_1 = 1`
/// and reports `ln Σ_{k≤N} |u_k|²` at each size `N`.
///
/// The iterates are renormalised as they go and the scale is tracked in
/// logarithms, so exponential growth does not overflow. A growing trend
/// means the solution is not square-summable (limit point, evidence of
/// essential selfadjointness); a bounded one is a limit-circle warning.
pub fn jacobi_limit_point_probe(diag: &Seq, offdiag: &Seq, z: C64, sizes: &[usize]) -> Result<ProbeResult> {
    check_sizes(sizes)?;
    let n_max = *sizes.last().expect("non-empty");
    let d = diag.values(1, n_max)?;
    let b = offdiag.values(1, n_max)?;
    if let Some(k) = b.iter().position(|&v| !(v > 0.0)) {
        return Err(Error::Precondition(format!(
            "off-diagonal b_{} = {} is not positive",
            k + 1,
            b[k]
        )));
    }
    // u_prev = u_{k-1}, u = u_k, both multiplied by e^{-log_scale}
    let (mut u_prev, mut u) = (ZERO, C64::new(1.0, 0.0));
    let mut log_scale = 0.0f64;
    let mut log_sum = f64::NEG_INFINITY;
    let mut values = Vec::with_capacity(sizes.len());
    let mut next = sizes.iter().peekable();
    for k in 1..=n_max {
        log_sum = log_add(log_sum, 2.0 * (u.norm().ln() + log_scale));
        if next.peek() == Some(&&k) {
            values.push(log_sum);
            next.next();
        }
        let b_prev = if k >= 2 { b[k - 2] } else { 0.0 };
        let u_next = ((z - d[k - 1]) * u - b_prev * u_prev) / b[k - 1];
        u_prev = u;
        u = u_next;
        let mag = u.norm().max(u_prev.norm());
        if mag > 1e100 || (mag < 1e-100 && mag > 0.0) {
            u /= mag;
            u_prev /= mag;
            log_scale += mag.ln();
        }
    }
    let pts: Vec<(f64, f64)> = sizes
        .iter()
        .zip(&values)
        .map(|(&n, &v)| ((n as f64).ln(), v))
        .collect();
    let tail = &pts[(pts.len() / 2).min(pts.len().saturating_sub(2))..];
    let slope = trend::linear_slope(tail).unwrap_or(0.0);
    let trend = Trend::from_slope(slope);
    let (verdict, conclusion) = if trend == Trend::Growing {
        (
            Verdict::Pass,
            "limit point: the solution at z is not square-summable, evidence of essential selfadjointness",
        )
    } else {
        (
            Verdict::Inconclusive,
            "partial sums bounded: limit-circle warning (heuristic)",
        )
    };
    let finding = Finding::new("oracle:limit-point", verdict)
        .with("log_partial_sum", *values.last().expect("non-empty"))
        .with("slope", slope)
        .note(LIMIT_POINT_LABEL);
    Ok(ProbeResult {
        quantity: "ln sum |u_k|^2".into(),
        sizes: sizes.to_vec(),
        values,
        trend,
        slope,
        conclusion: conclusion.into(),
        finding,
    })
}

// ------------------------------------------------------------ graph-norm ratio

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphRatio {
    /// `‖Aᴴf‖/‖Af‖` per probe vector; `∞` when `Af = 0 ≠ Aᴴf`, `NaN` when
    /// both vanish.
    pub ratios: Vec<f64>,
    pub min: f64,
    pub max: f64,
    /// `(ratio)²` when all ratios agree to `1e-8`.
    pub q_hat: Option<f64>,
    pub conclusion: String,
    pub finding: Finding,
}

/// Unit vectors at up to eight spread-out positions plus `random`
/// seeded dense vectors, all supported in `w`.
pub fn probe_vectors(w: &Window, random: usize, seed: u64) -> Vec<Vec<C64>> {
    let n = w.len();
    let mut out = Vec::new();
    let picks = n.min(8);
    for t in 0..picks {
        let mut e = vec![ZERO; n];
        e[t * n / picks] = C64::new(1.0, 0.0);
        out.push(e);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..random {
        out.push(
            (0..n)
                .map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                .collect(),
        );
    }
    out
}

/// Relative spread accepted as "one ratio".
pub const RATIO_SPREAD: f64 = 1e-8;

/// `‖Aᴴf‖/‖Af‖` for vectors supported in `w`. `Af` and `Aᴴf` are exact
/// because the section extends `w` by the band width on both sides.
pub fn graph_norm_ratio_probe<E: Entries + ?Sized>(a: &E, w: &Window, vectors: &[Vec<C64>]) -> Result<GraphRatio> {
    w.check()?;
    let band = a
        .band()
        .ok_or_else(|| Error::Precondition("graph-norm probe needs a banded operator".into()))?;
    let reach = band.width();
    if w.pad < reach {
        return Err(Error::PadTooSmall {
            pad: w.pad,
            required: reach,
        });
    }
    let (plo, phi) = w.padded();
    let outer = Window::new(plo, phi, 0)?;
    let sec = truncate_band(a, &outer)?;
    let adj = sec.adjoint();
    let off = w.lo - plo;
    let ratios = parallel::try_map(vectors, |f| -> Result<f64> {
        if f.len() != w.len() {
            return Err(Error::Dimension(format!(
                "probe vector of length {} for a window of length {}",
                f.len(),
                w.len()
            )));
        }
        let mut x = vec![ZERO; outer.len()];
        x[off..off + f.len()].copy_from_slice(f);
        let af: f64 = sec.apply(&x).iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        let ahf: f64 = adj.apply(&x).iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        Ok(if af == 0.0 {
            if ahf == 0.0 {
                f64::NAN
            } else {
                f64::INFINITY
            }
        } else {
            ahf / af
        })
    })?;
    let finite: Vec<f64> = ratios.iter().copied().filter(|r| !r.is_nan()).collect();
    let min = finite.iter().copied().fold(f64::INFINITY, f64::min);
    let max = finite.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let one = !finite.is_empty() && max.is_finite() && min > 0.0 && max / min <= 1.0 + RATIO_SPREAD;
    let q_hat = one.then(|| {
        let r = 0.5 * (min + max);
        r * r
    });
    let conclusion = match q_hat {
        Some(q) => format!("q-formally normal on the probe with q = {q}"),
        None => "not q-formally normal on probe".to_owned(),
    };
    let mut finding = Finding::new("oracle:graph-norm-ratio", Verdict::from_bool(one))
        .with("min_ratio", min)
        .with("max_ratio", max)
        .with("vectors", vectors.len() as f64);
    if let Some(q) = q_hat {
        finding = finding.with("q_hat", q);
    }
    Ok(GraphRatio {
        ratios,
        min,
        max,
        q_hat,
        conclusion,
        finding,
    })
}

// ------------------------------------------------------- resolvent commutation

enum Solver {
    Band(BandLu),
    Dense(nalgebra::LU<C64, nalgebra::Dyn, nalgebra::Dyn>),
}

impl Solver {
    fn solve(&self, b: &[C64]) -> Vec<C64> {
        match self {
            Solver::Band(lu) => lu.solve(b),
            Solver::Dense(lu) => {
                let v = nalgebra::DVector::from_column_slice(b);
                lu.solve(&v).expect("checked invertible").as_slice().to_vec()
            }
        }
    }
}

fn factor(s: &Section) -> Result<Solver> {
    match s {
        Section::Band(b) => BandLu::factor(b).map(Solver::Band),
        Section::Dense(d) => {
            let m: DMatrix<C64> = d.to_nalgebra();
            let scale = d.inf_norm().max(f64::MIN_POSITIVE);
            let lu = m.lu();
            let u = lu.u();
            let min_piv = (0..u.nrows()).map(|i| u[(i, i)].norm()).fold(f64::INFINITY, f64::min);
            if !(min_piv > 1e-14 * scale) {
                return Err(Error::Precondition(format!(
                    "section numerically singular (pivot {min_piv:e})"
                )));
            }
            Ok(Solver::Dense(lu))
        }
    }
}

fn shifted(s: &Section, w: C64) -> Section {
    match s {
        Section::Band(b) => {
            let mut b = b.clone();
            for i in 0..b.dim() {
                b.set(i, i, b.get(i, i) - w);
            }
            Section::Band(b)
        }
        Section::Dense(d) => {
            let mut d = d.clone();
            for i in 0..d.rows() {
                d.set(i, i, d.get(i, i) - w);
            }
            Section::Dense(d)
        }
    }
}

/// `RD − DR` with `R = (A − w)⁻¹` and diagonal `D = (S − z)⁻¹`.
struct ResolventCommutator {
    r: Solver,
    r_adj: Solver,
    d: Vec<C64>,
}

impl LinOp for ResolventCommutator {
    fn nrows(&self) -> usize {
        self.d.len()
    }
    fn ncols(&self) -> usize {
        self.d.len()
    }
    fn apply(&self, x: &[C64]) -> Vec<C64> {
        let dx: Vec<C64> = x.iter().zip(&self.d).map(|(a, b)| a * b).collect();
        let rdx = self.r.solve(&dx);
        let rx = self.r.solve(x);
        rdx.iter().zip(rx.iter().zip(&self.d)).map(|(a, (b, d))| a - d * b).collect()
    }
    fn apply_adjoint(&self, y: &[C64]) -> Vec<C64> {
        // (RD − DR)ᴴ = D̄Rᴴ − RᴴD̄
        let dy: Vec<C64> = y.iter().zip(&self.d).map(|(a, b)| a * b.conj()).collect();
        let rhdy = self.r_adj.solve(&dy);
        let rhy = self.r_adj.solve(y);
        rhy.iter()
            .zip(&self.d)
            .zip(&rhdy)
            .map(|((a, d), b)| d.conj() * a - b)
            .collect()
    }
}

/// Target level for the resolvent commutator at the largest window.
pub const RESOLVENT_TARGET: f64 = 1e-8;

/// `‖(A − w)⁻¹(S − z)⁻¹ − (S − z)⁻¹(A − w)⁻¹‖` on sections `[1, N]`.
///
/// Passes when the value at the largest size is at most
/// [`RESOLVENT_TARGET`]. The section of `ad(S, A)` is reported alongside:
/// a non-zero value means the commutation precondition fails and decay is
/// not expected. Dense (unbanded) sections above `settings.dense_cap` are
/// skipped.
pub fn resolvent_commute_check<E: Entries + ?Sized>(
    a: &E,
    c: &DiagonalSpec,
    z: C64,
    w: C64,
    sizes: &[usize],
    settings: &Settings,
) -> Result<ProbeResult> {
    check_sizes(sizes)?;
    let banded = a.band().is_some();
    let sizes: Vec<usize> = sizes
        .iter()
        .copied()
        .filter(|&n| banded || n <= settings.dense_cap)
        .collect();
    if sizes.is_empty() {
        return Err(Error::Precondition("no window fits the dense cap".into()));
    }
    let mut values = Vec::with_capacity(sizes.len());
    let mut singular_at = None;
    let mut ad_max = 0.0f64;
    for &n in &sizes {
        let win = Window::first(n);
        let sec = truncate_section(a, &win)?;
        let cs = c.values(&win)?;
        let comm = match &sec {
            Section::Band(b) => {
                let mut mx = 0.0f64;
                for i in 0..b.dim() {
                    let (lo, hi) = b.row_span(i);
                    for j in lo..hi {
                        mx = mx.max(((cs[i] - cs[j]) * b.get(i, j)).norm());
                    }
                }
                mx
            }
            Section::Dense(d) => {
                let mut mx = 0.0f64;
                for i in 0..n {
                    for j in 0..n {
                        mx = mx.max(((cs[i] - cs[j]) * d.get(i, j)).norm());
                    }
                }
                mx
            }
        };
        ad_max = ad_max.max(comm);
        let d = linalg::resolvent_diag(c, z, &win, linalg::RESOLVENT_EPS)?.diagonal();
        let solvers = factor(&shifted(&sec, w)).and_then(|r| Ok((r, factor(&shifted(&sec.adjoint(), w.conj()))?)));
        match solvers {
            Ok((r, r_adj)) => {
                let op = ResolventCommutator { r, r_adj, d };
                values.push(linalg::power_norm(&op, &settings.norm).value);
            }
            Err(Error::Precondition(_)) => {
                singular_at.get_or_insert(n);
                values.push(f64::INFINITY);
            }
            Err(e) => return Err(e),
        }
    }
    let (trend, slope) = trend::classify_tail(
        &sizes.iter().map(|&n| n as f64).collect::<Vec<_>>(),
        &values,
    );
    let last = *values.last().expect("non-empty");
    let ok = last <= RESOLVENT_TARGET;
    let conclusion = if let Some(n) = singular_at {
        format!("w not in resolvent set at this size (N = {n})")
    } else if ok {
        "resolvents commute on sections: commutator below target".to_owned()
    } else if ad_max > 0.0 {
        "no decay: ad(S, A) does not vanish, the commutation precondition is violated".to_owned()
    } else {
        "no decay to the target on the ladder".to_owned()
    };
    let mut finding = Finding::new("oracle:resolvent-commute", Verdict::from_bool(ok && singular_at.is_none()))
        .with("last", last)
        .with("ad_section_max", ad_max)
        .with("slope", slope);
    if let Some(n) = singular_at {
        finding = finding.witness(Witness::Index { n: n as u64 });
    }
    Ok(ProbeResult {
        quantity: "resolvent commutator norm".into(),
        sizes,
        values,
        trend,
        slope,
        conclusion,
        finding,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{Band, EntryGen, FnEntries};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn h_symmetry_identity_and_perturbed() {
        let id = PairingSpec::identity();
        let jac = EntryGen::jacobi(Seq::index(), Seq::index());
        let r = finite_h_symmetry_residual(&jac, &id, &Window::first(40), 1e-10).unwrap();
        assert_eq!(r.residual, 0.0);
        assert!(r.agree);
        let eps = 0.25;
        let bumped = FnEntries::new(Some(Band::symmetric(1)), move |k, l| {
            let base = jac.entry(k, l).unwrap();
            if (k, l) == (5, 6) {
                base + eps
            } else {
                base
            }
        });
        let r = finite_h_symmetry_residual(&bumped, &id, &Window::first(40), 1e-10).unwrap();
        assert!((r.residual - eps).abs() < 1e-12, "{}", r.residual);
        assert!(r.agree);
        assert_eq!(r.finding.verdict, Verdict::Fail);
    }

    #[test]
    fn limit_point_examples() {
        let sizes: Vec<usize> = (4..=12).map(|j| 1 << j).collect();
        let free = jacobi_limit_point_probe(&Seq::Const(0.0), &Seq::Const(1.0), c(0.0, 1.0), &sizes).unwrap();
        assert_eq!(free.trend, Trend::Growing);
        let lin = jacobi_limit_point_probe(&Seq::index(), &Seq::Const(1.0), c(0.0, 1.0), &sizes).unwrap();
        assert_eq!(lin.trend, Trend::Growing);
        let quad = jacobi_limit_point_probe(&Seq::Const(0.0), &Seq::formula("k*(k+1)").unwrap(), c(0.0, 1.0), &sizes)
            .unwrap();
        assert_eq!(quad.trend, Trend::Bounded, "{quad:?}");
        assert!(matches!(
            jacobi_limit_point_probe(&Seq::Const(0.0), &Seq::Const(0.0), c(0.0, 1.0), &sizes),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn graph_ratio_examples() {
        let w = Window::new(5, 40, 2).unwrap();
        let vs = probe_vectors(&w, 4, 3);
        let normal = FnEntries::new(Some(Band::symmetric(0)), |k, l| {
            if k == l {
                c(k as f64, 2.0 * k as f64)
            } else {
                ZERO
            }
        });
        let r = graph_norm_ratio_probe(&normal, &w, &vs).unwrap();
        assert!((r.min - 1.0).abs() < 1e-12 && (r.max - 1.0).abs() < 1e-12);
        assert!((r.q_hat.unwrap() - 1.0).abs() < 1e-12);
        let shift = FnEntries::new(Some(Band { lower: 1, upper: 0 }), |k, l| {
            if k == l + 1 {
                c(0.0, 3.0)
            } else {
                ZERO
            }
        });
        let r = graph_norm_ratio_probe(&shift, &w, &vs).unwrap();
        assert!((r.q_hat.unwrap() - 1.0).abs() < 1e-12, "{r:?}");
        let mixed = FnEntries::new(Some(Band::symmetric(1)), |k, l| {
            match (k, l) {
                (10, 11) => c(1.0, 0.0),
                _ if k == l => c(1.0, 0.0),
                _ => ZERO,
            }
        });
        let r = graph_norm_ratio_probe(&mixed, &w, &vs).unwrap();
        assert!(r.q_hat.is_none());
        assert_eq!(r.conclusion, "not q-formally normal on probe");
    }

    #[test]
    fn resolvent_commutation_examples() {
        let st = Settings::default();
        let sizes = [32, 64, 128];
        let diag = EntryGen::diagonal(Seq::formula("1/k").unwrap());
        let r = resolvent_commute_check(&diag, &DiagonalSpec::default(), c(0.0, 2.0), c(0.0, 1.0), &sizes, &st)
            .unwrap();
        assert!(r.values.iter().all(|&v| v <= 1e-15), "{r:?}");
        assert_eq!(r.finding.verdict, Verdict::Pass);
        let jac = EntryGen::jacobi(Seq::Const(0.0), Seq::Const(1.0));
        let r = resolvent_commute_check(&jac, &DiagonalSpec::default(), c(0.0, 2.0), c(0.0, 1.0), &sizes, &st)
            .unwrap();
        assert_eq!(r.finding.verdict, Verdict::Fail);
        assert!(r.finding.evidence["ad_section_max"] > 0.0);
    }
}
