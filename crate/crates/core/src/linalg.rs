//! Finite-dimensional kernels: operator norms, Hermitian eigenvalue bounds,
//! matrix pencils, diagonal resolvents, Schur-test certificates and banded
//! LU solves.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::matrix::{BandMatrix, DenseMatrix, LinOp, Section};
use crate::operator::{DiagonalSpec, Entries, Window};
use crate::trend::{self, Trend};
use crate::{parallel, Error, Result};

const ZERO: C64 = C64::new(0.0, 0.0);

/// Default minimum distance from the spectrum for diagonal resolvents.
pub const RESOLVENT_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormMethod {
    PowerIteration,
    ExhaustiveSvd,
    /// Bisection on `λ_max(MᴴM)` with banded Cholesky as the definiteness
    /// test.
    BandBisection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NormOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
    /// Sections with both dimensions at most this size use a full SVD.
    pub svd_threshold: usize,
}

impl Default for NormOptions {
    fn default() -> Self {
        NormOptions {
            tol: 1e-10,
            max_iter: 10_000,
            seed: 0,
            svd_threshold: 64,
        }
    }
}

/// Largest singular value with convergence metadata.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormEstimate {
    pub value: f64,
    pub iterations: usize,
    /// Relative change of the estimate at the last step (0 for direct
    /// methods).
    pub residual: f64,
    pub method: NormMethod,
    pub converged: bool,
}

impl NormEstimate {
    fn exact(value: f64, method: NormMethod) -> Self {
        NormEstimate {
            value,
            iterations: 0,
            residual: 0.0,
            method,
            converged: true,
        }
    }
}

/// Spectral norm of a dense matrix: full SVD up to `svd_threshold`, power
/// iteration beyond.
pub fn op_norm(m: &DenseMatrix, opts: &NormOptions) -> Result<NormEstimate> {
    if !m.is_finite() {
        return Err(Error::Contract("norm of a matrix with non-finite entries".into()));
    }
    if m.rows().max(m.cols()) <= opts.svd_threshold {
        Ok(svd_norm(m))
    } else {
        Ok(power_norm(m, opts))
    }
}

/// Spectral norm of a section; banded sections beyond the SVD threshold use
/// band bisection.
pub fn section_norm(s: &Section, opts: &NormOptions) -> Result<NormEstimate> {
    match s {
        Section::Dense(m) => op_norm(m, opts),
        Section::Band(b) => {
            if !b.is_finite() {
                return Err(Error::Contract("norm of a matrix with non-finite entries".into()));
            }
            if b.dim() <= opts.svd_threshold {
                Ok(svd_norm(&b.to_dense()))
            } else {
                Ok(band_norm(b, opts))
            }
        }
    }
}

pub fn svd_norm(m: &DenseMatrix) -> NormEstimate {
    if m.rows() == 0 || m.cols() == 0 {
        return NormEstimate::exact(0.0, NormMethod::ExhaustiveSvd);
    }
    let sv = m.to_nalgebra().singular_values();
    NormEstimate::exact(sv.max(), NormMethod::ExhaustiveSvd)
}

fn vnorm(x: &[C64]) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Seeded start vector: all-ones plus a small deterministic perturbation.
fn start_vector(n: usize, seed: u64) -> Vec<C64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x: Vec<C64> = (0..n)
        .map(|_| {
            C64::new(
                1.0 + 0.05 * rng.random_range(-1.0..1.0),
                0.05 * rng.random_range(-1.0..1.0),
            )
        })
        .collect();
    let s = vnorm(&x);
    x.iter_mut().for_each(|z| *z /= s);
    x
}

/// Power iteration on `MᴴM`.
///
/// Converged once the relative change of the estimate is at most `tol`
/// and the eigen-residual `‖MᴴMx − λx‖/λ` is at most `√tol`.
pub fn power_norm<M: LinOp + ?Sized>(m: &M, opts: &NormOptions) -> NormEstimate {
    let n = m.ncols();
    if n == 0 || m.nrows() == 0 {
        return NormEstimate::exact(0.0, NormMethod::PowerIteration);
    }
    let mut x = start_vector(n, opts.seed);
    let mut prev = f64::NAN;
    let mut change = f64::INFINITY;
    for it in 1..=opts.max_iter.max(1) {
        let y = m.apply(&x);
        let z = m.apply_adjoint(&y);
        let lambda = y.iter().map(|v| v.norm_sqr()).sum::<f64>();
        let zn = vnorm(&z);
        if lambda == 0.0 || zn == 0.0 {
            return NormEstimate {
                value: 0.0,
                iterations: it,
                residual: 0.0,
                method: NormMethod::PowerIteration,
                converged: true,
            };
        }
        let sigma = lambda.sqrt();
        let eig_res = z
            .iter()
            .zip(&x)
            .map(|(a, b)| (a - b * lambda).norm_sqr())
            .sum::<f64>()
            .sqrt()
            / lambda;
        if prev.is_finite() {
            change = (sigma - prev).abs() / sigma;
            if change <= opts.tol && eig_res <= opts.tol.sqrt() {
                return NormEstimate {
                    value: sigma,
                    iterations: it,
                    residual: change,
                    method: NormMethod::PowerIteration,
                    converged: true,
                };
            }
        }
        prev = sigma;
        x = z.into_iter().map(|v| v / zn).collect();
    }
    NormEstimate {
        value: prev,
        iterations: opts.max_iter,
        residual: change,
        method: NormMethod::PowerIteration,
        converged: false,
    }
}

/// Hermitian band matrix stored by lower band rows; used for definiteness
/// tests by Cholesky.
fn is_positive_definite(b: &BandMatrix, shift: f64) -> bool {
    // tests shift·I − b
    let n = b.dim();
    let w = b.lower();
    // l[i][t] holds L_{i, i-w+t}
    let mut l = vec![vec![ZERO; w + 1]; n];
    for j in 0..n {
        let lo = j.saturating_sub(w);
        for i in j..(j + w + 1).min(n) {
            let mut s = if i == j { C64::new(shift, 0.0) } else { ZERO } - b.get(i, j);
            let ilo = i.saturating_sub(w);
            for k in lo.max(ilo)..j {
                s -= l[i][k + w - i] * l[j][k + w - j].conj();
            }
            if i == j {
                if !(s.re > 0.0) || !s.re.is_finite() {
                    return false;
                }
                l[j][w] = C64::new(s.re.sqrt(), 0.0);
            } else {
                l[i][j + w - i] = s / l[j][w];
            }
        }
    }
    true
}

/// `‖M‖` for a banded section by bisection on `λ_max(MᴴM)`.
pub fn band_norm(m: &BandMatrix, opts: &NormOptions) -> NormEstimate {
    let g = m.gram();
    let upper = g.inf_norm();
    if upper == 0.0 {
        return NormEstimate::exact(0.0, NormMethod::BandBisection);
    }
    let mut lo = g.diagonal().iter().map(|z| z.re).fold(0.0, f64::max);
    let mut hi = upper * (1.0 + 4.0 * f64::EPSILON) + f64::MIN_POSITIVE;
    let mut it = 0;
    // λ relative accuracy 2·tol gives σ relative accuracy tol
    while hi - lo > 2.0 * opts.tol * hi && it < 400 {
        let mid = 0.5 * (lo + hi);
        if is_positive_definite(&g, mid) {
            hi = mid;
        } else {
            lo = mid;
        }
        it += 1;
    }
    let value = (0.5 * (lo + hi)).sqrt();
    NormEstimate {
        value,
        iterations: it,
        residual: (hi - lo) / (2.0 * hi),
        method: NormMethod::BandBisection,
        converged: hi - lo <= 2.0 * opts.tol * hi,
    }
}

fn check_hermitian(m: &DenseMatrix, what: &str) -> Result<()> {
    if m.rows() != m.cols() {
        return Err(Error::Dimension(format!("{what} is {}x{}, not square", m.rows(), m.cols())));
    }
    let scale = m.max_abs();
    let defect = m.hermitian_defect();
    if defect > 1e-12 * scale.max(f64::MIN_POSITIVE) && defect > 0.0 {
        return Err(Error::Contract(format!(
            "{what} is not Hermitian: max |M − Mᴴ| = {defect:e}"
        )));
    }
    Ok(())
}

/// Eigen decomposition of the Hermitian part.
fn herm_eigen(m: &DenseMatrix) -> SymmetricEigen<C64, nalgebra::Dyn> {
    let a = m.to_nalgebra();
    let h = (&a + a.adjoint()).scale(0.5);
    SymmetricEigen::new(h)
}

/// Extreme eigenvalues `(λ_min, λ_max)` of a Hermitian matrix.
pub fn herm_eig_bounds(m: &DenseMatrix) -> Result<(f64, f64)> {
    check_hermitian(m, "matrix")?;
    if m.rows() == 0 {
        return Err(Error::Dimension("empty matrix has no eigenvalues".into()));
    }
    let e = herm_eigen(m);
    Ok((e.eigenvalues.min(), e.eigenvalues.max()))
}

/// Smallest `c ≥ 1` with `c⁻¹A ≤ B ≤ cA` for Hermitian PSD `A`, `B`, or
/// `None` when the ranges differ so that no such `c` exists.
///
/// Eigenvalues below `tol·max(1, λ_max)` count as zero; `c` within `tol` of
/// 1 is reported as exactly 1.
pub fn pencil_bound(a: &DenseMatrix, b: &DenseMatrix, tol: f64) -> Result<Option<f64>> {
    check_hermitian(a, "A")?;
    check_hermitian(b, "B")?;
    if a.rows() != b.rows() {
        return Err(Error::Dimension(format!(
            "pencil of {}x{} and {}x{} matrices",
            a.rows(),
            a.rows(),
            b.rows(),
            b.rows()
        )));
    }
    let n = a.rows();
    let ea = herm_eigen(a);
    let eb = herm_eigen(b);
    let cut = |e: &SymmetricEigen<C64, nalgebra::Dyn>, name: &str| -> Result<f64> {
        let scale = e.eigenvalues.max().max(1.0);
        let min = e.eigenvalues.min();
        if min < -tol * scale {
            return Err(Error::Contract(format!(
                "{name} is indefinite: λ_min = {min:e}"
            )));
        }
        Ok(tol * scale)
    };
    let ta = cut(&ea, "A")?;
    let tb = cut(&eb, "B")?;
    let range = |e: &SymmetricEigen<C64, nalgebra::Dyn>, t: f64| -> Vec<usize> {
        (0..n).filter(|&i| e.eigenvalues[i] > t).collect()
    };
    let ra = range(&ea, ta);
    let rb = range(&eb, tb);
    if ra.len() != rb.len() {
        return Ok(None);
    }
    if ra.is_empty() {
        return Ok(Some(1.0));
    }
    let ua = ea.eigenvectors.select_columns(&ra);
    let ub = eb.eigenvectors.select_columns(&rb);
    // equal ranges iff the projection of ub onto range(ua) keeps its norm
    let proj = ua.adjoint() * &ub;
    let lost = (ub.norm_squared() - proj.norm_squared()).max(0.0).sqrt();
    if lost > tol.sqrt() {
        return Ok(None);
    }
    let inv_sqrt = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        ra.len(),
        ra.iter().map(|&i| C64::new(1.0 / ea.eigenvalues[i].sqrt(), 0.0)),
    ));
    let bm = b.to_nalgebra();
    let c = &inv_sqrt * ua.adjoint() * bm * &ua * &inv_sqrt;
    let c = (&c + c.adjoint()).scale(0.5);
    let mu = SymmetricEigen::new(c).eigenvalues;
    let (lo, hi) = (mu.min(), mu.max());
    if lo <= 0.0 {
        return Ok(None);
    }
    let bound = hi.max(1.0 / lo).max(1.0);
    Ok(Some(if bound - 1.0 <= tol { 1.0 } else { bound }))
}

/// Diagonal of `(S − z)⁻¹` for `S = [δ_{k,l} c_l]` on `w`.
pub fn resolvent_diag(c: &DiagonalSpec, z: C64, w: &Window, eps: f64) -> Result<BandMatrix> {
    w.check()?;
    let mut d = Vec::with_capacity(w.len());
    for k in w.indices() {
        let diff = C64::new(c.value(k)?, 0.0) - z;
        let dist = diff.norm();
        if dist < eps {
            return Err(Error::SingularResolvent { k, distance: dist, eps });
        }
        d.push(diff.inv());
    }
    Ok(BandMatrix::from_diagonal(&d))
}

/// Weights for the Schur test: `w_k = 1`, or `w_k = 1 + |c_k|^m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchurWeights {
    #[default]
    Unit,
    Power,
}

impl SchurWeights {
    /// Weights on the indices of `w`.
    pub fn values(self, c: &DiagonalSpec, m: u32, w: &Window) -> Result<Vec<f64>> {
        match self {
            SchurWeights::Unit => Ok(vec![1.0; w.len()]),
            SchurWeights::Power => Ok(c
                .values(w)?
                .into_iter()
                .map(|ck| 1.0 + ck.abs().powi(m as i32))
                .collect()),
        }
    }
}

/// Schur-test evidence for a non-negative kernel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchurCertificate {
    /// `√(sup R · sup C)`, or `None` when the row or column sums keep
    /// growing on the probe.
    pub bound: Option<f64>,
    pub row_sup: f64,
    pub col_sup: f64,
    pub row_slope: f64,
    pub col_slope: f64,
    pub label: String,
}

/// Weighted row and column sums `R_k = w_k⁻¹ Σ_l K(k,l) w_l`,
/// `C_l = w_l⁻¹ Σ_k K(k,l) w_k`, with `weights[i]` the weight of index
/// `probe.lo + i`.
///
/// The tail beyond the probe is not seen, so the sums are evaluated for the
/// leading half of the indices at three nested probe sizes; if either
/// supremum still grows (log-log slope above the trend threshold) the test
/// is inconclusive.
pub fn schur_bound<K: Entries + ?Sized>(
    kernel: &K,
    weights: &[f64],
    probe: &Window,
) -> Result<SchurCertificate> {
    probe.check()?;
    let n = probe.len();
    if weights.len() != n {
        return Err(Error::Dimension(format!(
            "{} Schur weights for a probe of length {n}",
            weights.len()
        )));
    }
    let wts = weights;
    if let Some((i, w)) = wts.iter().enumerate().find(|(_, w)| **w <= 0.0) {
        return Err(Error::Precondition(format!(
            "Schur weight w_{} = {w} is not positive",
            probe.lo + i
        )));
    }
    let band = kernel.band();
    let rows = parallel::try_map_range(n, |i| {
        let k = probe.lo + i;
        let (first, last) = match band {
            Some(b) => (k.saturating_sub(b.lower).max(probe.lo), (k + b.upper).min(probe.hi)),
            None => (probe.lo, probe.hi),
        };
        let mut out = Vec::new();
        for l in first..=last {
            let v = kernel.entry(k, l)?;
            if v.im != 0.0 || v.re < 0.0 || !v.re.is_finite() {
                return Err(Error::Contract(format!(
                    "Schur kernel entry ({k},{l}) = {v} is not a non-negative real"
                )));
            }
            if v.re != 0.0 {
                out.push((l - probe.lo, v.re));
            }
        }
        Ok(out)
    })?;
    let sizes: Vec<usize> = [n / 4, n / 2, n].into_iter().filter(|&s| s >= 2).collect();
    let sizes = if sizes.is_empty() { vec![n] } else { sizes };
    let mut row_sups = Vec::new();
    let mut col_sups = Vec::new();
    for &s in &sizes {
        let mut col = vec![0.0; s];
        let mut row_sup: f64 = 0.0;
        for (i, row) in rows.iter().take(s).enumerate() {
            let mut r = 0.0;
            for &(j, v) in row.iter().filter(|(j, _)| *j < s) {
                r += v * wts[j];
                col[j] += v * wts[i];
            }
            if i < s.div_ceil(2) {
                row_sup = row_sup.max(r / wts[i]);
            }
        }
        let col_sup = col
            .iter()
            .enumerate()
            .take(s.div_ceil(2))
            .map(|(j, c)| c / wts[j])
            .fold(0.0, f64::max);
        row_sups.push(row_sup);
        col_sups.push(col_sup);
    }
    let xs: Vec<f64> = sizes.iter().map(|&s| s as f64).collect();
    let (rt, rs) = trend::classify_tail(&xs, &row_sups);
    let (ct, cs) = trend::classify_tail(&xs, &col_sups);
    let row_sup = *row_sups.last().expect("non-empty");
    let col_sup = *col_sups.last().expect("non-empty");
    let growing = rt == Trend::Growing || ct == Trend::Growing;
    Ok(SchurCertificate {
        bound: (!growing).then(|| (row_sup * col_sup).sqrt()),
        row_sup,
        col_sup,
        row_slope: rs,
        col_slope: cs,
        label: if growing {
            "inconclusive (row or column sums grow on the probe)".into()
        } else {
            "certificate (heuristic tail)".into()
        },
    })
}

/// One point of a norm curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub size: usize,
    pub estimate: NormEstimate,
}

/// Norms of nested sections over a window ladder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormCurve {
    pub points: Vec<CurvePoint>,
    /// Last two estimates agree to the flatness threshold.
    pub flat: bool,
    pub all_converged: bool,
    pub trend: Trend,
    pub slope: f64,
}

impl NormCurve {
    pub fn last(&self) -> f64 {
        self.points.last().map_or(0.0, |p| p.estimate.value)
    }

    pub fn sup(&self) -> f64 {
        self.points.iter().map(|p| p.estimate.value).fold(0.0, f64::max)
    }

    /// Whether values never decrease by more than the relative tolerance.
    pub fn is_monotone(&self, rel: f64) -> bool {
        self.points
            .windows(2)
            .all(|w| w[1].estimate.value >= w[0].estimate.value * (1.0 - rel) - rel)
    }
}

/// Relative gap between the last two values; zero when both vanish.
pub fn relative_change(prev: f64, last: f64) -> f64 {
    let scale = prev.abs().max(last.abs());
    if scale == 0.0 {
        0.0
    } else {
        (last - prev).abs() / scale
    }
}

/// Builds the section for each size in parallel and records its norm.
pub fn norm_curve<F>(sizes: &[usize], opts: &NormOptions, flatness: f64, build: F) -> Result<NormCurve>
where
    F: Fn(usize) -> Result<Section> + Sync + Send,
{
    let points = parallel::try_map(sizes, |&size| {
        let s = build(size)?;
        Ok::<_, Error>(CurvePoint {
            size,
            estimate: section_norm(&s, opts)?,
        })
    })?;
    Ok(curve_from_points(points, flatness))
}

pub fn curve_from_points(points: Vec<CurvePoint>, flatness: f64) -> NormCurve {
    let flat = match points.as_slice() {
        [.., a, b] => relative_change(a.estimate.value, b.estimate.value) <= flatness,
        _ => false,
    };
    let xs: Vec<f64> = points.iter().map(|p| p.size as f64).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.estimate.value).collect();
    let (trend, slope) = trend::classify_tail(&xs, &ys);
    NormCurve {
        all_converged: points.iter().all(|p| p.estimate.converged),
        points,
        flat,
        trend,
        slope,
    }
}

/// LU factorisation with partial pivoting of a square band matrix.
#[derive(Debug, Clone)]
pub struct BandLu {
    n: usize,
    pivots: Vec<usize>,
    /// Multipliers of elimination step `j`: `(row, factor)`.
    lower: Vec<Vec<(usize, C64)>>,
    /// Row `i` of `U` from column `i`: `(start, entries)`.
    upper: Vec<(usize, Vec<C64>)>,
}

impl BandLu {
    /// Fails when a pivot is below `1e-14·‖M‖_∞`.
    pub fn factor(m: &BandMatrix) -> Result<Self> {
        let n = m.dim();
        let kl = m.lower();
        let scale = m.inf_norm().max(f64::MIN_POSITIVE);
        let mut rows: Vec<(usize, Vec<C64>)> = (0..n)
            .map(|i| {
                let (a, b) = m.row_span(i);
                (a, (a..b).map(|j| m.get(i, j)).collect())
            })
            .collect();
        let at = |row: &(usize, Vec<C64>), j: usize| -> C64 {
            if j >= row.0 && j < row.0 + row.1.len() {
                row.1[j - row.0]
            } else {
                ZERO
            }
        };
        let mut pivots = Vec::with_capacity(n);
        let mut lower = Vec::with_capacity(n);
        for j in 0..n {
            let last = (j + kl).min(n - 1);
            let p = (j..=last)
                .max_by(|&a, &b| at(&rows[a], j).norm().total_cmp(&at(&rows[b], j).norm()))
                .expect("non-empty range");
            let piv = at(&rows[p], j);
            if piv.norm() <= 1e-14 * scale {
                return Err(Error::Precondition(format!(
                    "band matrix numerically singular at step {j} (pivot {:e})",
                    piv.norm()
                )));
            }
            rows.swap(j, p);
            pivots.push(p);
            // drop the columns left of j from the pivot row
            let (start, vals) = &mut rows[j];
            if *start < j {
                vals.drain(..j - *start);
                *start = j;
            }
            let prow = rows[j].clone();
            let mut mults = Vec::new();
            for r in j + 1..=last {
                let f = at(&rows[r], j) / piv;
                if f == ZERO {
                    continue;
                }
                let row = &mut rows[r];
                let end = prow.0 + prow.1.len();
                if row.0 + row.1.len() < end {
                    row.1.resize(end - row.0, ZERO);
                }
                for (t, v) in prow.1.iter().enumerate() {
                    let c = prow.0 + t;
                    if c >= row.0 {
                        row.1[c - row.0] -= f * v;
                    }
                }
                mults.push((r, f));
            }
            lower.push(mults);
        }
        Ok(BandLu {
            n,
            pivots,
            lower,
            upper: rows,
        })
    }

    pub fn solve(&self, b: &[C64]) -> Vec<C64> {
        let mut x = b.to_vec();
        for j in 0..self.n {
            x.swap(j, self.pivots[j]);
            let xj = x[j];
            for &(r, f) in &self.lower[j] {
                x[r] -= f * xj;
            }
        }
        for i in (0..self.n).rev() {
            let (start, vals) = &self.upper[i];
            debug_assert_eq!(*start, i);
            let mut s = x[i];
            for (t, v) in vals.iter().enumerate().skip(1) {
                s -= v * x[i + t];
            }
            x[i] = s / vals[0];
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn random_dense(n: usize, seed: u64) -> DenseMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DenseMatrix::from_fn(n, n, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
    }

    #[test]
    fn norms_of_simple_matrices() {
        let o = NormOptions::default();
        assert_relative_eq!(op_norm(&DenseMatrix::identity(3), &o).unwrap().value, 1.0, epsilon = 1e-12);
        let d = DenseMatrix::from_diagonal(&[c(1.0, 0.0), c(-5.0, 0.0), c(0.0, 2.0)]);
        assert_relative_eq!(op_norm(&d, &o).unwrap().value, 5.0, epsilon = 1e-10);
        let p = power_norm(&d, &o);
        assert!(p.converged);
        assert_relative_eq!(p.value, 5.0, epsilon = 1e-9);
    }

    #[test]
    fn power_iteration_matches_svd() {
        let m = random_dense(30, 11);
        let o = NormOptions::default();
        let exact = svd_norm(&m).value;
        let est = power_norm(&m, &o);
        assert!(est.converged);
        assert!((est.value - exact).abs() <= 1e-8 * exact);
    }

    #[test]
    fn band_bisection_matches_svd() {
        let mut b = BandMatrix::zeros(80, 2, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for i in 0..80 {
            let (lo, hi) = b.row_span(i);
            for j in lo..hi {
                b.set(i, j, c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
            }
        }
        let o = NormOptions::default();
        let est = band_norm(&b, &o);
        let exact = svd_norm(&b.to_dense()).value;
        assert!(est.converged);
        assert!((est.value - exact).abs() <= 1e-9 * exact, "{} vs {exact}", est.value);
    }

    #[test]
    fn eig_bounds() {
        let d = DenseMatrix::from_diagonal(&[c(1.0, 0.0), c(2.0, 0.0), c(3.0, 0.0)]);
        let (lo, hi) = herm_eig_bounds(&d).unwrap();
        assert_relative_eq!(lo, 1.0, epsilon = 1e-12);
        assert_relative_eq!(hi, 3.0, epsilon = 1e-12);
        let x = DenseMatrix::from_row_major(2, 2, vec![c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]);
        let (lo, hi) = herm_eig_bounds(&x).unwrap();
        assert_relative_eq!(lo, -1.0, epsilon = 1e-12);
        assert_relative_eq!(hi, 1.0, epsilon = 1e-12);
        let nh = DenseMatrix::from_row_major(2, 2, vec![c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        assert!(matches!(herm_eig_bounds(&nh), Err(Error::Contract(_))));
    }

    #[test]
    fn pencils() {
        let d = |v: &[f64]| DenseMatrix::from_diagonal(&v.iter().map(|x| c(*x, 0.0)).collect::<Vec<_>>());
        assert_eq!(pencil_bound(&d(&[1.0, 1.0]), &d(&[1.0, 1.0]), 1e-10).unwrap(), Some(1.0));
        let c2 = pencil_bound(&d(&[1.0, 4.0]), &d(&[2.0, 2.0]), 1e-10).unwrap().unwrap();
        assert_relative_eq!(c2, 2.0, epsilon = 1e-12);
        assert_eq!(pencil_bound(&d(&[1.0, 0.0]), &d(&[1.0, 1.0]), 1e-10).unwrap(), None);
        assert_eq!(pencil_bound(&d(&[0.0, 1.0]), &d(&[1.0, 0.0]), 1e-10).unwrap(), None);
        assert!(pencil_bound(&d(&[-1.0, 1.0]), &d(&[1.0, 1.0]), 1e-10).is_err());
    }

    #[test]
    fn resolvents() {
        let cs = DiagonalSpec::default();
        let r = resolvent_diag(&cs, c(0.0, 1.0), &Window::first(3), RESOLVENT_EPS).unwrap();
        assert_relative_eq!(r.get(0, 0).re, 0.5, epsilon = 1e-15);
        assert_relative_eq!(r.get(0, 0).im, 0.5, epsilon = 1e-15);
        for n in 1..20 {
            let r = resolvent_diag(&cs, c(0.0, n as f64), &Window::first(50), RESOLVENT_EPS).unwrap();
            assert!(r.diagonal().iter().all(|z| z.norm() <= 1.0 / n as f64));
        }
        assert!(matches!(
            resolvent_diag(&cs, c(2.0, 0.0), &Window::first(3), RESOLVENT_EPS),
            Err(Error::SingularResolvent { k: 2, .. })
        ));
    }

    #[test]
    fn schur_examples() {
        use crate::operator::{EntryGen, FnEntries, Band};
        let unit = |n: usize| vec![1.0; n];
        let zero = schur_bound(&EntryGen::Zero, &unit(64), &Window::first(64)).unwrap();
        assert_eq!(zero.bound, Some(0.0));
        let banded = FnEntries::new(Some(Band::symmetric(2)), |k, l| c(0.3 + 0.2 * ((k * 7 + l) % 3) as f64 / 2.0, 0.0));
        let b = schur_bound(&banded, &unit(256), &Window::first(256)).unwrap();
        assert!(b.bound.unwrap() <= 5.0 * 0.5);
        let ones = FnEntries::new(None, |_, _| c(1.0, 0.0));
        assert_eq!(schur_bound(&ones, &unit(256), &Window::first(256)).unwrap().bound, None);
    }

    #[test]
    fn band_lu_solves() {
        let mut b = BandMatrix::zeros(50, 2, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for i in 0..50 {
            let (lo, hi) = b.row_span(i);
            for j in lo..hi {
                b.set(i, j, c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
            }
        }
        let x: Vec<C64> = (0..50).map(|i| c(i as f64, 1.0)).collect();
        let rhs = b.apply(&x);
        let lu = BandLu::factor(&b).unwrap();
        let y = lu.solve(&rhs);
        let err = y.iter().zip(&x).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(err < 1e-9, "{err}");
        assert!(BandLu::factor(&BandMatrix::zeros(4, 1, 1)).is_err());
    }
}
