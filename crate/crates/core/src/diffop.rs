//! Coefficient checks for first-order differential operators on
//! `(L²(ℝ^m))^k`.
//!
//! Two operator shapes are covered. The Dirac type
//! `Au = i⁻¹ Σ α_l ∂_l u + Q u` with constant `α_l` is formally normal under
//! the identities of [`check_afnorm`] and essentially normal once `Q` is
//! also locally Hölder ([`check_holder`]). The variable-coefficient type
//! `Au = i⁻¹ Σ Q_l ∂_l u` satisfies `𝒟(Ā) = 𝒟(A*)` when the coefficient
//! derivatives are bounded ([`check_ql`]), the block matrices `Q(x)` and
//! `Q^{(*)}(x)` are mutually comparable ([`check_qq`]) and `Q(x)` is bounded
//! above ([`check_qi`]).
//!
//! Coefficients are polynomial matrices, checked structurally where that is
//! possible, pointwise formulas, or sampled tables. Pointwise conditions are
//! evaluated on a [`GridSpec`]: a box lattice plus radial rays whose value
//! trends expose polynomial growth.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::exprlang::{BinOp, Bindings, Expr};
use crate::linalg::{self, svd_norm};
use crate::matrix::DenseMatrix;
use crate::operator::Formula;
use crate::trend::{self, Trend};
use crate::{parallel, Error, Finding, Result, Verdict, Witness};

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// Relative tolerance of the exact matrix identities.
pub const IDENTITY_TOL: f64 = 1e-10;
/// Eigenvalue cut used when comparing `Q(x)` with `Q^{(*)}(x)`.
pub const PENCIL_TOL: f64 = 1e-10;
/// Grids larger than this are rejected.
pub const MAX_GRID_POINTS: usize = 2_000_000;

// ---------------------------------------------------------------- polynomials

/// `x<i>` with `i ≥ 1`.
fn coord_index(name: &str) -> Option<usize> {
    let i: usize = name.strip_prefix('x')?.parse().ok()?;
    (i >= 1).then_some(i)
}

/// Real coordinates bound as `x1, x2, …`.
struct Coords<'a>(&'a [f64]);

impl Bindings for Coords<'_> {
    fn lookup(&self, name: &str) -> Option<C64> {
        let i = coord_index(name)?;
        self.0.get(i - 1).map(|&v| C64::new(v, 0.0))
    }

    fn describe(&self) -> String {
        let parts: Vec<String> = self
            .0
            .iter()
            .enumerate()
            .map(|(i, v)| format!("x{}={v}", i + 1))
            .collect();
        parts.join(", ")
    }
}

fn trim(mut e: Vec<u32>) -> Vec<u32> {
    while e.last() == Some(&0) {
        e.pop();
    }
    e
}

/// Name of a monomial such as `x1^2*x3`; the empty monomial is `1`.
pub fn monomial_name(e: &[u32]) -> String {
    let parts: Vec<String> = e
        .iter()
        .enumerate()
        .filter(|(_, &p)| p > 0)
        .map(|(i, &p)| {
            if p == 1 {
                format!("x{}", i + 1)
            } else {
                format!("x{}^{p}", i + 1)
            }
        })
        .collect();
    if parts.is_empty() {
        "1".into()
    } else {
        parts.join("*")
    }
}

/// Multivariate polynomial in `x1, x2, …` with complex coefficients.
///
/// Exponent vectors carry no trailing zeros and zero coefficients are never
/// stored, so equal polynomials have equal representations.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Poly {
    terms: BTreeMap<Vec<u32>, C64>,
}

impl Poly {
    pub fn zero() -> Self {
        Poly::default()
    }

    pub fn constant(c: C64) -> Self {
        let mut p = Poly::zero();
        p.add_term(Vec::new(), c);
        p
    }

    /// The coordinate `x_i`, 1-based.
    pub fn var(i: usize) -> Self {
        assert!(i >= 1, "coordinates are numbered from 1");
        let mut e = vec![0; i];
        e[i - 1] = 1;
        let mut p = Poly::zero();
        p.add_term(e, ONE);
        p
    }

    fn add_term(&mut self, e: Vec<u32>, c: C64) {
        if c == ZERO {
            return;
        }
        let e = trim(e);
        let slot = self.terms.entry(e.clone()).or_insert(ZERO);
        *slot += c;
        if *slot == ZERO {
            self.terms.remove(&e);
        }
    }

    pub fn parse(src: &str) -> Result<Self> {
        Poly::from_expr(&Expr::parse(src)?)
    }

    /// Expands an expression into a polynomial. Division is allowed by
    /// non-zero constants only and function calls only on constant
    /// arguments.
    pub fn from_expr(e: &Expr) -> Result<Self> {
        Ok(match e {
            Expr::Num(x) => Poly::constant(C64::new(*x, 0.0)),
            Expr::Imag => Poly::constant(C64::new(0.0, 1.0)),
            Expr::Var(name) => Poly::var(coord_index(name).ok_or_else(|| {
                Error::Contract(format!("`{name}` is not a coordinate variable x1, x2, ..."))
            })?),
            Expr::Neg(a) => Poly::from_expr(a)?.scale(-ONE),
            Expr::Bin(op, a, b) => {
                let p = Poly::from_expr(a)?;
                let q = Poly::from_expr(b)?;
                match op {
                    BinOp::Add => p.add(&q),
                    BinOp::Sub => p.add(&q.scale(-ONE)),
                    BinOp::Mul => p.mul(&q),
                    BinOp::Div => match q.as_constant() {
                        Some(c) if c != ZERO => p.scale(c.inv()),
                        _ => {
                            return Err(Error::Contract(format!(
                                "`{e}` divides by a non-constant or zero polynomial"
                            )))
                        }
                    },
                }
            }
            Expr::Pow(b, n) => {
                let p = Poly::from_expr(b)?;
                if *n >= 0 {
                    p.pow(*n as u32)
                } else {
                    match p.as_constant() {
                        Some(c) if c != ZERO => Poly::constant(c.powi(*n)),
                        _ => {
                            return Err(Error::Contract(format!(
                                "`{e}` has a negative power of a non-constant"
                            )))
                        }
                    }
                }
            }
            Expr::Call(_, a) => {
                if !a.free_vars().is_empty() {
                    return Err(Error::Contract(format!("`{e}` is not a polynomial")));
                }
                let env: [(&str, C64); 0] = [];
                let v = e
                    .eval(&env)
                    .map_err(|err| Error::Contract(format!("`{e}`: {err}")))?;
                Poly::constant(v)
            }
        })
    }

    pub fn terms(&self) -> &BTreeMap<Vec<u32>, C64> {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Highest coordinate index that occurs.
    pub fn nvars(&self) -> usize {
        self.terms.keys().map(Vec::len).max().unwrap_or(0)
    }

    /// Total degree; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<u32> {
        self.terms.keys().map(|e| e.iter().sum()).max()
    }

    pub fn as_constant(&self) -> Option<C64> {
        match self.terms.len() {
            0 => Some(ZERO),
            1 => self.terms.get(&Vec::new()).copied(),
            _ => None,
        }
    }

    pub fn add(&self, o: &Poly) -> Poly {
        let mut out = self.clone();
        for (e, &c) in &o.terms {
            out.add_term(e.clone(), c);
        }
        out
    }

    pub fn scale(&self, s: C64) -> Poly {
        let mut out = Poly::zero();
        for (e, &c) in &self.terms {
            out.add_term(e.clone(), c * s);
        }
        out
    }

    pub fn mul(&self, o: &Poly) -> Poly {
        let mut out = Poly::zero();
        for (ea, &ca) in &self.terms {
            for (eb, &cb) in &o.terms {
                let n = ea.len().max(eb.len());
                let e: Vec<u32> = (0..n)
                    .map(|i| ea.get(i).copied().unwrap_or(0) + eb.get(i).copied().unwrap_or(0))
                    .collect();
                out.add_term(e, ca * cb);
            }
        }
        out
    }

    pub fn pow(&self, n: u32) -> Poly {
        let mut out = Poly::constant(ONE);
        for _ in 0..n {
            out = out.mul(self);
        }
        out
    }

    /// Exact partial derivative in `x_i`, 1-based.
    pub fn partial(&self, i: usize) -> Poly {
        let mut out = Poly::zero();
        for (e, &c) in &self.terms {
            let p = e.get(i - 1).copied().unwrap_or(0);
            if p == 0 {
                continue;
            }
            let mut d = e.clone();
            d[i - 1] -= 1;
            out.add_term(d, c * p as f64);
        }
        out
    }

    /// Value at a real point; coordinates beyond `x.len()` count as zero.
    pub fn eval(&self, x: &[f64]) -> C64 {
        let mut acc = ZERO;
        for (e, &c) in &self.terms {
            let mut t = 1.0;
            for (i, &p) in e.iter().enumerate() {
                t *= x.get(i).copied().unwrap_or(0.0).powi(p as i32);
            }
            acc += c * t;
        }
        acc
    }
}

fn fmt_coef(c: C64) -> String {
    if c.im == 0.0 {
        format!("{}", c.re)
    } else if c.re == 0.0 {
        format!("{}*i", c.im)
    } else {
        format!("({}{:+}*i)", c.re, c.im)
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (n, (e, &c)) in self.terms.iter().enumerate() {
            let neg = c.im == 0.0 && c.re < 0.0;
            let c = if neg { -c } else { c };
            match (n, neg) {
                (0, true) => f.write_str("-")?,
                (0, false) => {}
                (_, true) => f.write_str(" - ")?,
                (_, false) => f.write_str(" + ")?,
            }
            if e.is_empty() {
                f.write_str(&fmt_coef(c))?;
            } else if c == ONE {
                f.write_str(&monomial_name(e))?;
            } else {
                write!(f, "{}*{}", fmt_coef(c), monomial_name(e))?;
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------- matrix functions

/// Square matrix of polynomials, written entrywise as expression strings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "EntryTable", into = "EntryTable")]
pub struct PolyMatrix {
    src: Vec<Vec<String>>,
    entries: Vec<Vec<Poly>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EntryTable {
    entries: Vec<Vec<String>>,
}

impl TryFrom<EntryTable> for PolyMatrix {
    type Error = Error;
    fn try_from(t: EntryTable) -> Result<Self> {
        PolyMatrix::from_strings(t.entries)
    }
}

impl From<PolyMatrix> for EntryTable {
    fn from(p: PolyMatrix) -> Self {
        EntryTable { entries: p.src }
    }
}

fn check_square<T>(rows: &[Vec<T>], what: &str) -> Result<usize> {
    let k = rows.len();
    if k == 0 {
        return Err(Error::Dimension(format!("{what} has no rows")));
    }
    if let Some(r) = rows.iter().position(|r| r.len() != k) {
        return Err(Error::Dimension(format!(
            "{what} is not square: row {} has {} entries, expected {k}",
            r + 1,
            rows[r].len()
        )));
    }
    Ok(k)
}

impl PolyMatrix {
    pub fn parse(rows: &[&[&str]]) -> Result<Self> {
        PolyMatrix::from_strings(
            rows.iter()
                .map(|r| r.iter().map(|s| s.to_string()).collect())
                .collect(),
        )
    }

    fn from_strings(src: Vec<Vec<String>>) -> Result<Self> {
        check_square(&src, "polynomial matrix")?;
        let entries = src
            .iter()
            .map(|r| r.iter().map(|s| Poly::parse(s)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        Ok(PolyMatrix { src, entries })
    }

    pub fn from_polys(entries: Vec<Vec<Poly>>) -> Result<Self> {
        check_square(&entries, "polynomial matrix")?;
        let src = entries
            .iter()
            .map(|r| r.iter().map(|p| p.to_string()).collect())
            .collect();
        Ok(PolyMatrix { src, entries })
    }

    pub fn constant(m: &DenseMatrix) -> Result<Self> {
        PolyMatrix::from_polys(
            (0..m.rows())
                .map(|i| (0..m.cols()).map(|j| Poly::constant(m.get(i, j))).collect())
                .collect(),
        )
    }

    pub fn k(&self) -> usize {
        self.entries.len()
    }

    pub fn entry(&self, i: usize, j: usize) -> &Poly {
        &self.entries[i][j]
    }

    pub fn nvars(&self) -> usize {
        self.entries.iter().flatten().map(Poly::nvars).max().unwrap_or(0)
    }

    pub fn degree(&self) -> Option<u32> {
        self.entries.iter().flatten().filter_map(Poly::degree).max()
    }

    /// Monomial to coefficient-matrix view.
    pub fn terms(&self) -> BTreeMap<Vec<u32>, DenseMatrix> {
        let k = self.k();
        let mut out: BTreeMap<Vec<u32>, DenseMatrix> = BTreeMap::new();
        for (i, row) in self.entries.iter().enumerate() {
            for (j, p) in row.iter().enumerate() {
                for (e, &c) in p.terms() {
                    out.entry(e.clone())
                        .or_insert_with(|| DenseMatrix::zeros(k, k))
                        .set(i, j, c);
                }
            }
        }
        out
    }

    /// Entrywise partial derivative in `x_i`, 1-based.
    pub fn partial(&self, i: usize) -> PolyMatrix {
        let entries = self
            .entries
            .iter()
            .map(|r| r.iter().map(|p| p.partial(i)).collect())
            .collect();
        PolyMatrix::from_polys(entries).expect("shape is preserved")
    }

    pub fn eval(&self, x: &[f64]) -> DenseMatrix {
        let k = self.k();
        DenseMatrix::from_fn(k, k, |i, j| self.entries[i][j].eval(x))
    }
}

/// Square matrix of arbitrary formulas in `x1, …, xm`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointwiseMatFunc {
    pub entries: Vec<Vec<Formula>>,
}

impl PointwiseMatFunc {
    pub fn parse(rows: &[&[&str]]) -> Result<Self> {
        let entries = rows
            .iter()
            .map(|r| r.iter().map(|s| Formula::parse(s)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        check_square(&entries, "formula matrix")?;
        Ok(PointwiseMatFunc { entries })
    }

    pub fn eval(&self, x: &[f64]) -> Result<DenseMatrix> {
        let k = self.entries.len();
        let mut out = DenseMatrix::zeros(k, k);
        for (i, row) in self.entries.iter().enumerate() {
            for (j, f) in row.iter().enumerate() {
                let v = f.expr().eval(&Coords(x)).map_err(|source| Error::Entry {
                    k: i + 1,
                    l: j + 1,
                    source,
                })?;
                if !(v.re.is_finite() && v.im.is_finite()) {
                    return Err(Error::NonFinite { k: i + 1, l: j + 1 });
                }
                out.set(i, j, v);
            }
        }
        Ok(out)
    }
}

/// One grid axis: `count` equispaced nodes on `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

impl Axis {
    pub fn new(lo: f64, hi: f64, count: usize) -> Self {
        Axis { lo, hi, count }
    }

    pub fn spacing(&self) -> f64 {
        (self.hi - self.lo) / (self.count - 1) as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        if i + 1 == self.count {
            self.hi
        } else {
            self.lo + self.spacing() * i as f64
        }
    }

    fn check(&self) -> Result<()> {
        if self.count < 2 || !(self.lo < self.hi) || !self.lo.is_finite() || !self.hi.is_finite() {
            return Err(Error::Contract(format!(
                "axis [{}, {}] with {} nodes: need lo < hi and at least 2 nodes",
                self.lo, self.hi, self.count
            )));
        }
        Ok(())
    }

    /// Node index of `x` when `x` is (numerically) a node.
    fn locate(&self, x: f64) -> Option<usize> {
        let t = (x - self.lo) / self.spacing();
        let i = t.round();
        ((t - i).abs() <= 1e-9 && i >= 0.0 && (i as usize) < self.count).then_some(i as usize)
    }
}

/// Row-major multi-index decomposition, last axis fastest.
fn unflatten(axes: &[Axis], mut idx: usize) -> Vec<usize> {
    let mut out = vec![0; axes.len()];
    for a in (0..axes.len()).rev() {
        out[a] = idx % axes[a].count;
        idx /= axes[a].count;
    }
    out
}

fn flatten(axes: &[Axis], ix: &[usize]) -> usize {
    ix.iter().zip(axes).fold(0, |acc, (&i, a)| acc * a.count + i)
}

fn node_count(axes: &[Axis]) -> usize {
    axes.iter().fold(1usize, |acc, a| acc.saturating_mul(a.count))
}

/// Matrix values on the nodes of an axis-aligned grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampledMatFunc {
    pub axes: Vec<Axis>,
    /// One `k×k` matrix per node, row-major over the axes (last fastest).
    #[serde(with = "cmats")]
    pub values: Vec<DenseMatrix>,
}

impl SampledMatFunc {
    pub fn new(axes: Vec<Axis>, values: Vec<DenseMatrix>) -> Result<Self> {
        let s = SampledMatFunc { axes, values };
        s.check()?;
        Ok(s)
    }

    /// Samples `f` on the nodes of `axes`.
    pub fn tabulate(axes: Vec<Axis>, f: impl Fn(&[f64]) -> DenseMatrix) -> Result<Self> {
        for a in &axes {
            a.check()?;
        }
        let values = (0..node_count(&axes))
            .map(|i| {
                let x: Vec<f64> = unflatten(&axes, i)
                    .iter()
                    .zip(&axes)
                    .map(|(&j, a)| a.node(j))
                    .collect();
                f(&x)
            })
            .collect();
        SampledMatFunc::new(axes, values)
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn k(&self) -> usize {
        self.values.first().map_or(0, DenseMatrix::rows)
    }

    fn check(&self) -> Result<()> {
        if self.axes.is_empty() {
            return Err(Error::Dimension("sampled function has no axes".into()));
        }
        for a in &self.axes {
            a.check()?;
        }
        let n = node_count(&self.axes);
        if self.values.len() != n {
            return Err(Error::Dimension(format!(
                "sampled function has {} values for {n} grid nodes",
                self.values.len()
            )));
        }
        let k = self.k();
        if k == 0 {
            return Err(Error::Dimension("sampled matrices are empty".into()));
        }
        for (i, v) in self.values.iter().enumerate() {
            if v.rows() != k || v.cols() != k {
                return Err(Error::Dimension(format!(
                    "sample {} is {}x{}, expected {k}x{k}",
                    i + 1,
                    v.rows(),
                    v.cols()
                )));
            }
            if !v.is_finite() {
                return Err(Error::Contract(format!("sample {} is not finite", i + 1)));
            }
        }
        Ok(())
    }

    pub fn node(&self, ix: &[usize]) -> Vec<f64> {
        ix.iter().zip(&self.axes).map(|(&i, a)| a.node(i)).collect()
    }

    pub fn value_at(&self, ix: &[usize]) -> &DenseMatrix {
        &self.values[flatten(&self.axes, ix)]
    }

    pub fn nodes(&self) -> Vec<Vec<f64>> {
        (0..self.values.len())
            .map(|i| self.node(&unflatten(&self.axes, i)))
            .collect()
    }

    /// Value at a grid node; any other point is an error.
    pub fn eval(&self, x: &[f64]) -> Result<DenseMatrix> {
        if x.len() != self.dim() {
            return Err(Error::Dimension(format!(
                "point has {} coordinates, sampled function has {}",
                x.len(),
                self.dim()
            )));
        }
        let ix: Option<Vec<usize>> = x.iter().zip(&self.axes).map(|(&v, a)| a.locate(v)).collect();
        let ix = ix.ok_or_else(|| {
            Error::Precondition(format!("{x:?} is not a node of the sample grid"))
        })?;
        Ok(self.value_at(&ix).clone())
    }
}

/// A `k×k` matrix-valued function on `ℝ^m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum MatFunc {
    Poly(PolyMatrix),
    Pointwise(PointwiseMatFunc),
    Sampled(SampledMatFunc),
}

impl MatFunc {
    pub fn poly(rows: &[&[&str]]) -> Result<Self> {
        PolyMatrix::parse(rows).map(MatFunc::Poly)
    }

    pub fn pointwise(rows: &[&[&str]]) -> Result<Self> {
        PointwiseMatFunc::parse(rows).map(MatFunc::Pointwise)
    }

    pub fn constant(m: &DenseMatrix) -> Result<Self> {
        PolyMatrix::constant(m).map(MatFunc::Poly)
    }

    pub fn k(&self) -> usize {
        match self {
            MatFunc::Poly(p) => p.k(),
            MatFunc::Pointwise(p) => p.entries.len(),
            MatFunc::Sampled(s) => s.k(),
        }
    }

    pub fn is_sampled(&self) -> bool {
        matches!(self, MatFunc::Sampled(_))
    }

    /// Checks the shape against `m` coordinates and `k` channels.
    pub fn validate(&self, m: usize, k: usize) -> Result<()> {
        if self.k() != k {
            return Err(Error::Dimension(format!(
                "coefficient is {0}x{0}, expected {k}x{k}",
                self.k()
            )));
        }
        match self {
            MatFunc::Poly(p) => {
                if p.nvars() > m {
                    return Err(Error::Dimension(format!(
                        "polynomial uses x{} but m = {m}",
                        p.nvars()
                    )));
                }
            }
            MatFunc::Pointwise(p) => {
                check_square(&p.entries, "formula matrix")?;
                for f in p.entries.iter().flatten() {
                    for v in f.expr().free_vars() {
                        if !coord_index(&v).is_some_and(|i| i <= m) {
                            return Err(Error::Contract(format!(
                                "formula `{}` uses `{v}`; only x1..x{m} are bound",
                                f.src()
                            )));
                        }
                    }
                }
            }
            MatFunc::Sampled(s) => {
                s.check()?;
                if s.dim() != m {
                    return Err(Error::Dimension(format!(
                        "sampled function has {} axes, expected {m}",
                        s.dim()
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn eval(&self, x: &[f64]) -> Result<DenseMatrix> {
        match self {
            MatFunc::Poly(p) => Ok(p.eval(x)),
            MatFunc::Pointwise(p) => p.eval(x),
            MatFunc::Sampled(s) => s.eval(x),
        }
    }
}

// ----------------------------------------------------------------------- grids

/// Radial rays `r·d/|d|` sampled at the given radii.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Rays {
    pub directions: Vec<Vec<f64>>,
    pub radii: Vec<f64>,
}

impl Rays {
    pub const DEFAULT_RADII: [f64; 4] = [10.0, 30.0, 100.0, 300.0];

    /// `±e_i` and all `(±1, …, ±1)` diagonals, duplicates removed.
    pub fn default_for(m: usize) -> Self {
        let mut directions: Vec<Vec<f64>> = Vec::new();
        for i in 0..m {
            for s in [1.0, -1.0] {
                let mut d = vec![0.0; m];
                d[i] = s;
                directions.push(d);
            }
        }
        let scale = 1.0 / (m as f64).sqrt();
        for mask in 0..(1usize << m) {
            let d: Vec<f64> = (0..m)
                .map(|i| if mask >> i & 1 == 1 { -scale } else { scale })
                .collect();
            if !directions.contains(&d) {
                directions.push(d);
            }
        }
        Rays {
            directions,
            radii: Self::DEFAULT_RADII.to_vec(),
        }
    }

    fn unit_directions(&self) -> Vec<Vec<f64>> {
        self.directions
            .iter()
            .map(|d| {
                let n = d.iter().map(|v| v * v).sum::<f64>().sqrt();
                d.iter().map(|v| v / n).collect()
            })
            .collect()
    }
}

/// Box lattice plus optional rays.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub axes: Vec<Axis>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rays: Option<Rays>,
}

impl GridSpec {
    /// `[−10, 10]^m` with 41 nodes per axis and the default rays.
    pub fn default_for(m: usize) -> Self {
        GridSpec {
            axes: vec![Axis::new(-10.0, 10.0, 41); m],
            rays: Some(Rays::default_for(m)),
        }
    }

    pub fn boxed(m: usize, lo: f64, hi: f64, count: usize) -> Self {
        GridSpec {
            axes: vec![Axis::new(lo, hi, count); m],
            rays: None,
        }
    }

    pub fn with_rays(mut self, rays: Rays) -> Self {
        self.rays = Some(rays);
        self
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn len(&self) -> usize {
        node_count(&self.axes)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn validate(&self, m: usize) -> Result<()> {
        if self.dim() != m {
            return Err(Error::Dimension(format!("grid has {} axes, expected {m}", self.dim())));
        }
        for a in &self.axes {
            a.check()?;
        }
        if self.len() > MAX_GRID_POINTS {
            return Err(Error::Contract(format!(
                "grid has {} points, the limit is {MAX_GRID_POINTS}",
                self.len()
            )));
        }
        if let Some(r) = &self.rays {
            for d in &r.directions {
                if d.len() != m {
                    return Err(Error::Dimension(format!(
                        "ray direction {d:?} has {} coordinates, expected {m}",
                        d.len()
                    )));
                }
                if d.iter().all(|&v| v == 0.0) || !d.iter().all(|v| v.is_finite()) {
                    return Err(Error::Contract(format!("ray direction {d:?} is degenerate")));
                }
            }
            if r.radii.iter().any(|&x| !(x > 0.0 && x.is_finite()))
                || r.radii.windows(2).any(|w| w[0] >= w[1])
            {
                return Err(Error::Contract(
                    "ray radii must be positive and strictly increasing".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn point(&self, idx: usize) -> Vec<f64> {
        unflatten(&self.axes, idx)
            .iter()
            .zip(&self.axes)
            .map(|(&i, a)| a.node(i))
            .collect()
    }

    pub fn points(&self) -> Vec<Vec<f64>> {
        parallel::map_range(self.len(), |i| self.point(i))
    }
}

/// Values of one quantity along one ray.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RayReport {
    pub direction: Vec<f64>,
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
    pub trend: Trend,
    pub slope: f64,
}

impl RayReport {
    fn new(direction: Vec<f64>, radii: Vec<f64>, values: Vec<f64>) -> Self {
        let (trend, slope) = trend::classify_tail(&radii, &values);
        RayReport {
            direction,
            radii,
            values,
            trend,
            slope,
        }
    }
}

/// CSV with columns `ray,radius,value,d1,…,dm`.
pub fn rays_csv(rays: &[RayReport]) -> String {
    let m = rays.first().map_or(0, |r| r.direction.len());
    let mut out = String::from("ray,radius,value");
    for i in 1..=m {
        out.push_str(&format!(",d{i}"));
    }
    out.push('\n');
    for (j, r) in rays.iter().enumerate() {
        for (rad, v) in r.radii.iter().zip(&r.values) {
            out.push_str(&format!("{},{rad},{v}", j + 1));
            for d in &r.direction {
                out.push_str(&format!(",{d}"));
            }
            out.push('\n');
        }
    }
    out
}

/// Where pointwise conditions are evaluated.
struct Plan {
    points: Vec<Vec<f64>>,
    dirs: Vec<Vec<f64>>,
    radii: Vec<f64>,
}

impl Plan {
    /// Grid points first, then ray points ray by ray.
    fn all_points(&self) -> Vec<Vec<f64>> {
        let mut out = self.points.clone();
        for d in &self.dirs {
            for &r in &self.radii {
                out.push(d.iter().map(|v| v * r).collect());
            }
        }
        out
    }

    fn rays(&self, ray_values: &[f64]) -> Vec<RayReport> {
        let n = self.radii.len();
        self.dirs
            .iter()
            .enumerate()
            .map(|(j, d)| RayReport::new(d.clone(), self.radii.clone(), ray_values[j * n..(j + 1) * n].to_vec()))
            .collect()
    }
}

/// Sampled coefficients restrict evaluation to their own nodes and disable
/// the rays.
fn plan(funcs: &[&MatFunc], grid: &GridSpec) -> Result<Plan> {
    let sampled: Vec<&SampledMatFunc> = funcs
        .iter()
        .filter_map(|f| match f {
            MatFunc::Sampled(s) => Some(s),
            _ => None,
        })
        .collect();
    if let Some(first) = sampled.first() {
        if sampled.iter().any(|s| s.axes != first.axes) {
            return Err(Error::Dimension("sampled coefficients use different grids".into()));
        }
        return Ok(Plan {
            points: first.nodes(),
            dirs: Vec::new(),
            radii: Vec::new(),
        });
    }
    let (dirs, radii) = match &grid.rays {
        Some(r) => (r.unit_directions(), r.radii.clone()),
        None => (Vec::new(), Vec::new()),
    };
    Ok(Plan {
        points: grid.points(),
        dirs,
        radii,
    })
}

fn growing_ray(rays: &[RayReport]) -> Option<&RayReport> {
    rays.iter().find(|r| r.trend == Trend::Growing)
}

fn max_slope(rays: &[RayReport]) -> f64 {
    rays.iter().map(|r| r.slope).fold(f64::NEG_INFINITY, f64::max)
}

/// First index of the maximum (NaN counts as largest).
fn argmax(v: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &x) in v.iter().enumerate() {
        match best {
            None => best = Some(i),
            Some(b) if x > v[b] || (x.is_nan() && !v[b].is_nan()) => best = Some(i),
            _ => {}
        }
    }
    best
}

fn spectral(m: &DenseMatrix) -> f64 {
    svd_norm(m).value
}

// -------------------------------------------------------------------- (Afnorm)

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AfnormResult {
    /// `α_l* α_r = α_l α_r*` for all pairs.
    pub alphas: Finding,
    /// `Q Q* = Q* Q` at every sample point.
    pub q_normal: Finding,
    /// `α_l* Q = α_l Q*` at every sample point.
    pub mixed: Finding,
}

impl AfnormResult {
    pub fn findings(&self) -> [&Finding; 3] {
        [&self.alphas, &self.q_normal, &self.mixed]
    }

    pub fn verdict(&self) -> Verdict {
        Verdict::all(self.findings().iter().map(|f| f.verdict))
    }
}

fn identity_finding(label: &str, residual: f64, relative: f64, points: usize) -> Finding {
    Finding::new(label, Verdict::from_bool(relative <= IDENTITY_TOL))
        .with("residual", residual)
        .with("relative_residual", relative)
        .with("samples", points as f64)
}

/// Checks the three formal-normality identities. Residuals are max-abs
/// entries, scaled by `max(1, k·|X|_max·|Y|_max)` for a product `XY`.
pub fn check_afnorm(alphas: &[DenseMatrix], q: &MatFunc, grid: &GridSpec) -> Result<AfnormResult> {
    let m = alphas.len();
    if m == 0 {
        return Err(Error::Dimension("at least one α is required".into()));
    }
    let k = q.k();
    for (l, a) in alphas.iter().enumerate() {
        if a.rows() != k || a.cols() != k {
            return Err(Error::Dimension(format!(
                "α_{} is {}x{}, expected {k}x{k}",
                l + 1,
                a.rows(),
                a.cols()
            )));
        }
    }
    q.validate(m, k)?;
    grid.validate(m)?;
    let kf = k as f64;
    let scale = |x: &DenseMatrix, y: &DenseMatrix| (kf * x.max_abs() * y.max_abs()).max(1.0);

    let adj: Vec<DenseMatrix> = alphas.iter().map(DenseMatrix::adjoint).collect();
    let mut first = (0.0, 0.0, None);
    for l in 0..m {
        for r in 0..m {
            let res = adj[l].matmul(&alphas[r]).sub(&alphas[l].matmul(&adj[r])).max_abs();
            let rel = res / scale(&alphas[l], &alphas[r]);
            if first.2.is_none() || rel > first.1 {
                first = (res, rel, Some((l + 1, r + 1)));
            }
        }
    }
    let mut f1 = identity_finding("(Afnorm-1)", first.0, first.1, m * m);
    if !f1.verdict.is_pass() {
        let (l, r) = first.2.expect("m >= 1");
        f1 = f1.witness(Witness::Pair { l, r });
    }

    let pl = plan(&[q], grid)?;
    let pts = pl.all_points();
    // per point: (res2, rel2, res3, rel3, l3)
    let per = parallel::try_map(&pts, |x| -> Result<(f64, f64, f64, f64, usize)> {
        let qx = q.eval(x)?;
        let qh = qx.adjoint();
        let res2 = qx.matmul(&qh).sub(&qh.matmul(&qx)).max_abs();
        let rel2 = res2 / scale(&qx, &qx);
        let mut worst = (0.0, 0.0, 1);
        for l in 0..m {
            let res = adj[l].matmul(&qx).sub(&alphas[l].matmul(&qh)).max_abs();
            let rel = res / scale(&alphas[l], &qx);
            if rel > worst.1 {
                worst = (res, rel, l + 1);
            }
        }
        Ok((res2, rel2, worst.0, worst.1, worst.2))
    })?;
    let rel2: Vec<f64> = per.iter().map(|p| p.1).collect();
    let rel3: Vec<f64> = per.iter().map(|p| p.3).collect();
    let i2 = argmax(&rel2).expect("grid is non-empty");
    let i3 = argmax(&rel3).expect("grid is non-empty");
    let mut f2 = identity_finding("(Afnorm-2)", per[i2].0, per[i2].1, pts.len());
    if !f2.verdict.is_pass() {
        f2 = f2.witness(Witness::Point { x: pts[i2].clone() });
    }
    let mut f3 = identity_finding("(Afnorm-3)", per[i3].2, per[i3].3, pts.len());
    if !f3.verdict.is_pass() {
        f3 = f3
            .witness(Witness::Point { x: pts[i3].clone() })
            .note(format!("largest residual for l = {}", per[i3].4));
    }
    Ok(AfnormResult {
        alphas: f1,
        q_normal: f2,
        mixed: f3,
    })
}

// -------------------------------------------------------------------- (Hölder)

/// Number of dyadic separations probed per radius.
const HOLDER_SCALES: i32 = 30;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HolderOptions {
    #[serde(default = "HolderOptions::default_radii")]
    pub radii: Vec<f64>,
    #[serde(default = "HolderOptions::default_pairs")]
    pub pairs_per_radius: usize,
}

impl HolderOptions {
    fn default_radii() -> Vec<f64> {
        vec![1.0, 2.0, 4.0, 8.0]
    }

    fn default_pairs() -> usize {
        3000
    }
}

impl Default for HolderOptions {
    fn default() -> Self {
        HolderOptions {
            radii: Self::default_radii(),
            pairs_per_radius: Self::default_pairs(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HolderPoint {
    pub n: f64,
    /// Exponent estimate `b̂_n ∈ (0, 1]`.
    pub b: f64,
    /// `sup |Q(x) − Q(y)| / |x − y|^{b̂_n}` over the sampled pairs.
    pub sup: f64,
    pub pairs: usize,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HolderResult {
    pub per_n: Vec<HolderPoint>,
    /// Whether the verdict rests on sampling alone.
    pub heuristic: bool,
    pub finding: Finding,
}

impl HolderResult {
    /// CSV with columns `n,b,sup,pairs`.
    pub fn csv(&self) -> String {
        let mut out = String::from("n,b,sup,pairs\n");
        for p in &self.per_n {
            out.push_str(&format!("{},{},{},{}\n", p.n, p.b, p.sup, p.pairs));
        }
        out
    }
}

fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn random_unit(rng: &mut ChaCha8Rng, m: usize) -> Vec<f64> {
    loop {
        let u: Vec<f64> = (0..m).map(|_| rng.random_range(-1.0..=1.0)).collect();
        let n = norm2(&u);
        if n > 1e-3 && n <= 1.0 {
            return u.iter().map(|v| v / n).collect();
        }
    }
}

/// A probed pair with its dyadic scale index.
struct HPair {
    scale: i32,
    sep: f64,
    diff: f64,
}

/// Lattice points of the ball (origin included) topped up with uniform
/// random points, each paired with one partner per dyadic separation.
fn symbolic_pairs(q: &MatFunc, m: usize, n: f64, budget: usize, rng: &mut ChaCha8Rng) -> Result<Vec<HPair>> {
    let bases_wanted = (budget / HOLDER_SCALES as usize).max(1);
    let mut half = 0usize;
    while (2 * (half + 1) + 1).pow(m as u32) <= (bases_wanted / 2).max(1) {
        half += 1;
    }
    let side = 2 * half + 1;
    let mut bases: Vec<Vec<f64>> = Vec::new();
    for idx in 0..side.pow(m as u32) {
        let mut rest = idx;
        let mut x = vec![0.0; m];
        for v in x.iter_mut().rev() {
            let i = rest % side;
            rest /= side;
            *v = if half == 0 { 0.0 } else { n * (i as f64 - half as f64) / half as f64 };
        }
        if norm2(&x) <= n {
            bases.push(x);
        }
    }
    // origin first so that every scale sees it
    bases.sort_by(|a, b| norm2(a).total_cmp(&norm2(b)));
    while bases.len() < bases_wanted {
        let x: Vec<f64> = (0..m).map(|_| rng.random_range(-n..=n)).collect();
        if norm2(&x) <= n {
            bases.push(x);
        }
    }
    let mut pts: Vec<(i32, Vec<f64>, Vec<f64>)> = Vec::new();
    for x in &bases {
        for j in 1..=HOLDER_SCALES {
            let h = n * 2f64.powi(-j);
            let u = random_unit(rng, m);
            let mut y: Vec<f64> = x.iter().zip(&u).map(|(a, b)| a + h * b).collect();
            if norm2(&y) > n {
                y = x.iter().zip(&u).map(|(a, b)| a - h * b).collect();
                if norm2(&y) > n {
                    continue;
                }
            }
            pts.push((j, x.clone(), y));
        }
    }
    parallel::try_map(&pts, |(j, x, y)| {
        let d = q.eval(x)?.sub(&q.eval(y)?);
        let sep = norm2(&x.iter().zip(y).map(|(a, b)| a - b).collect::<Vec<_>>());
        Ok(HPair {
            scale: *j,
            sep,
            diff: spectral(&d),
        })
    })
}

/// Node pairs along the axes at offsets `2^j` steps.
fn sampled_pairs(s: &SampledMatFunc, n: f64, budget: usize) -> Vec<HPair> {
    let m = s.dim();
    let max_count = s.axes.iter().map(|a| a.count).max().unwrap_or(2);
    let scales = (usize::BITS - (max_count - 1).leading_zeros()) as usize;
    let inside: Vec<Vec<usize>> = (0..s.values.len())
        .map(|i| unflatten(&s.axes, i))
        .filter(|ix| norm2(&s.node(ix)) <= n)
        .collect();
    if inside.is_empty() {
        return Vec::new();
    }
    let want = (budget / scales.max(1)).max(1);
    let stride = inside.len().div_ceil(want).max(1);
    let mut pairs = Vec::new();
    for (b, ix) in inside.iter().enumerate().step_by(stride) {
        for j in 0..scales {
            let axis = (b + j) % m;
            let off = 1usize << j;
            let mut iy = ix.clone();
            if ix[axis] + off < s.axes[axis].count {
                iy[axis] += off;
            } else if ix[axis] >= off {
                iy[axis] -= off;
            } else {
                continue;
            }
            if norm2(&s.node(&iy)) > n {
                continue;
            }
            let d = s.value_at(ix).sub(s.value_at(&iy));
            pairs.push(HPair {
                scale: -(j as i32),
                sep: off as f64 * s.axes[axis].spacing(),
                diff: spectral(&d),
            });
        }
    }
    pairs
}

/// Exponent fit on the smallest-separation decile: the per-scale maxima of
/// `|Q(x) − Q(y)|` against the separation in log-log coordinates.
fn holder_fit(pairs: &mut [HPair]) -> (f64, f64) {
    if pairs.is_empty() || pairs.iter().all(|p| p.diff == 0.0) {
        return (1.0, 0.0);
    }
    pairs.sort_by(|a, b| a.sep.total_cmp(&b.sep).then(b.scale.cmp(&a.scale)));
    let decile = pairs.len().div_ceil(10);
    // whole scale groups covering the decile
    let mut groups: BTreeMap<i32, (f64, f64)> = BTreeMap::new();
    let mut taken = 0;
    for p in pairs.iter() {
        if taken >= decile && !groups.contains_key(&p.scale) {
            break;
        }
        let g = groups.entry(p.scale).or_insert((0.0, 0.0));
        g.0 = g.0.max(p.sep);
        g.1 = g.1.max(p.diff);
        taken += 1;
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = groups.values().copied().unzip();
    let b = trend::loglog_slope(&xs, &ys)
        .unwrap_or(1.0)
        .clamp(f64::EPSILON, 1.0);
    let sup = pairs
        .iter()
        .map(|p| p.diff / p.sep.powf(b))
        .fold(0.0, f64::max);
    (b, sup)
}

/// Minimal exponent accepted by the sampled check.
pub const HOLDER_MIN_EXPONENT: f64 = 0.05;

/// Estimates local Hölder exponents of `q` on balls of the given radii.
///
/// Polynomial coefficients are locally Lipschitz, so for them the condition
/// holds with `b_n = 1` and the verdict is structural; the estimates are
/// still reported. For other coefficients the verdict is heuristic.
pub fn check_holder(q: &MatFunc, m: usize, radii: &[f64], pairs_per_radius: usize, seed: u64) -> Result<HolderResult> {
    q.validate(m, q.k())?;
    if radii.is_empty() || radii.iter().any(|&n| !(n > 0.0 && n.is_finite())) {
        return Err(Error::Contract("Hölder radii must be positive".into()));
    }
    let mut per_n = Vec::with_capacity(radii.len());
    for (i, &n) in radii.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (0x9e37_79b9_7f4a_7c15u64.wrapping_mul(i as u64 + 1)));
        let mut pairs = match q {
            MatFunc::Sampled(s) => sampled_pairs(s, n, pairs_per_radius),
            _ => symbolic_pairs(q, m, n, pairs_per_radius, &mut rng)?,
        };
        let count = pairs.len();
        let (b, sup) = holder_fit(&mut pairs);
        let ok = count > 0 && sup.is_finite() && b > HOLDER_MIN_EXPONENT;
        per_n.push(HolderPoint {
            n,
            b,
            sup,
            pairs: count,
            verdict: if ok { Verdict::Pass } else { Verdict::Inconclusive },
        });
    }
    let b_min = per_n.iter().map(|p| p.b).fold(1.0, f64::min);
    let sup_max = per_n.iter().map(|p| p.sup).fold(0.0, f64::max);
    let heuristic = !matches!(q, MatFunc::Poly(_));
    let finding = if heuristic {
        let v = Verdict::all(per_n.iter().map(|p| p.verdict));
        let worst = per_n.iter().find(|p| p.verdict != Verdict::Pass);
        Finding::new("(Hölder)", v)
            .with("b_min", b_min)
            .with("sup_max", sup_max)
            .maybe_witness(worst.map(|p| Witness::Index { n: p.n.ceil() as u64 }))
            .note("heuristic: sampled pairs cannot bound a supremum over all pairs")
    } else {
        Finding::new("(Hölder)", Verdict::Pass)
            .with("b_min", b_min)
            .with("sup_max", sup_max)
            .note("polynomial coefficients are locally Lipschitz (b_n = 1)")
    };
    Ok(HolderResult {
        per_n,
        heuristic,
        finding,
    })
}

// ------------------------------------------------------------------------ (QL)

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QlResult {
    pub finding: Finding,
    pub heuristic: bool,
    /// Largest spectral norm of a first partial seen.
    pub first_sup: f64,
    /// Largest spectral norm of a second partial seen.
    pub second_sup: f64,
    pub rays: Vec<RayReport>,
}

/// Finite-difference partial norms `(max_i |∂_i F|, max_{i,h} |∂_i∂_h F|)`.
fn fd_partials(f: &MatFunc, x: &[f64]) -> Result<(f64, f64)> {
    let m = x.len();
    let h = 1e-3 * x.iter().fold(1.0f64, |a, v| a.max(v.abs()));
    let at = |d: &[(usize, f64)]| -> Result<DenseMatrix> {
        let mut y = x.to_vec();
        for &(i, s) in d {
            y[i] += s * h;
        }
        f.eval(&y)
    };
    let f0 = f.eval(x)?;
    let (mut d1, mut d2) = (0.0f64, 0.0f64);
    for i in 0..m {
        let p = at(&[(i, 1.0)])?;
        let n = at(&[(i, -1.0)])?;
        d1 = d1.max(spectral(&p.sub(&n)) / (2.0 * h));
        let dd = p.sub(&f0).sub(&f0.sub(&n));
        d2 = d2.max(spectral(&dd) / (h * h));
        for j in i + 1..m {
            let pp = at(&[(i, 1.0), (j, 1.0)])?;
            let pn = at(&[(i, 1.0), (j, -1.0)])?;
            let np = at(&[(i, -1.0), (j, 1.0)])?;
            let nn = at(&[(i, -1.0), (j, -1.0)])?;
            let mixed = pp.sub(&pn).sub(&np.sub(&nn));
            d2 = d2.max(spectral(&mixed) / (4.0 * h * h));
        }
    }
    Ok((d1, d2))
}

/// Central differences on interior nodes of a sampled table.
fn table_partials(s: &SampledMatFunc) -> (f64, f64) {
    let m = s.dim();
    let (mut d1, mut d2) = (0.0f64, 0.0f64);
    for idx in 0..s.values.len() {
        let ix = unflatten(&s.axes, idx);
        for i in 0..m {
            if ix[i] == 0 || ix[i] + 1 == s.axes[i].count {
                continue;
            }
            let h = s.axes[i].spacing();
            let mut a = ix.clone();
            a[i] += 1;
            let mut b = ix.clone();
            b[i] -= 1;
            let (p, c, n) = (s.value_at(&a), s.value_at(&ix), s.value_at(&b));
            d1 = d1.max(spectral(&p.sub(n)) / (2.0 * h));
            d2 = d2.max(spectral(&p.sub(c).sub(&c.sub(n))) / (h * h));
        }
    }
    (d1, d2)
}

/// `(QL)`: bounded first and second partials of every `Q_j`.
///
/// Polynomial coefficients are decided exactly: the condition holds iff
/// every first partial is constant and every second partial vanishes, that
/// is iff `deg Q_j ≤ 1`. Other coefficients fall back to finite differences
/// on the grid and rays, and the verdict is heuristic.
pub fn check_ql(qs: &[MatFunc], grid: &GridSpec) -> Result<QlResult> {
    let m = qs.len();
    if m == 0 {
        return Err(Error::Dimension("at least one coefficient Q_j is required".into()));
    }
    let k = qs[0].k();
    for q in qs {
        q.validate(m, k)?;
    }
    grid.validate(m)?;
    let (mut first_sup, mut second_sup) = (0.0f64, 0.0f64);
    let mut heuristic = false;
    let mut rays: Vec<RayReport> = Vec::new();
    let mut violation: Option<(Witness, String)> = None;
    for (j, q) in qs.iter().enumerate() {
        match q {
            MatFunc::Poly(p) => {
                for i in 1..=m {
                    let d = p.partial(i);
                    if d.degree().is_some_and(|g| g > 0) {
                        if violation.is_none() {
                            let bad = p
                                .terms()
                                .into_keys()
                                .find(|e| e.iter().sum::<u32>() >= 2)
                                .expect("a non-constant partial needs degree >= 2");
                            let name = monomial_name(&bad);
                            violation = Some((
                                Witness::Monomial { term: name.clone() },
                                format!("Q_{}: monomial {name} has an unbounded partial derivative", j + 1),
                            ));
                        }
                    } else {
                        first_sup = first_sup.max(spectral(&d.eval(&[])));
                    }
                }
            }
            MatFunc::Sampled(s) => {
                heuristic = true;
                let (a, b) = table_partials(s);
                first_sup = first_sup.max(a);
                second_sup = second_sup.max(b);
            }
            MatFunc::Pointwise(_) => {
                heuristic = true;
                let pl = plan(&[q], grid)?;
                let vals = parallel::try_map(&pl.all_points(), |x| fd_partials(q, x))?;
                for v in &vals {
                    first_sup = first_sup.max(v.0);
                    second_sup = second_sup.max(v.1);
                }
                let ray_vals: Vec<f64> = vals[pl.points.len()..].iter().map(|v| v.0.max(v.1)).collect();
                let rs = pl.rays(&ray_vals);
                if violation.is_none() {
                    if let Some(r) = growing_ray(&rs) {
                        violation = Some((
                            Witness::Ray {
                                direction: r.direction.clone(),
                            },
                            format!("Q_{}: finite-difference partials grow along a ray", j + 1),
                        ));
                    }
                }
                rays.extend(rs);
            }
        }
    }
    let mut finding = Finding::new("(QL)", Verdict::Pass)
        .with("first_partial_sup", first_sup)
        .with("second_partial_sup", second_sup);
    if !rays.is_empty() {
        finding = finding.with("max_ray_slope", max_slope(&rays));
    }
    if let Some((w, note)) = violation {
        finding.verdict = Verdict::Fail;
        finding = finding.witness(w).note(note);
    } else if heuristic {
        finding = finding.note("heuristic: finite-difference partials on sampled points");
    }
    Ok(QlResult {
        finding,
        heuristic,
        first_sup,
        second_sup,
        rays,
    })
}

// ------------------------------------------------------------ (QQ) and (QI)

/// The block matrices `Q(x) = (Q_r* Q_l)_{r,l}` and
/// `Q^{(*)}(x) = (Q_r Q_l*)_{r,l}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Blocks {
    pub q: DenseMatrix,
    pub q_star: DenseMatrix,
}

/// Assembles both `mk×mk` blocks. Off-diagonal blocks are mirrored so the
/// outputs are exactly Hermitian; both are Gram matrices and hence PSD.
pub fn assemble_blocks(ql: &[DenseMatrix]) -> Result<Blocks> {
    let m = ql.len();
    if m == 0 {
        return Err(Error::Dimension("no coefficient matrices".into()));
    }
    let k = ql[0].rows();
    if let Some(l) = ql.iter().position(|q| q.rows() != k || q.cols() != k) {
        return Err(Error::Dimension(format!(
            "Q_{} is {}x{}, expected {k}x{k}",
            l + 1,
            ql[l].rows(),
            ql[l].cols()
        )));
    }
    let adj: Vec<DenseMatrix> = ql.iter().map(DenseMatrix::adjoint).collect();
    let mut q = DenseMatrix::zeros(m * k, m * k);
    let mut qs = DenseMatrix::zeros(m * k, m * k);
    for r in 0..m {
        for l in r..m {
            let b = adj[r].matmul(&ql[l]);
            let bs = ql[r].matmul(&adj[l]);
            for i in 0..k {
                for j in 0..k {
                    q.set(r * k + i, l * k + j, b.get(i, j));
                    q.set(l * k + j, r * k + i, b.get(i, j).conj());
                    qs.set(r * k + i, l * k + j, bs.get(i, j));
                    qs.set(l * k + j, r * k + i, bs.get(i, j).conj());
                }
            }
        }
    }
    Ok(Blocks { q, q_star: qs })
}

fn coefficient_values(qs: &[MatFunc], x: &[f64]) -> Result<Vec<DenseMatrix>> {
    qs.iter().map(|q| q.eval(x)).collect()
}

fn check_coefficients(qs: &[MatFunc], grid: &GridSpec) -> Result<Plan> {
    let m = qs.len();
    if m == 0 {
        return Err(Error::Dimension("at least one coefficient Q_l is required".into()));
    }
    let k = qs[0].k();
    for q in qs {
        q.validate(m, k)?;
    }
    grid.validate(m)?;
    let refs: Vec<&MatFunc> = qs.iter().collect();
    plan(&refs, grid)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QqResult {
    /// `sup_x c(x)`; `None` when some point admits no constant.
    pub c1: Option<f64>,
    pub finding: Finding,
    pub rays: Vec<RayReport>,
}

/// `(QQ)`: the smallest `c(x)` with `c⁻¹Q(x) ≤ Q^{(*)}(x) ≤ c Q(x)` at every
/// sample point, and its growth along the rays.
pub fn check_qq(qs: &[MatFunc], grid: &GridSpec) -> Result<QqResult> {
    let pl = check_coefficients(qs, grid)?;
    let pts = pl.all_points();
    let cs = parallel::try_map(&pts, |x| {
        let b = assemble_blocks(&coefficient_values(qs, x)?)?;
        linalg::pencil_bound(&b.q, &b.q_star, PENCIL_TOL)
    })?;
    if let Some(i) = cs.iter().position(Option::is_none) {
        let finding = Finding::new("(QQ)", Verdict::Fail)
            .with("c1", f64::INFINITY)
            .with("samples", pts.len() as f64)
            .witness(Witness::Point { x: pts[i].clone() })
            .note("none: Q(x) and Q^(*)(x) have different ranges, no c1 exists");
        return Ok(QqResult {
            c1: None,
            finding,
            rays: Vec::new(),
        });
    }
    let vals: Vec<f64> = cs.into_iter().map(|c| c.expect("checked above")).collect();
    let c1 = vals.iter().copied().fold(1.0, f64::max);
    let rays = pl.rays(&vals[pl.points.len()..]);
    let mut finding = Finding::new("(QQ)", Verdict::Pass)
        .with("c1", c1)
        .with("samples", pts.len() as f64);
    if !rays.is_empty() {
        finding = finding.with("max_ray_slope", max_slope(&rays));
    }
    if let Some(r) = growing_ray(&rays) {
        finding.verdict = Verdict::Fail;
        finding = finding
            .witness(Witness::Ray {
                direction: r.direction.clone(),
            })
            .note("c(x) grows along a ray");
    } else if rays.is_empty() {
        finding = finding.note("no rays sampled; growth not assessed");
    }
    Ok(QqResult {
        c1: Some(c1),
        finding,
        rays,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QiResult {
    /// `sup_x λ_max(Q(x))` over the samples.
    pub c2: f64,
    pub finding: Finding,
    pub rays: Vec<RayReport>,
}

/// `(QI)`: `Q(x) ≤ c₂ I`, with `c₂` the sampled supremum of `λ_max(Q(x))`.
pub fn check_qi(qs: &[MatFunc], grid: &GridSpec) -> Result<QiResult> {
    let pl = check_coefficients(qs, grid)?;
    let pts = pl.all_points();
    let vals = parallel::try_map(&pts, |x| {
        let b = assemble_blocks(&coefficient_values(qs, x)?)?;
        Ok::<f64, Error>(linalg::herm_eig_bounds(&b.q)?.1.max(0.0))
    })?;
    let c2 = vals.iter().copied().fold(0.0, f64::max);
    let rays = pl.rays(&vals[pl.points.len()..]);
    let mut finding = Finding::new("(QI)", Verdict::Pass)
        .with("c2", c2)
        .with("samples", pts.len() as f64);
    if !rays.is_empty() {
        finding = finding.with("max_ray_slope", max_slope(&rays));
    }
    if let Some(r) = growing_ray(&rays) {
        finding.verdict = Verdict::Fail;
        finding = finding
            .witness(Witness::Ray {
                direction: r.direction.clone(),
            })
            .note("λ_max(Q(x)) grows along a ray");
    } else if rays.is_empty() {
        finding = finding.note("no rays sampled; growth not assessed");
    }
    Ok(QiResult { c2, finding, rays })
}

// ------------------------------------------------------------------ domination

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolyDomination {
    /// `sup |P₂| / (1 + |P₁|)` over grid and rays.
    pub c: f64,
    pub finding: Finding,
    pub rays: Vec<RayReport>,
}

/// `|P₂(ζ)| ≤ c(1 + |P₁(ζ)|)` on `ℝ^m`: passes when the ratio stays bounded
/// along every ray, fails with the first divergent ray otherwise.
pub fn check_poly_domination(p1: &Poly, p2: &Poly, grid: &GridSpec) -> Result<PolyDomination> {
    let m = grid.dim();
    if m == 0 {
        return Err(Error::Dimension("grid has no axes".into()));
    }
    grid.validate(m)?;
    for (name, p) in [("P1", p1), ("P2", p2)] {
        if p.nvars() > m {
            return Err(Error::Dimension(format!("{name} uses x{} but m = {m}", p.nvars())));
        }
    }
    let pl = plan(&[], grid)?;
    let pts = pl.all_points();
    let vals = parallel::map(&pts, |x| p2.eval(x).norm() / (1.0 + p1.eval(x).norm()));
    let c = vals.iter().copied().fold(0.0, f64::max);
    let rays = pl.rays(&vals[pl.points.len()..]);
    let mut finding = Finding::new("(diffdomin)", Verdict::Pass).with("c", c);
    if !rays.is_empty() {
        finding = finding.with("max_ray_slope", max_slope(&rays));
    }
    if let Some(r) = growing_ray(&rays) {
        finding.verdict = Verdict::Fail;
        finding = finding
            .witness(Witness::Ray {
                direction: r.direction.clone(),
            })
            .note(format!("|P2|/(1+|P1|) diverges along a ray (log-log slope {:.3})", r.slope));
    } else if rays.is_empty() {
        finding.verdict = Verdict::Inconclusive;
        finding = finding.note("no rays sampled; boundedness at infinity not assessed");
    }
    Ok(PolyDomination { c, finding, rays })
}

// ------------------------------------------------------------------- pipelines

/// Dirac-type operator `i⁻¹ Σ α_l ∂_l + Q`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiracSpec {
    pub m: usize,
    pub k: usize,
    #[serde(with = "cmats")]
    pub alphas: Vec<DenseMatrix>,
    pub q: MatFunc,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSpec>,
    #[serde(default)]
    pub holder: HolderOptions,
}

/// Variable-coefficient operator `i⁻¹ Σ Q_l ∂_l`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FirstOrderSpec {
    pub m: usize,
    pub k: usize,
    pub q: Vec<MatFunc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSpec>,
}

/// A standalone symbol domination check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DominationSpec {
    pub m: usize,
    pub p1: String,
    pub p2: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DiffopSpec {
    Dirac(DiracSpec),
    FirstOrder(FirstOrderSpec),
    Domination(DominationSpec),
}

fn check_dims(m: usize, k: Option<usize>) -> Result<()> {
    if m == 0 || k == Some(0) {
        return Err(Error::Dimension("m and k must be at least 1".into()));
    }
    Ok(())
}

impl DiffopSpec {
    pub fn m(&self) -> usize {
        match self {
            DiffopSpec::Dirac(s) => s.m,
            DiffopSpec::FirstOrder(s) => s.m,
            DiffopSpec::Domination(s) => s.m,
        }
    }

    /// The configured grid, or the default one for `m`.
    pub fn grid(&self) -> GridSpec {
        let g = match self {
            DiffopSpec::Dirac(s) => &s.grid,
            DiffopSpec::FirstOrder(s) => &s.grid,
            DiffopSpec::Domination(s) => &s.grid,
        };
        g.clone().unwrap_or_else(|| GridSpec::default_for(self.m()))
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.m();
        match self {
            DiffopSpec::Dirac(s) => {
                check_dims(m, Some(s.k))?;
                if s.alphas.len() != m {
                    return Err(Error::Dimension(format!("{} alphas given, expected m = {m}", s.alphas.len())));
                }
                for (l, a) in s.alphas.iter().enumerate() {
                    if a.rows() != s.k || a.cols() != s.k {
                        return Err(Error::Dimension(format!("α_{} is not {}x{}", l + 1, s.k, s.k)));
                    }
                }
                s.q.validate(m, s.k)?;
            }
            DiffopSpec::FirstOrder(s) => {
                check_dims(m, Some(s.k))?;
                if s.q.len() != m {
                    return Err(Error::Dimension(format!("{} coefficients given, expected m = {m}", s.q.len())));
                }
                for q in &s.q {
                    q.validate(m, s.k)?;
                }
            }
            DiffopSpec::Domination(s) => {
                check_dims(m, None)?;
                for src in [&s.p1, &s.p2] {
                    let p = Poly::parse(src)?;
                    if p.nvars() > m {
                        return Err(Error::Dimension(format!("`{src}` uses x{} but m = {m}", p.nvars())));
                    }
                }
            }
        }
        self.grid().validate(m)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiracResult {
    pub afnorm: AfnormResult,
    pub holder: HolderResult,
    pub overall: Verdict,
    pub conclusion: String,
}

/// Formal normality identities plus the local Hölder condition.
pub fn certify_dirac(spec: &DiracSpec, seed: u64) -> Result<DiracResult> {
    let as_spec = DiffopSpec::Dirac(spec.clone());
    as_spec.validate()?;
    let grid = as_spec.grid();
    let afnorm = check_afnorm(&spec.alphas, &spec.q, &grid)?;
    let holder = check_holder(&spec.q, spec.m, &spec.holder.radii, spec.holder.pairs_per_radius, seed)?;
    let mut overall = Verdict::all([afnorm.verdict(), holder.finding.verdict]);
    if overall == Verdict::Pass && holder.heuristic {
        overall = Verdict::Inconclusive;
    }
    let conclusion = match overall {
        Verdict::Pass => "essentially normal: the formal normality identities and the local Hölder condition are certified",
        Verdict::Inconclusive if holder.heuristic && afnorm.verdict().is_pass() => {
            "essential normality: inconclusive-positive, the identities hold and the local Hölder condition is supported by sampling only"
        }
        Verdict::Inconclusive => "essential normality: hypotheses inconclusive on finite evidence",
        Verdict::Fail => "essential normality: a hypothesis fails, no conclusion (the criteria are sufficient only)",
    }
    .to_owned();
    Ok(DiracResult {
        afnorm,
        holder,
        overall,
        conclusion,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FirstOrderResult {
    pub ql: QlResult,
    pub qq: QqResult,
    pub qi: QiResult,
    /// Laplacian symbol `Σ ζ_i²` against `ζ_l ζ_r` and `ζ_r`.
    pub domination: Vec<PolyDomination>,
    pub overall: Verdict,
    pub conclusion: String,
}

/// `(QL)`, `(QQ)`, `(QI)` and the symbol dominations used to bound the
/// commutator with the Laplacian.
pub fn certify_first_order(spec: &FirstOrderSpec) -> Result<FirstOrderResult> {
    let as_spec = DiffopSpec::FirstOrder(spec.clone());
    as_spec.validate()?;
    let grid = as_spec.grid();
    let ql = check_ql(&spec.q, &grid)?;
    let qq = check_qq(&spec.q, &grid)?;
    let qi = check_qi(&spec.q, &grid)?;
    let m = spec.m;
    let lap = (1..=m).fold(Poly::zero(), |acc, i| acc.add(&Poly::var(i).pow(2)));
    let mut targets: Vec<Poly> = (1..=m).map(Poly::var).collect();
    for l in 1..=m {
        for r in l..=m {
            targets.push(Poly::var(l).mul(&Poly::var(r)));
        }
    }
    let domination = targets
        .iter()
        .map(|p2| {
            check_poly_domination(&lap, p2, &grid).map(|mut d| {
                d.finding = d.finding.note(format!("P1 = {lap}, P2 = {p2}"));
                d
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut overall = Verdict::all(
        [ql.finding.verdict, qq.finding.verdict, qi.finding.verdict]
            .into_iter()
            .chain(domination.iter().map(|d| d.finding.verdict)),
    );
    if overall == Verdict::Pass && ql.heuristic {
        overall = Verdict::Inconclusive;
    }
    let conclusion = match overall {
        Verdict::Pass => "D(closure of A) = D(A*): hypotheses certified on finite evidence; domination of ad(S, A) by the Laplacian S follows from the coefficient bounds and is not computed",
        Verdict::Inconclusive => "D(closure of A) = D(A*): hypotheses inconclusive on finite evidence",
        Verdict::Fail => "D(closure of A) = D(A*): a hypothesis fails, no conclusion (the criteria are sufficient only)",
    }
    .to_owned();
    Ok(FirstOrderResult {
        ql,
        qq,
        qi,
        domination,
        overall,
        conclusion,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DiffopResult {
    Dirac(DiracResult),
    FirstOrder(FirstOrderResult),
    Domination(PolyDomination),
}

impl DiffopResult {
    pub fn findings(&self) -> Vec<&Finding> {
        match self {
            DiffopResult::Dirac(r) => {
                let mut v = r.afnorm.findings().to_vec();
                v.push(&r.holder.finding);
                v
            }
            DiffopResult::FirstOrder(r) => {
                let mut v = vec![&r.ql.finding, &r.qq.finding, &r.qi.finding];
                v.extend(r.domination.iter().map(|d| &d.finding));
                v
            }
            DiffopResult::Domination(d) => vec![&d.finding],
        }
    }

    pub fn overall(&self) -> Verdict {
        match self {
            DiffopResult::Dirac(r) => r.overall,
            DiffopResult::FirstOrder(r) => r.overall,
            DiffopResult::Domination(d) => d.finding.verdict,
        }
    }

    pub fn conclusion(&self) -> String {
        match self {
            DiffopResult::Dirac(r) => r.conclusion.clone(),
            DiffopResult::FirstOrder(r) => r.conclusion.clone(),
            DiffopResult::Domination(d) => match d.finding.verdict {
                Verdict::Pass => "P1 dominates P2 on test functions",
                Verdict::Fail => "P1 does not dominate P2: the symbol ratio diverges",
                Verdict::Inconclusive => "domination of P2 by P1: inconclusive",
            }
            .to_owned(),
        }
    }

    /// Ray reports worth exporting, with a short name for each set.
    pub fn ray_sets(&self) -> Vec<(String, &[RayReport])> {
        match self {
            DiffopResult::Dirac(_) => Vec::new(),
            DiffopResult::FirstOrder(r) => {
                let mut v = vec![
                    ("ql".to_owned(), r.ql.rays.as_slice()),
                    ("qq".to_owned(), r.qq.rays.as_slice()),
                    ("qi".to_owned(), r.qi.rays.as_slice()),
                ];
                for (i, d) in r.domination.iter().enumerate() {
                    v.push((format!("domination_{}", i + 1), d.rays.as_slice()));
                }
                v.retain(|(_, r)| !r.is_empty());
                v
            }
            DiffopResult::Domination(d) => vec![("domination".to_owned(), d.rays.as_slice())],
        }
    }
}

/// Runs whichever pipeline the spec describes.
pub fn run(spec: &DiffopSpec, seed: u64) -> Result<DiffopResult> {
    spec.validate()?;
    Ok(match spec {
        DiffopSpec::Dirac(s) => DiffopResult::Dirac(certify_dirac(s, seed)?),
        DiffopSpec::FirstOrder(s) => DiffopResult::FirstOrder(certify_first_order(s)?),
        DiffopSpec::Domination(s) => DiffopResult::Domination(check_poly_domination(
            &Poly::parse(&s.p1)?,
            &Poly::parse(&s.p2)?,
            &spec.grid(),
        )?),
    })
}

/// Complex matrices as nested `[re, im]` rows.
mod cmats {
    use super::*;
    use serde::{de, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(ms: &[DenseMatrix], s: S) -> std::result::Result<S::Ok, S::Error> {
        let rows: Vec<Vec<Vec<C64>>> = ms
            .iter()
            .map(|m| (0..m.rows()).map(|i| m.row(i).to_vec()).collect())
            .collect();
        rows.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<DenseMatrix>, D::Error> {
        let raw: Vec<Vec<Vec<C64>>> = Vec::deserialize(d)?;
        raw.into_iter()
            .enumerate()
            .map(|(n, rows)| {
                let r = rows.len();
                let c = rows.first().map_or(0, Vec::len);
                if r == 0 || rows.iter().any(|row| row.len() != c) {
                    return Err(de::Error::custom(format!("matrix {} is empty or ragged", n + 1)));
                }
                Ok(DenseMatrix::from_row_major(r, c, rows.into_iter().flatten().collect()))
            })
            .collect()
    }
}
