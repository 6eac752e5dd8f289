//! Infinite matrices given by entry generators, and their exact finite
//! sections.
//!
//! Indices are 1-based throughout this module, matching `ℓ²(ℕ)` with
//! `ℕ = {1, 2, …}`. Storage inside [`DenseMatrix`] and [`BandMatrix`] is
//! 0-based, so window index `k` lives at row `k - lo`.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64 as C64;
use serde::de::{self, Deserializer, SeqAccess, Visitor};
use serde::{Deserialize, Serialize, Serializer};

use crate::exprlang::{self, Expr};
use crate::matrix::{BandMatrix, DenseMatrix, Section};
use crate::{parallel, Error, Result};

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// Number of sub- (`lower`) and super- (`upper`) diagonals that may be
/// non-zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Band {
    pub lower: usize,
    pub upper: usize,
}

impl Band {
    pub fn symmetric(p: usize) -> Self {
        Band { lower: p, upper: p }
    }

    pub fn width(self) -> usize {
        self.lower.max(self.upper)
    }

    #[inline]
    pub fn contains(self, k: usize, l: usize) -> bool {
        l + self.lower >= k && l <= k + self.upper
    }

    fn intersect(a: Option<Band>, b: Option<Band>) -> Option<Band> {
        match (a, b) {
            (Some(a), Some(b)) => Some(Band {
                lower: a.lower.min(b.lower),
                upper: a.upper.min(b.upper),
            }),
            (a, None) => a,
            (None, b) => b,
        }
    }
}

/// An infinite matrix `(a_{k,l})_{k,l ≥ 1}` evaluated entry by entry.
pub trait Entries: Send + Sync {
    fn entry(&self, k: usize, l: usize) -> Result<C64>;

    /// Band structure, if entries are known to vanish outside a band.
    fn band(&self) -> Option<Band>;
}

impl<E: Entries + ?Sized> Entries for &E {
    fn entry(&self, k: usize, l: usize) -> Result<C64> {
        (**self).entry(k, l)
    }
    fn band(&self) -> Option<Band> {
        (**self).band()
    }
}

/// Generator backed by a closure; used for ad-hoc operators in code.
pub struct FnEntries<F> {
    f: F,
    band: Option<Band>,
}

impl<F> FnEntries<F>
where
    F: Fn(usize, usize) -> C64 + Send + Sync,
{
    pub fn new(band: Option<Band>, f: F) -> Self {
        FnEntries { f, band }
    }
}

impl<F> Entries for FnEntries<F>
where
    F: Fn(usize, usize) -> C64 + Send + Sync,
{
    fn entry(&self, k: usize, l: usize) -> Result<C64> {
        match self.band {
            Some(b) if !b.contains(k, l) => Ok(ZERO),
            _ => Ok((self.f)(k, l)),
        }
    }
    fn band(&self) -> Option<Band> {
        self.band
    }
}

/// The conjugate transpose `a_{k,l} ↦ conj(a_{l,k})`.
pub struct Adjoint<E>(pub E);

impl<E: Entries> Entries for Adjoint<E> {
    fn entry(&self, k: usize, l: usize) -> Result<C64> {
        Ok(self.0.entry(l, k)?.conj())
    }
    fn band(&self) -> Option<Band> {
        self.0.band().map(|b| Band {
            lower: b.upper,
            upper: b.lower,
        })
    }
}

/// An expression together with its source text.
#[derive(Clone, PartialEq)]
pub struct Formula {
    src: String,
    expr: Expr,
}

impl Formula {
    pub fn parse(src: &str) -> Result<Self> {
        Ok(Formula {
            src: src.to_owned(),
            expr: exprlang::parse(src)?,
        })
    }

    pub fn src(&self) -> &str {
        &self.src
    }

    pub fn expr(&self) -> &Expr {
        &self.expr
    }
}

impl fmt::Debug for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Formula({:?})", self.src)
    }
}

impl Serialize for Formula {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.src)
    }
}

impl<'de> Deserialize<'de> for Formula {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let src = String::deserialize(d)?;
        Formula::parse(&src).map_err(|e| de::Error::custom(format!("in `{src}`: {e}")))
    }
}

/// A real sequence `k ↦ s_k`, `k ≥ 1`.
///
/// In JSON: a number (constant), an array (finite prefix, zero tail) or a
/// string (formula in `k`).
#[derive(Debug, Clone, PartialEq)]
pub enum Seq {
    Const(f64),
    Values(Vec<f64>),
    Formula(Formula),
}

impl Seq {
    pub fn formula(src: &str) -> Result<Self> {
        Ok(Seq::Formula(Formula::parse(src)?))
    }

    /// The sequence `s_k = k`.
    pub fn index() -> Self {
        Seq::formula("k").expect("static formula")
    }

    pub fn value(&self, k: usize) -> Result<f64> {
        let v = match self {
            Seq::Const(c) => *c,
            Seq::Values(vs) => vs.get(k - 1).copied().unwrap_or(0.0),
            Seq::Formula(f) => {
                let z = f
                    .expr
                    .eval(&[("k", C64::new(k as f64, 0.0))])
                    .map_err(|source| Error::Sequence { k, source })?;
                if z.im.abs() > 1e-14 * (1.0 + z.re.abs()) {
                    return Err(Error::NonRealSequence {
                        k,
                        value: format!("{z}"),
                    });
                }
                z.re
            }
        };
        if !v.is_finite() {
            return Err(Error::NonRealSequence {
                k,
                value: format!("{v}"),
            });
        }
        Ok(v)
    }

    /// Values for `k = lo..=hi`.
    pub fn values(&self, lo: usize, hi: usize) -> Result<Vec<f64>> {
        (lo..=hi).map(|k| self.value(k)).collect()
    }
}

impl Serialize for Seq {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Seq::Const(c) => s.serialize_f64(*c),
            Seq::Values(v) => v.serialize(s),
            Seq::Formula(f) => f.serialize(s),
        }
    }
}

impl<'de> Deserialize<'de> for Seq {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct SeqVisitor;

        impl<'de> Visitor<'de> for SeqVisitor {
            type Value = Seq;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a number, an array of numbers, or a formula string in k")
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<Seq, E> {
                Ok(Seq::Const(v))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Seq, E> {
                Ok(Seq::Const(v as f64))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Seq, E> {
                Ok(Seq::Const(v as f64))
            }

            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Seq, E> {
                Formula::parse(v)
                    .map(Seq::Formula)
                    .map_err(|e| E::custom(format!("in `{v}`: {e}")))
            }

            fn visit_seq<A: SeqAccess<'de>>(self, mut a: A) -> std::result::Result<Seq, A::Error> {
                let mut out = Vec::new();
                while let Some(v) = a.next_element::<f64>()? {
                    out.push(v);
                }
                Ok(Seq::Values(out))
            }
        }

        d.deserialize_any(SeqVisitor)
    }
}

/// One stored diagonal of a [`EntryGen::Band`] generator:
/// `a_{k,k+offset} = values_k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Diagonal {
    pub offset: i64,
    pub values: Seq,
}

/// Built-in families, explicit tables and expressions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum EntryGen {
    Zero,
    Identity,
    /// `a_{k,k} = c_k`.
    Diagonal { c: Seq },
    /// Real symmetric tridiagonal: `a_{k,k} = diag_k`,
    /// `a_{k,k+1} = a_{k+1,k} = offdiag_k`.
    Jacobi { diag: Seq, offdiag: Seq },
    /// Arbitrary real diagonals.
    Band { diagonals: Vec<Diagonal> },
    /// `d(1+k+l)/|k−l|^alpha` off the diagonal and `d(k+1)^s` on it,
    /// optionally cut to zero for `|k−l| > cutoff`.
    PowerBand {
        d: f64,
        s: f64,
        alpha: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        cutoff: Option<usize>,
    },
    /// Consecutive blocks whose sizes cycle through `sizes`; block `j`
    /// carries `signs[j mod len]` on its antidiagonal.
    AntidiagonalBlock {
        sizes: Vec<usize>,
        #[serde(default = "default_signs")]
        signs: Vec<f64>,
    },
    /// The matrix product `left · right`; one factor must be banded.
    Product {
        left: Box<EntryGen>,
        right: Box<EntryGen>,
    },
    /// Finitely many non-zero entries, `[k, l, [re, im]]` triples.
    Table {
        #[serde(with = "table_serde")]
        entries: BTreeMap<(usize, usize), C64>,
    },
    /// Formula in `k` and `l`.
    Expr { src: Formula },
}

fn default_signs() -> Vec<f64> {
    vec![1.0]
}

mod table_serde {
    use super::*;

    pub fn serialize<S: Serializer>(
        m: &BTreeMap<(usize, usize), C64>,
        s: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        let v: Vec<(usize, usize, C64)> = m.iter().map(|(&(k, l), &z)| (k, l, z)).collect();
        v.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> std::result::Result<BTreeMap<(usize, usize), C64>, D::Error> {
        let v: Vec<(usize, usize, C64)> = Vec::deserialize(d)?;
        let mut out = BTreeMap::new();
        for (k, l, z) in v {
            if k == 0 || l == 0 {
                return Err(de::Error::custom("table indices start at 1"));
            }
            if out.insert((k, l), z).is_some() {
                return Err(de::Error::custom(format!("duplicate table entry ({k},{l})")));
            }
        }
        Ok(out)
    }
}

impl EntryGen {
    pub fn diagonal(c: Seq) -> Self {
        EntryGen::Diagonal { c }
    }

    pub fn jacobi(diag: Seq, offdiag: Seq) -> Self {
        EntryGen::Jacobi { diag, offdiag }
    }

    pub fn power_band(d: f64, s: f64, alpha: f64) -> Self {
        EntryGen::PowerBand {
            d,
            s,
            alpha,
            cutoff: None,
        }
    }

    pub fn expr(src: &str) -> Result<Self> {
        Ok(EntryGen::Expr {
            src: Formula::parse(src)?,
        })
    }

    /// `a_{k,k+offset} = 1`.
    pub fn shift(offset: i64) -> Self {
        EntryGen::Band {
            diagonals: vec![Diagonal {
                offset,
                values: Seq::Const(1.0),
            }],
        }
    }

    pub fn product(left: EntryGen, right: EntryGen) -> Self {
        EntryGen::Product {
            left: Box::new(left),
            right: Box::new(right),
        }
    }

    /// Structural checks that do not require evaluating entries.
    pub fn check(&self) -> Result<()> {
        match self {
            EntryGen::AntidiagonalBlock { sizes, signs } => {
                if sizes.is_empty() || sizes.contains(&0) {
                    return Err(Error::Precondition(
                        "antidiagonal-block sizes must be non-empty and positive".into(),
                    ));
                }
                if signs.is_empty() {
                    return Err(Error::Precondition(
                        "antidiagonal-block signs must be non-empty".into(),
                    ));
                }
            }
            EntryGen::PowerBand { d, s, alpha, .. } => {
                if !(d.is_finite() && s.is_finite() && alpha.is_finite()) {
                    return Err(Error::Precondition(
                        "power-band parameters must be finite".into(),
                    ));
                }
            }
            EntryGen::Product { left, right } => {
                left.check()?;
                right.check()?;
                if left.band().is_none() && right.band().is_none() {
                    return Err(Error::NoExactness);
                }
            }
            EntryGen::Band { diagonals } => {
                let mut seen = std::collections::BTreeSet::new();
                for d in diagonals {
                    if !seen.insert(d.offset) {
                        return Err(Error::Precondition(format!(
                            "band diagonal offset {} listed twice",
                            d.offset
                        )));
                    }
                }
            }
            EntryGen::Expr { src } => {
                for v in src.expr().free_vars() {
                    if v != "k" && v != "l" {
                        return Err(Error::Precondition(format!(
                            "entry formula `{}` uses variable `{v}`; only k and l are bound",
                            src.src()
                        )));
                    }
                }
            }
            _ => {}
        }
        Ok(())
    }

    /// For `k` inside an antidiagonal block: (sign, partner index).
    fn antidiagonal_partner(sizes: &[usize], signs: &[f64], k: usize) -> (f64, usize) {
        let period: usize = sizes.iter().sum();
        let k0 = k - 1;
        let cycle = k0 / period;
        let mut start = cycle * period;
        let mut block = cycle * sizes.len();
        for &size in sizes {
            if k0 < start + size {
                let partner = 2 * start + size - 1 - k0;
                return (signs[block % signs.len()], partner + 1);
            }
            start += size;
            block += 1;
        }
        unreachable!("index lies in some block of the period")
    }
}

impl Entries for EntryGen {
    fn entry(&self, k: usize, l: usize) -> Result<C64> {
        debug_assert!(k >= 1 && l >= 1, "indices are 1-based");
        let re = |v: f64| C64::new(v, 0.0);
        Ok(match self {
            EntryGen::Zero => ZERO,
            EntryGen::Identity => {
                if k == l {
                    ONE
                } else {
                    ZERO
                }
            }
            EntryGen::Diagonal { c } => {
                if k == l {
                    re(c.value(k)?)
                } else {
                    ZERO
                }
            }
            EntryGen::Jacobi { diag, offdiag } => {
                if k == l {
                    re(diag.value(k)?)
                } else if l == k + 1 {
                    re(offdiag.value(k)?)
                } else if k == l + 1 {
                    re(offdiag.value(l)?)
                } else {
                    ZERO
                }
            }
            EntryGen::Band { diagonals } => {
                let q = l as i64 - k as i64;
                match diagonals.iter().find(|d| d.offset == q) {
                    Some(d) => re(d.values.value(k)?),
                    None => ZERO,
                }
            }
            EntryGen::PowerBand {
                d,
                s,
                alpha,
                cutoff,
            } => {
                let gap = k.abs_diff(l);
                if k == l {
                    re(d * ((k + 1) as f64).powf(*s))
                } else if cutoff.is_some_and(|c| gap > c) {
                    ZERO
                } else {
                    re(d * (1 + k + l) as f64 / (gap as f64).powf(*alpha))
                }
            }
            EntryGen::AntidiagonalBlock { sizes, signs } => {
                let (sign, partner) = Self::antidiagonal_partner(sizes, signs, k);
                if partner == l {
                    re(sign)
                } else {
                    ZERO
                }
            }
            EntryGen::Product { left, right } => {
                let range = match (left.band(), right.band()) {
                    (Some(b), _) => (k.saturating_sub(b.lower).max(1), k + b.upper),
                    (None, Some(b)) => (l.saturating_sub(b.upper).max(1), l + b.lower),
                    (None, None) => return Err(Error::NoExactness),
                };
                let mut acc = ZERO;
                for j in range.0..=range.1 {
                    let a = left.entry(k, j)?;
                    if a != ZERO {
                        acc += a * right.entry(j, l)?;
                    }
                }
                acc
            }
            EntryGen::Table { entries } => entries.get(&(k, l)).copied().unwrap_or(ZERO),
            EntryGen::Expr { src } => src
                .expr()
                .eval(&[
                    ("k", C64::new(k as f64, 0.0)),
                    ("l", C64::new(l as f64, 0.0)),
                ])
                .map_err(|source| Error::Entry { k, l, source })?,
        })
    }

    fn band(&self) -> Option<Band> {
        match self {
            EntryGen::Zero | EntryGen::Identity | EntryGen::Diagonal { .. } => Some(Band::symmetric(0)),
            EntryGen::Jacobi { .. } => Some(Band::symmetric(1)),
            EntryGen::Band { diagonals } => {
                let mut b = Band::symmetric(0);
                for d in diagonals {
                    if d.offset >= 0 {
                        b.upper = b.upper.max(d.offset as usize);
                    } else {
                        b.lower = b.lower.max(d.offset.unsigned_abs() as usize);
                    }
                }
                Some(b)
            }
            EntryGen::PowerBand { cutoff, .. } => cutoff.map(Band::symmetric),
            EntryGen::AntidiagonalBlock { sizes, .. } => {
                Some(Band::symmetric(sizes.iter().max().map_or(0, |s| s - 1)))
            }
            EntryGen::Product { left, right } => match (left.band(), right.band()) {
                (Some(a), Some(b)) => Some(Band {
                    lower: a.lower + b.lower,
                    upper: a.upper + b.upper,
                }),
                _ => None,
            },
            EntryGen::Table { entries } => {
                let mut b = Band::symmetric(0);
                for &(k, l) in entries.keys() {
                    if l >= k {
                        b.upper = b.upper.max(l - k);
                    } else {
                        b.lower = b.lower.max(k - l);
                    }
                }
                Some(b)
            }
            EntryGen::Expr { .. } => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Symmetry {
    #[default]
    None,
    Hermitian,
    Real,
}

/// An infinite matrix with declared structure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorSpec {
    pub entries: EntryGen,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bandwidth: Option<usize>,
    #[serde(default)]
    pub symmetry: Symmetry,
}

impl From<EntryGen> for OperatorSpec {
    fn from(entries: EntryGen) -> Self {
        OperatorSpec {
            entries,
            bandwidth: None,
            symmetry: Symmetry::None,
        }
    }
}

/// Number of leading indices sampled exhaustively by spot checks.
const SPOT_BLOCK: usize = 24;

/// Deterministic spread of far-away sample indices.
fn spot_pairs() -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for k in 1..=SPOT_BLOCK {
        for l in 1..=SPOT_BLOCK {
            out.push((k, l));
        }
    }
    for &k in &[100usize, 257, 1000, 4099] {
        for d in 0..=8 {
            out.push((k, k + d));
            out.push((k + d, k));
        }
        out.push((k, 3 * k));
        out.push((3 * k, k));
    }
    out
}

impl OperatorSpec {
    pub fn new(entries: EntryGen) -> Self {
        entries.into()
    }

    pub fn with_bandwidth(mut self, p: usize) -> Self {
        self.bandwidth = Some(p);
        self
    }

    pub fn with_symmetry(mut self, s: Symmetry) -> Self {
        self.symmetry = s;
        self
    }

    /// Spot-checks the declared bandwidth and symmetry by sampling.
    pub fn validate(&self) -> Result<()> {
        self.entries.check()?;
        for (k, l) in spot_pairs() {
            let a = self.entries.entry(k, l)?;
            if !(a.re.is_finite() && a.im.is_finite()) {
                return Err(Error::NonFinite { k, l });
            }
            if let Some(p) = self.bandwidth {
                if k.abs_diff(l) > p && a != ZERO {
                    return Err(Error::Contract(format!(
                        "declared bandwidth {p} but entry ({k},{l}) = {a} is non-zero"
                    )));
                }
            }
            match self.symmetry {
                Symmetry::None => {}
                Symmetry::Real => {
                    if a.im != 0.0 {
                        return Err(Error::Contract(format!(
                            "declared real but entry ({k},{l}) = {a}"
                        )));
                    }
                }
                Symmetry::Hermitian => {
                    let b = self.entries.entry(l, k)?.conj();
                    if (a - b).norm() > 1e-14 * (1.0 + a.norm()) {
                        return Err(Error::Contract(format!(
                            "declared hermitian but a({k},{l}) = {a} differs from conj(a({l},{k})) = {b}"
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

impl Entries for OperatorSpec {
    fn entry(&self, k: usize, l: usize) -> Result<C64> {
        self.entries.entry(k, l)
    }

    fn band(&self) -> Option<Band> {
        Band::intersect(self.entries.band(), self.bandwidth.map(Band::symmetric))
    }
}

/// A real diagonal `[δ_{k,l} c_l]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagonalSpec {
    pub c: Seq,
}

impl Default for DiagonalSpec {
    /// `c_k = k`.
    fn default() -> Self {
        DiagonalSpec { c: Seq::index() }
    }
}

impl DiagonalSpec {
    pub fn new(c: Seq) -> Self {
        DiagonalSpec { c }
    }

    pub fn value(&self, k: usize) -> Result<f64> {
        self.c.value(k)
    }

    pub fn values(&self, w: &Window) -> Result<Vec<f64>> {
        self.c.values(w.lo, w.hi)
    }
}

impl Entries for DiagonalSpec {
    fn entry(&self, k: usize, l: usize) -> Result<C64> {
        if k == l {
            Ok(C64::new(self.value(k)?, 0.0))
        } else {
            Ok(ZERO)
        }
    }
    fn band(&self) -> Option<Band> {
        Some(Band::symmetric(0))
    }
}

/// The Gram operator `H`, its inverse `G`, and the band width of `G`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairingSpec {
    pub h: EntryGen,
    pub g: EntryGen,
    pub p: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s_g: Option<f64>,
}

impl PairingSpec {
    /// `H = G = I`.
    pub fn identity() -> Self {
        PairingSpec {
            h: EntryGen::Identity,
            g: EntryGen::Identity,
            p: 0,
            s_g: Some(1.0),
        }
    }

    /// `G` with its declared band attached.
    pub fn g_op(&self) -> Declared<'_> {
        Declared {
            gen: &self.g,
            band: Some(Band::symmetric(self.p)),
        }
    }

    pub fn h_op(&self) -> Declared<'_> {
        Declared {
            gen: &self.h,
            band: None,
        }
    }
}

/// A generator viewed with an additional declared band.
#[derive(Debug, Clone, Copy)]
pub struct Declared<'a> {
    gen: &'a EntryGen,
    band: Option<Band>,
}

impl Entries for Declared<'_> {
    fn entry(&self, k: usize, l: usize) -> Result<C64> {
        self.gen.entry(k, l)
    }
    fn band(&self) -> Option<Band> {
        Band::intersect(self.gen.band(), self.band)
    }
}

/// The index block `[lo, hi]` plus `pad` extra indices on each side used to
/// make products exact.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Window {
    pub lo: usize,
    pub hi: usize,
    #[serde(default)]
    pub pad: usize,
}

impl Window {
    pub fn new(lo: usize, hi: usize, pad: usize) -> Result<Self> {
        let w = Window { lo, hi, pad };
        w.check()?;
        Ok(w)
    }

    /// `[1, n]` without padding.
    pub fn first(n: usize) -> Self {
        Window {
            lo: 1,
            hi: n.max(1),
            pad: 0,
        }
    }

    pub fn with_pad(mut self, pad: usize) -> Self {
        self.pad = pad;
        self
    }

    pub fn check(&self) -> Result<()> {
        if self.lo == 0 || self.lo > self.hi {
            return Err(Error::InvalidWindow {
                lo: self.lo,
                hi: self.hi,
            });
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.hi - self.lo + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// `[max(1, lo − pad), hi + pad]`.
    pub fn padded(&self) -> (usize, usize) {
        (self.lo.saturating_sub(self.pad).max(1), self.hi + self.pad)
    }

    pub fn indices(&self) -> std::ops::RangeInclusive<usize> {
        self.lo..=self.hi
    }
}

fn checked(k: usize, l: usize, z: C64) -> Result<C64> {
    if z.re.is_finite() && z.im.is_finite() {
        Ok(z)
    } else {
        Err(Error::NonFinite { k, l })
    }
}

/// The dense section `[a_{k,l}]_{k,l ∈ [lo,hi]}`.
pub fn truncate<E: Entries + ?Sized>(a: &E, w: &Window) -> Result<DenseMatrix> {
    w.check()?;
    let n = w.len();
    let band = a.band();
    let rows = parallel::try_map_range(n, |i| {
        let k = w.lo + i;
        (0..n)
            .map(|j| {
                let l = w.lo + j;
                if band.is_some_and(|b| !b.contains(k, l)) {
                    Ok(ZERO)
                } else {
                    checked(k, l, a.entry(k, l)?)
                }
            })
            .collect::<Result<Vec<C64>>>()
    })?;
    Ok(DenseMatrix::from_row_major(n, n, rows.concat()))
}

/// The section in banded storage.
pub fn truncate_band<E: Entries + ?Sized>(a: &E, w: &Window) -> Result<BandMatrix> {
    w.check()?;
    let b = a
        .band()
        .ok_or_else(|| Error::Precondition("banded truncation of an unbanded operator".into()))?;
    let n = w.len();
    let rows = parallel::try_map_range(n, |i| {
        let k = w.lo + i;
        let first = k.saturating_sub(b.lower).max(w.lo);
        let last = (k + b.upper).min(w.hi);
        (first..=last)
            .map(|l| Ok((l - w.lo, checked(k, l, a.entry(k, l)?)?)))
            .collect::<Result<Vec<(usize, C64)>>>()
    })?;
    let mut out = BandMatrix::zeros(n, b.lower, b.upper);
    for (i, row) in rows.into_iter().enumerate() {
        for (j, v) in row {
            out.set(i, j, v);
        }
    }
    Ok(out)
}

/// Banded storage when the operator has a band, dense otherwise.
pub fn truncate_section<E: Entries + ?Sized>(a: &E, w: &Window) -> Result<Section> {
    if a.band().is_some() {
        truncate_band(a, w).map(Section::Band)
    } else {
        truncate(a, w).map(Section::Dense)
    }
}

/// Sparse row `k` of `a` restricted to columns `[c_lo, c_hi]`.
fn sparse_row<E: Entries + ?Sized>(
    a: &E,
    k: usize,
    c_lo: usize,
    c_hi: usize,
) -> Result<Vec<(usize, C64)>> {
    let (first, last) = match a.band() {
        Some(b) => (k.saturating_sub(b.lower).max(c_lo), (k + b.upper).min(c_hi)),
        None => (c_lo, c_hi),
    };
    let mut out = Vec::new();
    for l in first..=last {
        let v = checked(k, l, a.entry(k, l)?)?;
        if v != ZERO {
            out.push((l, v));
        }
    }
    Ok(out)
}

/// The section of the infinite product `a·b` on `[lo,hi]²`.
///
/// The inner index runs over the padded window; since one factor is banded
/// with half-width `p ≤ pad`, every non-zero term of the infinite sum is
/// included and the result is exact. The result is banded when both factors
/// are.
pub fn exact_product_window<A, B>(a: &A, b: &B, w: &Window) -> Result<Section>
where
    A: Entries + ?Sized,
    B: Entries + ?Sized,
{
    w.check()?;
    // either banded factor certifies exactness; the narrower one needs less padding
    let required = match (a.band(), b.band()) {
        (Some(ba), Some(bb)) => ba.width().min(bb.width()),
        (Some(ba), None) => ba.width(),
        (None, Some(bb)) => bb.width(),
        (None, None) => return Err(Error::NoExactness),
    };
    if w.pad < required {
        return Err(Error::PadTooSmall {
            pad: w.pad,
            required,
        });
    }
    let (j_lo, j_hi) = w.padded();
    let n = w.len();
    let a_rows = parallel::try_map_range(n, |i| sparse_row(a, w.lo + i, j_lo, j_hi))?;
    let b_rows = parallel::try_map_range(j_hi - j_lo + 1, |i| sparse_row(b, j_lo + i, w.lo, w.hi))?;
    let rows: Vec<Vec<C64>> = parallel::map(&a_rows, |arow| {
        let mut acc = vec![ZERO; n];
        for &(j, ajk) in arow {
            for &(l, bjl) in &b_rows[j - j_lo] {
                acc[l - w.lo] += ajk * bjl;
            }
        }
        acc
    });
    match (a.band(), b.band()) {
        (Some(ba), Some(bb)) => {
            let mut out = BandMatrix::zeros(n, ba.lower + bb.lower, ba.upper + bb.upper);
            for (i, row) in rows.iter().enumerate() {
                let (c0, c1) = out.row_span(i);
                for (j, v) in row.iter().enumerate().take(c1).skip(c0) {
                    out.set(i, j, *v);
                }
            }
            Ok(Section::Band(out))
        }
        _ => Ok(Section::Dense(DenseMatrix::from_row_major(n, n, rows.concat()))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn identity_section() {
        let m = truncate(&EntryGen::Identity, &Window::first(3)).unwrap();
        assert_eq!(m, DenseMatrix::identity(3));
    }

    #[test]
    fn table_section() {
        let gen: EntryGen =
            serde_json::from_str(r#"{"kind":"table","entries":[[1,2,[0,1]]]}"#).unwrap();
        let m = truncate(&gen, &Window::first(2)).unwrap();
        assert_eq!(m.get(0, 1), c(0.0, 1.0));
        assert_eq!(m.get(0, 0), ZERO);
        assert_eq!(m.get(1, 0), ZERO);
        assert_eq!(gen.entry(50, 51).unwrap(), ZERO);
    }

    #[test]
    fn power_band_saturates_bound() {
        let m = truncate(&EntryGen::power_band(1.0, 0.0, 3.0), &Window::first(2)).unwrap();
        assert_eq!(m.get(0, 1), c(4.0, 0.0));
        assert_eq!(m.get(1, 0), c(4.0, 0.0));
        assert_eq!(m.get(0, 0), c(1.0, 0.0));
    }

    #[test]
    fn antidiagonal_blocks_square_to_identity() {
        let g = EntryGen::AntidiagonalBlock {
            sizes: vec![2, 3],
            signs: vec![1.0, -1.0],
        };
        let w = Window::new(3, 40, 3).unwrap();
        let prod = exact_product_window(&g, &g, &w).unwrap();
        assert_eq!(prod.to_dense(), DenseMatrix::identity(w.len()));
        assert_eq!(g.entry(1, 2).unwrap(), ONE);
        assert_eq!(g.entry(3, 5).unwrap(), -ONE);
        assert_eq!(g.entry(4, 4).unwrap(), -ONE);
    }

    #[test]
    fn zero_factor_product() {
        let b = EntryGen::jacobi(Seq::index(), Seq::Const(2.0));
        let p = exact_product_window(&EntryGen::Zero, &b, &Window::first(6).with_pad(1)).unwrap();
        assert_eq!(p.max_abs(), 0.0);
    }

    #[test]
    fn shift_times_diagonal() {
        let a = EntryGen::shift(1);
        let b = EntryGen::diagonal(Seq::index());
        let p = exact_product_window(&a, &b, &Window::new(1, 4, 1).unwrap()).unwrap();
        for k in 1..4 {
            assert_eq!(p.get(k - 1, k), c((k + 1) as f64, 0.0));
        }
        assert_eq!(p.get(3, 3), ZERO);
    }

    #[test]
    fn product_needs_band_and_pad() {
        let e = EntryGen::expr("1/(k+l)").unwrap();
        assert_eq!(
            exact_product_window(&e, &e, &Window::first(3).with_pad(5)),
            Err(Error::NoExactness)
        );
        let jac = EntryGen::jacobi(Seq::Const(0.0), Seq::Const(1.0));
        // the identity has width 0, so no padding is needed
        let p = exact_product_window(&EntryGen::Identity, &jac, &Window::first(3)).unwrap();
        assert_eq!(p.to_dense(), truncate(&jac, &Window::first(3)).unwrap());
        assert_eq!(
            exact_product_window(&jac, &jac, &Window::first(3)),
            Err(Error::PadTooSmall { pad: 0, required: 1 })
        );
    }

    #[test]
    fn expression_errors_name_the_entry() {
        let e = EntryGen::expr("1/(k-l)").unwrap();
        match truncate(&e, &Window::first(3)) {
            Err(Error::Entry { k, l, .. }) => assert_eq!((k, l), (1, 1)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn validate_catches_declared_structure() {
        let bad = OperatorSpec::new(EntryGen::expr("1/(1+abs(k-l))^2").unwrap()).with_bandwidth(2);
        assert!(matches!(bad.validate(), Err(Error::Contract(_))));
        let herm = OperatorSpec::new(EntryGen::expr("i*(k-l)").unwrap()).with_symmetry(Symmetry::Hermitian);
        herm.validate().unwrap();
        let not_herm = OperatorSpec::new(EntryGen::expr("i*k").unwrap()).with_symmetry(Symmetry::Hermitian);
        assert!(not_herm.validate().is_err());
    }

    #[test]
    fn serde_roundtrip() {
        let spec = OperatorSpec::new(EntryGen::product(
            EntryGen::AntidiagonalBlock {
                sizes: vec![2],
                signs: vec![1.0],
            },
            EntryGen::Band {
                diagonals: vec![
                    Diagonal {
                        offset: 0,
                        values: Seq::formula("k").unwrap(),
                    },
                    Diagonal {
                        offset: 1,
                        values: Seq::Values(vec![1.0, 2.0]),
                    },
                ],
            },
        ))
        .with_bandwidth(3);
        let js = serde_json::to_string(&spec).unwrap();
        let back: OperatorSpec = serde_json::from_str(&js).unwrap();
        assert_eq!(back, spec);
    }

    #[test]
    fn bad_formula_reports_offset() {
        let err = serde_json::from_str::<Seq>(r#""k+*2""#).unwrap_err();
        assert!(err.to_string().contains("byte 2"), "{err}");
    }
}
