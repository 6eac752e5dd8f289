//! Finite matrix containers: dense row-major and square banded storage.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

const ZERO: C64 = C64::new(0.0, 0.0);

/// Matrix-free linear map used by the norm estimators.
pub trait LinOp: Sync {
    fn nrows(&self) -> usize;
    fn ncols(&self) -> usize;
    fn apply(&self, x: &[C64]) -> Vec<C64>;
    fn apply_adjoint(&self, y: &[C64]) -> Vec<C64>;
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, C64::new(1.0, 0.0));
        }
        m
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<C64>) -> Self {
        assert_eq!(data.len(), rows * cols, "entry count must equal rows*cols");
        DenseMatrix { rows, cols, data }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        DenseMatrix { rows, cols, data }
    }

    pub fn from_diagonal(d: &[C64]) -> Self {
        let mut m = Self::zeros(d.len(), d.len());
        for (i, v) in d.iter().enumerate() {
            m.set(i, i, *v);
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: C64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn adjoint(&self) -> Self {
        DenseMatrix::from_fn(self.cols, self.rows, |i, j| self.get(j, i).conj())
    }

    pub fn matmul(&self, other: &DenseMatrix) -> Self {
        assert_eq!(self.cols, other.rows, "inner dimensions differ");
        let mut out = DenseMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == ZERO {
                    continue;
                }
                let orow = other.row(k);
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, b) in dst.iter_mut().zip(orow) {
                    *d += a * b;
                }
            }
        }
        out
    }

    pub fn sub(&self, other: &DenseMatrix) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn scale(&self, s: C64) -> Self {
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|a| a * s).collect(),
        }
    }

    /// Top-left `r × c` block.
    pub fn block(&self, r: usize, c: usize) -> Self {
        DenseMatrix::from_fn(r, c, |i, j| self.get(i, j))
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Maximum absolute row sum.
    pub fn inf_norm(&self) -> f64 {
        (0..self.rows)
            .map(|i| self.row(i).iter().map(|z| z.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// `max |M − Mᴴ|` over entries.
    pub fn hermitian_defect(&self) -> f64 {
        assert_eq!(self.rows, self.cols);
        let mut d: f64 = 0.0;
        for i in 0..self.rows {
            for j in i..self.cols {
                d = d.max((self.get(i, j) - self.get(j, i).conj()).norm());
            }
        }
        d
    }

    pub fn to_nalgebra(&self) -> DMatrix<C64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }

    pub fn from_nalgebra(m: &DMatrix<C64>) -> Self {
        DenseMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
    }
}

impl LinOp for DenseMatrix {
    fn nrows(&self) -> usize {
        self.rows
    }

    fn ncols(&self) -> usize {
        self.cols
    }

    fn apply(&self, x: &[C64]) -> Vec<C64> {
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    fn apply_adjoint(&self, y: &[C64]) -> Vec<C64> {
        let mut out = vec![ZERO; self.cols];
        for (i, yi) in y.iter().enumerate() {
            if *yi == ZERO {
                continue;
            }
            for (o, a) in out.iter_mut().zip(self.row(i)) {
                *o += a.conj() * yi;
            }
        }
        out
    }
}

/// Square `n × n` matrix with `lower` sub- and `upper` super-diagonals.
#[derive(Debug, Clone, PartialEq)]
pub struct BandMatrix {
    n: usize,
    lower: usize,
    upper: usize,
    data: Vec<C64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, lower: usize, upper: usize) -> Self {
        let lower = lower.min(n.saturating_sub(1));
        let upper = upper.min(n.saturating_sub(1));
        BandMatrix {
            n,
            lower,
            upper,
            data: vec![ZERO; n * (lower + upper + 1)],
        }
    }

    pub fn from_diagonal(d: &[C64]) -> Self {
        BandMatrix {
            n: d.len(),
            lower: 0,
            upper: 0,
            data: d.to_vec(),
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn lower(&self) -> usize {
        self.lower
    }

    pub fn upper(&self) -> usize {
        self.upper
    }

    fn width(&self) -> usize {
        self.lower + self.upper + 1
    }

    /// Column range `[lo, hi)` of the stored band in row `i`.
    pub fn row_span(&self, i: usize) -> (usize, usize) {
        (i.saturating_sub(self.lower), (i + self.upper + 1).min(self.n))
    }

    #[inline]
    pub fn in_band(&self, i: usize, j: usize) -> bool {
        j + self.lower >= i && j <= i + self.upper
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> C64 {
        if i < self.n && j < self.n && self.in_band(i, j) {
            self.data[i * self.width() + (j + self.lower - i)]
        } else {
            ZERO
        }
    }

    /// Panics outside the stored band.
    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: C64) {
        assert!(self.in_band(i, j), "({i},{j}) outside band");
        let w = self.width();
        self.data[i * w + (j + self.lower - i)] = v;
    }

    pub fn diagonal(&self) -> Vec<C64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn adjoint(&self) -> Self {
        let mut out = BandMatrix::zeros(self.n, self.upper, self.lower);
        for i in 0..self.n {
            let (a, b) = self.row_span(i);
            for j in a..b {
                out.set(j, i, self.get(i, j).conj());
            }
        }
        out
    }

    /// `Aᴴ A`, a Hermitian band matrix of half-width `lower + upper`.
    pub fn gram(&self) -> Self {
        let bw = self.lower + self.upper;
        let mut out = BandMatrix::zeros(self.n, bw, bw);
        // (AᴴA)_{jl} = Σ_i conj(a_ij) a_il
        for i in 0..self.n {
            let (a, b) = self.row_span(i);
            for j in a..b {
                let aij = self.get(i, j).conj();
                if aij == ZERO {
                    continue;
                }
                for l in a..b {
                    let v = out.get(j, l) + aij * self.get(i, l);
                    out.set(j, l, v);
                }
            }
        }
        out
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut m = DenseMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            let (a, b) = self.row_span(i);
            for j in a..b {
                m.set(i, j, self.get(i, j));
            }
        }
        m
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn inf_norm(&self) -> f64 {
        (0..self.n)
            .map(|i| {
                let (a, b) = self.row_span(i);
                (a..b).map(|j| self.get(i, j).norm()).sum::<f64>()
            })
            .fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

impl LinOp for BandMatrix {
    fn nrows(&self) -> usize {
        self.n
    }

    fn ncols(&self) -> usize {
        self.n
    }

    fn apply(&self, x: &[C64]) -> Vec<C64> {
        (0..self.n)
            .map(|i| {
                let (a, b) = self.row_span(i);
                (a..b).map(|j| self.get(i, j) * x[j]).sum()
            })
            .collect()
    }

    fn apply_adjoint(&self, y: &[C64]) -> Vec<C64> {
        let mut out = vec![ZERO; self.n];
        for (i, yi) in y.iter().enumerate() {
            let (a, b) = self.row_span(i);
            for j in a..b {
                out[j] += self.get(i, j).conj() * yi;
            }
        }
        out
    }
}

/// A finite section, stored banded when the operator has a finite
/// bandwidth and densely otherwise.
#[derive(Debug, Clone, PartialEq)]
pub enum Section {
    Dense(DenseMatrix),
    Band(BandMatrix),
}

impl Section {
    pub fn dim(&self) -> usize {
        match self {
            Section::Dense(m) => m.rows(),
            Section::Band(m) => m.dim(),
        }
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        match self {
            Section::Dense(m) => m.get(i, j),
            Section::Band(m) => m.get(i, j),
        }
    }

    pub fn to_dense(&self) -> DenseMatrix {
        match self {
            Section::Dense(m) => m.clone(),
            Section::Band(m) => m.to_dense(),
        }
    }

    pub fn as_band(&self) -> Option<&BandMatrix> {
        match self {
            Section::Band(b) => Some(b),
            Section::Dense(_) => None,
        }
    }

    pub fn adjoint(&self) -> Section {
        match self {
            Section::Dense(m) => Section::Dense(m.adjoint()),
            Section::Band(m) => Section::Band(m.adjoint()),
        }
    }

    pub fn max_abs(&self) -> f64 {
        match self {
            Section::Dense(m) => m.max_abs(),
            Section::Band(m) => m.max_abs(),
        }
    }

    pub fn inf_norm(&self) -> f64 {
        match self {
            Section::Dense(m) => m.inf_norm(),
            Section::Band(m) => m.inf_norm(),
        }
    }

    /// Column range `[lo, hi)` that may hold non-zeros in row `i`.
    pub fn row_span(&self, i: usize) -> (usize, usize) {
        match self {
            Section::Dense(m) => (0, m.cols()),
            Section::Band(m) => m.row_span(i),
        }
    }

    /// `max |a_ij − b_ij|` with the first position (row-major) attaining it.
    pub fn max_abs_diff(&self, other: &Section) -> (f64, Option<(usize, usize)>) {
        assert_eq!(self.dim(), other.dim(), "sections of different size");
        let mut best = 0.0;
        let mut at = None;
        for i in 0..self.dim() {
            let (a0, a1) = self.row_span(i);
            let (b0, b1) = other.row_span(i);
            for j in a0.min(b0)..a1.max(b1) {
                let d = (self.get(i, j) - other.get(i, j)).norm();
                if d > best {
                    best = d;
                    at = Some((i, j));
                }
            }
        }
        (best, at)
    }

    /// Entrywise `M − I`.
    pub fn minus_identity(&self) -> Section {
        let one = C64::new(1.0, 0.0);
        match self {
            Section::Dense(m) => {
                let mut out = m.clone();
                for i in 0..out.rows().min(out.cols()) {
                    out.set(i, i, out.get(i, i) - one);
                }
                Section::Dense(out)
            }
            Section::Band(m) => {
                let mut out = m.clone();
                for i in 0..out.dim() {
                    out.set(i, i, out.get(i, i) - one);
                }
                Section::Band(out)
            }
        }
    }
}

impl From<DenseMatrix> for Section {
    fn from(m: DenseMatrix) -> Self {
        Section::Dense(m)
    }
}

impl From<BandMatrix> for Section {
    fn from(m: BandMatrix) -> Self {
        Section::Band(m)
    }
}

impl LinOp for Section {
    fn nrows(&self) -> usize {
        self.dim()
    }

    fn ncols(&self) -> usize {
        self.dim()
    }

    fn apply(&self, x: &[C64]) -> Vec<C64> {
        match self {
            Section::Dense(m) => m.apply(x),
            Section::Band(m) => m.apply(x),
        }
    }

    fn apply_adjoint(&self, y: &[C64]) -> Vec<C64> {
        match self {
            Section::Dense(m) => m.apply_adjoint(y),
            Section::Band(m) => m.apply_adjoint(y),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn band_roundtrip_and_products() {
        let mut b = BandMatrix::zeros(5, 1, 2);
        for i in 0..5 {
            let (lo, hi) = b.row_span(i);
            for j in lo..hi {
                b.set(i, j, C64::new((i * 7 + j) as f64, (i as f64) - (j as f64)));
            }
        }
        let d = b.to_dense();
        assert_eq!(b.adjoint().to_dense(), d.adjoint());
        assert_eq!(b.gram().to_dense(), d.adjoint().matmul(&d));
        let x: Vec<C64> = (0..5).map(|i| C64::new(i as f64, 1.0)).collect();
        assert_eq!(b.apply(&x), d.apply(&x));
        assert_eq!(b.apply_adjoint(&x), d.apply_adjoint(&x));
        assert_eq!(b.inf_norm(), d.inf_norm());
    }

    #[test]
    fn band_clamps_to_dimension() {
        let b = BandMatrix::zeros(2, 5, 5);
        assert_eq!((b.lower(), b.upper()), (1, 1));
        assert_eq!(b.get(7, 0), ZERO);
    }

    #[test]
    fn dense_basics() {
        let i3 = DenseMatrix::identity(3);
        assert_eq!(i3.matmul(&i3), i3);
        assert_eq!(i3.hermitian_defect(), 0.0);
        let m = DenseMatrix::from_row_major(2, 2, vec![c(1.0), c(2.0), c(3.0), c(4.0)]);
        assert_eq!(m.inf_norm(), 7.0);
        assert_eq!(m.block(1, 1).get(0, 0), c(1.0));
        let back = DenseMatrix::from_nalgebra(&m.to_nalgebra());
        assert_eq!(back, m);
    }
}
