//! Norm routines against nalgebra's SVD and closed forms.

use approx::assert_relative_eq;
use nalgebra::DMatrix;
use opdomain::linalg::{band_norm, op_norm, pencil_bound, power_norm, svd_norm, BandLu, NormOptions};
use opdomain::matrix::{BandMatrix, DenseMatrix};
use opdomain::C64;
use proptest::prelude::*;

fn oracle_norm(m: &DenseMatrix) -> f64 {
    let a = DMatrix::from_fn(m.rows(), m.cols(), |i, j| m.get(i, j));
    a.singular_values().max()
}

fn entries(n: usize) -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-3.0..3.0f64, -3.0..3.0f64), n)
}

fn dense(n: usize, v: &[(f64, f64)]) -> DenseMatrix {
    DenseMatrix::from_fn(n, n, |i, j| C64::new(v[i * n + j].0, v[i * n + j].1))
}

fn band(n: usize, p: usize, v: &[(f64, f64)]) -> BandMatrix {
    let mut b = BandMatrix::zeros(n, p, p);
    for i in 0..n {
        for j in i.saturating_sub(p)..(i + p + 1).min(n) {
            let (re, im) = v[(i * 7 + j * 3) % v.len()];
            b.set(i, j, C64::new(re, im));
        }
    }
    b
}

/// `‖J_N‖ = 2cos(π/(N+1))` for the free Jacobi section.
#[test]
fn free_jacobi_section_norm() {
    let opts = NormOptions::default();
    for n in [5usize, 40, 200, 1000] {
        let mut b = BandMatrix::zeros(n, 1, 1);
        for i in 0..n - 1 {
            b.set(i, i + 1, C64::new(1.0, 0.0));
            b.set(i + 1, i, C64::new(1.0, 0.0));
        }
        let exact = 2.0 * (std::f64::consts::PI / (n as f64 + 1.0)).cos();
        assert_relative_eq!(band_norm(&b, &opts).value, exact, max_relative = 1e-9);
    }
}

#[test]
fn diagonal_norm_is_max_modulus() {
    let d: Vec<C64> = (1..=300).map(|k| C64::new((k as f64).sin(), 0.5)).collect();
    let want = d.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let got = band_norm(&BandMatrix::from_diagonal(&d), &NormOptions::default()).value;
    assert_relative_eq!(got, want, max_relative = 1e-9);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn svd_agrees_with_nalgebra(v in entries(144)) {
        let m = dense(12, &v);
        let ours = svd_norm(&m).value;
        prop_assert!((ours - oracle_norm(&m)).abs() <= 1e-10 * (1.0 + ours));
    }

    #[test]
    fn power_iteration_agrees_with_svd(v in entries(400)) {
        let m = dense(20, &v);
        let opts = NormOptions { svd_threshold: 0, ..NormOptions::default() };
        let p = power_norm(&m, &opts).value;
        prop_assert!((p - oracle_norm(&m)).abs() <= 1e-6 * oracle_norm(&m).max(1.0));
        prop_assert!(op_norm(&m, &opts).is_ok());
    }

    #[test]
    fn band_norm_agrees_with_dense(v in entries(64), n in 70usize..160, p in 0usize..4) {
        let b = band(n, p, &v);
        let dense_norm = oracle_norm(&b.to_dense());
        let ours = band_norm(&b, &NormOptions::default()).value;
        prop_assert!((ours - dense_norm).abs() <= 1e-8 * (1.0 + dense_norm), "{ours} vs {dense_norm}");
    }

    #[test]
    fn band_lu_solves(v in entries(64), n in 10usize..120, p in 0usize..4, shift in 10.0..20.0f64) {
        let mut b = band(n, p, &v);
        for i in 0..n {
            b.set(i, i, b.get(i, i) + C64::new(shift, 1.0));
        }
        let x: Vec<C64> = (0..n).map(|i| C64::new(i as f64, 1.0)).collect();
        let rhs: Vec<C64> = (0..n).map(|i| (0..n).map(|j| b.get(i, j) * x[j]).sum()).collect();
        let y = BandLu::factor(&b).unwrap().solve(&rhs);
        let err = x.iter().zip(&y).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        prop_assert!(err <= 1e-9 * n as f64);
    }

    /// `Q = diag(q)`, `Q* = diag(q*)` positive: the pencil constant is the
    /// largest ratio in either direction.
    #[test]
    fn pencil_bound_of_positive_diagonals(q in prop::collection::vec(0.1..10.0f64, 1..8), r in prop::collection::vec(0.1..10.0f64, 8)) {
        let n = q.len();
        let a = DenseMatrix::from_diagonal(&q.iter().map(|&v| C64::new(v, 0.0)).collect::<Vec<_>>());
        let b = DenseMatrix::from_diagonal(&r[..n].iter().map(|&v| C64::new(v, 0.0)).collect::<Vec<_>>());
        let want = q.iter().zip(&r).map(|(x, y)| (x / y).max(y / x)).fold(1.0, f64::max);
        let got = pencil_bound(&a, &b, 1e-12).unwrap().unwrap();
        prop_assert!((got - want).abs() <= 1e-9 * want);
    }
}

#[test]
fn pencil_bound_is_none_on_range_mismatch() {
    let a = DenseMatrix::from_diagonal(&[C64::new(1.0, 0.0), C64::new(0.0, 0.0)]);
    let b = DenseMatrix::from_diagonal(&[C64::new(0.0, 0.0), C64::new(1.0, 0.0)]);
    assert_eq!(pencil_bound(&a, &b, 1e-12).unwrap(), None);
}
