use opdomain::matrix_criteria::ag_residual;
use opdomain::operator::{DiagonalSpec, EntryGen, PairingSpec, Seq, Window};
use opdomain::oracle::{
    finite_h_symmetry_residual, graph_norm_ratio_probe, jacobi_limit_point_probe, probe_vectors,
    resolvent_commute_check,
};
use opdomain::trend::Trend;
use opdomain::{Settings, Verdict, C64};
use proptest::prelude::*;

const SIZES: [usize; 6] = [64, 128, 256, 512, 1024, 2048];

/// Carleman: `Σ 1/b_k = ∞` gives the limit-point case.
#[test]
fn carleman_offdiagonals_are_limit_point() {
    for off in ["1", "k", "k^1", "sqrt(k)"] {
        let r = jacobi_limit_point_probe(&Seq::Const(0.0), &Seq::formula(off).unwrap(), C64::new(0.0, 1.0), &SIZES).unwrap();
        assert_eq!(r.trend, Trend::Growing, "b_k = {off}");
        assert_eq!(r.finding.verdict, Verdict::Pass);
    }
}

/// `b_k = k²` with zero diagonal is limit-circle: the solution is summable.
#[test]
fn fast_offdiagonals_are_not_certified() {
    let r = jacobi_limit_point_probe(&Seq::Const(0.0), &Seq::formula("k^2").unwrap(), C64::new(0.0, 1.0), &SIZES).unwrap();
    assert_eq!(r.trend, Trend::Bounded);
    assert_eq!(r.finding.verdict, Verdict::Inconclusive);
}

#[test]
fn limit_point_rejects_non_positive_offdiagonals() {
    assert!(jacobi_limit_point_probe(&Seq::Const(0.0), &Seq::Const(0.0), C64::new(0.0, 1.0), &SIZES).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// With `H = I` the H-symmetry residual is the Hermitian defect, and it
    /// vanishes exactly when `(AG)` does.
    #[test]
    fn h_symmetry_agrees_with_ag(a in -3.0..3.0f64, b in -3.0..3.0f64, skew in prop::bool::ANY) {
        let lower = if skew { b + 1.0 } else { a };
        let op = EntryGen::Band {
            diagonals: vec![
                opdomain::operator::Diagonal { offset: 1, values: Seq::Const(a) },
                opdomain::operator::Diagonal { offset: -1, values: Seq::Const(lower) },
                opdomain::operator::Diagonal { offset: 0, values: Seq::Const(b) },
            ],
        };
        let pair = PairingSpec::identity();
        let w = Window::first(64);
        let h = finite_h_symmetry_residual(&op, &pair, &w, 1e-12).unwrap();
        let ag = ag_residual(&op, &pair, &w).unwrap();
        prop_assert!(h.agree);
        prop_assert_eq!(h.residual == 0.0, ag.residual == 0.0);
        prop_assert_eq!(h.finding.verdict == Verdict::Pass, (a - lower).abs() == 0.0);
    }

    /// Real symmetric matrices are normal: `‖Aᴴf‖ = ‖Af‖`, `q̂ = 1`.
    #[test]
    fn symmetric_band_has_unit_graph_ratio(seed in 0u64..1000) {
        let a = EntryGen::jacobi(Seq::formula("k").unwrap(), Seq::formula("1 + k^2").unwrap());
        let w = Window::new(10, 80, 1).unwrap();
        let r = graph_norm_ratio_probe(&a, &w, &probe_vectors(&w, 3, seed)).unwrap();
        prop_assert!((r.q_hat.unwrap() - 1.0).abs() <= 1e-10);
    }
}

/// One of `S`, `Sᴴ` annihilates `e₁`, so the shift fails once `e₁` is
/// probed; away from the boundary it looks isometric in both directions.
#[test]
fn shift_ratio_depends_on_the_boundary() {
    let s = EntryGen::shift(1);
    let edge = Window::new(1, 60, 1).unwrap();
    let r = graph_norm_ratio_probe(&s, &edge, &probe_vectors(&edge, 2, 1)).unwrap();
    assert_eq!(r.q_hat, None);
    assert_eq!(r.finding.verdict, Verdict::Fail);
    let inner = Window::new(5, 60, 1).unwrap();
    let r = graph_norm_ratio_probe(&s, &inner, &probe_vectors(&inner, 2, 1)).unwrap();
    assert!((r.q_hat.unwrap() - 1.0).abs() <= 1e-12);
}

#[test]
fn scaled_unitary_block_has_constant_ratio() {
    // A = diag-blocks [[0, 2], [1, 0]]: ‖Aᴴe‖/‖Ae‖ ∈ {2, 1/2}, so no single q
    let a = EntryGen::Table {
        entries: [((1, 2), C64::new(2.0, 0.0)), ((2, 1), C64::new(1.0, 0.0))].into_iter().collect(),
    };
    let w = Window::new(1, 2, 1).unwrap();
    let r = graph_norm_ratio_probe(&a, &w, &probe_vectors(&w, 0, 0)).unwrap();
    assert_eq!(r.q_hat, None);
}

#[test]
fn diagonal_operator_resolvents_commute() {
    let a = EntryGen::diagonal(Seq::formula("1/k").unwrap());
    let r = resolvent_commute_check(&a, &DiagonalSpec::default(), C64::new(0.0, 1.0), C64::new(1.0, 1.0), &[64, 128, 256], &Settings::default()).unwrap();
    assert!(r.values.iter().all(|&v| v <= 1e-15));
    assert_eq!(r.finding.verdict, Verdict::Pass);
}
