use opdomain::operator::{exact_product_window, truncate, Entries, EntryGen, OperatorSpec, Seq, Symmetry, Window};
use opdomain::{Error, C64};
use proptest::prelude::*;

/// Brute-force `(AB)_{k,l} = Σ_j a_{k,j} b_{j,l}` over a range far wider
/// than either band.
fn brute_product<A: Entries, B: Entries>(a: &A, b: &B, k: usize, l: usize, reach: usize) -> C64 {
    (1..=k.max(l) + reach).map(|j| a.entry(k, j).unwrap() * b.entry(j, l).unwrap()).sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn windowed_products_are_exact(lo in 1usize..40, len in 1usize..20, pa in 0usize..3, s in -2.0..2.0f64) {
        let a = EntryGen::Band {
            diagonals: (0..=pa as i64)
                .flat_map(|d| [d, -d])
                .map(|d| opdomain::operator::Diagonal { offset: d, values: Seq::formula(&format!("{s}*k + {d}")).unwrap() })
                .collect(),
        };
        let b = EntryGen::expr("1/(1 + (k - l)^2)").unwrap();
        let w = Window::new(lo, lo + len - 1, pa).unwrap();
        let sec = exact_product_window(&a, &b, &w).unwrap();
        for i in 0..len {
            for j in 0..len {
                let want = brute_product(&a, &b, lo + i, lo + j, 10);
                prop_assert!((sec.get(i, j) - want).norm() <= 1e-9 * (1.0 + want.norm()));
            }
        }
    }
}

#[test]
fn unbanded_products_have_no_exact_window() {
    let a = EntryGen::expr("1/(k+l)").unwrap();
    assert!(matches!(exact_product_window(&a, &a, &Window::first(4)), Err(Error::NoExactness)));
}

#[test]
fn insufficient_padding_is_rejected() {
    let a = EntryGen::jacobi(Seq::Const(0.0), Seq::Const(1.0));
    let err = exact_product_window(&a, &a, &Window::first(4)).unwrap_err();
    assert!(matches!(err, Error::PadTooSmall { pad: 0, required: 1 }));
}

#[test]
fn declared_structure_is_spot_checked() {
    let jac = OperatorSpec::new(EntryGen::jacobi(Seq::Const(0.0), Seq::index()));
    assert!(jac.clone().with_bandwidth(1).with_symmetry(Symmetry::Real).validate().is_ok());
    assert!(OperatorSpec::new(EntryGen::shift(2)).with_bandwidth(1).validate().is_err());
    assert!(OperatorSpec::new(EntryGen::shift(1)).with_symmetry(Symmetry::Hermitian).validate().is_err());
}

#[test]
fn truncation_uses_one_based_indices() {
    let a = EntryGen::expr("10*k + l").unwrap();
    let m = truncate(&a, &Window::new(3, 4, 0).unwrap()).unwrap();
    assert_eq!(m.get(0, 0), C64::new(33.0, 0.0));
    assert_eq!(m.get(1, 0), C64::new(43.0, 0.0));
}

#[test]
fn operator_json_round_trips() {
    let text = r#"{"entries": {"kind": "product", "left": {"kind": "antidiagonal-block", "sizes": [2, 3], "signs": [1, -1]}, "right": {"kind": "diagonal", "c": [1, 2, 3]}}, "bandwidth": 2}"#;
    let op: OperatorSpec = serde_json::from_str(text).unwrap();
    let again: OperatorSpec = serde_json::from_str(&serde_json::to_string(&op).unwrap()).unwrap();
    assert_eq!(op, again);
    assert_eq!(op.entry(1, 2).unwrap(), C64::new(2.0, 0.0));
}
