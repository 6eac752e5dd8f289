use opdomain::exprlang::{parse, Expr};
use opdomain::C64;
use proptest::prelude::*;

fn eval_at(e: &Expr, k: f64, l: f64) -> C64 {
    e.eval(&[("k", C64::new(k, 0.0)), ("l", C64::new(l, 0.0))]).unwrap()
}

#[test]
fn precedence_and_associativity() {
    let cases = [
        ("1 + 2 * 3", 7.0),
        ("2 ^ 3 ^ 2", 64.0),
        ("-2 ^ 2", -4.0),
        ("(1 + 2) * 3", 9.0),
        ("8 / 4 / 2", 1.0),
        ("10 - 4 - 3", 3.0),
        ("abs(-3) + sqrt(16)", 7.0),
    ];
    for (src, want) in cases {
        assert_eq!(eval_at(&parse(src).unwrap(), 0.0, 0.0), C64::new(want, 0.0), "{src}");
    }
}

#[test]
fn imaginary_unit_and_complex_results() {
    let z = eval_at(&parse("(k + i*l)^2").unwrap(), 1.0, 2.0);
    assert_eq!(z, C64::new(-3.0, 4.0));
}

#[test]
fn syntax_errors_carry_an_offset() {
    let e = parse("1 + * 2").unwrap_err();
    assert_eq!(e.offset, 4);
    assert!(parse("sin(").is_err());
    assert!(parse("k +").is_err());
}

#[test]
fn unbound_variables_are_errors() {
    assert!(parse("q + 1").unwrap().eval(&[("k", C64::new(1.0, 0.0))]).is_err());
}

fn arb_expr() -> impl Strategy<Value = String> {
    let leaf = prop_oneof![
        (0u32..20).prop_map(|n| n.to_string()),
        Just("k".to_string()),
        Just("l".to_string()),
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} + {b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} - {b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} * {b})")),
            inner.clone().prop_map(|a| format!("-{a}")),
            inner.clone().prop_map(|a| format!("({a})^2")),
        ]
    })
}

proptest! {
    /// Display output re-parses to an expression with the same values.
    #[test]
    fn display_round_trips(src in arb_expr(), k in -5.0..5.0f64, l in -5.0..5.0f64) {
        let e = parse(&src).unwrap();
        let again = parse(&e.to_string()).unwrap();
        let (a, b) = (eval_at(&e, k, l), eval_at(&again, k, l));
        prop_assert!((a - b).norm() <= 1e-9 * (1.0 + a.norm()));
    }

    #[test]
    fn linear_formula_matches_arithmetic(a in -100i32..100, b in -100i32..100, k in 1u32..1000) {
        let e = parse(&format!("({a})*k + ({b})")).unwrap();
        prop_assert_eq!(eval_at(&e, k as f64, 0.0), C64::new((a * k as i32 + b) as f64, 0.0));
    }
}
