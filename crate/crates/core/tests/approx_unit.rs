use opdomain::approx_unit::{
    build_unit, commutator_section, komcond_sections, komintro_check, sqrt3_inequality_check, unit_diagonal,
    wot_convergence_check, UnitFamily, UnitKind,
};
use opdomain::linalg::{section_norm, NormOptions};
use opdomain::operator::{DiagonalSpec, EntryGen, Seq, Window};
use opdomain::{DenseMatrix, Settings, Verdict, C64};
use proptest::prelude::*;

fn c_of(v: &[f64]) -> DiagonalSpec {
    DiagonalSpec::new(Seq::Values(v.to_vec()))
}

proptest! {
    /// `n/(|in − a||in − b|) ≤ √3/(1 + |a| + |b|)` for arbitrary real `a, b`.
    #[test]
    fn sqrt3_inequality_for_arbitrary_reals(a in -1e4..1e4f64, b in -1e4..1e4f64, n in 1u64..10_000) {
        let r = sqrt3_inequality_check(&c_of(&[a, b]), &[n], &[1, 2], &[1, 2]).unwrap();
        prop_assert_eq!(r.violations, 0);
        prop_assert!(r.max_ratio <= 1.0 + 1e-12);
    }

    /// Resolvent-power units have modulus at most one and tend to one.
    #[test]
    fn resolvent_units_are_contractions(c in prop::collection::vec(-50.0..50.0f64, 1..20), m in 1u32..4, n in 1u64..1000) {
        let w = Window::first(c.len());
        let d = unit_diagonal(UnitKind::ResolventPower, &c_of(&c), m, n, &w).unwrap();
        prop_assert!(d.iter().all(|z| z.norm() <= 1.0 + 1e-15));
    }

    /// `ad(Tᴴ, Aᴴ) = −ad(T, A)ᴴ`, so the two norms agree.
    #[test]
    fn komcond_norms_agree(v in prop::collection::vec(-1.0..1.0f64, 2 * 64), n in 2usize..8) {
        let mut it = v.chunks(2).map(|p| C64::new(p[0], p[1])).cycle();
        let t = DenseMatrix::from_fn(n, n, |_, _| it.next().unwrap());
        let a = DenseMatrix::from_fn(n, n, |_, _| it.next().unwrap());
        let r = komcond_sections(&t, &a, &NormOptions::default()).unwrap();
        prop_assert!(r.rel_diff <= 1e-10);
        prop_assert_eq!(r.finding.verdict, Verdict::Pass);
    }
}

/// `‖ad(T_n, A)‖` for a diagonal `A` vanishes identically.
#[test]
fn diagonal_operators_commute_with_every_unit() {
    let a = EntryGen::diagonal(Seq::formula("k^2").unwrap());
    let w = Window::first(100);
    for kind in [UnitKind::ResolventPower, UnitKind::SpectralProjection] {
        let t = unit_diagonal(kind, &DiagonalSpec::default(), 2, 10, &w).unwrap();
        let s = commutator_section(&t, &a, &w).unwrap();
        assert_eq!(section_norm(&s, &NormOptions::default()).unwrap().value, 0.0);
    }
}

/// Closed form for the free Jacobi matrix: the commutator of the
/// spectral projection `c_k ≤ n` is the single boundary coupling.
#[test]
fn spectral_projection_commutator_is_the_cut_edge() {
    let a = EntryGen::jacobi(Seq::Const(0.0), Seq::Const(1.0));
    let fam = UnitFamily::spectral_projection(DiagonalSpec::default(), vec![4, 8, 16]);
    let settings = Settings {
        ladder: vec![64, 128, 256],
        ..Settings::default()
    };
    let r = komintro_check(&fam, &a, &settings).unwrap();
    for p in &r.per_n {
        assert!((p.value - 1.0).abs() <= 1e-10, "n = {}: {}", p.n, p.value);
    }
    assert_eq!(r.finding.verdict, Verdict::Pass);
}

/// Off-diagonals `k²` make `n‖ad((S − in)⁻¹, A)‖` grow with `n`.
#[test]
fn fast_offdiagonals_fail_komintro() {
    let a = EntryGen::jacobi(Seq::Const(0.0), Seq::formula("k^2").unwrap());
    let fam = UnitFamily::resolvent_power(DiagonalSpec::default(), 1, vec![1, 2, 4, 8, 16, 32]);
    let settings = Settings {
        ladder: vec![256, 512, 1024],
        ..Settings::default()
    };
    assert_eq!(komintro_check(&fam, &a, &settings).unwrap().finding.verdict, Verdict::Fail);
}

#[test]
fn wot_deviation_closed_form_for_higher_powers() {
    let ns: Vec<u64> = (1..=50).collect();
    let fam = UnitFamily::resolvent_power(DiagonalSpec::default(), 3, ns);
    let r = wot_convergence_check(&fam, &[vec![C64::new(1.0, 0.0)]], &Window::first(8)).unwrap();
    for p in &r.per_n {
        let n = p.n as f64;
        let t = (C64::new(0.0, n) / C64::new(-1.0, n)).powi(3);
        assert!((p.deviation - (t - 1.0).norm()).abs() <= 1e-13);
    }
}

#[test]
fn build_unit_matches_the_diagonal() {
    let w = Window::first(10);
    let b = build_unit(UnitKind::ResolventPower, &DiagonalSpec::default(), 2, 3, &w).unwrap();
    let d = unit_diagonal(UnitKind::ResolventPower, &DiagonalSpec::default(), 2, 3, &w).unwrap();
    assert_eq!(b.diagonal(), d);
    assert_eq!((b.lower(), b.upper()), (0, 0));
}
