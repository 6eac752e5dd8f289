//! Configurations shipped with the binary.

pub struct Example {
    pub name: &'static str,
    pub exercises: &'static str,
    pub config: &'static str,
}

macro_rules! bundled {
    ($name:literal, $what:literal) => {
        Example {
            name: $name,
            exercises: $what,
            config: include_str!(concat!("../bundled/", $name, ".json")),
        }
    };
}

pub const EXAMPLES: &[Example] = &[
    bundled!(
        "jacobi_h_identity",
        "(h1)-(h4), (AG), (M1), (M2), (komintro) for a Jacobi matrix with H = I; limit-point and H-symmetry oracles"
    ),
    bundled!("antidiagonal_block_H", "(h1)-(h4) and (AG) with an indefinite anti-diagonal block H"),
    bundled!("power_band_modakl", "(modakl) entrywise power bound for an unbanded matrix"),
    bundled!("dirac_constant_alphas", "(Afnorm) identities and local Hölder condition, Dirac-type operator"),
    bundled!("afnorm_violation", "(Afnorm) failure with a non-normal coefficient; expect exit 1"),
    bundled!("first_order_constant", "(QL), (QQ), (QI) and symbol domination for a first-order operator"),
    bundled!("resolvent_commuting_blocks", "resolvent commutation oracle when ad(S, A) = 0"),
    bundled!("spectral_projection_units", "(komintro), (WOT), (komcond) for spectral projections"),
];

pub fn find(name: &str) -> Option<&'static Example> {
    EXAMPLES.iter().find(|e| e.name == name)
}
