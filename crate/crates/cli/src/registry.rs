//! The check registry.

use serde::Serialize;

use crate::scenario::Mode;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetKind {
    Metric,
    Pair,
    Triple,
    /// Pairs, or triples through their first pair plus the twin.
    PairOrTriple,
    Flow,
    Algebra,
}

impl TargetKind {
    pub fn accepts(self, k: TargetKind) -> bool {
        match self {
            TargetKind::PairOrTriple => matches!(k, TargetKind::Pair | TargetKind::Triple),
            other => other == k,
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct CheckInfo {
    pub id: &'static str,
    pub module: &'static str,
    /// The statement being checked, as a formula.
    pub anchor: &'static str,
    pub default_tolerance: f64,
    pub default_mode: Mode,
    pub kind: TargetKind,
}

const fn check(
    id: &'static str,
    module: &'static str,
    anchor: &'static str,
    default_tolerance: f64,
    kind: TargetKind,
) -> CheckInfo {
    CheckInfo { id, module, anchor, default_tolerance, default_mode: Mode::Assert, kind }
}

pub const CHECK_COUNT: usize = 21;

pub static CHECKS: [CheckInfo; CHECK_COUNT] = [
    check("metricity", "geometry", "g_ij;k = 0", 1e-10, TargetKind::Metric),
    check(
        "curvature_symmetries",
        "geometry",
        "R_ijkl = -R_jikl = -R_ijlk = R_klij, R_i[jkl] = 0",
        1e-9,
        TargetKind::Metric,
    ),
    check(
        "constant_curvature_fit",
        "geometry",
        "Z_ijkl = R_ij,kl - K (g_il g_jk - g_ik g_jl) = 0",
        1e-8,
        TargetKind::Metric,
    ),
    check("curvature_operator_scalar", "lie-lab", "R(x) = K x on so(g)", 1e-8, TargetKind::Metric),
    check("operator_symmetry", "lie-lab", "<R(x), y> = <x, R(y)>", 1e-9, TargetKind::Metric),
    check("constant_commutant", "lie-lab", "[R(x) - K x, a] = 0, a regular => R = K id", 1e-8, TargetKind::Metric),
    check("z_condition", "integrability", "a_i^s Z_sjkl + a_j^s Z_sikl = 0", 1e-8, TargetKind::Metric),
    check("sinjukov_residual", "equivalence", "a_ij,k = l_i g_jk + l_j g_ik", 1e-8, TargetKind::Pair),
    check("strict_nonproportionality", "equivalence", "deg minpoly(g^-1 gbar) = n", 0.0, TargetKind::Pair),
    check(
        "curvature_condition_residual",
        "integrability",
        "a_is R^s_jkl + a_sj R^s_ikl = l_,li g_jk + l_,lj g_ik - l_,ki g_jl - l_,kj g_il",
        1e-6,
        TargetKind::Pair,
    ),
    CheckInfo {
        id: "hessian_decomposition",
        module: "integrability",
        anchor: "l_,ij = rho g_ij + K a_ij",
        default_tolerance: 1e-8,
        default_mode: Mode::Diagnostic,
        kind: TargetKind::Pair,
    },
    check("sectional_identity", "lie-lab", "[R(x), a] = [x, b]", 1e-6, TargetKind::Pair),
    check("reconstruction", "lie-lab", "R(x) = ad_a^-1 ad_b (x)", 1e-5, TargetKind::Pair),
    check("lax_consistency", "lie-lab", "d/dt (x + l a) = [R(x) + l b, x + l a]", 1e-6, TargetKind::Pair),
    check("commutation", "lie-lab", "[a, b] = 0, [b, A] = [a, B], aB - bA = 0", 1e-7, TargetKind::PairOrTriple),
    check("dichotomy", "lie-lab", "Bya + ayB = byA + Ayb => b = Ka or A = Ka", 1e-8, TargetKind::Triple),
    check("energy_conservation", "flow", "d/dt g(xi, xi) = 0", 1e-9, TargetKind::Flow),
    check("integral_conservation", "flow", "d/dt g(S_t xi, xi) = 0, S_t = adj(a - t Id)", 1e-7, TargetKind::Flow),
    check("functional_independence", "flow", "rank d(I_t1, .., I_tn) = n", 1e-7, TargetKind::Flow),
    check("shifted_invariants", "lie-lab", "{tr (x + l1 a)^j, tr (x + l2 a)^k} = 0", 1e-10, TargetKind::Algebra),
    check("skew_kernel", "integrability", "Za - a^T Z = 0, Z skew, a regular => Z = 0", 1e-10, TargetKind::Algebra),
];

pub fn lookup(id: &str) -> Option<&'static CheckInfo> {
    CHECKS.iter().find(|c| c.id == id)
}

/// One line per check: id, module, default tolerance, default mode, anchor.
pub fn listing() -> String {
    let mut out = String::new();
    for c in &CHECKS {
        out.push_str(&format!(
            "{:<26} {:<14} {:>8.0e} {:<10} {}\n",
            c.id,
            c.module,
            c.default_tolerance,
            format!("{:?}", c.default_mode).to_lowercase(),
            c.anchor
        ));
    }
    out
}
