//! Fixtures shared by the criterion benches.

use std::sync::Arc;

use geodequiv::equivalence::EquivalencePair;
use geodequiv::metric::{make_levi_civita_pair, LeviCivitaSpec, Polynomial};

/// Levi-Civita pair with linear coordinate functions `x_i + c_i`.
pub fn lc_pair(shifts: &[f64]) -> EquivalencePair {
    let spec = LeviCivitaSpec {
        polys: shifts.iter().map(|&c| Polynomial::new(vec![c, 1.0]).expect("nonzero")).collect(),
        reference: vec![0.0; shifts.len()],
    };
    let (g, gbar) = make_levi_civita_pair(&spec).expect("valid spec");
    EquivalencePair::new(Arc::new(g), Arc::new(gbar)).expect("same dimension")
}

pub fn lc3() -> EquivalencePair {
    lc_pair(&[1.0, 2.0, 4.0])
}

pub fn lc4() -> EquivalencePair {
    lc_pair(&[1.0, 2.0, 4.0, 7.0])
}

pub const X3: [f64; 3] = [0.05, -0.1, 0.1];
pub const X4: [f64; 4] = [0.05, -0.1, 0.1, 0.02];
