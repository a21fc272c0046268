#![allow(dead_code)]

use std::sync::Arc;

use geodequiv::equivalence::EquivalencePair;
use geodequiv::metric::*;
use geodequiv::{Mat, Result};
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn diag(v: &[f64]) -> Mat {
    Mat::from_diagonal(&DVector::from_row_slice(v))
}

pub fn linear_spec(shifts: &[f64]) -> LeviCivitaSpec {
    LeviCivitaSpec {
        polys: shifts.iter().map(|&c| Polynomial::new(vec![c, 1.0]).unwrap()).collect(),
        reference: vec![0.0; shifts.len()],
    }
}

pub fn lc_pair(spec: &LeviCivitaSpec) -> EquivalencePair {
    let (g, gbar) = make_levi_civita_pair(spec).unwrap();
    EquivalencePair::new(Arc::new(g), Arc::new(gbar)).unwrap()
}

pub fn lc3() -> EquivalencePair {
    lc_pair(&linear_spec(&[1.0, 2.0, 4.0]))
}

pub fn lc4() -> EquivalencePair {
    lc_pair(&linear_spec(&[1.0, 2.0, 4.0, 7.0]))
}

/// Nonlinear coordinate functions, still on one chart component.
pub fn lc3_curved_spec() -> LeviCivitaSpec {
    LeviCivitaSpec {
        polys: vec![
            Polynomial::new(vec![1.0, 1.0, 0.3]).unwrap(),
            Polynomial::new(vec![2.0, -0.5, 0.0, 0.2]).unwrap(),
            Polynomial::new(vec![4.0, 1.5, 0.1, 0.0, -0.05]).unwrap(),
        ],
        reference: vec![0.0; 3],
    }
}

/// One negative coordinate function: the second metric is indefinite.
pub fn lc3_pseudo_spec() -> LeviCivitaSpec {
    linear_spec(&[-1.0, 2.0, 4.0])
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform samples of `[-r, r]^n` accepted by `inside`.
pub fn sample_points(n: usize, r: f64, count: usize, seed: u64, inside: impl Fn(&[f64]) -> bool) -> Vec<Vec<f64>> {
    let mut rng = rng(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-r..r)).collect();
        if inside(&x) {
            out.push(x);
        }
    }
    out
}

pub fn pair_points(pair: &EquivalencePair, count: usize, seed: u64) -> Vec<Vec<f64>> {
    sample_points(pair.dim(), 0.3, count, seed, |x| pair.in_domain(x))
}

// ---- finite-difference oracles, independent of the library's stencils ----

/// Five-point first derivative of a matrix-valued function.
pub fn d5(f: &dyn Fn(&[f64]) -> Mat, x: &[f64], k: usize, h: f64) -> Mat {
    let at = |s: f64| {
        let mut y = x.to_vec();
        y[k] += s;
        f(&y)
    };
    (at(-2.0 * h) - at(-h) * 8.0 + at(h) * 8.0 - at(2.0 * h)) / (12.0 * h)
}

pub fn metric_values(field: &dyn MetricField) -> impl Fn(&[f64]) -> Mat + '_ {
    move |x: &[f64]| field.metric(x).unwrap()
}

/// `Gamma^i_{jk}` from five-point derivatives of the metric values.
pub fn christoffel_oracle(f: &dyn Fn(&[f64]) -> Mat, x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let g = f(x);
    let gi = g.clone().try_inverse().unwrap();
    let dg: Vec<Mat> = (0..n).map(|k| d5(f, x, k, 1e-3)).collect();
    let mut out = vec![0.0; n * n * n];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let mut s = 0.0;
                for m in 0..n {
                    s += gi[(i, m)] * (dg[j][(m, k)] + dg[k][(m, j)] - dg[m][(j, k)]);
                }
                out[(i * n + j) * n + k] = 0.5 * s;
            }
        }
    }
    out
}

/// `R^i_{jkl} = d_k G^i_lj - d_l G^i_kj + G^i_km G^m_lj - G^i_lm G^m_kj`
/// with every derivative taken numerically.
pub fn riemann_oracle(f: &dyn Fn(&[f64]) -> Mat, x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let gam = christoffel_oracle(f, x);
    let h = 1e-2;
    let d_gam: Vec<Vec<f64>> = (0..n)
        .map(|k| {
            let at = |s: f64| {
                let mut y = x.to_vec();
                y[k] += s;
                christoffel_oracle(f, &y)
            };
            let (m2, m1, p1, p2) = (at(-2.0 * h), at(-h), at(h), at(2.0 * h));
            (0..n * n * n).map(|q| (m2[q] - 8.0 * m1[q] + 8.0 * p1[q] - p2[q]) / (12.0 * h)).collect()
        })
        .collect();
    let gi = |i: usize, j: usize, k: usize| gam[(i * n + j) * n + k];
    let dg = |l: usize, i: usize, j: usize, k: usize| d_gam[l][(i * n + j) * n + k];
    let mut r = vec![0.0; n * n * n * n];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let mut v = dg(k, i, l, j) - dg(l, i, k, j);
                    for m in 0..n {
                        v += gi(i, k, m) * gi(m, l, j) - gi(i, l, m) * gi(m, k, j);
                    }
                    r[((i * n + j) * n + k) * n + l] = v;
                }
            }
        }
    }
    r
}

/// `a_ij` straight from the defining formula, values only.
pub fn sinjukov_oracle(pair: &EquivalencePair, x: &[f64]) -> Mat {
    let g = pair.g.metric(x).unwrap();
    let gb = pair.gbar.metric(x).unwrap();
    let n = g.nrows() as f64;
    let factor = (gb.determinant() / g.determinant()).abs().powf(1.0 / (n + 1.0));
    &g * gb.try_inverse().unwrap() * &g * factor
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn shared(m: impl MetricField + 'static) -> SharedMetric {
    Arc::new(m)
}

pub fn ok<T>(r: Result<T>) -> T {
    r.unwrap()
}
