mod common;

use common::*;
use geodequiv::equivalence::{sinjukov_tensor, EquivalencePair, MINPOLY_TOL};
use geodequiv::geometry::{riemann, riemann_at, CurvaturePoint};
use geodequiv::integrability::*;
use geodequiv::linalg::minpoly_degree;
use geodequiv::metric::*;
use geodequiv::{Error, Mat};

#[test]
fn curvature_condition_on_levi_civita_pairs() {
    for (pair, seed) in [(lc3(), 31), (lc4(), 32), (lc_pair(&lc3_curved_spec()), 33), (lc_pair(&lc3_pseudo_spec()), 34)]
    {
        for x in pair_points(&pair, 50, seed) {
            let r = curvature_condition_residual(&pair, &x).unwrap();
            assert!(r <= 1e-6, "{r:e} at {x:?}");
        }
    }
}

#[test]
fn curvature_condition_trivial_for_proportional_pair() {
    let g = shared(make_constant_curvature(0.5, &[1.0; 3]).unwrap());
    let pair = EquivalencePair::new(g.clone(), shared(make_scaled(g, 3.0).unwrap())).unwrap();
    assert!(curvature_condition_residual(&pair, &[0.1, 0.2, -0.1]).unwrap() <= 1e-12);
}

#[test]
fn curvature_condition_control_is_violated() {
    let (g, _) = make_levi_civita_pair(&linear_spec(&[1.0, 2.0, 4.0])).unwrap();
    let foreign = shared(make_constant_curvature(4.0, &[1.0; 3]).unwrap());
    for base in [shared(make_flat(&[1.0; 3]).unwrap()), shared(g)] {
        let pair = EquivalencePair::new(base, foreign.clone()).unwrap();
        let r = curvature_condition_residual(&pair, &[0.25, -0.15, 0.2]).unwrap();
        assert!(r > 1e-2, "{r:e}");
    }
}

#[test]
fn hessian_fit_recovers_synthetic_coefficients() {
    let g = Mat::identity(3, 3);
    let a = &g + Mat::from_row_slice(3, 3, &[0.4, 0.1, -0.2, 0.1, -0.3, 0.05, -0.2, 0.05, 0.7]);
    let (rho, k) = (0.35, -1.25);
    let fit = fit_hessian(&(&g * rho + &a * k), &g, &a).unwrap();
    assert!((fit.rho - rho).abs() <= 1e-9 && (fit.k - k).abs() <= 1e-9);
    assert!(fit.residual <= 1e-12 && fit.condition.is_finite());

    let zero = fit_hessian(&Mat::zeros(3, 3), &g, &a).unwrap();
    assert_eq!((zero.rho, zero.k, zero.residual), (0.0, 0.0, 0.0));
    assert!(matches!(fit_hessian(&a, &g, &(&g * 2.0)), Err(Error::DegenerateSpan)));
}

#[test]
fn hessian_fit_on_levi_civita_is_reported() {
    let pair = lc3();
    for x in pair_points(&pair, 5, 40) {
        let rep = integrability_report(&pair, &x).unwrap();
        let h = rep.hessian.unwrap();
        assert!(h.residual.is_finite() && h.residual >= 0.0);
        assert!(rep.z_condition_residual.unwrap().is_finite());
    }
}

/// `Z_ijkl = R_ijkl - K (g_il g_jk - g_ik g_jl)` contracted by brute force.
fn z_oracle(curv: &CurvaturePoint, g: &Mat, a_op: &Mat, k: f64) -> f64 {
    let n = g.nrows();
    let z = |i: usize, j: usize, kk: usize, l: usize| {
        curv.r_down.get(&[i, j, kk, l]) - k * (g[(i, l)] * g[(j, kk)] - g[(i, kk)] * g[(j, l)])
    };
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            for kk in 0..n {
                for l in 0..n {
                    let mut v = 0.0;
                    for al in 0..n {
                        v += a_op[(al, i)] * z(al, j, kk, l) + a_op[(al, j)] * z(al, i, kk, l);
                    }
                    worst = worst.max(v.abs());
                }
            }
        }
    }
    worst
}

#[test]
fn z_condition_vanishes_for_constant_curvature() {
    for (kk, signs) in [(1.0, [1.0, 1.0, 1.0]), (-1.0, [1.0, -1.0, 1.0])] {
        let g = make_constant_curvature(kk, &signs).unwrap();
        for x in sample_points(3, 0.3, 10, 41, |x| g.in_domain(x)) {
            let c = riemann(&g, &x).unwrap();
            let gm = g.metric(&x).unwrap();
            let a = Mat::from_row_slice(3, 3, &[1.0, 0.3, 0.0, 0.2, -2.0, 0.5, 0.1, 0.0, 0.7]);
            let r = z_condition_residual_op(&a, &c, &gm, c.k_fit).unwrap();
            assert!(r <= 1e-8, "{r:e}");
        }
    }
}

#[test]
fn z_condition_matches_brute_force_expansion() {
    let pair = lc3();
    for x in pair_points(&pair, 5, 42) {
        let s = sinjukov_tensor(&pair, &x).unwrap();
        let c = riemann_at(&s.geometry).unwrap();
        let k = 0.37;
        for a_op in [Mat::identity(3, 3) * 2.5, s.a_op_matrix(), diag(&[1.0, -2.0, 3.0])] {
            let lib = z_condition_residual_op(&a_op, &c, s.g(), k).unwrap();
            let oracle = z_oracle(&c, s.g(), &a_op, k);
            assert!((lib - oracle).abs() <= 1e-12 * oracle.max(1.0), "{lib:e} {oracle:e}");
        }
        // a multiple of the identity only sees the part of Z symmetric in its first pair
        let lib = z_condition_residual_op(&(Mat::identity(3, 3) * 2.5), &c, s.g(), k).unwrap();
        assert!(lib <= 1e-10);
    }
}

#[test]
fn skew_kernel_on_random_sets() {
    let mut rng = rng(43);
    for n in [3, 4, 5] {
        for _ in 0..200 {
            let a = random_nonderogatory(n, &mut rng);
            assert_eq!(minpoly_degree(&a, MINPOLY_TOL).degree, n);
            assert_eq!(skew_kernel_dimension(&a).dim, 0, "{a}");
            let d = random_derogatory(n, &mut rng);
            assert!(!minpoly_degree(&d, MINPOLY_TOL).is_strict);
            let k = skew_kernel_dimension(&d);
            assert!(k.dim >= 1, "{d}");
            let w = k.witness.unwrap();
            assert!((&w * &d - d.transpose() * &w).amax() <= 1e-8 * d.norm());
            assert!((&w + w.transpose()).amax() <= 1e-12);
        }
    }
}
