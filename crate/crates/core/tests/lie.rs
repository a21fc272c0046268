mod common;

use common::*;
use geodequiv::equivalence::{sinjukov_tensor, EquivalencePair};
use geodequiv::geometry::riemann;
use geodequiv::lie::*;
use geodequiv::linalg::commutator;
use geodequiv::metric::*;
use geodequiv::{Error, Mat};
use rand::Rng;

fn random_symmetric(n: usize, rng: &mut impl Rng) -> Mat {
    let r = Mat::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    (&r + r.transpose()) * 0.5
}

/// Flat `g` with two projectively flat partners: three metrics sharing geodesics.
fn flat_triple() -> (EquivalencePair, EquivalencePair) {
    let g = shared(make_flat(&[1.0; 3]).unwrap());
    let b1 = Mat::from_row_slice(3, 3, &[2.0, 0.3, 0.0, 0.3, 1.0, 0.2, 0.0, 0.2, 3.0]);
    let b2 = Mat::from_row_slice(3, 3, &[1.5, -0.2, 0.1, -0.2, 2.5, 0.0, 0.1, 0.0, 0.8]);
    let p1 = make_projective_flat(&[1.0; 3], b1, vec![0.2, -0.1, 0.0], 0.4, &[0.0; 3]).unwrap();
    let p2 = make_projective_flat(&[1.0; 3], b2, vec![-0.1, 0.3, 0.2], -0.3, &[0.0; 3]).unwrap();
    (EquivalencePair::new(g.clone(), shared(p1)).unwrap(), EquivalencePair::new(g, shared(p2)).unwrap())
}

#[test]
fn so_g_is_closed_under_bracket() {
    for g in [diag(&[1.0, 1.0, 1.0]), diag(&[1.0, -1.0, 2.0, 0.5]), lc3().g.metric(&[0.1, 0.0, -0.1]).unwrap()] {
        let s = SkewSpace::new(&g).unwrap();
        assert_eq!(s.dim(), s.n() * (s.n() - 1) / 2);
        assert!(s.gram().determinant().abs() > 1e-12);
        for y in &s.basis {
            assert!(s.membership_residual(y) <= 1e-12);
            for z in &s.basis {
                assert!(s.membership_residual(&commutator(y, z)) <= 1e-10);
            }
        }
    }
}

#[test]
fn curvature_operator_examples() {
    let flat = make_flat(&[1.0, -1.0, 1.0]).unwrap();
    let c = riemann(&flat, &[0.2, 0.0, 0.1]).unwrap();
    let op = curvature_as_operator(&c, &flat.metric(&[0.0; 3]).unwrap()).unwrap();
    assert_eq!(op.matrix.amax(), 0.0);

    for (k, signs) in [(1.0, [1.0, 1.0, 1.0]), (-1.0, [1.0, 1.0, 1.0]), (0.5, [1.0, -1.0, 1.0])] {
        let g = make_constant_curvature(k, &signs).unwrap();
        let x = [0.1, -0.2, 0.15];
        let c = riemann(&g, &x).unwrap();
        let op = curvature_as_operator(&c, &g.metric(&x).unwrap()).unwrap();
        let (scalar, res) = operator_scalar(&op);
        assert!((scalar.abs() - k.abs()).abs() <= 1e-8 && res <= 1e-8, "{scalar} {res:e}");
        // both carry the sign of the pinned convention
        assert!((scalar - c.k_fit).abs() <= 1e-8 && (scalar + k).abs() <= 1e-8);
    }
}

#[test]
fn curvature_operator_is_symmetric_for_the_pairing() {
    let pair = lc3();
    let mut rng = rng(51);
    let x = [0.1, -0.05, 0.2];
    let s = sinjukov_tensor(&pair, &x).unwrap();
    let c = riemann(&*pair.g, &x).unwrap();
    let op = curvature_as_operator(&c, s.g()).unwrap();
    assert!(op.symmetry_residual() <= 1e-9);
    for _ in 0..50 {
        let u = op.space.random_element(&mut rng);
        let v = op.space.random_element(&mut rng);
        let d = SkewSpace::pairing(&op.apply(&u), &v) - SkewSpace::pairing(&u, &op.apply(&v));
        assert!(d.abs() <= 1e-9, "{d:e}");
        assert!(op.space.membership_residual(&op.apply(&u)) <= 1e-9);
    }
}

#[test]
fn wiring_calibration_is_unique() {
    let trials = calibrate_wiring();
    let ok: Vec<_> = trials.iter().filter(|t| t.symmetry < 1e-9 && t.identity < 1e-6).collect();
    assert_eq!(ok.len(), 1, "{trials:?}");
    assert_eq!(ok[0].wiring, PINNED_WIRING);
    assert_eq!(calibrated_wiring(), Some(PINNED_WIRING));
}

#[test]
fn sectional_identity_on_zoo_pairs() {
    for (pair, seed) in [(lc3(), 52), (lc4(), 53), (lc_pair(&lc3_curved_spec()), 54), (lc_pair(&lc3_pseudo_spec()), 55)]
    {
        for x in pair_points(&pair, 20, seed) {
            let d = sectional_data(&pair, &x, None).unwrap();
            assert!(d.r_op.symmetry_residual() <= 1e-9);
            let r = sectional_identity_residual(&d);
            assert!(r <= 1e-6, "{r:e}");
            assert!(commutation_checks(&d).ab <= 1e-7);
            for m in [&d.a, &d.b] {
                let gm = pair.g.metric(&x).unwrap();
                assert!((&gm * m - (&gm * m).transpose()).amax() <= 1e-10);
            }
        }
    }
}

#[test]
fn sectional_identity_detects_perturbed_b() {
    let pair = lc3();
    let mut rng = rng(56);
    let d = sectional_data(&pair, &[0.05, 0.1, -0.1], None).unwrap();
    let b = &d.b + random_symmetric(3, &mut rng) * 0.01;
    assert!(sectional_identity_residual_parts(&d.r_op, &d.a, &b) > 1e-3);
}

#[test]
fn flat_sectional_identity_is_trivial() {
    let space = SkewSpace::new(&Mat::identity(3, 3)).unwrap();
    let zero = SectionalOperator::from_fn(space, |x| x * 0.0);
    assert_eq!(sectional_identity_residual_parts(&zero, &diag(&[1.0, 2.0, 3.0]), &Mat::zeros(3, 3)), 0.0);
}

#[test]
fn triple_commutations() {
    let (first, second) = flat_triple();
    let pts: Vec<_> = pair_points(&first, 10, 57).into_iter().filter(|x| second.in_domain(x)).collect();
    assert!(pts.len() >= 5);
    for x in pts {
        let d = sectional_data(&first, &x, Some(&second)).unwrap();
        let rep = commutation_checks(&d);
        assert!(rep.ab <= 1e-7);
        assert!(rep.cross.unwrap() <= 1e-7 && rep.t.unwrap() <= 1e-7, "{rep:?}");
    }
    let a = diag(&[1.0, 2.0, 3.0]);
    let b = &a * &a * 0.5 - &a;
    let rep = commutation_parts(&a, &b, Some(&(&a * 2.0)), Some(&(&b * 2.0)));
    assert_eq!((rep.ab, rep.cross.unwrap(), rep.t.unwrap()), (0.0, 0.0, 0.0));

    let mut rng = rng(58);
    let (big_a, big_b) = (random_symmetric(3, &mut rng), random_symmetric(3, &mut rng));
    let rep = commutation_parts(&a, &b, Some(&big_a), Some(&big_b));
    assert!(rep.cross.unwrap() > 1e-2 && rep.t.unwrap() > 1e-2);
}

#[test]
fn dichotomy_examples() {
    let mut rng = rng(59);
    let a = diag(&[1.0, 2.0, 4.0]) + random_symmetric(3, &mut rng) * 0.1;
    let other = random_symmetric(3, &mut rng);
    let b = random_symmetric(3, &mut rng);
    match triple_dichotomy(&a, &(&a * 2.0), &other, &(&other * 2.0), 10, &mut rng).unwrap() {
        Dichotomy::BProportionalToA { factor } => assert!((factor - 2.0).abs() <= 1e-10),
        v => panic!("{v:?}"),
    }
    match triple_dichotomy(&a, &b, &(&a * 3.0), &(&b * 3.0), 10, &mut rng).unwrap() {
        Dichotomy::AProportionalToA { factor } => assert!((factor - 3.0).abs() <= 1e-10),
        v => panic!("{v:?}"),
    }
    match triple_dichotomy(&a, &b, &other, &random_symmetric(3, &mut rng), 10, &mut rng).unwrap() {
        Dichotomy::Violated { residual } => assert!(residual > 1e-3),
        v => panic!("{v:?}"),
    }
    // a b at round-off scale counts as b = 0 a
    let tiny = random_symmetric(3, &mut rng) * 1e-15;
    match triple_dichotomy(&a, &tiny, &other, &(&tiny * 0.0), 10, &mut rng).unwrap() {
        Dichotomy::BProportionalToA { factor } => assert!(factor.abs() <= 1e-12),
        v => panic!("{v:?}"),
    }
    assert!(matches!(
        triple_dichotomy(&a, &(&a * 2.0), &(&a * 3.0), &(&a * 6.0), 5, &mut rng),
        Err(Error::BothProportional)
    ));
}

#[test]
fn reconstruction_examples() {
    let space = SkewSpace::new(&Mat::identity(3, 3)).unwrap();
    let a = diag(&[1.0, 2.0, 3.0]);
    let r = reconstruct_sectional(&space, &a, &a).unwrap();
    assert!(r.distance(&SectionalOperator::identity(space.clone())) <= 1e-12);

    let b = &a * &a - Mat::identity(3, 3) * ((&a * &a).trace() / 3.0);
    let r = reconstruct_sectional(&space, &a, &b).unwrap();
    for x in &space.basis {
        let rx = r.apply(x);
        for i in 0..3 {
            for j in 0..3 {
                let expect = (a[(i, i)] + a[(j, j)]) * x[(i, j)];
                assert!((rx[(i, j)] - expect).abs() <= 1e-10);
            }
        }
    }
    let (poly, fit) = reconstruct_via_polynomial(&space, &a, &b).unwrap();
    assert!(fit <= 1e-12 && poly.distance(&r) <= 1e-10);

    assert!(matches!(reconstruct_sectional(&space, &diag(&[1.0, 1.0, 2.0]), &a), Err(Error::NotRegular { .. })));
    let skewed = Mat::from_row_slice(3, 3, &[0.0, 1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
    assert!(matches!(reconstruct_sectional(&space, &a, &skewed), Err(Error::InconsistentSystem { .. })));
}

#[test]
fn reconstruction_matches_curvature_operator() {
    for (pair, seed) in [(lc3(), 60), (lc_pair(&lc3_curved_spec()), 61)] {
        for x in pair_points(&pair, 10, seed) {
            let d = sectional_data(&pair, &x, None).unwrap();
            let rec = reconstruct_sectional(&d.r_op.space, &d.a, &d.b).unwrap();
            let dist = rec.distance(&d.r_op);
            assert!(dist <= 1e-5, "{dist:e}");
        }
    }
}

#[test]
fn constant_commutant_examples() {
    let space = SkewSpace::new(&Mat::identity(3, 3)).unwrap();
    let a = diag(&[1.0, 2.0, 3.0]);
    let twice = SectionalOperator::from_fn(space.clone(), |x| x * 2.0);
    let out = constant_commutant_check(&twice, &a, 2.0).unwrap();
    assert!(out.constant && out.deviation == 0.0);

    let e = space.basis[0].clone();
    let f = space.basis[2].clone();
    let bent = SectionalOperator::from_fn(space, |x| x * 2.0 + &f * SkewSpace::pairing(&e, x));
    assert!(matches!(constant_commutant_check(&bent, &a, 2.0), Err(Error::HypothesisFailed { .. })));

    let g = make_constant_curvature(-1.0, &[1.0, 1.0, -1.0]).unwrap();
    let x = [0.2, 0.1, -0.1];
    let c = riemann(&g, &x).unwrap();
    let op = curvature_as_operator(&c, &g.metric(&x).unwrap()).unwrap();
    let (scalar, _) = operator_scalar(&op);
    let gm = g.metric(&x).unwrap();
    // a regular g-symmetric operator
    let a =
        gm.clone().try_inverse().unwrap() * Mat::from_row_slice(3, 3, &[1.0, 0.2, 0.0, 0.2, 2.0, 0.1, 0.0, 0.1, -3.0]);
    let out = constant_commutant_check(&op, &a, scalar).unwrap();
    assert!(out.constant && out.deviation <= 1e-8, "{out:?}");
}

#[test]
fn lax_consistency_examples() {
    let mut rng = rng(62);
    let space = SkewSpace::new(&Mat::identity(3, 3)).unwrap();
    let a = diag(&[1.0, 2.0, 3.0]);
    let b = &a * &a * 0.3 + &a;
    let r = reconstruct_sectional(&space, &a, &b).unwrap();
    let (l1, l2) = lax_consistency(&r, &a, &b, 20, &mut rng);
    assert!(l1 <= 1e-9 && l2 <= 1e-9);

    let pair = lc4();
    for x in pair_points(&pair, 5, 63) {
        let d = sectional_data(&pair, &x, None).unwrap();
        let (l1, l2) = lax_consistency(&d.r_op, &d.a, &d.b, 20, &mut rng);
        assert!(l1 <= 1e-6 && l2 <= 1e-6, "{l1:e} {l2:e}");
    }

    let bad = Mat::from_row_slice(3, 3, &[0.0, 1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
    let (_, l2) = lax_consistency(&r, &a, &bad, 5, &mut rng);
    assert!(l2 > 1e-3);
}

#[test]
fn shifted_invariants_commute_on_so3() {
    let mut rng = rng(64);
    let space = SkewSpace::new(&Mat::identity(3, 3)).unwrap();
    let a = diag(&[1.0, 2.0, 3.0]);
    for _ in 0..20 {
        let x0 = space.random_element(&mut rng);
        assert!(shifted_invariants_commute(&space, &a, &x0, &[0.0, 1.0], &[2, 4]) <= 1e-10);
        // degenerate shift, recorded only
        assert!(shifted_invariants_commute(&space, &Mat::identity(3, 3), &x0, &[0.0, 1.0], &[2, 4]) <= 1e-10);
    }
    // higher dimension, indefinite g
    let space = SkewSpace::new(&diag(&[1.0, -1.0, 1.0, 1.0])).unwrap();
    let a = space.g.clone().try_inverse().unwrap() * diag(&[1.0, -2.0, 3.0, 5.0]);
    for _ in 0..10 {
        let x0 = space.random_element(&mut rng);
        let r = shifted_invariants_commute(&space, &a, &x0, &[0.0, 0.5, -1.0], &[2, 3, 4]);
        assert!(r <= 1e-9 * x0.norm().powi(6).max(1.0), "{r:e}");
    }
}
