//! Curvature as a symmetric operator on `so(g)` and the algebraic
//! identities of sectional operators.
//!
//! Elements of `so(g)` are (1,1) matrices `x` with `g x + x^T g = 0`; the
//! pairing is `<x, y> = tr(x y)`.

use std::sync::OnceLock;

use nalgebra::DVector;
use rand::Rng;

use crate::equivalence::{sinjukov_tensor, EquivalencePair};
use crate::error::{Error, Result};
use crate::geometry::{riemann_at, symmetry_residuals, CurvaturePoint};
use crate::linalg::{commutator, lstsq, minpoly_degree, vec_of, Mat};

/// Relative tolerance on the curvature symmetries accepted by
/// [`curvature_as_operator`].
pub const CURVATURE_SYMMETRY_TOL: f64 = 1e-8;

/// Relative SVD threshold for `ad_a` solves.
pub const AD_SOLVE_TOL: f64 = 1e-10;

/// Relative residual above which `ad_a R(x) = ad_b x` counts as inconsistent.
pub const CONSISTENCY_TOL: f64 = 1e-6;

/// Bound on `|[R(x) - K x, a]|` accepted by [`constant_commutant_check`].
pub const HYPOTHESIS_TOL: f64 = 1e-8;

/// Deviation below which [`constant_commutant_check`] reports constant curvature.
pub const CONSTANT_TOL: f64 = 1e-7;

/// Relative tolerance of the proportionality and identity tests in
/// [`triple_dichotomy`].
pub const DICHOTOMY_TOL: f64 = 1e-8;

/// `so(g)` with the basis `g^{-1} (E_ij - E_ji)`, `i < j`.
#[derive(Clone, Debug)]
pub struct SkewSpace {
    pub g: Mat,
    pub basis: Vec<Mat>,
    /// Columns are the row-major vectorized basis elements.
    frame: Mat,
    /// Left inverse of `frame`.
    coords: Mat,
}

impl SkewSpace {
    pub fn new(g: &Mat) -> Result<Self> {
        let n = g.nrows();
        let g_inv = g.clone().try_inverse().ok_or(Error::SingularMetric { det: g.determinant() })?;
        let mut basis = Vec::with_capacity(n * (n - 1) / 2);
        for i in 0..n {
            for j in i + 1..n {
                let mut e = Mat::zeros(n, n);
                e[(i, j)] = 1.0;
                e[(j, i)] = -1.0;
                basis.push(&g_inv * e);
            }
        }
        let mut frame = Mat::zeros(n * n, basis.len());
        for (c, b) in basis.iter().enumerate() {
            frame.set_column(c, &vec_of(b));
        }
        let coords = frame.clone().pseudo_inverse(1e-14).map_err(|e| Error::InvalidInput(e.to_string()))?;
        Ok(Self { g: g.clone(), basis, frame, coords })
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn n(&self) -> usize {
        self.g.nrows()
    }

    pub fn pairing(x: &Mat, y: &Mat) -> f64 {
        (x * y).trace()
    }

    pub fn gram(&self) -> Mat {
        let m = self.dim();
        Mat::from_fn(m, m, |i, j| Self::pairing(&self.basis[i], &self.basis[j]))
    }

    /// `|g x + x^T g|`.
    pub fn membership_residual(&self, x: &Mat) -> f64 {
        (&self.g * x + x.transpose() * &self.g).norm()
    }

    /// Orthogonal projection of an arbitrary matrix onto `so(g)` for the
    /// trace pairing.
    pub fn project(&self, m: &Mat) -> Mat {
        let g_inv = self.g.clone().try_inverse().expect("checked at construction");
        (m - g_inv * m.transpose() * &self.g) * 0.5
    }

    pub fn coordinates(&self, x: &Mat) -> DVector<f64> {
        &self.coords * vec_of(x)
    }

    pub fn element(&self, c: &DVector<f64>) -> Mat {
        let v = &self.frame * c;
        let n = self.n();
        Mat::from_fn(n, n, |i, j| v[i * n + j])
    }

    pub fn random_element<R: Rng + ?Sized>(&self, rng: &mut R) -> Mat {
        let c = DVector::from_fn(self.dim(), |_, _| rng.random_range(-1.0..1.0));
        self.element(&c)
    }
}

/// A linear map `so(g) -> so(g)` stored in basis coordinates.
#[derive(Clone, Debug)]
pub struct SectionalOperator {
    pub space: SkewSpace,
    pub matrix: Mat,
}

impl SectionalOperator {
    pub fn from_fn(space: SkewSpace, f: impl Fn(&Mat) -> Mat) -> Self {
        let m = space.dim();
        let mut matrix = Mat::zeros(m, m);
        for (c, b) in space.basis.iter().enumerate() {
            matrix.set_column(c, &space.coordinates(&f(b)));
        }
        Self { space, matrix }
    }

    pub fn identity(space: SkewSpace) -> Self {
        let m = space.dim();
        Self { space, matrix: Mat::identity(m, m) }
    }

    pub fn apply(&self, x: &Mat) -> Mat {
        self.space.element(&(&self.matrix * self.space.coordinates(x)))
    }

    /// `max |<R x, y> - <x, R y>|` over basis pairs.
    pub fn symmetry_residual(&self) -> f64 {
        let b = &self.space.basis;
        let images: Vec<Mat> = b.iter().map(|x| self.apply(x)).collect();
        let mut worst = 0.0f64;
        for i in 0..b.len() {
            for j in 0..b.len() {
                let d = SkewSpace::pairing(&images[i], &b[j]) - SkewSpace::pairing(&b[i], &images[j]);
                worst = worst.max(d.abs());
            }
        }
        worst
    }

    /// `max_x |R(x) - other(x)| / |x|` over the basis.
    pub fn distance(&self, other: &SectionalOperator) -> f64 {
        self.space.basis.iter().map(|x| (self.apply(x) - other.apply(x)).norm() / x.norm()).fold(0.0, f64::max)
    }
}

/// Which index pair of `R^i_{jkl}` absorbs the argument.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ContractionPattern {
    /// `R(x)^i_j = R^i_{jkl} x^{kl}`.
    Pair,
    /// `R(x)^i_j = R^i_{kjl} x^{lk}`.
    Cross,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Wiring {
    pub pattern: ContractionPattern,
    pub sign: f64,
}

impl Wiring {
    pub const CANDIDATES: [Wiring; 4] = [
        Wiring { pattern: ContractionPattern::Pair, sign: 1.0 },
        Wiring { pattern: ContractionPattern::Pair, sign: -1.0 },
        Wiring { pattern: ContractionPattern::Cross, sign: 1.0 },
        Wiring { pattern: ContractionPattern::Cross, sign: -1.0 },
    ];

    pub fn describe(&self) -> String {
        let body = match self.pattern {
            ContractionPattern::Pair => "R^i_{jkl} x^{kl}",
            ContractionPattern::Cross => "R^i_{kjl} x^{lk}",
        };
        let sign = if self.sign < 0.0 { "-" } else { "" };
        format!("R(x)^i_j = {sign}{body}")
    }
}

/// The wiring that passes [`calibrate_wiring`].
pub const PINNED_WIRING: Wiring = Wiring { pattern: ContractionPattern::Cross, sign: 1.0 };

fn apply_curvature(curv: &CurvaturePoint, g_inv: &Mat, wiring: Wiring, x: &Mat) -> Mat {
    let n = x.nrows();
    // x^{kl} = x^k_a g^{al}
    let xu = x * g_inv;
    let r = &curv.r_up;
    Mat::from_fn(n, n, |i, j| {
        let mut s = 0.0;
        for k in 0..n {
            for l in 0..n {
                s += match wiring.pattern {
                    ContractionPattern::Pair => r.get(&[i, j, k, l]) * xu[(k, l)],
                    ContractionPattern::Cross => r.get(&[i, k, j, l]) * xu[(l, k)],
                };
            }
        }
        wiring.sign * s
    })
}

pub fn curvature_as_operator_with(curv: &CurvaturePoint, g: &Mat, wiring: Wiring) -> Result<SectionalOperator> {
    let sym = symmetry_residuals(curv).max();
    if sym > CURVATURE_SYMMETRY_TOL {
        return Err(Error::SymmetryViolation { residual: sym });
    }
    let space = SkewSpace::new(g)?;
    let g_inv = g.clone().try_inverse().ok_or(Error::SingularMetric { det: g.determinant() })?;
    Ok(SectionalOperator::from_fn(space, |x| apply_curvature(curv, &g_inv, wiring, x)))
}

pub fn curvature_as_operator(curv: &CurvaturePoint, g: &Mat) -> Result<SectionalOperator> {
    curvature_as_operator_with(curv, g, PINNED_WIRING)
}

/// Curvature operator together with the (1,1) operators `a`, `b = g^{-1} Hess(lambda)`
/// and, when a second pair is supplied, their twins `A`, `B`.
#[derive(Clone, Debug)]
pub struct SectionalData {
    pub r_op: SectionalOperator,
    pub a: Mat,
    pub b: Mat,
    pub big_a: Option<Mat>,
    pub big_b: Option<Mat>,
    pub curvature: CurvaturePoint,
}

fn operators(pair: &EquivalencePair, x: &[f64]) -> Result<(Mat, Mat, crate::equivalence::SinjukovPoint)> {
    let s = sinjukov_tensor(pair, x)?;
    let a = s.a_op_matrix();
    let b = &s.geometry.g_inv * s.lambda_hess.to_matrix()?;
    Ok((a, b, s))
}

pub fn sectional_data(pair: &EquivalencePair, x: &[f64], twin: Option<&EquivalencePair>) -> Result<SectionalData> {
    sectional_data_with(pair, x, twin, PINNED_WIRING)
}

pub fn sectional_data_with(
    pair: &EquivalencePair,
    x: &[f64],
    twin: Option<&EquivalencePair>,
    wiring: Wiring,
) -> Result<SectionalData> {
    let (a, b, s) = operators(pair, x)?;
    let curvature = riemann_at(&s.geometry)?;
    let r_op = curvature_as_operator_with(&curvature, s.g(), wiring)?;
    let (big_a, big_b) = match twin {
        Some(p) => {
            let (ta, tb, _) = operators(p, x)?;
            (Some(ta), Some(tb))
        }
        None => (None, None),
    };
    Ok(SectionalData { r_op, a, b, big_a, big_b, curvature })
}

/// `max_x |[R(x), a] - [x, b]| / max(1, |x|)` over the basis.
pub fn sectional_identity_residual_parts(op: &SectionalOperator, a: &Mat, b: &Mat) -> f64 {
    op.space
        .basis
        .iter()
        .map(|x| (commutator(&op.apply(x), a) - commutator(x, b)).norm() / x.norm().max(1.0))
        .fold(0.0, f64::max)
}

pub fn sectional_identity_residual(d: &SectionalData) -> f64 {
    sectional_identity_residual_parts(&d.r_op, &d.a, &d.b)
}

/// Per-candidate outcome of the wiring calibration.
#[derive(Clone, Debug)]
pub struct WiringTrial {
    pub wiring: Wiring,
    pub symmetry: f64,
    pub identity: f64,
}

/// Try every wiring on a fixed strictly nonproportional pair and return
/// the trials; the pinned wiring is the unique one with both residuals small.
pub fn calibrate_wiring() -> Vec<WiringTrial> {
    use crate::metric::{make_levi_civita_pair, LeviCivitaSpec, Polynomial};
    use std::sync::Arc;
    let polys = [1.0, 2.0, 4.0].iter().map(|&c| Polynomial::new(vec![c, 1.0]).expect("degree 1")).collect();
    let (g, gbar) = make_levi_civita_pair(&LeviCivitaSpec { polys, reference: vec![0.0; 3] }).expect("valid spec");
    let pair = EquivalencePair::new(Arc::new(g), Arc::new(gbar)).expect("same chart");
    Wiring::CANDIDATES
        .iter()
        .map(|&wiring| {
            let d = sectional_data_with(&pair, &[0.1, -0.05, 0.2], None, wiring).expect("point in domain");
            WiringTrial { wiring, symmetry: d.r_op.symmetry_residual(), identity: sectional_identity_residual(&d) }
        })
        .collect()
}

/// The calibrated wiring, computed once.
pub fn calibrated_wiring() -> Option<Wiring> {
    static CELL: OnceLock<Option<Wiring>> = OnceLock::new();
    *CELL.get_or_init(|| {
        let ok: Vec<Wiring> = calibrate_wiring()
            .into_iter()
            .filter(|t| t.symmetry < 1e-9 && t.identity < 1e-6)
            .map(|t| t.wiring)
            .collect();
        if ok.len() == 1 {
            Some(ok[0])
        } else {
            None
        }
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CommutationReport {
    pub ab: f64,
    /// `|[b, A] - [a, B]|`.
    pub cross: Option<f64>,
    /// `|a B - b A|` on the trace-free parts.
    pub t: Option<f64>,
}

pub fn commutation_checks(d: &SectionalData) -> CommutationReport {
    commutation_parts(&d.a, &d.b, d.big_a.as_ref(), d.big_b.as_ref())
}

pub fn commutation_parts(a: &Mat, b: &Mat, big_a: Option<&Mat>, big_b: Option<&Mat>) -> CommutationReport {
    let ab = commutator(a, b).norm();
    match (big_a, big_b) {
        (Some(ba), Some(bb)) => CommutationReport {
            ab,
            cross: Some((commutator(b, ba) - commutator(a, bb)).norm()),
            t: Some((trace_free(a) * trace_free(bb) - trace_free(b) * trace_free(ba)).norm()),
        },
        _ => CommutationReport { ab, cross: None, t: None },
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Dichotomy {
    BProportionalToA { factor: f64 },
    AProportionalToA { factor: f64 },
    Violated { residual: f64 },
}

fn trace_free(m: &Mat) -> Mat {
    let n = m.nrows();
    m - Mat::identity(n, n) * (m.trace() / n as f64)
}

/// Least-squares factor `c` in `m = c a` and the residual relative to `max(|m|, |a|)`.
fn proportionality(m: &Mat, a: &Mat) -> (f64, f64) {
    let c = m.dot(a) / a.dot(a);
    (c, (m - a * c).norm() / m.norm().max(a.norm()))
}

/// Check `B y a + a y B = b y A + A y b` on random symmetric `y`, then
/// decide which of `b`, `A` is proportional to `a`.
pub fn triple_dichotomy<R: Rng + ?Sized>(
    a: &Mat,
    b: &Mat,
    big_a: &Mat,
    big_b: &Mat,
    trials: usize,
    rng: &mut R,
) -> Result<Dichotomy> {
    let (a, b, big_a, big_b) = (trace_free(a), trace_free(b), trace_free(big_a), trace_free(big_b));
    if a.norm() == 0.0 {
        return Err(Error::InvalidInput("a is a multiple of the identity".into()));
    }
    let n = a.nrows();
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let r = Mat::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        let y = (&r + r.transpose()) * 0.5;
        let lhs = &big_b * &y * &a + &a * &y * &big_b;
        let rhs = &b * &y * &big_a + &big_a * &y * &b;
        let scale = lhs.norm().max(rhs.norm()).max(1.0);
        worst = worst.max((lhs - rhs).norm() / scale);
    }
    if worst > DICHOTOMY_TOL {
        return Ok(Dichotomy::Violated { residual: worst });
    }
    let (kb, rb) = proportionality(&b, &a);
    let (ka, ra) = proportionality(&big_a, &a);
    match (rb <= DICHOTOMY_TOL, ra <= DICHOTOMY_TOL) {
        (true, true) => Err(Error::BothProportional),
        (true, false) => Ok(Dichotomy::BProportionalToA { factor: kb }),
        (false, true) => Ok(Dichotomy::AProportionalToA { factor: ka }),
        // the identity holds but neither alternative does
        (false, false) => Ok(Dichotomy::Violated { residual: rb.min(ra) }),
    }
}

fn require_regular(a: &Mat) -> Result<()> {
    let r = minpoly_degree(a, crate::equivalence::MINPOLY_TOL);
    if !r.is_strict {
        return Err(Error::NotRegular { degree: r.degree, dim: a.nrows() });
    }
    Ok(())
}

/// Solve `[a, R(x)] = [b, x]` for `R(x)` in `so(g)`, basis element by basis
/// element.
pub fn reconstruct_sectional(space: &SkewSpace, a: &Mat, b: &Mat) -> Result<SectionalOperator> {
    require_regular(a)?;
    let n = space.n();
    let m = space.dim();
    let mut ad = Mat::zeros(n * n, m);
    for (c, y) in space.basis.iter().enumerate() {
        ad.set_column(c, &vec_of(&commutator(a, y)));
    }
    let mut matrix = Mat::zeros(m, m);
    for (c, x) in space.basis.iter().enumerate() {
        let rhs = vec_of(&commutator(b, x));
        let (sol, res) = lstsq(&ad, &rhs, AD_SOLVE_TOL);
        let rel = res / rhs.norm().max(1.0);
        if rel > CONSISTENCY_TOL {
            return Err(Error::InconsistentSystem { residual: rel });
        }
        matrix.set_column(c, &sol);
    }
    Ok(SectionalOperator { space: space.clone(), matrix })
}

/// Coefficients `p` with `b = sum_j p_j a^j` and the relative fit residual.
pub fn polynomial_in(a: &Mat, b: &Mat) -> (Vec<f64>, f64) {
    let n = a.nrows();
    let mut powers = Vec::with_capacity(n);
    let mut p = Mat::identity(n, n);
    for _ in 0..n {
        powers.push(p.clone());
        p = a * p;
    }
    let mut sys = Mat::zeros(n * n, n);
    for (c, pw) in powers.iter().enumerate() {
        sys.set_column(c, &vec_of(pw));
    }
    let rhs = vec_of(b);
    let (coef, res) = lstsq(&sys, &rhs, 1e-13);
    (coef.iter().copied().collect(), res / rhs.norm().max(f64::MIN_POSITIVE))
}

/// `R(x) = d/dt P(a + t x)` at `t = 0` with `b = P(a)`.
pub fn reconstruct_via_polynomial(space: &SkewSpace, a: &Mat, b: &Mat) -> Result<(SectionalOperator, f64)> {
    require_regular(a)?;
    let (coef, fit) = polynomial_in(a, b);
    let n = a.nrows();
    let mut powers = vec![Mat::identity(n, n)];
    for k in 1..n {
        powers.push(a * &powers[k - 1]);
    }
    let op = SectionalOperator::from_fn(space.clone(), |x| {
        let mut out = Mat::zeros(n, n);
        for (k, &pk) in coef.iter().enumerate().skip(1) {
            for j in 0..k {
                out += &powers[j] * x * &powers[k - 1 - j] * pk;
            }
        }
        out
    });
    Ok((op, fit))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CommutantOutcome {
    pub constant: bool,
    pub deviation: f64,
}

pub fn constant_commutant_check(op: &SectionalOperator, a: &Mat, k: f64) -> Result<CommutantOutcome> {
    require_regular(a)?;
    for (i, x) in op.space.basis.iter().enumerate() {
        let shifted = op.apply(x) - x * k;
        let res = commutator(&shifted, a).norm() / (x.norm() * a.norm()).max(1.0);
        if res > HYPOTHESIS_TOL {
            return Err(Error::HypothesisFailed { basis_index: i, residual: res });
        }
    }
    let deviation = op.space.basis.iter().map(|x| (op.apply(x) - x * k).norm() / x.norm()).fold(0.0, f64::max);
    Ok(CommutantOutcome { constant: deviation <= CONSTANT_TOL, deviation })
}

/// Scalar `c` minimizing `|R - c id|` in basis coordinates, with the residual.
pub fn operator_scalar(op: &SectionalOperator) -> (f64, f64) {
    let m = op.matrix.nrows();
    let c = op.matrix.trace() / m as f64;
    (c, (&op.matrix - Mat::identity(m, m) * c).norm())
}

/// Coefficients of `lambda^1` and `lambda^2` in
/// `[R(x) + lambda b, x + lambda a] - [R(x), x]`, maximized over random `x`.
pub fn lax_consistency<R: Rng + ?Sized>(
    op: &SectionalOperator,
    a: &Mat,
    b: &Mat,
    trials: usize,
    rng: &mut R,
) -> (f64, f64) {
    let mut first = 0.0f64;
    for _ in 0..trials {
        let x = op.space.random_element(rng);
        let c1 = commutator(&op.apply(&x), a) + commutator(b, &x);
        first = first.max(c1.norm() / x.norm().max(1.0));
    }
    (first, commutator(b, a).norm())
}

/// Gradient of `tr((x + lambda a)^k)` on `so(g)`.
pub fn shifted_gradient(space: &SkewSpace, a: &Mat, x: &Mat, lambda: f64, k: u32) -> Mat {
    let y = x + a * lambda;
    let n = y.nrows();
    let mut p = Mat::identity(n, n);
    for _ in 1..k {
        p = &p * &y;
    }
    space.project(&(p * k as f64))
}

/// `max |<x0, [grad F, grad G]>|` over all pairs of shifted trace invariants.
pub fn shifted_invariants_commute(space: &SkewSpace, a: &Mat, x0: &Mat, lambdas: &[f64], degrees: &[u32]) -> f64 {
    let mut grads = Vec::new();
    for &l in lambdas {
        for &k in degrees {
            grads.push(shifted_gradient(space, a, x0, l, k));
        }
    }
    let mut worst = 0.0f64;
    for i in 0..grads.len() {
        for j in i + 1..grads.len() {
            worst = worst.max(SkewSpace::pairing(x0, &commutator(&grads[i], &grads[j])).abs());
        }
    }
    worst
}
