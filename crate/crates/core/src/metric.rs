//! Chart-local metric families with analytic first and second derivatives.

use std::fmt;
use std::sync::Arc;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::jet::{MatrixJet, ScalarJet};
use crate::linalg::Mat;

/// Guard threshold shared by the chart-validity checks of every family.
pub const DOMAIN_TOL: f64 = 1e-9;

/// A metric on a coordinate chart.
///
/// `jet` returns `g_ij` together with `d_k g_ij` and `d_k d_l g_ij` at a
/// point; it fails with [`Error::DomainViolation`] outside the chart.
pub trait MetricField: Send + Sync + fmt::Debug {
    fn dim(&self) -> usize;

    fn in_domain(&self, x: &[f64]) -> bool;

    fn jet(&self, x: &[f64]) -> Result<MatrixJet>;

    /// Metric components only.
    fn metric(&self, x: &[f64]) -> Result<Mat> {
        Ok(self.jet(x)?.value)
    }

    /// Sectional curvature the family was built with, if it is a
    /// constant-curvature family.
    fn nominal_curvature(&self) -> Option<f64> {
        None
    }

    fn describe(&self) -> String;
}

pub type SharedMetric = Arc<dyn MetricField>;

fn guard(field: &dyn MetricField, x: &[f64]) -> Result<()> {
    if x.len() != field.dim() {
        return Err(Error::InvalidInput(format!("point has {} coordinates, chart has {}", x.len(), field.dim())));
    }
    if !field.in_domain(x) {
        return Err(Error::DomainViolation { point: x.to_vec() });
    }
    Ok(())
}

/// Number of positive and negative eigenvalues of a symmetric matrix.
pub fn signature(g: &Mat) -> (usize, usize) {
    let eig = g.clone().symmetric_eigen();
    let p = eig.eigenvalues.iter().filter(|&&e| e > 0.0).count();
    let q = eig.eigenvalues.iter().filter(|&&e| e < 0.0).count();
    (p, q)
}

fn check_signs(signs: &[f64]) -> Result<()> {
    if signs.len() < 2 {
        return Err(Error::InvalidInput("dimension must be at least 2".into()));
    }
    if signs.iter().any(|&s| s != 1.0 && s != -1.0) {
        return Err(Error::InvalidInput(format!("signs must be +1 or -1, got {signs:?}")));
    }
    Ok(())
}

#[derive(Clone, Debug)]
pub struct FlatMetric {
    signs: Vec<f64>,
}

pub fn make_flat(signs: &[f64]) -> Result<FlatMetric> {
    check_signs(signs)?;
    Ok(FlatMetric { signs: signs.to_vec() })
}

impl MetricField for FlatMetric {
    fn dim(&self) -> usize {
        self.signs.len()
    }

    fn in_domain(&self, x: &[f64]) -> bool {
        x.iter().all(|v| v.is_finite())
    }

    fn jet(&self, x: &[f64]) -> Result<MatrixJet> {
        guard(self, x)?;
        let n = self.dim();
        Ok(MatrixJet::constant(n, Mat::from_diagonal(&DVector::from_row_slice(&self.signs))))
    }

    fn nominal_curvature(&self) -> Option<f64> {
        Some(0.0)
    }

    fn describe(&self) -> String {
        format!("flat{:?}", self.signs)
    }
}

/// Conformally flat model `g = sigma / (1 + K/4 <x,x>_sigma)^2` of constant
/// curvature `K`.
#[derive(Clone, Debug)]
pub struct ConstantCurvatureMetric {
    curvature: f64,
    signs: Vec<f64>,
}

pub fn make_constant_curvature(curvature: f64, signs: &[f64]) -> Result<ConstantCurvatureMetric> {
    check_signs(signs)?;
    if !curvature.is_finite() {
        return Err(Error::InvalidInput("curvature must be finite".into()));
    }
    Ok(ConstantCurvatureMetric { curvature, signs: signs.to_vec() })
}

impl ConstantCurvatureMetric {
    fn conformal_base(&self, x: &[f64]) -> ScalarJet {
        let n = self.dim();
        let q: f64 = x.iter().zip(&self.signs).map(|(v, s)| s * v * v).sum();
        let mut phi = ScalarJet::constant(n, 1.0 + 0.25 * self.curvature * q);
        for k in 0..n {
            phi.grad[k] = 0.5 * self.curvature * self.signs[k] * x[k];
            phi.hess[k * n + k] = 0.5 * self.curvature * self.signs[k];
        }
        phi
    }
}

impl MetricField for ConstantCurvatureMetric {
    fn dim(&self) -> usize {
        self.signs.len()
    }

    fn in_domain(&self, x: &[f64]) -> bool {
        x.len() == self.dim() && x.iter().all(|v| v.is_finite()) && self.conformal_base(x).value > DOMAIN_TOL
    }

    fn jet(&self, x: &[f64]) -> Result<MatrixJet> {
        guard(self, x)?;
        let psi = self.conformal_base(x).powi(-2);
        let entries: Vec<ScalarJet> = self.signs.iter().map(|&s| psi.scale(s)).collect();
        Ok(MatrixJet::diagonal(&entries))
    }

    fn nominal_curvature(&self) -> Option<f64> {
        Some(self.curvature)
    }

    fn describe(&self) -> String {
        format!("constant-curvature(K={}, {:?})", self.curvature, self.signs)
    }
}

/// Univariate polynomial, coefficients in ascending order.
#[derive(Clone, Debug, PartialEq)]
pub struct Polynomial {
    coeffs: Vec<f64>,
}

pub const MAX_POLY_DEGREE: usize = 4;

impl Polynomial {
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() || coeffs.len() > MAX_POLY_DEGREE + 1 {
            return Err(Error::InvalidInput(format!(
                "polynomials need 1..={} coefficients, got {}",
                MAX_POLY_DEGREE + 1,
                coeffs.len()
            )));
        }
        Ok(Self { coeffs })
    }

    /// `(p(t), p'(t), p''(t))`.
    pub fn eval3(&self, t: f64) -> (f64, f64, f64) {
        let (mut p, mut dp, mut d2p) = (0.0, 0.0, 0.0);
        for &c in self.coeffs.iter().rev() {
            d2p = d2p * t + 2.0 * dp;
            dp = dp * t + p;
            p = p * t + c;
        }
        (p, dp, d2p)
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.eval3(t).0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LeviCivitaRole {
    FirstMetric,
    SecondMetric,
}

/// Polynomials `X_i(x_i)` plus the reference point that selects the chart
/// component (the sign pattern of every `X_i - X_j` and every `X_i`).
#[derive(Clone, Debug)]
pub struct LeviCivitaSpec {
    pub polys: Vec<Polynomial>,
    pub reference: Vec<f64>,
}

/// One metric of the Levi-Civita normal form:
/// `g_ii = prod_{j != i} |X_i - X_j|` and, for the second metric,
/// `gbar_ii = g_ii / (X_i prod_a X_a)`.
#[derive(Clone, Debug)]
pub struct LeviCivitaMetric {
    polys: Vec<Polynomial>,
    role: LeviCivitaRole,
    /// Sign of `X_i - X_j` on the chart component, row-major.
    pair_signs: Vec<f64>,
    /// Sign of `X_i` on the chart component.
    value_signs: Vec<f64>,
}

pub fn make_levi_civita_pair(spec: &LeviCivitaSpec) -> Result<(LeviCivitaMetric, LeviCivitaMetric)> {
    let n = spec.polys.len();
    if n < 2 {
        return Err(Error::DegenerateSpec("need at least two coordinates".into()));
    }
    if spec.reference.len() != n {
        return Err(Error::DegenerateSpec(format!(
            "reference point has {} coordinates, expected {n}",
            spec.reference.len()
        )));
    }
    let xs: Vec<f64> = spec.polys.iter().zip(&spec.reference).map(|(p, &t)| p.eval(t)).collect();
    let mut pair_signs = vec![0.0; n * n];
    for i in 0..n {
        if xs[i].abs() < DOMAIN_TOL {
            return Err(Error::DegenerateSpec(format!("X_{} vanishes at the reference point", i + 1)));
        }
        for j in 0..n {
            if i == j {
                continue;
            }
            let diff = xs[i] - xs[j];
            if diff.abs() < DOMAIN_TOL {
                return Err(Error::DegenerateSpec(format!(
                    "X_{} and X_{} coincide at the reference point",
                    i + 1,
                    j + 1
                )));
            }
            pair_signs[i * n + j] = diff.signum();
        }
    }
    let value_signs: Vec<f64> = xs.iter().map(|v| v.signum()).collect();
    let first =
        LeviCivitaMetric { polys: spec.polys.clone(), role: LeviCivitaRole::FirstMetric, pair_signs, value_signs };
    let second = LeviCivitaMetric { role: LeviCivitaRole::SecondMetric, ..first.clone() };
    Ok((first, second))
}

impl LeviCivitaMetric {
    pub fn role(&self) -> LeviCivitaRole {
        self.role
    }

    fn x_jets(&self, x: &[f64]) -> Vec<ScalarJet> {
        let n = self.polys.len();
        self.polys
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let (v, dv, d2v) = p.eval3(x[i]);
                let mut j = ScalarJet::constant(n, v);
                j.grad[i] = dv;
                j.hess[i * n + i] = d2v;
                j
            })
            .collect()
    }
}

impl MetricField for LeviCivitaMetric {
    fn dim(&self) -> usize {
        self.polys.len()
    }

    fn in_domain(&self, x: &[f64]) -> bool {
        let n = self.dim();
        if x.len() != n || x.iter().any(|v| !v.is_finite()) {
            return false;
        }
        let xs: Vec<f64> = self.polys.iter().zip(x).map(|(p, &t)| p.eval(t)).collect();
        for i in 0..n {
            if xs[i] * self.value_signs[i] < DOMAIN_TOL {
                return false;
            }
            for j in 0..n {
                if i != j && (xs[i] - xs[j]) * self.pair_signs[i * n + j] < DOMAIN_TOL {
                    return false;
                }
            }
        }
        true
    }

    fn jet(&self, x: &[f64]) -> Result<MatrixJet> {
        guard(self, x)?;
        let n = self.dim();
        let xj = self.x_jets(x);
        let mut diag = Vec::with_capacity(n);
        for i in 0..n {
            let mut gi = ScalarJet::constant(n, 1.0);
            for j in (0..n).filter(|&j| j != i) {
                gi = gi.mul(&xj[i].sub(&xj[j]).scale(self.pair_signs[i * n + j]));
            }
            diag.push(gi);
        }
        if self.role == LeviCivitaRole::SecondMetric {
            let prod = xj.iter().skip(1).fold(xj[0].clone(), |acc, v| acc.mul(v));
            for i in 0..n {
                diag[i] = diag[i].mul(&xj[i].mul(&prod).recip());
            }
        }
        Ok(MatrixJet::diagonal(&diag))
    }

    fn describe(&self) -> String {
        let role = match self.role {
            LeviCivitaRole::FirstMetric => "first",
            LeviCivitaRole::SecondMetric => "second",
        };
        format!("levi-civita({role}, n={})", self.dim())
    }
}

/// Metric `|det sigma / det a| sigma a^{-1} sigma` built from a solution
/// `a = A + w u^T + u w^T + c u u^T` (`u = sigma x`) of the equivalence
/// equation on the flat chart `sigma`. All members of the family share the
/// straight-line geodesics of `sigma`, so they are pairwise geodesically
/// equivalent and of constant curvature.
#[derive(Clone, Debug)]
pub struct ProjectiveFlatMetric {
    signs: Vec<f64>,
    base: Mat,
    shift: Vec<f64>,
    quadratic: f64,
    det_sign: f64,
}

pub fn make_projective_flat(
    signs: &[f64],
    base: Mat,
    shift: Vec<f64>,
    quadratic: f64,
    reference: &[f64],
) -> Result<ProjectiveFlatMetric> {
    check_signs(signs)?;
    let n = signs.len();
    if base.shape() != (n, n) || shift.len() != n || reference.len() != n {
        return Err(Error::InvalidInput("projective-flat parameters have inconsistent sizes".into()));
    }
    if (&base - base.transpose()).norm() > 1e-12 * (1.0 + base.norm()) {
        return Err(Error::InvalidInput("base tensor must be symmetric".into()));
    }
    let mut m = ProjectiveFlatMetric { signs: signs.to_vec(), base, shift, quadratic, det_sign: 1.0 };
    let det = m.solution(reference).value.determinant();
    if det.abs() < DOMAIN_TOL {
        return Err(Error::DegenerateSpec("solution tensor is singular at the reference point".into()));
    }
    m.det_sign = det.signum();
    Ok(m)
}

impl ProjectiveFlatMetric {
    /// The generating solution `a_ij(x)` relative to the flat metric.
    pub fn solution(&self, x: &[f64]) -> MatrixJet {
        let n = self.signs.len();
        let u: Vec<f64> = x.iter().zip(&self.signs).map(|(v, s)| s * v).collect();
        let mut value = self.base.clone();
        for i in 0..n {
            for j in 0..n {
                value[(i, j)] += self.shift[i] * u[j] + u[i] * self.shift[j] + self.quadratic * u[i] * u[j];
            }
        }
        let mut jet = MatrixJet::constant(n, value);
        for k in 0..n {
            let s = self.signs[k];
            for i in 0..n {
                // d_k u_i = s_k delta_ik
                jet.d[k][(i, k)] += s * (self.shift[i] + self.quadratic * u[i]);
                jet.d[k][(k, i)] += s * (self.shift[i] + self.quadratic * u[i]);
            }
            for l in 0..n {
                let c = self.quadratic * s * self.signs[l];
                jet.dd[k * n + l][(k, l)] += c;
                jet.dd[k * n + l][(l, k)] += c;
            }
        }
        jet
    }
}

impl MetricField for ProjectiveFlatMetric {
    fn dim(&self) -> usize {
        self.signs.len()
    }

    fn in_domain(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter().all(|v| v.is_finite())
            && self.solution(x).value.determinant() * self.det_sign > DOMAIN_TOL
    }

    fn jet(&self, x: &[f64]) -> Result<MatrixJet> {
        guard(self, x)?;
        let n = self.dim();
        let a = self.solution(x);
        let det_factor = a.log_abs_det().ok_or(Error::SingularMetric { det: 0.0 })?.scale(-1.0).exp();
        let inv = a.inverse().ok_or(Error::SingularMetric { det: 0.0 })?;
        let sigma = MatrixJet::constant(n, Mat::from_diagonal(&DVector::from_row_slice(&self.signs)));
        Ok(sigma.mul(&inv).mul(&sigma).scale_by(&det_factor))
    }

    fn describe(&self) -> String {
        format!("projective-flat(n={}, c={})", self.dim(), self.quadratic)
    }
}

/// A constant multiple of another metric.
#[derive(Clone, Debug)]
pub struct ScaledMetric {
    base: SharedMetric,
    factor: f64,
}

pub fn make_scaled(base: SharedMetric, factor: f64) -> Result<ScaledMetric> {
    if factor == 0.0 || !factor.is_finite() {
        return Err(Error::InvalidInput("scale factor must be finite and nonzero".into()));
    }
    Ok(ScaledMetric { base, factor })
}

impl MetricField for ScaledMetric {
    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn in_domain(&self, x: &[f64]) -> bool {
        self.base.in_domain(x)
    }

    fn jet(&self, x: &[f64]) -> Result<MatrixJet> {
        let j = self.base.jet(x)?;
        Ok(j.scale_by(&ScalarJet::constant(j.vars(), self.factor)))
    }

    fn nominal_curvature(&self) -> Option<f64> {
        self.base.nominal_curvature().map(|k| k / self.factor)
    }

    fn describe(&self) -> String {
        format!("{} * {}", self.factor, self.base.describe())
    }
}

type MetricFn = dyn Fn(&[f64]) -> Result<Mat> + Send + Sync;

/// A metric given only by its components; derivatives come from
/// [`fd_derivatives`].
#[derive(Clone)]
pub struct FdMetric {
    dim: usize,
    components: Arc<MetricFn>,
    label: String,
}

impl fmt::Debug for FdMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FdMetric").field("dim", &self.dim).field("label", &self.label).finish()
    }
}

impl FdMetric {
    pub fn new(
        dim: usize,
        label: impl Into<String>,
        components: impl Fn(&[f64]) -> Result<Mat> + Send + Sync + 'static,
    ) -> Self {
        Self { dim, components: Arc::new(components), label: label.into() }
    }

    /// Wrap an analytic field, discarding its derivatives.
    pub fn from_field(field: SharedMetric) -> Self {
        let dim = field.dim();
        let label = format!("fd({})", field.describe());
        Self::new(dim, label, move |x| field.metric(x))
    }
}

impl MetricField for FdMetric {
    fn dim(&self) -> usize {
        self.dim
    }

    fn in_domain(&self, x: &[f64]) -> bool {
        x.len() == self.dim && (self.components)(x).is_ok()
    }

    fn jet(&self, x: &[f64]) -> Result<MatrixJet> {
        let value = (self.components)(x)?;
        let (d, dd) = fd_derivatives(&*self.components, x, default_step(x))?;
        Ok(MatrixJet { value, d, dd })
    }

    fn describe(&self) -> String {
        self.label.clone()
    }
}

/// Default base step `1e-4 (1 + |x|)`.
pub fn default_step(x: &[f64]) -> f64 {
    1e-4 * (1.0 + x.iter().map(|v| v * v).sum::<f64>().sqrt())
}

/// Ratio between the second-derivative step and the base step. Second
/// differences lose two digits more to cancellation, so they use a
/// coarser stencil.
pub const SECOND_STEP_RATIO: f64 = 10.0;

/// Central differences with one Richardson step, for any matrix-valued
/// function of the chart coordinates.
///
/// First derivatives use step `h`, second derivatives `SECOND_STEP_RATIO * h`;
/// both are extrapolated from `h` and `h/2`. The stencil reaches at most one
/// full step in each of two coordinates.
pub fn fd_derivatives(
    f: &(dyn Fn(&[f64]) -> Result<Mat> + Send + Sync),
    x: &[f64],
    h: f64,
) -> Result<(Vec<Mat>, Vec<Mat>)> {
    if !(h > 0.0) {
        return Err(Error::InvalidInput("finite-difference step must be positive".into()));
    }
    let n = x.len();
    let at = |shifts: &[(usize, f64)]| -> Result<Mat> {
        let mut y = x.to_vec();
        for &(k, s) in shifts {
            y[k] += s;
        }
        f(&y)
    };
    let center = f(x)?;
    let first = |k: usize, step: f64| -> Result<Mat> { Ok((at(&[(k, step)])? - at(&[(k, -step)])?) / (2.0 * step)) };
    let mut d = Vec::with_capacity(n);
    for k in 0..n {
        let coarse = first(k, h)?;
        let fine = first(k, 0.5 * h)?;
        d.push((fine * 4.0 - coarse) / 3.0);
    }
    let h2 = SECOND_STEP_RATIO * h;
    let second = |k: usize, l: usize, step: f64| -> Result<Mat> {
        if k == l {
            Ok((at(&[(k, step)])? - &center * 2.0 + at(&[(k, -step)])?) / (step * step))
        } else {
            let pp = at(&[(k, step), (l, step)])?;
            let pm = at(&[(k, step), (l, -step)])?;
            let mp = at(&[(k, -step), (l, step)])?;
            let mm = at(&[(k, -step), (l, -step)])?;
            Ok((pp - pm - mp + mm) / (4.0 * step * step))
        }
    };
    let mut dd = vec![Mat::zeros(center.nrows(), center.ncols()); n * n];
    for k in 0..n {
        for l in k..n {
            let coarse = second(k, l, h2)?;
            let fine = second(k, l, 0.5 * h2)?;
            let v = (fine * 4.0 - coarse) / 3.0;
            dd[l * n + k] = v.clone();
            dd[k * n + l] = v;
        }
    }
    Ok((d, dd))
}
