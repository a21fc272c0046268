//! The Sinjukov tensor of a metric pair and everything built from it.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::geometry::{first_covariant_02, scalar_hessian, PointGeometry};
use crate::jet::{MatrixJet, ScalarJet};
use crate::linalg::{adjugate, faddeev_leverrier, minpoly_degree, Mat, MinpolyReport};
use crate::metric::SharedMetric;
use crate::tensor::{PointTensor, Variance};

use Variance::{Contravariant as Up, Covariant as Down};

/// Default relative threshold of the Krylov rank test.
pub const MINPOLY_TOL: f64 = 1e-8;

/// Two metrics on a shared chart.
#[derive(Clone, Debug)]
pub struct EquivalencePair {
    pub g: SharedMetric,
    pub gbar: SharedMetric,
}

impl EquivalencePair {
    pub fn new(g: SharedMetric, gbar: SharedMetric) -> Result<Self> {
        if g.dim() != gbar.dim() {
            return Err(Error::InvalidInput(format!(
                "metrics live on charts of dimension {} and {}",
                g.dim(),
                gbar.dim()
            )));
        }
        Ok(Self { g, gbar })
    }

    pub fn dim(&self) -> usize {
        self.g.dim()
    }

    pub fn in_domain(&self, x: &[f64]) -> bool {
        self.g.in_domain(x) && self.gbar.in_domain(x)
    }

    fn guard(&self, x: &[f64]) -> Result<()> {
        if !self.in_domain(x) {
            return Err(Error::DomainViolation { point: x.to_vec() });
        }
        Ok(())
    }

    /// `g` and `a^i_j = g^{ik} a_kj` at a point, without derivatives.
    pub fn operator_at(&self, x: &[f64]) -> Result<(Mat, Mat)> {
        self.guard(x)?;
        let g = self.g.metric(x)?;
        let gbar = self.gbar.metric(x)?;
        let n = g.nrows() as f64;
        let det_g = g.determinant();
        let det_gbar = gbar.determinant();
        if det_g == 0.0 || det_gbar == 0.0 {
            return Err(Error::SingularMetric { det: det_g.min(det_gbar) });
        }
        let factor = (det_gbar / det_g).abs().powf(1.0 / (n + 1.0));
        let gbar_inv = gbar.try_inverse().ok_or(Error::SingularMetric { det: det_gbar })?;
        // g^{-1} a = factor * gbar^{-1} g
        Ok((g.clone(), gbar_inv * g * factor))
    }
}

/// Pointwise Sinjukov data.
#[derive(Clone, Debug)]
pub struct SinjukovPoint {
    pub point: Vec<f64>,
    /// `a_ij`.
    pub a: PointTensor,
    /// `a^i_j`.
    pub a_op: PointTensor,
    pub lambda: f64,
    /// `lambda_{,i}`.
    pub lambda_grad: PointTensor,
    /// `lambda_{,ij}`.
    pub lambda_hess: PointTensor,
    /// `G^i_j = g^{ik} gbar_kj`.
    pub big_g: PointTensor,
    pub minpoly: MinpolyReport,
    /// Second-order jet of `a_ij`.
    pub a_jet: MatrixJet,
    pub lambda_jet: ScalarJet,
    pub geometry: PointGeometry,
}

impl SinjukovPoint {
    pub fn dim(&self) -> usize {
        self.point.len()
    }

    pub fn g(&self) -> &Mat {
        self.geometry.g()
    }

    pub fn a_matrix(&self) -> Mat {
        self.a.to_matrix().expect("rank 2")
    }

    pub fn a_op_matrix(&self) -> Mat {
        self.a_op.to_matrix().expect("rank 2")
    }
}

/// Jet of `a_ij = |det gbar / det g|^{1/(n+1)} g gbar^{-1} g`.
pub fn sinjukov_jet(g: &MatrixJet, gbar: &MatrixJet) -> Result<MatrixJet> {
    let n = g.size() as f64;
    let ld_g = g.log_abs_det().ok_or(Error::SingularMetric { det: g.value.determinant() })?;
    let ld_gbar = gbar.log_abs_det().ok_or(Error::SingularMetric { det: gbar.value.determinant() })?;
    let factor = ld_gbar.sub(&ld_g).scale(1.0 / (n + 1.0)).exp();
    let gbar_inv = gbar.inverse().ok_or(Error::SingularMetric { det: gbar.value.determinant() })?;
    Ok(g.mul(&gbar_inv).mul(g).scale_by(&factor))
}

pub fn sinjukov_tensor(pair: &EquivalencePair, x: &[f64]) -> Result<SinjukovPoint> {
    pair.guard(x)?;
    let g_jet = pair.g.jet(x)?;
    let gbar_jet = pair.gbar.jet(x)?;
    let a_jet = sinjukov_jet(&g_jet, &gbar_jet)?;
    let geometry = PointGeometry::from_jet(g_jet, x)?;
    let g_inv_jet = geometry.metric.inverse().ok_or(Error::SingularMetric { det: 0.0 })?;
    let lambda_jet = g_inv_jet.mul(&a_jet).trace().scale(0.5);

    let a_mat = a_jet.value.clone();
    let a_op_mat = &geometry.g_inv * &a_mat;
    let big_g_mat = &geometry.g_inv * &gbar_jet.value;
    let minpoly = minpoly_degree(&big_g_mat, MINPOLY_TOL);
    Ok(SinjukovPoint {
        point: x.to_vec(),
        a: PointTensor::from_matrix(&a_mat, Down, Down),
        a_op: PointTensor::from_matrix(&a_op_mat, Up, Down),
        lambda: lambda_jet.value,
        lambda_grad: PointTensor::vector(&lambda_jet.grad, Down),
        lambda_hess: scalar_hessian(&lambda_jet, &geometry.connection),
        big_g: PointTensor::from_matrix(&big_g_mat, Up, Down),
        minpoly,
        a_jet,
        lambda_jet,
        geometry,
    })
}

/// `max | a_{ij,k} - lambda_{,i} g_jk - lambda_{,j} g_ik |`.
pub fn sinjukov_residual_at(s: &SinjukovPoint) -> f64 {
    let n = s.dim();
    let da = first_covariant_02(&s.a_jet, &s.geometry.connection);
    let g = s.g();
    let l = &s.lambda_jet.grad;
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let r = da.get(&[i, j, k]) - l[i] * g[(j, k)] - l[j] * g[(i, k)];
                worst = worst.max(r.abs());
            }
        }
    }
    worst
}

pub fn sinjukov_residual(pair: &EquivalencePair, x: &[f64]) -> Result<f64> {
    Ok(sinjukov_residual_at(&sinjukov_tensor(pair, x)?))
}

/// Numerical degree of the minimal polynomial of `G` with threshold `tol`.
pub fn strict_nonproportionality(s: &SinjukovPoint, tol: f64) -> MinpolyReport {
    minpoly_degree(&s.big_g.to_matrix().expect("rank 2"), tol)
}

/// `S_t = adj(a_op - t Id)` as a matrix.
pub fn benenti_matrix(a_op: &Mat, t: f64) -> Mat {
    let n = a_op.nrows();
    adjugate(&(a_op - Mat::identity(n, n) * t))
}

pub fn benenti_family(s: &SinjukovPoint, t: f64) -> PointTensor {
    PointTensor::from_matrix(&benenti_matrix(&s.a_op_matrix(), t), Up, Down)
}

/// Matrix coefficients `C_k` with `S_t = sum_k C_k t^k`, `k = 0..n-1`.
pub fn benenti_coefficients(a_op: &Mat) -> Vec<Mat> {
    let n = a_op.nrows();
    let (_, ms) = faddeev_leverrier(a_op);
    // adj(tI - a) = sum_k M_k t^{n-k}; adj(a - tI) = (-1)^{n-1} adj(tI - a)
    let sign = if n % 2 == 1 { 1.0 } else { -1.0 };
    (0..n).map(|p| &ms[n - 1 - p] * sign).collect()
}

/// `I_t(xi) = g(S_t xi, xi)`.
pub fn integral_it_matrix(a_op: &Mat, g: &Mat, xi: &[f64], t: f64) -> f64 {
    let v = DVector::from_row_slice(xi);
    let s = benenti_matrix(a_op, t);
    (v.transpose() * g * s * &v)[(0, 0)]
}

pub fn integral_it(s: &SinjukovPoint, g: &PointTensor, xi: &[f64], t: f64) -> Result<f64> {
    if xi.len() != s.dim() {
        return Err(Error::ShapeMismatch { expected: s.dim(), got: xi.len() });
    }
    Ok(integral_it_matrix(&s.a_op_matrix(), &g.to_matrix()?, xi, t))
}

/// Outcome of a pointwise proportionality fit `a(x) = C(x) A(x)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProportionalityReport {
    pub mean: f64,
    pub max_deviation: f64,
    pub ratios: Vec<f64>,
}

/// Fit `a = C(x) A` at each sample and report how far `C` is from constant.
/// A sample whose relative rank-one residual exceeds `tol` is rejected.
pub fn check_proportional_solutions(
    a_samples: &[Mat],
    big_a_samples: &[Mat],
    tol: f64,
) -> Result<ProportionalityReport> {
    if a_samples.len() != big_a_samples.len() || a_samples.is_empty() {
        return Err(Error::InvalidInput("need equally many nonempty samples of a and A".into()));
    }
    let mut ratios = Vec::with_capacity(a_samples.len());
    for (index, (a, big_a)) in a_samples.iter().zip(big_a_samples).enumerate() {
        let aa = big_a.dot(big_a);
        if aa == 0.0 {
            return Err(Error::ZeroSpan);
        }
        let c = a.dot(big_a) / aa;
        let residual = (a - big_a * c).norm() / a.norm().max(f64::MIN_POSITIVE);
        if residual > tol {
            return Err(Error::NotProportional { index, residual });
        }
        ratios.push(c);
    }
    let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
    let max_deviation = ratios.iter().map(|c| (c - mean).abs()).fold(0.0, f64::max);
    Ok(ProportionalityReport { mean, max_deviation, ratios })
}
