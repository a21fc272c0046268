//! Levi-Civita connection, curvature and covariant derivatives at a point.
//!
//! Index conventions: `R^i_{jkl}` is stored at `[i][j][k][l]`, `R_{ij,kl}`
//! lowers the first index, and a comma list of derivative indices means
//! successive covariant differentiation from left to right, so
//! `a_{ij,kl}` is `(nabla nabla a)_{ijkl}` with `l` applied last.

use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::jet::{MatrixJet, ScalarJet};
use crate::linalg::Mat;
use crate::metric::{default_step, fd_derivatives, MetricField};
use crate::tensor::{PointTensor, Variance, SINGULAR_METRIC_TOL};

use Variance::{Contravariant as Up, Covariant as Down};

/// Christoffel symbols and their first partial derivatives at a point.
#[derive(Clone, Debug)]
pub struct ConnectionPoint {
    pub point: Vec<f64>,
    n: usize,
    /// `Gamma^i_{jk}` at `(i * n + j) * n + k`.
    gamma: Vec<f64>,
    /// `d_l Gamma^i_{jk}` at `((l * n + i) * n + j) * n + k`.
    d_gamma: Vec<f64>,
}

impl ConnectionPoint {
    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn gamma(&self, i: usize, j: usize, k: usize) -> f64 {
        self.gamma[(i * self.n + j) * self.n + k]
    }

    #[inline]
    pub fn d_gamma(&self, l: usize, i: usize, j: usize, k: usize) -> f64 {
        let n = self.n;
        self.d_gamma[((l * n + i) * n + j) * n + k]
    }

    /// `Gamma` as a (1,2) tensor.
    pub fn tensor(&self) -> PointTensor {
        PointTensor::new(self.n, vec![Up, Down, Down], self.gamma.clone()).expect("sized by construction")
    }

    /// `Gamma^i_{jk} v^j w^k`.
    pub fn contract(&self, v: &[f64], w: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut out = vec![0.0; n];
        for (i, o) in out.iter_mut().enumerate() {
            let mut s = 0.0;
            for j in 0..n {
                for k in 0..n {
                    s += self.gamma(i, j, k) * v[j] * w[k];
                }
            }
            *o = s;
        }
        out
    }
}

/// Metric jet, its inverse and the connection at one point; the common
/// input of every pointwise routine.
#[derive(Clone, Debug)]
pub struct PointGeometry {
    pub metric: MatrixJet,
    pub g_inv: Mat,
    pub connection: ConnectionPoint,
}

impl PointGeometry {
    pub fn at(field: &dyn MetricField, x: &[f64]) -> Result<Self> {
        let jet = field.jet(x)?;
        Self::from_jet(jet, x)
    }

    pub fn from_jet(metric: MatrixJet, x: &[f64]) -> Result<Self> {
        let det = metric.value.determinant();
        if !(det.abs() > SINGULAR_METRIC_TOL) {
            return Err(Error::SingularMetric { det });
        }
        let g_inv = metric.value.clone().try_inverse().ok_or(Error::SingularMetric { det })?;
        let connection = connection_from_jet(&metric, &g_inv, x);
        Ok(Self { metric, g_inv, connection })
    }

    pub fn dim(&self) -> usize {
        self.connection.n
    }

    pub fn g(&self) -> &Mat {
        &self.metric.value
    }
}

fn connection_from_jet(jet: &MatrixJet, g_inv: &Mat, x: &[f64]) -> ConnectionPoint {
    let n = jet.size();
    let dg = |k: usize, i: usize, j: usize| jet.d[k][(i, j)];
    let ddg = |l: usize, k: usize, i: usize, j: usize| jet.dd[l * n + k][(i, j)];
    // first-kind symbols C_{mjk} = d_j g_mk + d_k g_mj - d_m g_jk and their derivatives
    let mut c = vec![0.0; n * n * n];
    let mut dc = vec![0.0; n * n * n * n];
    for m in 0..n {
        for j in 0..n {
            for k in 0..n {
                c[(m * n + j) * n + k] = dg(j, m, k) + dg(k, m, j) - dg(m, j, k);
                for l in 0..n {
                    dc[((l * n + m) * n + j) * n + k] = ddg(l, j, m, k) + ddg(l, k, m, j) - ddg(l, m, j, k);
                }
            }
        }
    }
    let mut gamma = vec![0.0; n * n * n];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let s: f64 = (0..n).map(|m| g_inv[(i, m)] * c[(m * n + j) * n + k]).sum();
                gamma[(i * n + j) * n + k] = 0.5 * s;
            }
        }
    }
    let mut d_gamma = vec![0.0; n * n * n * n];
    for l in 0..n {
        let d_inv = -(g_inv * &jet.d[l] * g_inv);
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let mut s = 0.0;
                    for m in 0..n {
                        s += d_inv[(i, m)] * c[(m * n + j) * n + k] + g_inv[(i, m)] * dc[((l * n + m) * n + j) * n + k];
                    }
                    d_gamma[((l * n + i) * n + j) * n + k] = 0.5 * s;
                }
            }
        }
    }
    ConnectionPoint { point: x.to_vec(), n, gamma, d_gamma }
}

pub fn christoffel(field: &dyn MetricField, x: &[f64]) -> Result<ConnectionPoint> {
    Ok(PointGeometry::at(field, x)?.connection)
}

/// `max |nabla_k g_ij|`.
pub fn metricity_residual(geo: &PointGeometry) -> f64 {
    let n = geo.dim();
    let g = geo.g();
    let conn = &geo.connection;
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let mut v = geo.metric.d[k][(i, j)];
                for m in 0..n {
                    v -= conn.gamma(m, k, i) * g[(m, j)] + conn.gamma(m, k, j) * g[(i, m)];
                }
                worst = worst.max(v.abs());
            }
        }
    }
    worst
}

/// The two standard sign conventions for `R^i_{jkl}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CurvatureConvention {
    /// `R^i_{jkl} = d_k Gamma^i_{lj} - d_l Gamma^i_{kj} + Gamma^i_{km} Gamma^m_{lj} - Gamma^i_{lm} Gamma^m_{kj}`.
    Standard,
    /// The negative of [`CurvatureConvention::Standard`].
    Opposite,
}

impl CurvatureConvention {
    pub fn sign(self) -> f64 {
        match self {
            Self::Standard => 1.0,
            Self::Opposite => -1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Standard => "standard",
            Self::Opposite => "opposite",
        }
    }
}

#[derive(Clone, Debug)]
pub struct CurvaturePoint {
    pub convention: CurvatureConvention,
    /// `R^i_{jkl}`.
    pub r_up: PointTensor,
    /// `R_{ij,kl} = g_{i a} R^a_{jkl}`.
    pub r_down: PointTensor,
    pub k_fit: f64,
    pub z_residual: f64,
}

fn riemann_up(conn: &ConnectionPoint, convention: CurvatureConvention) -> PointTensor {
    let n = conn.n;
    let sign = convention.sign();
    let mut r = PointTensor::zeros(n, vec![Up, Down, Down, Down]);
    let data = r.data_mut();
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let mut v = conn.d_gamma(k, i, l, j) - conn.d_gamma(l, i, k, j);
                    for m in 0..n {
                        v += conn.gamma(i, k, m) * conn.gamma(m, l, j) - conn.gamma(i, l, m) * conn.gamma(m, k, j);
                    }
                    data[((i * n + j) * n + k) * n + l] = sign * v;
                }
            }
        }
    }
    r
}

fn lower_first(r_up: &PointTensor, g: &Mat) -> PointTensor {
    let n = r_up.dim();
    let mut r = PointTensor::zeros(n, vec![Down; 4]);
    let src = r_up.data();
    let n3 = n * n * n;
    let data = r.data_mut();
    for i in 0..n {
        for rest in 0..n3 {
            data[i * n3 + rest] = (0..n).map(|a| g[(i, a)] * src[a * n3 + rest]).sum();
        }
    }
    r
}

pub fn riemann_with(geo: &PointGeometry, convention: CurvatureConvention) -> Result<CurvaturePoint> {
    let r_up = riemann_up(&geo.connection, convention);
    let r_down = lower_first(&r_up, geo.g());
    let (k_fit, z_residual) = fit_constant_curvature_raw(&r_down, geo.g())?;
    Ok(CurvaturePoint { convention, r_up, r_down, k_fit, z_residual })
}

/// Curvature at a point in the pinned convention.
pub fn riemann(field: &dyn MetricField, x: &[f64]) -> Result<CurvaturePoint> {
    riemann_with(&PointGeometry::at(field, x)?, pinned_convention())
}

pub fn riemann_at(geo: &PointGeometry) -> Result<CurvaturePoint> {
    riemann_with(geo, pinned_convention())
}

/// Convention in which `a_{ij,kl} - a_{ij,lk} = a_{ia} R^a_{jkl} + a_{aj} R^a_{ikl}`
/// holds, selected once by [`calibrate_convention`].
pub fn pinned_convention() -> CurvatureConvention {
    static PINNED: OnceLock<CurvatureConvention> = OnceLock::new();
    *PINNED.get_or_init(|| calibrate_convention().0)
}

/// Evaluate the Ricci identity for a fixed non-symmetric-looking (0,2)
/// field on a curved metric under both conventions and return the one
/// that satisfies it, with both residuals.
pub fn calibrate_convention() -> (CurvatureConvention, f64, f64) {
    let field = crate::metric::make_constant_curvature(1.0, &[1.0, 1.0, 1.0]).expect("valid family");
    let x = [0.3, 0.1, -0.2];
    let geo = PointGeometry::at(&field, &x).expect("point in domain");
    let a = calibration_field(&x);
    let r_std = ricci_identity_residual(&geo, &a, CurvatureConvention::Standard).expect("valid geometry");
    let r_opp = ricci_identity_residual(&geo, &a, CurvatureConvention::Opposite).expect("valid geometry");
    let pick = if r_std <= r_opp { CurvatureConvention::Standard } else { CurvatureConvention::Opposite };
    (pick, r_std, r_opp)
}

// a_ij = delta_ij + x_i x_j + x_i, exact jet
fn calibration_field(x: &[f64]) -> MatrixJet {
    let n = x.len();
    let mut jet = MatrixJet::constant(n, Mat::identity(n, n));
    for i in 0..n {
        for j in 0..n {
            jet.value[(i, j)] += x[i] * x[j] + x[i];
        }
    }
    for k in 0..n {
        for i in 0..n {
            jet.d[k][(i, k)] += x[i];
            jet.d[k][(k, i)] += x[i];
            for j in 0..n {
                if i == k {
                    jet.d[k][(i, j)] += 1.0;
                }
            }
        }
        for l in 0..n {
            jet.dd[k * n + l][(k, l)] += 1.0;
            jet.dd[k * n + l][(l, k)] += 1.0;
        }
    }
    jet
}

/// `max | a_{ij,kl} - a_{ij,lk} - (a_{ia} R^a_{jkl} + a_{aj} R^a_{ikl}) |`.
pub fn ricci_identity_residual(geo: &PointGeometry, a: &MatrixJet, convention: CurvatureConvention) -> Result<f64> {
    let n = geo.dim();
    let second = second_covariant_02(a, &geo.connection);
    let r = riemann_up(&geo.connection, convention);
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let lhs = second.get(&[i, j, k, l]) - second.get(&[i, j, l, k]);
                    let mut rhs = 0.0;
                    for al in 0..n {
                        rhs += a.value[(i, al)] * r.get(&[al, j, k, l]) + a.value[(al, j)] * r.get(&[al, i, k, l]);
                    }
                    worst = worst.max((lhs - rhs).abs());
                }
            }
        }
    }
    Ok(worst)
}

/// Residuals of the algebraic curvature symmetries, relative to `max |R|`
/// (absolute when the tensor vanishes).
#[derive(Clone, Copy, Debug, Default)]
pub struct SymmetryReport {
    pub antisym_front: f64,
    pub antisym_back: f64,
    pub pair: f64,
    pub bianchi: f64,
}

impl SymmetryReport {
    pub fn max(&self) -> f64 {
        self.antisym_front.max(self.antisym_back).max(self.pair).max(self.bianchi)
    }
}

pub fn symmetry_residuals(curv: &CurvaturePoint) -> SymmetryReport {
    let r = &curv.r_down;
    let up = &curv.r_up;
    let n = r.dim();
    let scale = r.max_abs().max(1.0);
    let mut rep = SymmetryReport::default();
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let v = r.get(&[i, j, k, l]);
                    rep.antisym_front = rep.antisym_front.max((v + r.get(&[j, i, k, l])).abs());
                    rep.antisym_back = rep.antisym_back.max((v + r.get(&[i, j, l, k])).abs());
                    rep.pair = rep.pair.max((v - r.get(&[k, l, i, j])).abs());
                    let b = up.get(&[i, j, k, l]) + up.get(&[i, k, l, j]) + up.get(&[i, l, j, k]);
                    rep.bianchi = rep.bianchi.max(b.abs());
                }
            }
        }
    }
    rep.antisym_front /= scale;
    rep.antisym_back /= scale;
    rep.pair /= scale;
    rep.bianchi /= up.max_abs().max(1.0);
    rep
}

/// `W_{ijkl} = g_il g_jk - g_ik g_jl`.
pub fn constant_curvature_model(g: &Mat) -> PointTensor {
    let n = g.nrows();
    let mut w = PointTensor::zeros(n, vec![Down; 4]);
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    w.set(&[i, j, k, l], g[(i, l)] * g[(j, k)] - g[(i, k)] * g[(j, l)]);
                }
            }
        }
    }
    w
}

fn fit_constant_curvature_raw(r_down: &PointTensor, g: &Mat) -> Result<(f64, f64)> {
    let w = constant_curvature_model(g);
    let ww = w.dot(&w)?;
    if ww == 0.0 {
        return Err(Error::ZeroSpan);
    }
    let k = r_down.dot(&w)? / ww;
    let residual = r_down.sub(&w.scale(k))?.frobenius();
    Ok((k, residual))
}

/// Least-squares `K` for `Z = R - K W` and the Frobenius norm of `Z`.
pub fn fit_constant_curvature(curv: &CurvaturePoint, g: &Mat) -> Result<(f64, f64)> {
    fit_constant_curvature_raw(&curv.r_down, g)
}

/// `Z_{ijkl} = R_{ij,kl} - K W_{ijkl}`.
pub fn z_tensor(curv: &CurvaturePoint, g: &Mat, k: f64) -> Result<PointTensor> {
    curv.r_down.sub(&constant_curvature_model(g).scale(k))
}

/// Jet of a scalar or covariant 2-tensor field at a point.
#[derive(Clone, Debug)]
pub enum FieldJet {
    Scalar(ScalarJet),
    Covariant2(MatrixJet),
}

/// A tensor field known through its partial derivatives at points.
pub trait TensorSampler {
    /// Highest order of partial derivatives the sampler supplies.
    fn derivative_order(&self) -> usize;

    fn sample(&self, x: &[f64]) -> Result<FieldJet>;
}

/// Sampler backed by exact jets.
pub struct JetSampler<F>(pub F);

impl<F: Fn(&[f64]) -> Result<FieldJet>> TensorSampler for JetSampler<F> {
    fn derivative_order(&self) -> usize {
        2
    }

    fn sample(&self, x: &[f64]) -> Result<FieldJet> {
        (self.0)(x)
    }
}

/// Sampler that knows only the field values and differentiates them
/// numerically.
pub struct FdSampler<F> {
    pub values: F,
    pub scalar: bool,
}

impl<F: Fn(&[f64]) -> Result<Mat> + Send + Sync> TensorSampler for FdSampler<F> {
    fn derivative_order(&self) -> usize {
        2
    }

    fn sample(&self, x: &[f64]) -> Result<FieldJet> {
        let value = (self.values)(x)?;
        let (d, dd) = fd_derivatives(&self.values, x, default_step(x))?;
        let jet = MatrixJet { value, d, dd };
        Ok(if self.scalar { FieldJet::Scalar(jet.entry(0, 0)) } else { FieldJet::Covariant2(jet) })
    }
}

/// Values only; any derivative request fails.
pub struct ValueSampler<F>(pub F);

impl<F: Fn(&[f64]) -> Result<FieldJet>> TensorSampler for ValueSampler<F> {
    fn derivative_order(&self) -> usize {
        0
    }

    fn sample(&self, x: &[f64]) -> Result<FieldJet> {
        (self.0)(x)
    }
}

/// First or second covariant derivative of a sampled field.
pub fn covariant_derivative(sampler: &dyn TensorSampler, conn: &ConnectionPoint, order: usize) -> Result<PointTensor> {
    if order == 0 || order > 2 {
        return Err(Error::InvalidInput(format!("covariant derivative order must be 1 or 2, got {order}")));
    }
    if sampler.derivative_order() < order {
        return Err(Error::MissingDerivatives { requested: order, available: sampler.derivative_order() });
    }
    let jet = sampler.sample(&conn.point)?;
    Ok(match (jet, order) {
        (FieldJet::Scalar(s), 1) => PointTensor::vector(&s.grad, Down),
        (FieldJet::Scalar(s), _) => scalar_hessian(&s, conn),
        (FieldJet::Covariant2(m), 1) => first_covariant_02(&m, conn),
        (FieldJet::Covariant2(m), _) => second_covariant_02(&m, conn),
    })
}

/// `lambda_{,ij} = d_i d_j lambda - Gamma^m_{ij} d_m lambda`.
pub fn scalar_hessian(s: &ScalarJet, conn: &ConnectionPoint) -> PointTensor {
    let n = conn.n;
    let mut h = PointTensor::zeros(n, vec![Down, Down]);
    for i in 0..n {
        for j in 0..n {
            let corr: f64 = (0..n).map(|m| conn.gamma(m, i, j) * s.grad[m]).sum();
            h.set(&[i, j], s.h(i, j) - corr);
        }
    }
    h
}

/// `a_{ij,k}`.
pub fn first_covariant_02(a: &MatrixJet, conn: &ConnectionPoint) -> PointTensor {
    let n = conn.n;
    let mut t = PointTensor::zeros(n, vec![Down; 3]);
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let mut v = a.d[k][(i, j)];
                for m in 0..n {
                    v -= conn.gamma(m, k, i) * a.value[(m, j)] + conn.gamma(m, k, j) * a.value[(i, m)];
                }
                t.set(&[i, j, k], v);
            }
        }
    }
    t
}

/// `a_{ij,kl}`.
pub fn second_covariant_02(a: &MatrixJet, conn: &ConnectionPoint) -> PointTensor {
    let n = conn.n;
    let t = first_covariant_02(a, conn);
    // d_l of the first covariant derivative
    let mut dt = vec![0.0; n * n * n * n];
    for l in 0..n {
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let mut v = a.dd[l * n + k][(i, j)];
                    for m in 0..n {
                        v -= conn.d_gamma(l, m, k, i) * a.value[(m, j)]
                            + conn.gamma(m, k, i) * a.d[l][(m, j)]
                            + conn.d_gamma(l, m, k, j) * a.value[(i, m)]
                            + conn.gamma(m, k, j) * a.d[l][(i, m)];
                    }
                    dt[((i * n + j) * n + k) * n + l] = v;
                }
            }
        }
    }
    let mut out = PointTensor::zeros(n, vec![Down; 4]);
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let mut v = dt[((i * n + j) * n + k) * n + l];
                    for m in 0..n {
                        v -= conn.gamma(m, l, i) * t.get(&[m, j, k])
                            + conn.gamma(m, l, j) * t.get(&[i, m, k])
                            + conn.gamma(m, l, k) * t.get(&[i, j, m]);
                    }
                    out.set(&[i, j, k, l], v);
                }
            }
        }
    }
    out
}
