//! Pointwise consequences of the equivalence equation: the curvature
//! integrability condition, the Hessian of `lambda`, the Z-condition and
//! the skew-kernel test for regular operators.

use rand::Rng;

use crate::equivalence::{sinjukov_tensor, EquivalencePair, SinjukovPoint};
use crate::error::{Error, Result};
use crate::geometry::{riemann_at, z_tensor, CurvaturePoint};
use crate::linalg::{minpoly_degree, null_space, numerical_rank, Mat};
use crate::tensor::PointTensor;

/// Relative SVD threshold of the skew-kernel test.
pub const SKEW_KERNEL_TOL: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct IntegrabilityReport {
    pub point: Vec<f64>,
    pub curvature_condition_residual: f64,
    pub hessian: Option<HessianFit>,
    pub z_condition_residual: Option<f64>,
}

/// `max | a_ia R^a_jkl + a_aj R^a_ikl - (l_li g_jk + l_lj g_ik - l_ki g_jl - l_kj g_il) |`
/// with `l_ij = lambda_{,ij}`.
pub fn curvature_condition_residual_at(s: &SinjukovPoint, curv: &CurvaturePoint) -> f64 {
    let n = s.dim();
    let a = s.a_matrix();
    let g = s.g();
    let h = &s.lambda_hess;
    let r = &curv.r_up;
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let mut lhs = 0.0;
                    for al in 0..n {
                        lhs += a[(i, al)] * r.get(&[al, j, k, l]) + a[(al, j)] * r.get(&[al, i, k, l]);
                    }
                    let rhs = h.get(&[l, i]) * g[(j, k)] + h.get(&[l, j]) * g[(i, k)]
                        - h.get(&[k, i]) * g[(j, l)]
                        - h.get(&[k, j]) * g[(i, l)];
                    worst = worst.max((lhs - rhs).abs());
                }
            }
        }
    }
    worst
}

pub fn curvature_condition_residual(pair: &EquivalencePair, x: &[f64]) -> Result<f64> {
    let s = sinjukov_tensor(pair, x)?;
    let curv = riemann_at(&s.geometry)?;
    Ok(curvature_condition_residual_at(&s, &curv))
}

/// Least-squares fit `lambda_{,ij} = rho g_ij + K a_ij`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HessianFit {
    pub rho: f64,
    pub k: f64,
    pub residual: f64,
    /// Condition number of the two-column system.
    pub condition: f64,
}

/// Relative distance of `a` from the line through `g` below which the span
/// is treated as one-dimensional.
pub const SPAN_TOL: f64 = 1e-10;

pub fn hessian_decomposition(s: &SinjukovPoint) -> Result<HessianFit> {
    fit_hessian(&s.lambda_hess.to_matrix()?, s.g(), &s.a_matrix())
}

pub fn fit_hessian(hess: &Mat, g: &Mat, a: &Mat) -> Result<HessianFit> {
    let scale = g.norm().max(a.norm());
    if hess.norm() <= 1e-14 * scale {
        return Ok(HessianFit { rho: 0.0, k: 0.0, residual: 0.0, condition: f64::NAN });
    }
    let off = a - g * (a.dot(g) / g.dot(g));
    if off.norm() <= SPAN_TOL * a.norm() {
        return Err(Error::DegenerateSpan);
    }
    // normal equations of the 2x2 Gram system
    let gram = Mat::from_row_slice(2, 2, &[g.dot(g), g.dot(a), a.dot(g), a.dot(a)]);
    let rhs = nalgebra::DVector::from_vec(vec![g.dot(hess), a.dot(hess)]);
    let sol = gram.clone().lu().solve(&rhs).ok_or(Error::DegenerateSpan)?;
    let (rho, k) = (sol[0], sol[1]);
    let residual = (hess - g * rho - a * k).norm();
    let sv = gram.singular_values();
    let condition = (sv.max() / sv.min()).sqrt();
    Ok(HessianFit { rho, k, residual, condition })
}

/// `max | a_i^a Z_ajkl + a_j^a Z_aikl |` for a (1,1) operator `a`.
pub fn z_condition_residual_op(a_op: &Mat, curv: &CurvaturePoint, g: &Mat, k: f64) -> Result<f64> {
    let z = z_tensor(curv, g, k)?;
    Ok(z_contraction(a_op, &z).max_abs())
}

fn z_contraction(a_op: &Mat, z: &PointTensor) -> PointTensor {
    let n = z.dim();
    let mut out = PointTensor::zeros(n, z.variances().to_vec());
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let mut v = 0.0;
                    for al in 0..n {
                        v += a_op[(al, i)] * z.get(&[al, j, k, l]) + a_op[(al, j)] * z.get(&[al, i, k, l]);
                    }
                    out.set(&[i, j, k, l], v);
                }
            }
        }
    }
    out
}

pub fn z_condition_residual(s: &SinjukovPoint, curv: &CurvaturePoint, k: f64) -> Result<f64> {
    z_condition_residual_op(&s.a_op_matrix(), curv, s.g(), k)
}

/// Full report at a point; the Hessian fit and the Z-condition are absent
/// when `g` and `a` are proportional there.
pub fn integrability_report(pair: &EquivalencePair, x: &[f64]) -> Result<IntegrabilityReport> {
    let s = sinjukov_tensor(pair, x)?;
    let curv = riemann_at(&s.geometry)?;
    let hessian = match hessian_decomposition(&s) {
        Ok(h) => Some(h),
        Err(Error::DegenerateSpan) => None,
        Err(e) => return Err(e),
    };
    let z_condition_residual = match hessian {
        Some(h) => Some(z_condition_residual(&s, &curv, h.k)?),
        None => None,
    };
    Ok(IntegrabilityReport {
        point: x.to_vec(),
        curvature_condition_residual: curvature_condition_residual_at(&s, &curv),
        hessian,
        z_condition_residual,
    })
}

#[derive(Clone, Debug)]
pub struct SkewKernel {
    pub dim: usize,
    /// A nonzero skew matrix in the kernel, if there is one.
    pub witness: Option<Mat>,
    pub singular_values: Vec<f64>,
}

/// Basis `E_ij - E_ji`, `i < j`.
pub fn skew_basis(n: usize) -> Vec<Mat> {
    let mut out = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            let mut m = Mat::zeros(n, n);
            m[(i, j)] = 1.0;
            m[(j, i)] = -1.0;
            out.push(m);
        }
    }
    out
}

/// Kernel of `Z -> Z a - a^T Z` on skew-symmetric matrices.
pub fn skew_kernel_dimension(a: &Mat) -> SkewKernel {
    let n = a.nrows();
    let basis = skew_basis(n);
    let mut map = Mat::zeros(n * n, basis.len());
    for (c, z) in basis.iter().enumerate() {
        let image = z * a - a.transpose() * z;
        for (r, v) in image.iter().enumerate() {
            map[(r, c)] = *v;
        }
    }
    let info = numerical_rank(&map, SKEW_KERNEL_TOL);
    let dim = basis.len() - info.rank;
    let witness = if dim == 0 {
        None
    } else {
        null_space(&map, SKEW_KERNEL_TOL)
            .first()
            .map(|v| basis.iter().zip(v.iter()).fold(Mat::zeros(n, n), |acc, (b, c)| acc + b * *c))
    };
    SkewKernel { dim, witness, singular_values: info.singular_values }
}

fn random_matrix<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Mat {
    Mat::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0))
}

fn random_invertible<R: Rng + ?Sized>(n: usize, rng: &mut R) -> (Mat, Mat) {
    loop {
        let p = random_matrix(n, rng) + Mat::identity(n, n) * 1.5;
        let sv = p.clone().singular_values();
        if sv.max() / sv.min() < 50.0 {
            let inv = p.clone().try_inverse().expect("well conditioned");
            return (p, inv);
        }
    }
}

/// Random regular matrix. Every third draw carries a 2x2 Jordan block so
/// that nondiagonalizable regular operators are covered too.
pub fn random_nonderogatory<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Mat {
    loop {
        let m = if rng.random_range(0..3) == 0 {
            let (p, p_inv) = random_invertible(n, rng);
            let mut j = Mat::zeros(n, n);
            let mu = rng.random_range(-2.0..2.0);
            j[(0, 0)] = mu;
            j[(1, 1)] = mu;
            j[(0, 1)] = 1.0;
            for k in 2..n {
                j[(k, k)] = mu + (k as f64 - 1.0) * rng.random_range(0.5..1.5);
            }
            p * j * p_inv
        } else {
            random_matrix(n, rng)
        };
        if minpoly_degree(&m, crate::equivalence::MINPOLY_TOL).is_strict {
            return m;
        }
    }
}

/// Random derogatory matrix `P diag(mu, mu, d_3, ..) P^{-1}`.
pub fn random_derogatory<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Mat {
    let (p, p_inv) = random_invertible(n, rng);
    let mu = rng.random_range(-2.0..2.0);
    let mut d = vec![mu, mu];
    for k in 2..n {
        d.push(mu + (k as f64 - 1.0) * rng.random_range(0.5..1.5));
    }
    p * Mat::from_diagonal(&nalgebra::DVector::from_vec(d)) * p_inv
}
