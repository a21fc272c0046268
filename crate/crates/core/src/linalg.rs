//! Small dense linear-algebra helpers: SVD ranks, least squares, adjugates
//! and Krylov degrees.

use nalgebra::{DMatrix, DVector};

pub type Mat = DMatrix<f64>;

/// Singular-value summary of a matrix.
#[derive(Clone, Debug)]
pub struct RankInfo {
    pub rank: usize,
    /// Singular values in decreasing order.
    pub singular_values: Vec<f64>,
    /// Smallest singular value above the threshold (0 when the rank is 0).
    pub smallest_retained: f64,
    /// Largest singular value below the threshold (0 when none).
    pub largest_dropped: f64,
}

impl RankInfo {
    pub fn sigma_max(&self) -> f64 {
        self.singular_values.first().copied().unwrap_or(0.0)
    }

    /// Ratio of the largest to the smallest retained singular value.
    pub fn condition(&self) -> f64 {
        if self.rank == 0 {
            f64::INFINITY
        } else {
            self.sigma_max() / self.smallest_retained
        }
    }
}

/// Numerical rank with threshold `rel_tol * sigma_max`.
pub fn numerical_rank(m: &Mat, rel_tol: f64) -> RankInfo {
    let mut sv: Vec<f64> = if m.nrows() == 0 || m.ncols() == 0 {
        Vec::new()
    } else {
        m.clone().svd(false, false).singular_values.iter().copied().collect()
    };
    sv.sort_by(|a, b| b.total_cmp(a));
    let sigma_max = sv.first().copied().unwrap_or(0.0);
    let threshold = rel_tol * sigma_max;
    let rank = if sigma_max == 0.0 { 0 } else { sv.iter().filter(|&&s| s > threshold).count() };
    let smallest_retained = if rank == 0 { 0.0 } else { sv[rank - 1] };
    let largest_dropped = sv.get(rank).copied().unwrap_or(0.0);
    RankInfo { rank, singular_values: sv, smallest_retained, largest_dropped }
}

/// Orthonormal basis of the numerical null space (columns).
pub fn null_space(m: &Mat, rel_tol: f64) -> Vec<DVector<f64>> {
    let ncols = m.ncols();
    // pad to at least square so that V^T carries the full right basis
    let padded = if m.nrows() < ncols {
        let mut p = Mat::zeros(ncols, ncols);
        p.view_mut((0, 0), (m.nrows(), ncols)).copy_from(m);
        p
    } else {
        m.clone()
    };
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let sigma_max = svd.singular_values.iter().fold(0.0f64, |a, &b| a.max(b));
    let threshold = rel_tol * sigma_max;
    (0..ncols)
        .filter(|&k| sigma_max == 0.0 || svd.singular_values[k] <= threshold)
        .map(|k| v_t.row(k).transpose())
        .collect()
}

/// Minimum-norm least-squares solution of `m x = rhs` with SVD truncation.
/// Returns the solution and the residual norm `|m x - rhs|`.
pub fn lstsq(m: &Mat, rhs: &DVector<f64>, rel_tol: f64) -> (DVector<f64>, f64) {
    let svd = m.clone().svd(true, true);
    let sigma_max = svd.singular_values.iter().fold(0.0f64, |a, &b| a.max(b));
    let x = if sigma_max == 0.0 {
        DVector::zeros(m.ncols())
    } else {
        svd.solve(rhs, rel_tol * sigma_max).expect("U and V^T were computed")
    };
    let residual = (m * &x - rhs).norm();
    (x, residual)
}

/// Characteristic polynomial and Faddeev-LeVerrier matrices of `a`.
///
/// Returns `(c, ms)` with `det(t I - a) = sum_k c[k] t^k` and `ms[k-1] = M_k`,
/// where `M_1 = I`, `M_k = a M_{k-1} + c[n-k+1] I`.
pub fn faddeev_leverrier(a: &Mat) -> (Vec<f64>, Vec<Mat>) {
    let n = a.nrows();
    let id = Mat::identity(n, n);
    let mut c = vec![0.0; n + 1];
    c[n] = 1.0;
    let mut ms = Vec::with_capacity(n);
    let mut m_prev = Mat::zeros(n, n);
    for k in 1..=n {
        let m_k = a * &m_prev + &id * c[n - k + 1];
        c[n - k] = -(a * &m_k).trace() / k as f64;
        ms.push(m_k.clone());
        m_prev = m_k;
    }
    (c, ms)
}

/// Adjugate (transposed cofactor matrix), finite for singular input.
pub fn adjugate(m: &Mat) -> Mat {
    let n = m.nrows();
    if n == 1 {
        return Mat::from_element(1, 1, 1.0);
    }
    let (_, ms) = faddeev_leverrier(m);
    let sign = if n % 2 == 1 { 1.0 } else { -1.0 };
    &ms[n - 1] * sign
}

/// Cofactor expansion; independent of [`adjugate`] and used to cross-check it.
pub fn adjugate_by_cofactors(m: &Mat) -> Mat {
    let n = m.nrows();
    if n == 1 {
        return Mat::from_element(1, 1, 1.0);
    }
    let mut adj = Mat::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let minor = m.clone().remove_row(i).remove_column(j);
            let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
            adj[(j, i)] = sign * minor.determinant();
        }
    }
    adj
}

pub fn commutator(a: &Mat, b: &Mat) -> Mat {
    a * b - b * a
}

/// Degree of the minimal polynomial via the rank of the Krylov family
/// `{I, a, ..., a^n}` viewed as vectors in the n^2-dimensional matrix space.
#[derive(Clone, Debug)]
pub struct MinpolyReport {
    pub degree: usize,
    pub is_strict: bool,
    /// Condition number of the retained part of the Krylov matrix.
    pub condition: f64,
    /// Largest dropped singular value relative to the largest one.
    pub gap: f64,
}

pub fn minpoly_degree(a: &Mat, rel_tol: f64) -> MinpolyReport {
    let n = a.nrows();
    let mut krylov = Mat::zeros(n * n, n + 1);
    let mut power = Mat::identity(n, n);
    for k in 0..=n {
        // column-normalize so that wildly different power scales do not
        // masquerade as rank deficiency
        let norm = power.norm();
        if norm > 0.0 {
            for (r, v) in power.iter().enumerate() {
                krylov[(r, k)] = v / norm;
            }
        }
        power = a * power;
    }
    let info = numerical_rank(&krylov, rel_tol);
    let degree = info.rank;
    MinpolyReport {
        degree,
        is_strict: degree == n,
        condition: info.condition(),
        gap: if info.sigma_max() > 0.0 { info.largest_dropped / info.sigma_max() } else { 0.0 },
    }
}

/// Matrix as a column vector in row-major order.
pub fn vec_of(m: &Mat) -> DVector<f64> {
    let mut v = DVector::zeros(m.nrows() * m.ncols());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            v[i * m.ncols() + j] = m[(i, j)];
        }
    }
    v
}

pub fn max_abs(m: &Mat) -> f64 {
    m.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}
