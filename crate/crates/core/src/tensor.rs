//! Dense tensors at a single point.
//!
//! A [`PointTensor`] stores the `n^k` components of a rank-`k` tensor in
//! row-major order together with the variance of every slot. All objects the
//! crate works with (metrics, Christoffel symbols, curvature, Sinjukov
//! tensors, Hessians) are small, so the storage is a flat `Vec<f64>`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Threshold on `|det g|` below which a metric is treated as singular.
pub const SINGULAR_METRIC_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Variance {
    Covariant,
    Contravariant,
}

impl Variance {
    pub fn flipped(self) -> Self {
        match self {
            Variance::Covariant => Variance::Contravariant,
            Variance::Contravariant => Variance::Covariant,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SymMode {
    Symmetrize,
    Alternate,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PointTensor {
    dim: usize,
    variances: Vec<Variance>,
    data: Vec<f64>,
}

impl PointTensor {
    pub fn new(dim: usize, variances: Vec<Variance>, data: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput("dimension must be positive".into()));
        }
        let expected = dim.pow(variances.len() as u32);
        if data.len() != expected {
            return Err(Error::ShapeMismatch { expected, got: data.len() });
        }
        Ok(Self { dim, variances, data })
    }

    pub fn zeros(dim: usize, variances: Vec<Variance>) -> Self {
        let len = dim.pow(variances.len() as u32);
        Self { dim, variances, data: vec![0.0; len] }
    }

    pub fn scalar(dim: usize, value: f64) -> Self {
        Self { dim, variances: Vec::new(), data: vec![value] }
    }

    pub fn vector(values: &[f64], variance: Variance) -> Self {
        Self { dim: values.len(), variances: vec![variance], data: values.to_vec() }
    }

    /// Kronecker delta as a (1,1) tensor.
    pub fn identity(dim: usize) -> Self {
        let mut t = Self::zeros(dim, vec![Variance::Contravariant, Variance::Covariant]);
        for i in 0..dim {
            t.data[i * dim + i] = 1.0;
        }
        t
    }

    /// Rank-2 tensor from a square matrix; row index is the first slot.
    pub fn from_matrix(m: &DMatrix<f64>, first: Variance, second: Variance) -> Self {
        assert_eq!(m.nrows(), m.ncols(), "rank-2 tensor needs a square matrix");
        let n = m.nrows();
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(m[(i, j)]);
            }
        }
        Self { dim: n, variances: vec![first, second], data }
    }

    pub fn to_matrix(&self) -> Result<DMatrix<f64>> {
        if self.rank() != 2 {
            return Err(Error::IndexMismatch(format!("to_matrix needs rank 2, got {}", self.rank())));
        }
        Ok(DMatrix::from_row_slice(self.dim, self.dim, &self.data))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rank(&self) -> usize {
        self.variances.len()
    }

    pub fn variances(&self) -> &[Variance] {
        &self.variances
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn offset(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.rank());
        idx.iter().fold(0, |acc, &i| acc * self.dim + i)
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.data[self.offset(idx)]
    }

    pub fn set(&mut self, idx: &[usize], value: f64) {
        let o = self.offset(idx);
        self.data[o] = value;
    }

    /// Value of a rank-0 tensor.
    pub fn value(&self) -> f64 {
        debug_assert_eq!(self.rank(), 0);
        self.data[0]
    }

    fn unravel(&self, mut flat: usize, out: &mut [usize]) {
        for slot in out.iter_mut().rev() {
            *slot = flat % self.dim;
            flat /= self.dim;
        }
    }

    /// Sum over a paired upper/lower index.
    pub fn contract(&self, i: usize, j: usize) -> Result<PointTensor> {
        let rank = self.rank();
        if i == j || i >= rank || j >= rank {
            return Err(Error::IndexMismatch(format!("cannot contract slots {i} and {j} of a rank-{rank} tensor")));
        }
        if self.variances[i] == self.variances[j] {
            return Err(Error::IndexMismatch(format!("slots {i} and {j} have the same variance")));
        }
        let kept: Vec<usize> = (0..rank).filter(|&p| p != i && p != j).collect();
        let mut out = PointTensor::zeros(self.dim, kept.iter().map(|&p| self.variances[p]).collect());
        let mut res_idx = vec![0; kept.len()];
        let mut full = vec![0; rank];
        for flat in 0..out.data.len() {
            out.unravel(flat, &mut res_idx);
            for (slot, &p) in kept.iter().enumerate() {
                full[p] = res_idx[slot];
            }
            let mut sum = 0.0;
            for a in 0..self.dim {
                full[i] = a;
                full[j] = a;
                sum += self.get(&full);
            }
            out.data[flat] = sum;
        }
        Ok(out)
    }

    /// Move slot `idx` to variance `to` using the covariant metric `g`
    /// (lowering) or its inverse (raising).
    pub fn raise_lower(&self, idx: usize, g: &PointTensor, to: Variance) -> Result<PointTensor> {
        if idx >= self.rank() {
            return Err(Error::IndexMismatch(format!("slot {idx} out of range")));
        }
        if g.rank() != 2 || g.dim != self.dim || g.variances != [Variance::Covariant, Variance::Covariant] {
            return Err(Error::IndexMismatch("metric must be a (0,2) tensor of equal dimension".into()));
        }
        if self.variances[idx] == to {
            return Ok(self.clone());
        }
        let gm = g.to_matrix()?;
        let det = gm.determinant();
        if det.abs() < SINGULAR_METRIC_TOL {
            return Err(Error::SingularMetric { det });
        }
        let m = match to {
            Variance::Covariant => gm,
            Variance::Contravariant => gm.try_inverse().ok_or(Error::SingularMetric { det })?,
        };
        let mut out = self.clone();
        out.variances[idx] = to;
        let mut full = vec![0; self.rank()];
        for flat in 0..out.data.len() {
            out.unravel(flat, &mut full);
            let target = full[idx];
            let mut sum = 0.0;
            for a in 0..self.dim {
                full[idx] = a;
                sum += m[(target, a)] * self.get(&full);
            }
            out.data[flat] = sum;
        }
        Ok(out)
    }

    /// Symmetrize or alternate over the listed slots (normalized, so the
    /// operation is idempotent).
    pub fn sym_alt(&self, indices: &[usize], mode: SymMode) -> Result<PointTensor> {
        if indices.is_empty() {
            return Ok(self.clone());
        }
        for &p in indices {
            if p >= self.rank() {
                return Err(Error::IndexMismatch(format!("slot {p} out of range")));
            }
        }
        let v0 = self.variances[indices[0]];
        if indices.iter().any(|&p| self.variances[p] != v0) {
            return Err(Error::IndexMismatch("mixed variances in symmetrization".into()));
        }
        let mut sorted = indices.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != indices.len() {
            return Err(Error::IndexMismatch("repeated slot in symmetrization".into()));
        }
        let perms = permutations(indices.len());
        let weight = 1.0 / perms.len() as f64;
        let mut out = PointTensor::zeros(self.dim, self.variances.clone());
        let mut full = vec![0; self.rank()];
        let mut src = vec![0; self.rank()];
        for flat in 0..out.data.len() {
            out.unravel(flat, &mut full);
            let mut sum = 0.0;
            for (perm, sign) in &perms {
                src.copy_from_slice(&full);
                for (q, &p) in indices.iter().enumerate() {
                    src[p] = full[indices[perm[q]]];
                }
                let s = match mode {
                    SymMode::Symmetrize => 1.0,
                    SymMode::Alternate => *sign,
                };
                sum += s * self.get(&src);
            }
            out.data[flat] = weight * sum;
        }
        Ok(out)
    }

    /// Tensor product; slots of `self` come first.
    pub fn outer(&self, other: &PointTensor) -> Result<PointTensor> {
        if self.dim != other.dim {
            return Err(Error::IndexMismatch("dimension mismatch in outer product".into()));
        }
        let mut variances = self.variances.clone();
        variances.extend_from_slice(&other.variances);
        let mut data = Vec::with_capacity(self.data.len() * other.data.len());
        for &x in &self.data {
            for &y in &other.data {
                data.push(x * y);
            }
        }
        Ok(PointTensor { dim: self.dim, variances, data })
    }

    /// Reorder slots: slot `p` of the result is slot `perm[p]` of `self`.
    pub fn permute(&self, perm: &[usize]) -> Result<PointTensor> {
        let rank = self.rank();
        let mut seen = vec![false; rank];
        if perm.len() != rank || perm.iter().any(|&p| p >= rank || std::mem::replace(&mut seen[p], true)) {
            return Err(Error::IndexMismatch(format!("{perm:?} is not a permutation of {rank} slots")));
        }
        let variances = perm.iter().map(|&p| self.variances[p]).collect();
        let mut out = PointTensor::zeros(self.dim, variances);
        let mut idx = vec![0; rank];
        let mut src = vec![0; rank];
        for flat in 0..out.data.len() {
            out.unravel(flat, &mut idx);
            for (q, &p) in perm.iter().enumerate() {
                src[p] = idx[q];
            }
            out.data[flat] = self.get(&src);
        }
        Ok(out)
    }

    fn check_same_shape(&self, other: &PointTensor) -> Result<()> {
        if self.dim != other.dim || self.variances != other.variances {
            return Err(Error::IndexMismatch("tensors have different shapes".into()));
        }
        Ok(())
    }

    pub fn add(&self, other: &PointTensor) -> Result<PointTensor> {
        self.check_same_shape(other)?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        Ok(PointTensor { dim: self.dim, variances: self.variances.clone(), data })
    }

    pub fn sub(&self, other: &PointTensor) -> Result<PointTensor> {
        self.check_same_shape(other)?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Ok(PointTensor { dim: self.dim, variances: self.variances.clone(), data })
    }

    pub fn scale(&self, s: f64) -> PointTensor {
        PointTensor {
            dim: self.dim,
            variances: self.variances.clone(),
            data: self.data.iter().map(|x| s * x).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// Component-wise inner product of equally shaped tensors.
    pub fn dot(&self, other: &PointTensor) -> Result<f64> {
        self.check_same_shape(other)?;
        Ok(self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum())
    }
}

/// All permutations of `0..k` with their signs.
fn permutations(k: usize) -> Vec<(Vec<usize>, f64)> {
    fn rec(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<(Vec<usize>, f64)>) {
        let k = used.len();
        if prefix.len() == k {
            let mut inversions = 0;
            for a in 0..k {
                for b in a + 1..k {
                    if prefix[a] > prefix[b] {
                        inversions += 1;
                    }
                }
            }
            let sign = if inversions % 2 == 0 { 1.0 } else { -1.0 };
            out.push((prefix.clone(), sign));
            return;
        }
        for v in 0..k {
            if !used[v] {
                used[v] = true;
                prefix.push(v);
                rec(prefix, used, out);
                prefix.pop();
                used[v] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::with_capacity(k), &mut vec![false; k], &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use Variance::{Contravariant as Up, Covariant as Down};

    #[test]
    fn trace_of_identity() {
        let t = PointTensor::identity(3).contract(0, 1).unwrap();
        assert_eq!(t.rank(), 0);
        assert_eq!(t.value(), 3.0);
    }

    #[test]
    fn dot_product_by_contraction() {
        let v = PointTensor::vector(&[1.0, 2.0], Up);
        let w = PointTensor::vector(&[3.0, 4.0], Down);
        let s = v.outer(&w).unwrap().contract(0, 1).unwrap();
        assert_eq!(s.value(), 11.0);
    }

    #[test]
    fn trace_of_diagonal_operator() {
        let g = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 2.0, 3.0]));
        let t = PointTensor::from_matrix(&g, Up, Down);
        assert_eq!(t.contract(0, 1).unwrap().value(), 6.0);
    }

    #[test]
    fn contraction_rejects_equal_variances_and_bad_slots() {
        let t = PointTensor::zeros(2, vec![Down, Down]);
        assert!(matches!(t.contract(0, 1), Err(Error::IndexMismatch(_))));
        let t = PointTensor::identity(2);
        assert!(matches!(t.contract(0, 0), Err(Error::IndexMismatch(_))));
        assert!(matches!(t.contract(0, 2), Err(Error::IndexMismatch(_))));
    }

    #[test]
    fn lowering_with_lorentzian_metric() {
        let g = PointTensor::from_matrix(
            &DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 1.0, -1.0])),
            Down,
            Down,
        );
        let v = PointTensor::vector(&[1.0, 0.0, 0.0], Up);
        assert_eq!(v.raise_lower(0, &g, Down).unwrap().data(), &[1.0, 0.0, 0.0]);
        let v = PointTensor::vector(&[0.0, 0.0, 1.0], Up);
        assert_eq!(v.raise_lower(0, &g, Down).unwrap().data(), &[0.0, 0.0, -1.0]);
    }

    #[test]
    fn singular_metric_is_rejected() {
        let g = PointTensor::zeros(2, vec![Down, Down]);
        let v = PointTensor::vector(&[1.0, 0.0], Down);
        assert!(matches!(v.raise_lower(0, &g, Up), Err(Error::SingularMetric { .. })));
    }

    #[test]
    fn symmetrize_and_alternate() {
        let sym = PointTensor::new(2, vec![Down, Down], vec![1.0, 2.0, 2.0, 5.0]).unwrap();
        let alt = sym.sym_alt(&[0, 1], SymMode::Alternate).unwrap();
        assert_eq!(alt.max_abs(), 0.0);

        let skew = PointTensor::new(2, vec![Down, Down], vec![0.0, 3.0, -3.0, 0.0]).unwrap();
        assert_eq!(skew.sym_alt(&[0, 1], SymMode::Symmetrize).unwrap().max_abs(), 0.0);

        let t = PointTensor::new(2, vec![Down, Down], vec![0.0, 2.0, 0.0, 0.0]).unwrap();
        let s = t.sym_alt(&[0, 1], SymMode::Symmetrize).unwrap();
        assert_eq!(s.data(), &[0.0, 1.0, 1.0, 0.0]);
    }

    #[test]
    fn sym_alt_rejects_mixed_variances() {
        let t = PointTensor::identity(3);
        assert!(matches!(t.sym_alt(&[0, 1], SymMode::Symmetrize), Err(Error::IndexMismatch(_))));
    }

    #[test]
    fn shape_is_validated() {
        assert!(matches!(
            PointTensor::new(3, vec![Down, Down], vec![0.0; 8]),
            Err(Error::ShapeMismatch { expected: 9, got: 8 })
        ));
    }

    #[test]
    fn permute_swaps_slots() {
        let t = PointTensor::new(2, vec![Up, Down], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let p = t.permute(&[1, 0]).unwrap();
        assert_eq!(p.variances(), &[Down, Up]);
        assert_eq!(p.data(), &[1.0, 3.0, 2.0, 4.0]);
        assert!(t.permute(&[0, 0]).is_err());
    }
}
