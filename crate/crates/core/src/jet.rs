//! Second-order jets: a value together with its first and second partial
//! derivatives with respect to the chart coordinates.
//!
//! Jets compose through products, inverses, determinants and smooth scalar
//! functions by the chain rule, which gives analytic derivatives of the
//! Sinjukov tensor and of `lambda` without finite differencing.

use crate::linalg::Mat;

/// Scalar function value with gradient and Hessian (row-major `vars x vars`).
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarJet {
    pub value: f64,
    pub grad: Vec<f64>,
    pub hess: Vec<f64>,
}

impl ScalarJet {
    pub fn constant(vars: usize, value: f64) -> Self {
        Self { value, grad: vec![0.0; vars], hess: vec![0.0; vars * vars] }
    }

    /// The coordinate function `x_k`.
    pub fn coordinate(vars: usize, k: usize, value: f64) -> Self {
        let mut j = Self::constant(vars, value);
        j.grad[k] = 1.0;
        j
    }

    pub fn vars(&self) -> usize {
        self.grad.len()
    }

    pub fn h(&self, k: usize, l: usize) -> f64 {
        self.hess[k * self.vars() + l]
    }

    pub fn add(&self, o: &ScalarJet) -> ScalarJet {
        ScalarJet {
            value: self.value + o.value,
            grad: self.grad.iter().zip(&o.grad).map(|(a, b)| a + b).collect(),
            hess: self.hess.iter().zip(&o.hess).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, o: &ScalarJet) -> ScalarJet {
        self.add(&o.scale(-1.0))
    }

    pub fn scale(&self, s: f64) -> ScalarJet {
        ScalarJet {
            value: s * self.value,
            grad: self.grad.iter().map(|x| s * x).collect(),
            hess: self.hess.iter().map(|x| s * x).collect(),
        }
    }

    pub fn mul(&self, o: &ScalarJet) -> ScalarJet {
        let n = self.vars();
        let mut hess = vec![0.0; n * n];
        for k in 0..n {
            for l in 0..n {
                hess[k * n + l] = self.h(k, l) * o.value
                    + self.grad[k] * o.grad[l]
                    + self.grad[l] * o.grad[k]
                    + self.value * o.h(k, l);
            }
        }
        ScalarJet {
            value: self.value * o.value,
            grad: (0..n).map(|k| self.grad[k] * o.value + self.value * o.grad[k]).collect(),
            hess,
        }
    }

    /// `f(self)` given `f`, `f'` and `f''` at the current value.
    pub fn compose(&self, f: f64, df: f64, d2f: f64) -> ScalarJet {
        let n = self.vars();
        let mut hess = vec![0.0; n * n];
        for k in 0..n {
            for l in 0..n {
                hess[k * n + l] = d2f * self.grad[k] * self.grad[l] + df * self.h(k, l);
            }
        }
        ScalarJet { value: f, grad: self.grad.iter().map(|g| df * g).collect(), hess }
    }

    pub fn recip(&self) -> ScalarJet {
        let v = self.value;
        self.compose(1.0 / v, -1.0 / (v * v), 2.0 / (v * v * v))
    }

    pub fn exp(&self) -> ScalarJet {
        let e = self.value.exp();
        self.compose(e, e, e)
    }

    pub fn powi(&self, p: i32) -> ScalarJet {
        let v = self.value;
        let pf = p as f64;
        self.compose(v.powi(p), pf * v.powi(p - 1), pf * (pf - 1.0) * v.powi(p - 2))
    }
}

/// Square-matrix valued jet.
#[derive(Clone, Debug, PartialEq)]
pub struct MatrixJet {
    pub value: Mat,
    /// `d[k]` is the partial derivative along coordinate `k`.
    pub d: Vec<Mat>,
    /// `dd[k * vars + l]` is the mixed second partial.
    pub dd: Vec<Mat>,
}

impl MatrixJet {
    pub fn constant(vars: usize, value: Mat) -> Self {
        let (r, c) = value.shape();
        Self { value, d: vec![Mat::zeros(r, c); vars], dd: vec![Mat::zeros(r, c); vars * vars] }
    }

    pub fn vars(&self) -> usize {
        self.d.len()
    }

    pub fn size(&self) -> usize {
        self.value.nrows()
    }

    pub fn second(&self, k: usize, l: usize) -> &Mat {
        &self.dd[k * self.vars() + l]
    }

    /// Assemble a diagonal matrix jet from scalar jets.
    pub fn diagonal(entries: &[ScalarJet]) -> Self {
        let m = entries.len();
        let vars = entries[0].vars();
        let mut j = Self::constant(vars, Mat::zeros(m, m));
        for (i, e) in entries.iter().enumerate() {
            j.value[(i, i)] = e.value;
            for k in 0..vars {
                j.d[k][(i, i)] = e.grad[k];
                for l in 0..vars {
                    j.dd[k * vars + l][(i, i)] = e.h(k, l);
                }
            }
        }
        j
    }

    /// Scalar jet of one matrix entry.
    pub fn entry(&self, i: usize, j: usize) -> ScalarJet {
        ScalarJet {
            value: self.value[(i, j)],
            grad: self.d.iter().map(|m| m[(i, j)]).collect(),
            hess: self.dd.iter().map(|m| m[(i, j)]).collect(),
        }
    }

    pub fn mul(&self, o: &MatrixJet) -> MatrixJet {
        let n = self.vars();
        let d = (0..n).map(|k| &self.d[k] * &o.value + &self.value * &o.d[k]).collect();
        let mut dd = Vec::with_capacity(n * n);
        for k in 0..n {
            for l in 0..n {
                dd.push(
                    self.second(k, l) * &o.value
                        + &self.d[k] * &o.d[l]
                        + &self.d[l] * &o.d[k]
                        + &self.value * o.second(k, l),
                );
            }
        }
        MatrixJet { value: &self.value * &o.value, d, dd }
    }

    pub fn scale_by(&self, s: &ScalarJet) -> MatrixJet {
        let n = self.vars();
        let d = (0..n).map(|k| &self.d[k] * s.value + &self.value * s.grad[k]).collect();
        let mut dd = Vec::with_capacity(n * n);
        for k in 0..n {
            for l in 0..n {
                dd.push(
                    self.second(k, l) * s.value
                        + &self.d[k] * s.grad[l]
                        + &self.d[l] * s.grad[k]
                        + &self.value * s.h(k, l),
                );
            }
        }
        MatrixJet { value: &self.value * s.value, d, dd }
    }

    /// Jet of the inverse; `None` when the value is singular.
    pub fn inverse(&self) -> Option<MatrixJet> {
        let inv = self.value.clone().try_inverse()?;
        let n = self.vars();
        let d: Vec<Mat> = (0..n).map(|k| -(&inv * &self.d[k] * &inv)).collect();
        let mut dd = Vec::with_capacity(n * n);
        for k in 0..n {
            for l in 0..n {
                let a = &inv * &self.d[k] * &inv * &self.d[l] * &inv;
                let b = &inv * &self.d[l] * &inv * &self.d[k] * &inv;
                let c = &inv * self.second(k, l) * &inv;
                dd.push(a + b - c);
            }
        }
        Some(MatrixJet { value: inv, d, dd })
    }

    /// Jet of `ln |det|`; `None` when the value is singular.
    pub fn log_abs_det(&self) -> Option<ScalarJet> {
        let det = self.value.determinant();
        let inv = self.value.clone().try_inverse()?;
        if det == 0.0 {
            return None;
        }
        let n = self.vars();
        let p: Vec<Mat> = self.d.iter().map(|dk| &inv * dk).collect();
        let grad = p.iter().map(|m| m.trace()).collect();
        let mut hess = vec![0.0; n * n];
        for k in 0..n {
            for l in 0..n {
                hess[k * n + l] = (&inv * self.second(k, l)).trace() - (&p[l] * &p[k]).trace();
            }
        }
        Some(ScalarJet { value: det.abs().ln(), grad, hess })
    }

    pub fn trace(&self) -> ScalarJet {
        ScalarJet {
            value: self.value.trace(),
            grad: self.d.iter().map(|m| m.trace()).collect(),
            hess: self.dd.iter().map(|m| m.trace()).collect(),
        }
    }

    pub fn transpose(&self) -> MatrixJet {
        MatrixJet {
            value: self.value.transpose(),
            d: self.d.iter().map(|m| m.transpose()).collect(),
            dd: self.dd.iter().map(|m| m.transpose()).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // f(x, y) as a jet at (x0, y0), built from coordinate jets
    fn xy(x0: f64, y0: f64) -> (ScalarJet, ScalarJet) {
        (ScalarJet::coordinate(2, 0, x0), ScalarJet::coordinate(2, 1, y0))
    }

    #[test]
    fn product_rule_on_polynomial() {
        // f = x^2 y at (2, 3): f_x = 2xy = 12, f_y = x^2 = 4, f_xx = 2y = 6, f_xy = 2x = 4
        let (x, y) = xy(2.0, 3.0);
        let f = x.mul(&x).mul(&y);
        assert_eq!(f.value, 12.0);
        assert_eq!(f.grad, vec![12.0, 4.0]);
        assert_eq!(f.hess, vec![6.0, 4.0, 4.0, 0.0]);
    }

    #[test]
    fn reciprocal_and_exp() {
        // 1/x at x=2: -1/4, 2/8
        let (x, _) = xy(2.0, 0.0);
        let r = x.recip();
        assert!((r.grad[0] + 0.25).abs() < 1e-15);
        assert!((r.h(0, 0) - 0.25).abs() < 1e-15);
        let e = x.scale(0.5).exp();
        assert!((e.h(0, 0) - 0.25 * 1f64.exp()).abs() < 1e-14);
    }

    #[test]
    fn inverse_and_log_det_against_closed_form() {
        // M = diag(x, y): inverse diag(1/x, 1/y); ln det = ln x + ln y
        let (x, y) = xy(2.0, 5.0);
        let m = MatrixJet::diagonal(&[x.clone(), y.clone()]);
        let inv = m.inverse().unwrap();
        let rx = x.recip();
        assert!((inv.second(0, 0)[(0, 0)] - rx.h(0, 0)).abs() < 1e-15);
        let ld = m.log_abs_det().unwrap();
        assert!((ld.grad[0] - 0.5).abs() < 1e-15);
        assert!((ld.h(1, 1) + 1.0 / 25.0).abs() < 1e-15);
        assert!(ld.h(0, 1).abs() < 1e-15);
    }

    #[test]
    fn inverse_jet_times_jet_is_constant_identity() {
        let (x, y) = xy(0.7, -1.3);
        let a = x.mul(&y).add(&ScalarJet::constant(2, 3.0));
        let b = x.powi(3);
        let c = y.exp();
        let mut m = MatrixJet::diagonal(&[a.clone(), c.clone()]);
        // off-diagonal entries
        m.value[(0, 1)] = b.value;
        for k in 0..2 {
            m.d[k][(0, 1)] = b.grad[k];
            for l in 0..2 {
                m.dd[k * 2 + l][(0, 1)] = b.h(k, l);
            }
        }
        let prod = m.mul(&m.inverse().unwrap());
        assert!((prod.value - Mat::identity(2, 2)).norm() < 1e-13);
        for d in prod.d.iter().chain(prod.dd.iter()) {
            assert!(d.norm() < 1e-12);
        }
    }
}
