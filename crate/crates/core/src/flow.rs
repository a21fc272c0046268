//! Geodesic flow by fixed-step RK4, conservation checks and the rank test
//! for the integrals `I_t`.

use nalgebra::DVector;

use crate::equivalence::{integral_it_matrix, EquivalencePair};
use crate::error::{Error, Result};
use crate::linalg::{lstsq, numerical_rank, Mat};
use crate::metric::MetricField;

/// Drift above which an integration is rejected as under-resolved.
pub const MAX_ENERGY_DRIFT: f64 = 1e-3;

/// Relative SVD threshold for gradient ranks.
pub const RANK_TOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq)]
pub struct PhaseState {
    pub x: Vec<f64>,
    pub xi: Vec<f64>,
}

impl PhaseState {
    pub fn new(x: Vec<f64>, xi: Vec<f64>) -> Self {
        Self { x, xi }
    }
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub states: Vec<PhaseState>,
    pub times: Vec<f64>,
    pub energy_drift: f64,
    /// Filled by [`integrate_with_integrals`], one entry per `t`.
    pub integral_drifts: Vec<f64>,
}

impl Trajectory {
    pub fn last(&self) -> &PhaseState {
        self.states.last().expect("trajectory holds the start state")
    }
}

/// `-Gamma^i_{jk} xi^j xi^k`, from first derivatives of `g` only.
pub fn geodesic_acceleration(field: &dyn MetricField, x: &[f64], xi: &[f64]) -> Result<Vec<f64>> {
    let jet = field.jet(x)?;
    let n = x.len();
    // first-kind contraction: d_j g_mk xi^j xi^k - 1/2 d_m g_jk xi^j xi^k
    let mut rhs = DVector::zeros(n);
    let v = DVector::from_row_slice(xi);
    let mut dg_xi = Mat::zeros(n, n);
    for j in 0..n {
        dg_xi += &jet.d[j] * xi[j];
    }
    let first = &dg_xi * &v;
    for m in 0..n {
        let quad = (v.transpose() * &jet.d[m] * &v)[(0, 0)];
        rhs[m] = first[m] - 0.5 * quad;
    }
    let det = jet.value.determinant();
    let sol = jet.value.lu().solve(&rhs).ok_or(Error::SingularMetric { det })?;
    Ok(sol.iter().map(|v| -v).collect())
}

fn energy(field: &dyn MetricField, s: &PhaseState) -> Result<f64> {
    let g = field.metric(&s.x)?;
    let v = DVector::from_row_slice(&s.xi);
    Ok((v.transpose() * g * &v)[(0, 0)])
}

fn axpy(a: &[f64], s: f64, b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + s * y).collect()
}

/// Integrate `x' = xi`, `xi' = -Gamma(xi, xi)` over `[0, duration]`.
///
/// The step is shrunk slightly if needed so that it divides `duration`.
pub fn integrate_geodesic(field: &dyn MetricField, start: &PhaseState, duration: f64, h: f64) -> Result<Trajectory> {
    let n = field.dim();
    if start.x.len() != n || start.xi.len() != n {
        return Err(Error::ShapeMismatch { expected: n, got: start.x.len().max(start.xi.len()) });
    }
    if !(h > 0.0) || !(duration >= 0.0) {
        return Err(Error::InvalidInput("step must be positive and duration nonnegative".into()));
    }
    if !field.in_domain(&start.x) {
        return Err(Error::LeftDomain { time: 0.0 });
    }
    let steps = ((duration / h) - 1e-9).ceil().max(0.0) as usize;
    let h = if steps == 0 { 0.0 } else { duration / steps as f64 };
    let e0 = energy(field, start)?;
    let scale = e0.abs().max(1.0);
    let mut states = Vec::with_capacity(steps + 1);
    let mut times = Vec::with_capacity(steps + 1);
    states.push(start.clone());
    times.push(0.0);
    let mut drift = 0.0f64;
    let mut cur = start.clone();
    for step in 0..steps {
        let t = step as f64 * h;
        let left = |stage_x: &[f64]| -> Result<()> {
            if field.in_domain(stage_x) {
                Ok(())
            } else {
                Err(Error::LeftDomain { time: t })
            }
        };
        let k1x = cur.xi.clone();
        let k1v = geodesic_acceleration(field, &cur.x, &cur.xi)?;
        let x2 = axpy(&cur.x, 0.5 * h, &k1x);
        left(&x2)?;
        let k2x = axpy(&cur.xi, 0.5 * h, &k1v);
        let k2v = geodesic_acceleration(field, &x2, &k2x)?;
        let x3 = axpy(&cur.x, 0.5 * h, &k2x);
        left(&x3)?;
        let k3x = axpy(&cur.xi, 0.5 * h, &k2v);
        let k3v = geodesic_acceleration(field, &x3, &k3x)?;
        let x4 = axpy(&cur.x, h, &k3x);
        left(&x4)?;
        let k4x = axpy(&cur.xi, h, &k3v);
        let k4v = geodesic_acceleration(field, &x4, &k4x)?;
        let x: Vec<f64> =
            (0..n).map(|i| cur.x[i] + h / 6.0 * (k1x[i] + 2.0 * k2x[i] + 2.0 * k3x[i] + k4x[i])).collect();
        let xi: Vec<f64> =
            (0..n).map(|i| cur.xi[i] + h / 6.0 * (k1v[i] + 2.0 * k2v[i] + 2.0 * k3v[i] + k4v[i])).collect();
        let t_next = (step + 1) as f64 * h;
        if !field.in_domain(&x) {
            return Err(Error::LeftDomain { time: t_next });
        }
        cur = PhaseState { x, xi };
        drift = drift.max((energy(field, &cur)? - e0).abs() / scale);
        states.push(cur.clone());
        times.push(t_next);
    }
    if drift > MAX_ENERGY_DRIFT {
        return Err(Error::StepTooLarge { drift });
    }
    Ok(Trajectory { states, times, energy_drift: drift, integral_drifts: Vec::new() })
}

/// `I_t` at a phase state.
pub fn integral_at(pair: &EquivalencePair, s: &PhaseState, t: f64) -> Result<f64> {
    let (g, a_op) = pair.operator_at(&s.x)?;
    Ok(integral_it_matrix(&a_op, &g, &s.xi, t))
}

/// Relative drift of each `I_t` along a trajectory of `pair.g`.
pub fn conservation_report(pair: &EquivalencePair, traj: &Trajectory, t_values: &[f64]) -> Result<Vec<f64>> {
    let start = &traj.states[0];
    let mut drifts = Vec::with_capacity(t_values.len());
    let ops: Vec<(Mat, Mat)> = traj.states.iter().map(|s| pair.operator_at(&s.x)).collect::<Result<_>>()?;
    for &t in t_values {
        let i0 = integral_it_matrix(&ops[0].1, &ops[0].0, &start.xi, t);
        let scale = i0.abs().max(1.0);
        let worst = traj
            .states
            .iter()
            .zip(&ops)
            .map(|(s, (g, a))| (integral_it_matrix(a, g, &s.xi, t) - i0).abs() / scale)
            .fold(0.0, f64::max);
        drifts.push(worst);
    }
    Ok(drifts)
}

pub fn integrate_with_integrals(
    pair: &EquivalencePair,
    start: &PhaseState,
    duration: f64,
    h: f64,
    t_values: &[f64],
) -> Result<Trajectory> {
    let mut traj = integrate_geodesic(&*pair.g, start, duration, h)?;
    traj.integral_drifts = conservation_report(pair, &traj, t_values)?;
    Ok(traj)
}

fn check_distinct(t_values: &[f64]) -> Result<()> {
    for (i, a) in t_values.iter().enumerate() {
        if t_values[..i].contains(a) {
            return Err(Error::DuplicateParameter { value: *a });
        }
    }
    Ok(())
}

/// Rows: central-difference gradients of `I_t` in `(x, xi)`.
pub fn integral_gradients(pair: &EquivalencePair, s: &PhaseState, t_values: &[f64]) -> Result<Mat> {
    let n = pair.dim();
    let mut jac = Mat::zeros(t_values.len(), 2 * n);
    let scale_x = 1.0 + s.x.iter().map(|v| v * v).sum::<f64>().sqrt();
    let scale_xi = 1.0 + s.xi.iter().map(|v| v * v).sum::<f64>().sqrt();
    for c in 0..2 * n {
        let h = 1e-6 * if c < n { scale_x } else { scale_xi };
        let shifted = |sign: f64| {
            let mut p = s.clone();
            if c < n {
                p.x[c] += sign * h;
            } else {
                p.xi[c - n] += sign * h;
            }
            p
        };
        let (plus, minus) = (shifted(1.0), shifted(-1.0));
        let (gp, ap) = pair.operator_at(&plus.x)?;
        let (gm, am) = pair.operator_at(&minus.x)?;
        for (r, &t) in t_values.iter().enumerate() {
            let d = integral_it_matrix(&ap, &gp, &plus.xi, t) - integral_it_matrix(&am, &gm, &minus.xi, t);
            jac[(r, c)] = d / (2.0 * h);
        }
    }
    Ok(jac)
}

#[derive(Clone, Debug)]
pub struct IndependenceReport {
    /// Maximum rank over the phase points.
    pub rank: usize,
    /// Smallest retained singular value at a point attaining `rank`.
    pub min_singular: f64,
    pub point_ranks: Vec<usize>,
    pub point_min_singular: Vec<f64>,
}

pub fn functional_independence(
    pair: &EquivalencePair,
    phase_points: &[PhaseState],
    t_values: &[f64],
) -> Result<IndependenceReport> {
    check_distinct(t_values)?;
    if phase_points.is_empty() {
        return Err(Error::InvalidInput("no phase points".into()));
    }
    let mut point_ranks = Vec::with_capacity(phase_points.len());
    let mut point_min_singular = Vec::with_capacity(phase_points.len());
    for s in phase_points {
        let info = numerical_rank(&integral_gradients(pair, s, t_values)?, RANK_TOL);
        point_ranks.push(info.rank);
        point_min_singular.push(info.smallest_retained);
    }
    let rank = *point_ranks.iter().max().expect("nonempty");
    let min_singular = point_ranks
        .iter()
        .zip(&point_min_singular)
        .filter(|(r, _)| **r == rank)
        .map(|(_, s)| *s)
        .fold(f64::INFINITY, f64::min);
    Ok(IndependenceReport { rank, min_singular, point_ranks, point_min_singular })
}

/// Relative least-squares residual of the gradient of `I_{t_last}` against
/// the gradients of the other `I_t`, maximized over the phase points.
pub fn linear_combination_residual(
    pair: &EquivalencePair,
    phase_points: &[PhaseState],
    t_values: &[f64],
) -> Result<f64> {
    check_distinct(t_values)?;
    if t_values.len() < 2 {
        return Err(Error::InvalidInput("need at least two parameter values".into()));
    }
    let k = t_values.len() - 1;
    let mut worst = 0.0f64;
    for s in phase_points {
        let jac = integral_gradients(pair, s, t_values)?;
        let basis = jac.rows(0, k).transpose();
        let target: DVector<f64> = jac.row(k).transpose();
        let (_, res) = lstsq(&basis, &target, 1e-12);
        worst = worst.max(res / target.norm().max(f64::MIN_POSITIVE));
    }
    Ok(worst)
}
