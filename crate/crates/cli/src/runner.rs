//! Scenario execution.

use std::collections::BTreeMap;
use std::sync::Arc;

use geodequiv::equivalence::{
    sinjukov_residual_at, sinjukov_tensor, strict_nonproportionality, EquivalencePair, MINPOLY_TOL,
};
use geodequiv::flow::{
    functional_independence, integrate_geodesic, integrate_with_integrals, linear_combination_residual,
};
use geodequiv::geometry::{metricity_residual, pinned_convention, riemann_at, symmetry_residuals};
use geodequiv::integrability::{
    curvature_condition_residual_at, hessian_decomposition, random_derogatory, random_nonderogatory,
    skew_kernel_dimension, z_condition_residual, z_condition_residual_op,
};
use geodequiv::lie::{
    calibrated_wiring, commutation_checks, constant_commutant_check, curvature_as_operator, lax_consistency,
    operator_scalar, reconstruct_sectional, sectional_data, sectional_identity_residual, shifted_invariants_commute,
    triple_dichotomy, Dichotomy, SkewSpace, PINNED_WIRING,
};
use geodequiv::metric::{
    make_constant_curvature, make_flat, make_levi_civita_pair, make_projective_flat, make_scaled, LeviCivitaSpec,
    Polynomial, SECOND_STEP_RATIO,
};
use geodequiv::{Error, Mat, MetricField, PhaseState, PointGeometry, SharedMetric};
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::registry::{lookup, CheckInfo, TargetKind};
use crate::report::{Environment, Record, Report, ToleranceEntry};
use crate::scenario::{Family, Member, Mode, Scenario};
use crate::ConfigError;

/// A trajectory must improve by at least this factor when the step halves.
pub const HALVING_RATIO: f64 = 10.0;

/// Random trials per point for the randomized algebraic checks.
const TRIALS: usize = 10;

/// Give up on rejection sampling after this many draws per requested point.
const SAMPLE_ATTEMPTS: usize = 10_000;

#[derive(Clone, Debug)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub tol_scale: f64,
    pub checks: Option<Vec<String>>,
    pub points: Option<usize>,
}

impl Default for Overrides {
    fn default() -> Self {
        Self { seed: None, tol_scale: 1.0, checks: None, points: None }
    }
}

enum Target {
    Metric(SharedMetric),
    Pair(EquivalencePair),
    Triple(EquivalencePair, EquivalencePair),
}

impl Target {
    fn dim(&self) -> usize {
        match self {
            Target::Metric(m) => m.dim(),
            Target::Pair(p) | Target::Triple(p, _) => p.dim(),
        }
    }

    fn in_domain(&self, x: &[f64]) -> bool {
        match self {
            Target::Metric(m) => m.in_domain(x),
            Target::Pair(p) => p.in_domain(x),
            Target::Triple(p, q) => p.in_domain(x) && q.in_domain(x),
        }
    }

    fn kind(&self) -> TargetKind {
        match self {
            Target::Metric(_) => TargetKind::Metric,
            Target::Pair(_) => TargetKind::Pair,
            Target::Triple(..) => TargetKind::Triple,
        }
    }
}

struct Resolved {
    id: String,
    target: Target,
    points: Vec<Vec<f64>>,
}

fn diag(v: &[f64]) -> Mat {
    Mat::from_diagonal(&DVector::from_row_slice(v))
}

fn build_metric(s: &Scenario, id: &str, depth: usize) -> Result<SharedMetric, ConfigError> {
    let entry = s.metrics.iter().find(|m| m.id == id).ok_or_else(|| ConfigError(format!("unknown metric `{id}`")))?;
    if depth > s.metrics.len() {
        return Err(ConfigError(format!("metric `{id}`: cyclic `scaled` references")));
    }
    let ctx = |e: Error| ConfigError(format!("metric `{id}`: {e}"));
    let m: SharedMetric = match &entry.family {
        Family::Flat { signs } => Arc::new(make_flat(signs).map_err(ctx)?),
        Family::ConstantCurvature { curvature, signs } => {
            Arc::new(make_constant_curvature(*curvature, signs).map_err(ctx)?)
        }
        Family::LeviCivita { polys, reference, member } => {
            let polys = polys.iter().map(|c| Polynomial::new(c.clone())).collect::<Result<Vec<_>, _>>().map_err(ctx)?;
            let reference = reference.clone().unwrap_or_else(|| vec![0.0; polys.len()]);
            let (first, second) = make_levi_civita_pair(&LeviCivitaSpec { polys, reference }).map_err(ctx)?;
            match member {
                Member::First => Arc::new(first),
                Member::Second => Arc::new(second),
            }
        }
        Family::ProjectiveFlat { signs, base, shift, quadratic, reference } => {
            let n = signs.len();
            if base.len() != n || base.iter().any(|r| r.len() != n) {
                return Err(ConfigError(format!("metric `{id}`: base must be {n}x{n}")));
            }
            let flat: Vec<f64> = base.iter().flatten().copied().collect();
            let reference = reference.clone().unwrap_or_else(|| vec![0.0; n]);
            Arc::new(
                make_projective_flat(signs, Mat::from_row_slice(n, n, &flat), shift.clone(), *quadratic, &reference)
                    .map_err(ctx)?,
            )
        }
        Family::Scaled { base, factor } => {
            Arc::new(make_scaled(build_metric(s, base, depth + 1)?, *factor).map_err(ctx)?)
        }
    };
    Ok(m)
}

fn make_pair(g: SharedMetric, gbar: SharedMetric, id: &str) -> Result<EquivalencePair, ConfigError> {
    EquivalencePair::new(g, gbar).map_err(|e| ConfigError(format!("`{id}`: {e}")))
}

fn resolve_targets(s: &Scenario) -> Result<Vec<Resolved>, ConfigError> {
    let mut metrics = BTreeMap::new();
    for m in &s.metrics {
        metrics.insert(m.id.clone(), build_metric(s, &m.id, 0)?);
    }
    let get = |id: &str| metrics[id].clone();
    let mut out = Vec::new();
    for m in &s.metrics {
        out.push((m.id.clone(), Target::Metric(get(&m.id))));
    }
    for p in &s.pairs {
        out.push((p.id.clone(), Target::Pair(make_pair(get(&p.g), get(&p.gbar), &p.id)?)));
    }
    for t in &s.triples {
        let first = make_pair(get(&t.g), get(&t.gbar), &t.id)?;
        let second = make_pair(get(&t.g), get(&t.ghat), &t.id)?;
        out.push((t.id.clone(), Target::Triple(first, second)));
    }
    Ok(out.into_iter().map(|(id, target)| Resolved { id, target, points: Vec::new() }).collect())
}

fn sample_in<R: Rng>(rng: &mut R, n: usize, half_width: f64, inside: impl Fn(&[f64]) -> bool) -> Option<Vec<f64>> {
    for _ in 0..SAMPLE_ATTEMPTS {
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-half_width..half_width)).collect();
        if inside(&x) {
            return Some(x);
        }
    }
    None
}

fn assign_points(s: &Scenario, targets: &mut [Resolved], ov: &Overrides) -> Result<(), ConfigError> {
    for (k, t) in targets.iter_mut().enumerate() {
        let n = t.target.dim();
        t.points = s.points.explicit.iter().filter(|x| x.len() == n).cloned().collect();
        if let Some(sm) = &s.points.sampler {
            let mut rng = ChaCha8Rng::seed_from_u64(ov.seed.unwrap_or(sm.seed));
            rng.set_stream(k as u64);
            let count = ov.points.unwrap_or(sm.count);
            for _ in 0..count {
                let x = sample_in(&mut rng, n, sm.half_width, |x| t.target.in_domain(x))
                    .ok_or_else(|| ConfigError(format!("points.sampler: no domain points found for `{}`", t.id)))?;
                t.points.push(x);
            }
        }
    }
    Ok(())
}

/// What a single evaluation produced.
struct Outcome {
    residual: f64,
    extras: BTreeMap<String, f64>,
    note: Option<String>,
    /// Additional pass condition beyond the residual comparison.
    gate: Option<bool>,
}

impl Outcome {
    fn value(residual: f64) -> Self {
        Self { residual, extras: BTreeMap::new(), note: None, gate: None }
    }

    fn with(mut self, key: &str, v: f64) -> Self {
        self.extras.insert(key.to_string(), v);
        self
    }

    fn noted(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }
}

type Eval = std::result::Result<Outcome, String>;

fn err(e: Error) -> String {
    e.to_string()
}

/// Fitted constant-curvature scalar for a metric of nominal sectional curvature `k`
/// under the pinned conventions.
pub fn convention_signed(k: f64) -> f64 {
    curvature_sign() * k
}

/// Sign relating the fitted scalar to the sectional curvature, measured on
/// the unit sphere chart.
pub fn curvature_sign() -> f64 {
    let g = make_constant_curvature(1.0, &[1.0; 3]).expect("unit sphere chart");
    let geo = PointGeometry::at(&g, &[0.1, 0.2, -0.1]).expect("inside the chart");
    riemann_at(&geo).expect("curvature").k_fit.signum()
}

/// A fixed regular g-symmetric operator: `g^{-1} S` with `S` symmetric and
/// simple spectrum.
fn probe_operator(g: &Mat) -> Result<Mat, String> {
    let n = g.nrows();
    let s = Mat::from_fn(n, n, |i, j| if i == j { (i + 1) as f64 } else { 0.1 / (1 + i + j) as f64 });
    let gi = g.clone().try_inverse().ok_or("singular metric")?;
    Ok(gi * s)
}

fn eval_metric(id: &str, field: &dyn MetricField, x: &[f64]) -> Eval {
    let geo = PointGeometry::at(field, x).map_err(err)?;
    if id == "metricity" {
        return Ok(Outcome::value(metricity_residual(&geo)));
    }
    let c = riemann_at(&geo).map_err(err)?;
    let nominal = || field.nominal_curvature().ok_or_else(|| format!("{} has no nominal curvature", field.describe()));
    match id {
        "curvature_symmetries" => Ok(Outcome::value(symmetry_residuals(&c).max())),
        "constant_curvature_fit" => Ok(Outcome::value(c.z_residual).with("k_fit", c.k_fit)),
        "curvature_operator_scalar" => {
            let k = nominal()?;
            let op = curvature_as_operator(&c, geo.g()).map_err(err)?;
            let (scalar, spread) = operator_scalar(&op);
            Ok(Outcome::value(((scalar.abs() - k.abs()).abs()).max(spread))
                .with("scalar", scalar)
                .with("nominal", k)
                .with("spread", spread))
        }
        "operator_symmetry" => {
            let op = curvature_as_operator(&c, geo.g()).map_err(err)?;
            Ok(Outcome::value(op.symmetry_residual()))
        }
        "constant_commutant" => {
            nominal()?;
            let op = curvature_as_operator(&c, geo.g()).map_err(err)?;
            let (scalar, _) = operator_scalar(&op);
            let out = constant_commutant_check(&op, &probe_operator(geo.g())?, scalar).map_err(err)?;
            Ok(Outcome::value(out.deviation).with("scalar", scalar))
        }
        "z_condition" => {
            let k = convention_signed(nominal()?);
            let r = z_condition_residual_op(&probe_operator(geo.g())?, &c, geo.g(), k).map_err(err)?;
            Ok(Outcome::value(r).with("k", k))
        }
        other => Err(format!("`{other}` does not apply to metrics")),
    }
}

fn eval_pair(
    id: &str,
    pair: &EquivalencePair,
    twin: Option<&EquivalencePair>,
    x: &[f64],
    rng: &mut ChaCha8Rng,
) -> Eval {
    match id {
        "sinjukov_residual" => {
            let s = sinjukov_tensor(pair, x).map_err(err)?;
            Ok(Outcome::value(sinjukov_residual_at(&s)))
        }
        "strict_nonproportionality" => {
            let s = sinjukov_tensor(pair, x).map_err(err)?;
            let r = strict_nonproportionality(&s, MINPOLY_TOL);
            Ok(Outcome::value((s.dim() - r.degree) as f64)
                .with("degree", r.degree as f64)
                .with("condition", r.condition)
                .with("gap", r.gap))
        }
        "curvature_condition_residual" => {
            let s = sinjukov_tensor(pair, x).map_err(err)?;
            let curv = riemann_at(&s.geometry).map_err(err)?;
            Ok(Outcome::value(curvature_condition_residual_at(&s, &curv)))
        }
        "hessian_decomposition" => {
            let s = sinjukov_tensor(pair, x).map_err(err)?;
            let curv = riemann_at(&s.geometry).map_err(err)?;
            match hessian_decomposition(&s) {
                Ok(h) => {
                    let z = z_condition_residual(&s, &curv, h.k).map_err(err)?;
                    Ok(Outcome::value(h.residual)
                        .with("rho", h.rho)
                        .with("k", h.k)
                        .with("condition", h.condition)
                        .with("z_condition", z))
                }
                Err(Error::DegenerateSpan) => Ok(Outcome::value(0.0).noted("g and a are proportional here")),
                Err(e) => Err(err(e)),
            }
        }
        "sectional_identity" => {
            let d = sectional_data(pair, x, None).map_err(err)?;
            Ok(Outcome::value(sectional_identity_residual(&d)))
        }
        "reconstruction" => {
            let d = sectional_data(pair, x, None).map_err(err)?;
            let rec = reconstruct_sectional(&d.r_op.space, &d.a, &d.b).map_err(err)?;
            Ok(Outcome::value(rec.distance(&d.r_op)))
        }
        "lax_consistency" => {
            let d = sectional_data(pair, x, None).map_err(err)?;
            let (first, second) = lax_consistency(&d.r_op, &d.a, &d.b, TRIALS, rng);
            Ok(Outcome::value(first.max(second)).with("lambda1", first).with("lambda2", second))
        }
        "commutation" => {
            let d = sectional_data(pair, x, twin).map_err(err)?;
            let r = commutation_checks(&d);
            let mut out = Outcome::value(r.ab).with("ab", r.ab);
            if let (Some(c), Some(t)) = (r.cross, r.t) {
                out = out.with("cross", c).with("t", t);
                out.residual = r.ab.max(c).max(t);
            }
            Ok(out)
        }
        "dichotomy" => {
            let twin = twin.ok_or("dichotomy needs a triple")?;
            let d = sectional_data(pair, x, Some(twin)).map_err(err)?;
            let (ba, bb) = (d.big_a.as_ref().expect("twin"), d.big_b.as_ref().expect("twin"));
            match triple_dichotomy(&d.a, &d.b, ba, bb, TRIALS, rng) {
                Ok(Dichotomy::BProportionalToA { factor }) => {
                    Ok(Outcome::value(0.0).with("factor", factor).noted("b proportional to a"))
                }
                Ok(Dichotomy::AProportionalToA { factor }) => {
                    Ok(Outcome::value(0.0).with("factor", factor).noted("A proportional to a"))
                }
                Ok(Dichotomy::Violated { residual }) => Ok(Outcome::value(residual).noted("violated")),
                Err(Error::BothProportional) => Ok(Outcome::value(0.0).noted("both b and A proportional to a")),
                Err(e) => Err(err(e)),
            }
        }
        other => Err(format!("`{other}` does not apply to pairs")),
    }
}

struct Task {
    entry: usize,
    target: String,
    index: usize,
    point: Option<Vec<f64>>,
    work: Work,
}

enum Work {
    Point { target: usize, x: Vec<f64> },
    Start { start: PhaseState },
    Independence,
    Shift,
    SkewKernel { n: usize },
}

struct Plan<'a> {
    scenario: &'a Scenario,
    targets: Vec<Resolved>,
    flow_pair: Option<EquivalencePair>,
    seed_override: Option<u64>,
}

fn seed_or(ov: Option<u64>, s: u64) -> u64 {
    ov.unwrap_or(s)
}

impl Plan<'_> {
    fn run(&self, info: &CheckInfo, task: &Task, seed: u64) -> Eval {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(task.index as u64);
        match &task.work {
            Work::Point { target, x } => {
                let t = &self.targets[*target];
                if !t.target.in_domain(x) {
                    return Err(Error::DomainViolation { point: x.clone() }.to_string());
                }
                match &t.target {
                    Target::Metric(m) => eval_metric(info.id, &**m, x),
                    Target::Pair(p) => eval_pair(info.id, p, None, x, &mut rng),
                    Target::Triple(p, q) => eval_pair(info.id, p, Some(q), x, &mut rng),
                }
            }
            Work::Start { start } => {
                let flow = self.scenario.flow.as_ref().expect("validated");
                let pair = self.flow_pair.as_ref().expect("validated");
                match info.id {
                    "energy_conservation" => {
                        let traj = integrate_geodesic(&*pair.g, start, flow.duration, flow.step).map_err(err)?;
                        Ok(Outcome::value(traj.energy_drift))
                    }
                    _ => {
                        let ts = &flow.t_values;
                        let coarse =
                            integrate_with_integrals(pair, start, flow.duration, flow.step, ts).map_err(err)?;
                        let fine =
                            integrate_with_integrals(pair, start, flow.duration, flow.step / 2.0, ts).map_err(err)?;
                        let worst = coarse.integral_drifts.iter().copied().fold(0.0, f64::max);
                        let ratio = coarse
                            .integral_drifts
                            .iter()
                            .zip(&fine.integral_drifts)
                            .map(|(c, f)| c / f)
                            .fold(f64::INFINITY, f64::min);
                        let mut out = Outcome::value(worst).with("halving_ratio", ratio);
                        for (i, (c, f)) in coarse.integral_drifts.iter().zip(&fine.integral_drifts).enumerate() {
                            out = out.with(&format!("drift_{i}"), *c).with(&format!("drift_half_step_{i}"), *f);
                        }
                        out.gate = Some(ratio >= HALVING_RATIO);
                        Ok(out)
                    }
                }
            }
            Work::Independence => {
                let flow = self.scenario.flow.as_ref().expect("validated");
                let pair = self.flow_pair.as_ref().expect("validated");
                let ps = flow.phase_sampler.as_ref().ok_or("flow.phase_sampler is required")?;
                let half_width = self.scenario.points.sampler.as_ref().map_or(0.3, |s| s.half_width);
                let mut prng = ChaCha8Rng::seed_from_u64(seed_or(self.seed_override, ps.seed));
                let mut pts = Vec::with_capacity(ps.count);
                for _ in 0..ps.count {
                    let x = sample_in(&mut prng, pair.dim(), half_width, |x| pair.in_domain(x))
                        .ok_or("no domain points for phase sampling")?;
                    let xi = (0..pair.dim()).map(|_| prng.random_range(-ps.momentum..ps.momentum)).collect();
                    pts.push(PhaseState::new(x, xi));
                }
                let rep = functional_independence(pair, &pts, &flow.t_values).map_err(err)?;
                let n = pair.dim();
                let hits = rep.point_ranks.iter().filter(|r| **r == n).count();
                let mut ts = flow.t_values.clone();
                ts.push(flow.extra_t.ok_or("flow.extra_t is required")?);
                let comb = linear_combination_residual(pair, &pts, &ts).map_err(err)?;
                let mut out = Outcome::value(comb)
                    .with("rank", rep.rank as f64)
                    .with("full_rank_points", hits as f64)
                    .with("points", pts.len() as f64)
                    .with("min_singular", rep.min_singular);
                out.gate = Some(rep.rank == n && 10 * hits >= 9 * pts.len());
                Ok(out)
            }
            Work::Shift => {
                let alg = self.scenario.algebra.as_ref().expect("validated");
                let space = SkewSpace::new(&diag(&alg.g_diag)).map_err(err)?;
                let mut arng = ChaCha8Rng::seed_from_u64(seed_or(self.seed_override, alg.seed));
                arng.set_stream(task.index as u64);
                let x0 = space.random_element(&mut arng);
                Ok(Outcome::value(shifted_invariants_commute(
                    &space,
                    &diag(&alg.a_diag),
                    &x0,
                    &alg.lambdas,
                    &alg.degrees,
                )))
            }
            Work::SkewKernel { n } => {
                let alg = self.scenario.algebra.as_ref().expect("validated");
                let sets = alg.random_sets.as_ref().ok_or("algebra.random_sets is required")?;
                let mut srng = ChaCha8Rng::seed_from_u64(seed_or(self.seed_override, sets.seed));
                srng.set_stream(*n as u64);
                let (mut regular_fail, mut derogatory_fail) = (0usize, 0usize);
                for _ in 0..sets.count {
                    if skew_kernel_dimension(&random_nonderogatory(*n, &mut srng)).dim != 0 {
                        regular_fail += 1;
                    }
                    if skew_kernel_dimension(&random_derogatory(*n, &mut srng)).dim == 0 {
                        derogatory_fail += 1;
                    }
                }
                Ok(Outcome::value((regular_fail + derogatory_fail) as f64)
                    .with("regular_exceptions", regular_fail as f64)
                    .with("derogatory_exceptions", derogatory_fail as f64)
                    .with("count", sets.count as f64))
            }
        }
    }
}

fn effective(info: &CheckInfo, entry: &crate::scenario::CheckEntry, ov: &Overrides) -> (f64, Mode, &'static str) {
    let (base, source) = match entry.tolerance {
        Some(t) => (t, "override"),
        None => (info.default_tolerance, "default"),
    };
    (base * ov.tol_scale, entry.mode.unwrap_or(info.default_mode), source)
}

/// Run every selected check and assemble the report.
pub fn run_scenario(s: &Scenario, ov: &Overrides) -> Result<Report, ConfigError> {
    if !(ov.tol_scale.is_finite() && ov.tol_scale > 0.0) {
        return Err(ConfigError("--tol-scale must be positive".into()));
    }
    if let Some(filter) = &ov.checks {
        for id in filter {
            if lookup(id).is_none() {
                return Err(ConfigError(format!("--checks: unknown check id `{id}`")));
            }
        }
    }
    let mut targets = resolve_targets(s)?;
    assign_points(s, &mut targets, ov)?;
    let flow_pair = match &s.flow {
        Some(f) => targets.iter().find_map(|t| match (&t.target, t.id == f.pair) {
            (Target::Pair(p), true) => Some(p.clone()),
            _ => None,
        }),
        None => None,
    };
    let plan = Plan { scenario: s, targets, flow_pair, seed_override: ov.seed };

    let selected: Vec<usize> = (0..s.checks.len())
        .filter(|&i| ov.checks.as_ref().is_none_or(|f| f.iter().any(|c| c == &s.checks[i].id)))
        .collect();

    let mut tasks = Vec::new();
    let mut tolerances = Vec::new();
    for &e in &selected {
        let entry = &s.checks[e];
        let info = lookup(&entry.id).expect("validated");
        let (tolerance, mode, source) = effective(info, entry, ov);
        tolerances.push(ToleranceEntry { check: entry.id.clone(), mode, tolerance, source: source.to_string() });
        match info.kind {
            TargetKind::Flow => {
                let flow = s.flow.as_ref().expect("validated");
                if info.id == "functional_independence" {
                    tasks.push(Task {
                        entry: e,
                        target: flow.pair.clone(),
                        index: 0,
                        point: None,
                        work: Work::Independence,
                    });
                } else {
                    for (i, st) in flow.starts.iter().enumerate() {
                        tasks.push(Task {
                            entry: e,
                            target: flow.pair.clone(),
                            index: i,
                            point: Some(st.x.clone()),
                            work: Work::Start { start: PhaseState::new(st.x.clone(), st.xi.clone()) },
                        });
                    }
                }
            }
            TargetKind::Algebra => {
                let alg = s.algebra.as_ref().expect("validated");
                if info.id == "skew_kernel" {
                    let dims = alg.random_sets.as_ref().map(|r| r.dims.clone()).unwrap_or_default();
                    for (i, n) in dims.into_iter().enumerate() {
                        tasks.push(Task {
                            entry: e,
                            target: format!("random-n{n}"),
                            index: i,
                            point: None,
                            work: Work::SkewKernel { n },
                        });
                    }
                } else {
                    let count = ov.points.unwrap_or(alg.samples);
                    for i in 0..count {
                        tasks.push(Task {
                            entry: e,
                            target: "algebra".into(),
                            index: i,
                            point: None,
                            work: Work::Shift,
                        });
                    }
                }
            }
            kind => {
                for (ti, t) in plan.targets.iter().enumerate() {
                    let named = entry.targets.as_ref().map(|ids| ids.contains(&t.id));
                    let wanted = match named {
                        Some(w) => w,
                        None => kind.accepts(t.target.kind()),
                    };
                    if !wanted {
                        continue;
                    }
                    let limit = entry.points.unwrap_or(usize::MAX);
                    for (i, x) in t.points.iter().take(limit).enumerate() {
                        tasks.push(Task {
                            entry: e,
                            target: t.id.clone(),
                            index: i,
                            point: Some(x.clone()),
                            work: Work::Point { target: ti, x: x.clone() },
                        });
                    }
                }
            }
        }
    }

    let base_seed = ov.seed.or(s.points.sampler.as_ref().map(|p| p.seed)).unwrap_or(0);
    let mut records: Vec<Record> = tasks
        .par_iter()
        .map(|task| {
            let entry = &s.checks[task.entry];
            let info = lookup(&entry.id).expect("validated");
            let (tolerance, mode, _) = effective(info, entry, ov);
            let (residual, extras, note, pass) = match plan.run(info, task, base_seed) {
                Ok(o) => {
                    let gate = o.gate.unwrap_or(true);
                    let pass = match mode {
                        Mode::Assert => o.residual <= tolerance && gate,
                        Mode::Violation => o.residual > tolerance || !gate,
                        Mode::Diagnostic => true,
                    };
                    (Some(o.residual), o.extras, o.note, pass)
                }
                Err(msg) => (None, BTreeMap::new(), Some(msg), mode == Mode::Diagnostic),
            };
            Record {
                check: entry.id.clone(),
                target: task.target.clone(),
                index: task.index,
                point: task.point.clone(),
                residual,
                extras,
                tolerance,
                mode,
                pass,
                note,
            }
        })
        .collect();
    records.sort_by(|a, b| (&a.check, &a.target, a.index, a.mode).cmp(&(&b.check, &b.target, b.index, b.mode)));

    let flow = s.flow.as_ref();
    let environment = Environment {
        curvature_convention: pinned_convention().name().to_string(),
        fitted_curvature_sign: curvature_sign(),
        index_wiring: PINNED_WIRING.describe(),
        wiring_calibrated: calibrated_wiring() == Some(PINNED_WIRING),
        fd_step: "1e-4 * (1 + |x|)".to_string(),
        fd_second_step_ratio: SECOND_STEP_RATIO,
        minpoly_tolerance: MINPOLY_TOL,
        flow_step: flow.map(|f| f.step),
        flow_duration: flow.map(|f| f.duration),
        halving_ratio: HALVING_RATIO,
        seed: base_seed,
        tol_scale: ov.tol_scale,
        tolerances,
    };
    Ok(Report::new(s.name.clone(), environment, records))
}
