//! Acceptance criteria, one line each. Runs without the libtest harness so
//! the verdicts are always printed.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use geodequiv_cli::{run_scenario, scenario_dir, Overrides, Record, Report, Scenario};

fn load(name: &str) -> Scenario {
    Scenario::load(&scenario_dir().join(format!("{name}.json"))).expect("bundled scenario loads")
}

fn run(name: &str, checks: &[&str]) -> Report {
    let ov = Overrides { checks: Some(checks.iter().map(|c| c.to_string()).collect()), ..Overrides::default() };
    run_scenario(&load(name), &ov).expect("bundled scenario runs")
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let t = Instant::now();
    let out = f();
    (out, t.elapsed())
}

fn residuals<'a>(r: &'a Report, check: &'a str) -> Vec<f64> {
    r.records_for(check).map(|x| x.residual.unwrap_or(f64::NAN)).collect()
}

fn worst(v: &[f64]) -> f64 {
    v.iter().copied().fold(0.0, |a, b| if b.is_nan() { f64::NAN } else { a.max(b) })
}

fn all_below(v: &[f64], tol: f64) -> bool {
    !v.is_empty() && v.iter().all(|x| *x <= tol)
}

fn all_above(v: &[f64], tol: f64) -> bool {
    !v.is_empty() && v.iter().all(|x| *x > tol)
}

fn extra(r: &Record, key: &str) -> f64 {
    r.extras.get(key).copied().unwrap_or(f64::NAN)
}

type Verdict = (bool, String);
type Criterion = (&'static str, fn() -> Verdict);

fn levi_civita_equivalence() -> Verdict {
    let ((lc3, lc4), t) =
        timed(|| (run("lc3-riemannian", &["sinjukov_residual"]), run("lc4-riemannian", &["sinjukov_residual"])));
    let (a, b) = (residuals(&lc3, "sinjukov_residual"), residuals(&lc4, "sinjukov_residual"));
    let ok = a.len() == 50 && b.len() == 50 && all_below(&a, 1e-8) && all_below(&b, 1e-8) && t < Duration::from_secs(5);
    (ok, format!("lc3 worst {:.2e}, lc4 worst {:.2e} over 50 points each, {:.2?}", worst(&a), worst(&b), t))
}

fn conservation() -> Verdict {
    let s = load("lc3-riemannian");
    let flow = s.flow.as_ref().expect("flow section");
    let setup = flow.t_values == [0.0, 0.5, 1.7] && flow.duration == 1.0 && flow.step == 1e-3;
    let (r, t) = timed(|| run("lc3-riemannian", &["integral_conservation"]));
    let recs: Vec<&Record> = r.records_for("integral_conservation").collect();
    let drift = recs.iter().map(|x| x.residual.unwrap_or(f64::NAN)).collect::<Vec<_>>();
    let ratio = recs.iter().map(|x| extra(x, "halving_ratio")).fold(f64::INFINITY, f64::min);
    let ok = setup && all_below(&drift, 1e-7) && ratio >= 10.0 && t < Duration::from_secs(30);
    (
        ok,
        format!(
            "{} trajectories, worst drift {:.2e}, min halving ratio {:.1}, {:.2?}",
            recs.len(),
            worst(&drift),
            ratio,
            t
        ),
    )
}

fn independence() -> Verdict {
    let r = run("lc3-riemannian", &["functional_independence"]);
    let Some(rec) = r.records_for("functional_independence").next() else {
        return (false, "no record".into());
    };
    let (hits, pts, comb) = (extra(rec, "full_rank_points"), extra(rec, "points"), rec.residual.unwrap_or(f64::NAN));
    let ok = pts == 10.0 && hits >= 9.0 && extra(rec, "rank") == 3.0 && comb <= 1e-7;
    (ok, format!("rank 3 at {hits} of {pts} phase points, extra integral residual {comb:.2e}"))
}

fn integrability() -> Verdict {
    let a = residuals(&run("lc3-riemannian", &["curvature_condition_residual"]), "curvature_condition_residual");
    let b = residuals(&run("lc4-riemannian", &["curvature_condition_residual"]), "curvature_condition_residual");
    let c = residuals(&run("violation-controls", &["curvature_condition_residual"]), "curvature_condition_residual");
    let ok = a.len() == 50 && b.len() == 50 && all_below(&a, 1e-6) && all_below(&b, 1e-6) && all_above(&c, 1e-2);
    let low = c.iter().copied().fold(f64::INFINITY, f64::min);
    (ok, format!("lc3 {:.2e}, lc4 {:.2e}, smallest control {:.2e}", worst(&a), worst(&b), low))
}

fn skew_kernel() -> Verdict {
    let (r, t) = timed(|| run("lie-lab-so3", &["skew_kernel"]));
    let recs: Vec<&Record> = r.records_for("skew_kernel").collect();
    let dims: Vec<&str> = recs.iter().map(|x| x.target.as_str()).collect();
    let exceptions: f64 = recs.iter().map(|x| x.residual.unwrap_or(f64::NAN)).sum();
    let counts = recs.iter().all(|x| extra(x, "count") == 200.0);
    let ok =
        dims == ["random-n3", "random-n4", "random-n5"] && counts && exceptions == 0.0 && t < Duration::from_secs(10);
    (ok, format!("200 regular + 200 derogatory per n in {{3,4,5}}, {exceptions} exceptions, {t:.2?}"))
}

fn sectional_identity() -> Verdict {
    let mut ok = true;
    let mut parts = Vec::new();
    for name in ["lc3-riemannian", "lc4-riemannian"] {
        let r = run(name, &["sectional_identity", "commutation"]);
        let s = residuals(&r, "sectional_identity");
        let ab: Vec<f64> = r.records_for("commutation").map(|x| extra(x, "ab")).collect();
        ok &= s.len() == 20 && ab.len() == 20 && all_below(&s, 1e-6) && all_below(&ab, 1e-7);
        parts.push(format!("{name}: identity {:.2e}, [a,b] {:.2e}", worst(&s), worst(&ab)));
    }
    (ok, parts.join("; "))
}

fn reconstruction() -> Verdict {
    let r = run("lc3-riemannian", &["reconstruction", "strict_nonproportionality"]);
    let strict = r.records_for("strict_nonproportionality").take(20).all(|x| extra(x, "degree") == 3.0);
    let d = residuals(&r, "reconstruction");
    let ok = strict && d.len() == 20 && all_below(&d, 1e-5);
    (ok, format!("20 strict points, worst operator distance {:.2e}", worst(&d)))
}

fn constant_curvature() -> Verdict {
    let mut ok = true;
    let mut scal = 0.0f64;
    let mut fit = 0.0f64;
    for name in ["constcurv-k1-n3", "constcurv-km1-n3", "constcurv-k1-n4", "constcurv-km1-n4"] {
        let r = run(name, &["curvature_operator_scalar", "constant_curvature_fit"]);
        for rec in r.records_for("curvature_operator_scalar") {
            let gap = (extra(rec, "scalar").abs() - extra(rec, "nominal").abs()).abs();
            ok &= gap <= 1e-8 && rec.residual.unwrap_or(f64::NAN) <= 1e-8;
            scal = scal.max(gap);
        }
        let z = residuals(&r, "constant_curvature_fit");
        ok &= all_below(&z, 1e-8);
        fit = fit.max(worst(&z));
    }
    let control = residuals(&run("lc3-riemannian", &["constant_curvature_fit"]), "constant_curvature_fit");
    ok &= all_above(&control, 1e-3);
    let low = control.iter().copied().fold(f64::INFINITY, f64::min);
    (ok, format!("||scalar| - |K|| {scal:.2e}, Z-fit {fit:.2e}, lc3 control min {low:.2e}"))
}

fn lax_and_shift() -> Verdict {
    let a = residuals(&run("lc3-riemannian", &["lax_consistency"]), "lax_consistency");
    let b = residuals(&run("lc4-riemannian", &["lax_consistency"]), "lax_consistency");
    let s = residuals(&run("lie-lab-so3", &["shifted_invariants"]), "shifted_invariants");
    let ok = all_below(&a, 1e-6) && all_below(&b, 1e-6) && s.len() == 20 && all_below(&s, 1e-10);
    (ok, format!("lax lc3 {:.2e}, lc4 {:.2e}; brackets {:.2e} at {} points", worst(&a), worst(&b), worst(&s), s.len()))
}

fn determinism() -> Verdict {
    let s = load("lc3-full");
    let first = run_scenario(&s, &Overrides::default()).expect("runs").canonical_json();
    let second = run_scenario(&s, &Overrides::default()).expect("runs").canonical_json();
    (first == second, format!("{} bytes, identical: {}", first.len(), first == second))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("Levi-Civita pairs are equivalent", levi_civita_equivalence),
        ("integrals are conserved", conservation),
        ("integrals are functionally independent", independence),
        ("curvature integrability condition", integrability),
        ("skew kernel vanishes exactly for regular operators", skew_kernel),
        ("sectional identity and [a,b] = 0", sectional_identity),
        ("curvature operator reconstruction", reconstruction),
        ("constant curvature detection", constant_curvature),
        ("Lax consistency and shifted invariants", lax_and_shift),
        ("deterministic reports", determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let (ok, detail) = f();
        println!("criterion {:>2} {}: {} ({detail})", i + 1, if ok { "PASS" } else { "FAIL" }, name);
        if !ok {
            failed += 1;
        }
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
