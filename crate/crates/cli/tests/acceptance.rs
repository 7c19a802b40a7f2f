//! Acceptance checks for the workbench. Prints one PASS/FAIL line per
//! criterion and exits nonzero if any fails.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;
use statrs::distribution::{Beta, Continuous, ContinuousCDF};
use statrs::statistics::Distribution;

use voi_core::model::{ConditionalTable, NewParent};
use voi_core::testkit::{probability_refs, random_model};
use voi_core::voi::{observational_vpi, recommend};
use voi_core::{
    conjunction_bounds, fit_beta_from_fractiles, marginal_bounds, ChanceVariable, DecisionModel, FractilePoint,
    ParamRef, ProbabilityInterval, SecondOrderAnnotation, SecondOrderDistribution,
};

type Outcome = Result<String, String>;

fn football() -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../models/football.json")
        .display()
        .to_string()
}

/// Runs the CLI in-process and returns its JSON output and wall time.
fn cli(args: &[&str]) -> Result<(Value, Duration), String> {
    let mut argv = vec!["voi-workbench"];
    argv.extend(args);
    argv.extend(["--format", "json"]);
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let start = Instant::now();
    let code = voi_cli::run(&argv, &mut out, &mut err);
    let elapsed = start.elapsed();
    if code != 0 {
        return Err(format!("exit {code}: {}", String::from_utf8_lossy(&err).trim()));
    }
    let value = serde_json::from_slice(&out).map_err(|e| format!("output is not json: {e}"))?;
    Ok((value, elapsed))
}

fn within(name: &str, got: f64, want: f64, tol: f64) -> Result<(), String> {
    if (got - want).abs() <= tol {
        Ok(())
    } else {
        Err(format!("{name} = {got}, expected {want} ± {tol:e}"))
    }
}

fn quick(elapsed: Duration, limit: Duration) -> Result<(), String> {
    if elapsed < limit {
        Ok(())
    } else {
        Err(format!("took {elapsed:?}, limit {limit:?}"))
    }
}

fn marginal(eval: &Value, variable: &str, outcome: &str) -> Result<f64, String> {
    eval["marginals"]
        .as_array()
        .and_then(|ms| ms.iter().find(|m| m["variable"] == variable && m["outcome"] == outcome))
        .and_then(|m| m["probability"].as_f64())
        .ok_or_else(|| format!("no marginal for {variable}={outcome}"))
}

fn number(v: &Value, key: &str) -> Result<f64, String> {
    v[key].as_f64().ok_or_else(|| format!("missing number `{key}`"))
}

fn golden_marginal() -> Outcome {
    let (eval, t) = cli(&["eval", &football()])?;
    let p = marginal(&eval, "Win", "yes")?;
    within("p(Win=yes)", p, 0.53, 1e-9)?;
    quick(t, Duration::from_millis(100))?;
    Ok(format!("p(Win=yes) = {p} in {t:.2?}"))
}

fn golden_decision() -> Outcome {
    let (eval, t) = cli(&["eval", &football()])?;
    let eu = number(&eval, "eu")?;
    within("EU(Bet)", eu, 300.0, 1e-9)?;
    if eval["optimal"] != "Bet" {
        return Err(format!("optimal = {}", eval["optimal"]));
    }
    quick(t, Duration::from_millis(100))?;
    Ok(format!("EU(Bet) = {eu}, optimal = Bet in {t:.2?}"))
}

fn observational_vpi_golden() -> Outcome {
    let (report, t) = cli(&["voi", &football(), "--observe", "Sus,Field,Bonus"])?;
    let vpi = number(&report, "vpi")?;
    within("VPI", vpi, 144.0, 1e-9)?;
    let model = voi_core::model::file::load_model(football()).map_err(|e| e.to_string())?;
    let oracle = common::brute_vpi(&model, &[0, 1, 2]);
    within("VPI against enumeration", vpi, oracle, 1e-9)?;
    quick(t, Duration::from_millis(100))?;
    Ok(format!("VPI = {vpi} (enumeration {oracle}) in {t:.2?}"))
}

/// A and B with B depending on A, and C = A and B, so p(C=yes) = p(A) p(B|A).
fn conjunction_model() -> String {
    serde_json::json!({
        "chance": [
            {"name": "A", "outcomes": ["yes", "no"], "table": {"": {"yes": 0.5, "no": 0.5}}},
            {"name": "B", "outcomes": ["yes", "no"], "parents": ["A"], "table": {
                "A=yes": {"yes": 0.5, "no": 0.5},
                "A=no": {"yes": 0.5, "no": 0.5}
            }},
            {"name": "C", "outcomes": ["yes", "no"], "parents": ["A", "B"], "table": {
                "A=yes,B=yes": {"yes": 1, "no": 0},
                "A=yes,B=no": {"yes": 0, "no": 1},
                "A=no,B=yes": {"yes": 0, "no": 1},
                "A=no,B=no": {"yes": 0, "no": 1}
            }}
        ],
        "decision": {"name": "D", "alternatives": ["act"]},
        "utility": {"relevant_vars": [], "entries": {"act": {"": 0}}}
    })
    .to_string()
}

fn interval_conjunction() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let path = dir.path().join("conjunction.json");
    std::fs::write(&path, conjunction_model()).map_err(|e| e.to_string())?;
    let (report, t) = cli(&[
        "bounds",
        path.to_str().unwrap(),
        "--interval",
        "p(A=yes)=0.4:0.6",
        "--interval",
        "p(B=yes | A=yes)=0.3:0.8",
        "--target",
        "C=yes",
    ])?;
    let low = report["interval"]["low"].as_f64().ok_or("missing low")?;
    let high = report["interval"]["high"].as_f64().ok_or("missing high")?;
    within("low", low, 0.4 * 0.3, 1e-15)?;
    within("high", high, 0.6 * 0.8, 1e-15)?;

    let chain = [
        ProbabilityInterval::new(0.4, 0.6).unwrap(),
        ProbabilityInterval::new(0.3, 0.8).unwrap(),
    ];
    let direct = conjunction_bounds(&chain).map_err(|e| e.to_string())?;
    if direct.low() != 0.12 || direct.high() != 0.48 {
        return Err(format!("conjunction bounds {direct}"));
    }
    quick(t, Duration::from_millis(100))?;
    Ok(format!("p(AB) in [{low}, {high}] in {t:.2?}"))
}

/// `E[max EU] - max E[EU]` for the football bet with p(Win=yes) ~ `dist`,
/// where EU(Bet) = 10000 v - 5000 and EU(Do-not-bet) = 0.
fn meta_vpi_by_quadrature(dist: &Beta) -> f64 {
    let mean_eu = 10000.0 * dist.mean().unwrap() - 5000.0;
    if mean_eu >= 0.0 {
        let loss = |v: f64| (5000.0 - 10000.0 * v) * dist.pdf(v);
        common::adaptive_simpson(&loss, 0.0, 0.5, 1e-8)
    } else {
        let gain = |v: f64| (10000.0 * v - 5000.0) * dist.pdf(v);
        common::adaptive_simpson(&gain, 0.5, 1.0, 1e-8)
    }
}

fn meta_vpi_football() -> Outcome {
    // Two-fractile solution checked against the oracle cdf below, so the
    // quadrature does not rely on the fit under test.
    let (alpha, beta) = (24.89716006721292, 20.402989363797232);
    let dist = Beta::new(alpha, beta).unwrap();
    within("oracle cdf(0.5)", dist.cdf(0.5), 0.25, 1e-8)?;
    within("oracle cdf(0.6)", dist.cdf(0.6), 0.75, 1e-8)?;
    let oracle = meta_vpi_by_quadrature(&dist);

    let (report, t) = cli(&[
        "focus",
        &football(),
        "--cluster",
        "p(Win=yes)",
        "--samples",
        "100000",
        "--seed",
        "0",
    ])?;
    if report["recommend"] != true {
        return Err(format!("recommend = {}", report["recommend"]));
    }
    let estimate = number(&report, "vpi_estimate")?;
    let se = number(&report, "vpi_std_error")?;
    within("estimate against quadrature", estimate, oracle, 3.0 * se)?;
    within("estimate against the rounded published value", estimate, 150.0, 75.0)?;
    quick(t, Duration::from_secs(1))?;
    Ok(format!(
        "estimate {estimate:.3} ± {se:.3} vs quadrature {oracle:.3} (z = {:.2}), recommend at cost 50, {t:.2?}",
        (estimate - oracle) / se
    ))
}

fn max_affine_deviation(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let slope = sxy / sxx;
    x.iter()
        .zip(y)
        .map(|(a, b)| (b - (my + slope * (a - mx))).abs())
        .fold(0.0, f64::max)
}

fn sensitivity_crossing() -> Outcome {
    let (sweep, t) = cli(&["sweep", &football(), "--param", "p(Win=yes)"])?;
    let crossings: Vec<f64> = sweep["crossings"]
        .as_array()
        .ok_or("missing crossings")?
        .iter()
        .filter_map(Value::as_f64)
        .collect();
    let [crossing] = crossings[..] else {
        return Err(format!("expected one crossing, got {crossings:?}"));
    };
    within("crossing", crossing, 0.5, 1e-6)?;
    let grid: Vec<f64> = sweep["grid"]
        .as_array()
        .ok_or("missing grid")?
        .iter()
        .filter_map(Value::as_f64)
        .collect();
    let bet = sweep["series"]
        .as_array()
        .and_then(|s| s.iter().find(|s| s["alternative"] == "Bet"))
        .ok_or("no Bet series")?;
    let eu: Vec<f64> = bet["expected_utility"]
        .as_array()
        .ok_or("missing series")?
        .iter()
        .filter_map(Value::as_f64)
        .collect();
    let deviation = max_affine_deviation(&grid, &eu);
    if deviation > 1e-9 {
        return Err(format!("EU(Bet) deviates from a line by {deviation:e}"));
    }
    Ok(format!(
        "crossing at {crossing}, EU(Bet) affine within {deviation:.1e} ({t:.2?})"
    ))
}

fn names(model: &DecisionModel, vars: &[usize]) -> Vec<String> {
    vars.iter().map(|&v| model.chance()[v].name().to_string()).collect()
}

fn check(cond: bool, what: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(what())
    }
}

/// Every property on one random model.
fn properties_for(seed: u64) -> Result<(), String> {
    let model = random_model(seed, 5, 3);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = model.chance().len();
    let fail = |e: voi_core::Error| e.to_string();

    // Joint normalization, against direct enumeration.
    let joint = model.evaluate_joint().map_err(fail)?;
    let total: f64 = joint.iter().map(|e| e.probability).sum();
    check((total - 1.0).abs() < 1e-9, || format!("joint sums to {total}"))?;
    for (e, (_, p)) in joint.iter().zip(common::brute_joint(&model)) {
        check((e.probability - p).abs() < 1e-12, || {
            "joint differs from enumeration".into()
        })?;
    }

    // VPI nonnegative, equal to enumeration, monotone under supersets.
    let inner: u8 = rng.random();
    let extra: u8 = rng.random();
    let small: Vec<usize> = (0..n).filter(|v| inner >> v & 1 == 1).collect();
    let large: Vec<usize> = (0..n).filter(|v| (inner | extra) >> v & 1 == 1).collect();
    let a = observational_vpi(&model, &names(&model, &small)).map_err(fail)?.vpi;
    let b = observational_vpi(&model, &names(&model, &large)).map_err(fail)?.vpi;
    check(a >= 0.0 && b >= 0.0, || format!("negative VPI {a} {b}"))?;
    check((a - common::brute_vpi(&model, &small).max(0.0)).abs() < 1e-9, || {
        "VPI differs from enumeration".into()
    })?;
    check(a <= b + 1e-9, || {
        format!("VPI of {small:?} = {a} > VPI of {large:?} = {b}")
    })?;

    // Law of total probability: splitting the first variable over a new
    // parent whose mixture reproduces it changes no marginal or EU.
    let root = &model.chance()[0];
    let width = root.outcomes().len();
    let z_width = rng.random_range(2..=3);
    let prior = common::normalized(&mut rng, z_width);
    let rows: Vec<Vec<f64>> = (0..z_width).map(|_| common::normalized(&mut rng, width)).collect();
    let implied: Vec<f64> = (0..width)
        .map(|o| (0..z_width).map(|z| prior[z] * rows[z][o]).sum())
        .collect();
    let mut chance = model.chance().to_vec();
    let outcomes: Vec<&str> = root.outcomes().iter().map(String::as_str).collect();
    chance[0] = ChanceVariable::root(root.name(), &outcomes, &implied);
    let before = DecisionModel::new(chance, model.decision().clone(), model.utility().clone(), vec![]);
    let z_outcomes: Vec<String> = (0..z_width).map(|z| format!("z{z}")).collect();
    let z_labels: Vec<&str> = z_outcomes.iter().map(String::as_str).collect();
    let cpt = z_outcomes
        .iter()
        .zip(&rows)
        .fold(ConditionalTable::new(), |cpt, (o, row)| {
            cpt.row(&[("Z", o.as_str())], row)
        });
    let target = ParamRef::probability(root.name(), root.outcomes()[0].as_str(), &[]);
    let after = before
        .refine(
            &target,
            &[NewParent::New(ChanceVariable::root("Z", &z_labels, &prior))],
            &cpt,
        )
        .map_err(fail)?;
    for v in before.chance() {
        for o in v.outcomes() {
            let (x, y) = (
                before.marginal(v.name(), o).map_err(fail)?,
                after.marginal(v.name(), o).map_err(fail)?,
            );
            check((x - y).abs() < 1e-9, || {
                format!("refine moved p({}={o}) from {x} to {y}", v.name())
            })?;
        }
    }
    for (x, y) in before
        .expected_utilities()
        .map_err(fail)?
        .iter()
        .zip(after.expected_utilities().map_err(fail)?)
    {
        check((x - y).abs() < 1e-9, || format!("refine moved an EU from {x} to {y}"))?;
    }

    // Interval bounds contain 1000 interior samples.
    let overrides = common::random_overrides(&model, &mut rng, 4);
    let var = &model.chance()[rng.random_range(0..n)];
    let outcome = var.outcomes()[rng.random_range(0..var.outcomes().len())].clone();
    let bounds = marginal_bounds(&model, &overrides, (var.name(), &outcome)).map_err(fail)?;
    for _ in 0..1000 {
        let mut point = model.clone();
        for (r, iv) in &overrides {
            point = point
                .with_value(r, rng.random_range(iv.low()..=iv.high()))
                .map_err(fail)?;
        }
        let p = point.marginal(var.name(), &outcome).map_err(fail)?;
        check(
            bounds.interval.low() - 1e-9 <= p && p <= bounds.interval.high() + 1e-9,
            || format!("{p} outside {}", bounds.interval),
        )?;
    }

    // Seed determinism.
    let refs = probability_refs(&model);
    let param = refs[rng.random_range(0..refs.len())].clone();
    let annotation = SecondOrderAnnotation::new(
        param.clone(),
        "s",
        rng.random_range(0.0..10.0),
        SecondOrderDistribution::beta(rng.random_range(0.5..20.0), rng.random_range(0.5..20.0)).map_err(fail)?,
    );
    let annotated = model.with_annotation(annotation).map_err(fail)?;
    let first = recommend(&annotated, std::slice::from_ref(&param), 1000, seed).map_err(fail)?;
    let second = recommend(&annotated, std::slice::from_ref(&param), 1000, seed).map_err(fail)?;
    check(
        serde_json::to_string(&first).unwrap() == serde_json::to_string(&second).unwrap()
            && first.vpi_estimate.to_bits() == second.vpi_estimate.to_bits(),
        || "focus reports differ for the same seed".into(),
    )?;
    Ok(())
}

fn property_suites() -> Outcome {
    const MODELS: u64 = 128;
    let start = Instant::now();
    for seed in 0..MODELS {
        properties_for(seed).map_err(|e| format!("model seed {seed}: {e}"))?;
    }
    let t = start.elapsed();
    quick(t, Duration::from_secs(60))?;
    Ok(format!(
        "{MODELS} random models: normalization, VPI >= 0, monotone VPI, refine identity, interval containment, seed determinism in {t:.2?}"
    ))
}

fn beta_round_trip() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut worst_cdf, mut worst_quantile) = (0.0f64, 0.0f64);
    for case in 0..200 {
        let p1 = rng.random_range(0.05..0.45);
        let p2 = rng.random_range(0.55..0.95);
        let q1: f64 = rng.random_range(0.05..0.85);
        let q2 = (q1 + rng.random_range(0.02..0.3)).min(0.95);
        let fractiles = [FractilePoint::new(p1, q1), FractilePoint::new(p2, q2)];
        let d = fit_beta_from_fractiles(&fractiles).map_err(|e| format!("case {case}: {e}"))?;
        let SecondOrderDistribution::Beta { alpha, beta, .. } = d else {
            return Err(format!("case {case}: fit is not a beta"));
        };
        let oracle = Beta::new(alpha, beta).map_err(|e| e.to_string())?;
        for f in &fractiles {
            let own = d.cdf(f.q).map_err(|e| e.to_string())?;
            worst_cdf = worst_cdf.max((own - f.p).abs()).max((oracle.cdf(f.q) - f.p).abs());
            worst_quantile = worst_quantile.max((d.quantile(f.p).map_err(|e| e.to_string())? - f.q).abs());
        }
    }
    check(worst_cdf <= 1e-7, || {
        format!("cdf misses an elicited level by {worst_cdf:e}")
    })?;
    check(worst_quantile <= 1e-6, || {
        format!("quantile misses by {worst_quantile:e}")
    })?;
    Ok(format!(
        "200 fits: worst cdf error {worst_cdf:.1e}, worst quantile error {worst_quantile:.1e}"
    ))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("golden marginal", golden_marginal),
        ("golden EU and decision", golden_decision),
        ("observational VPI", observational_vpi_golden),
        ("interval propagation", interval_conjunction),
        ("meta-VPI", meta_vpi_football),
        ("sensitivity crossing", sensitivity_crossing),
        ("property suites", property_suites),
        ("beta-fit round trip", beta_round_trip),
    ];
    // Warm up allocator and thread pool so the first timed criterion is
    // not charged for process start-up.
    let _ = cli(&["eval", &football()]);
    let mut failed = 0;
    for (i, (name, check)) in criteria.into_iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|panic| {
            Err(panic
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        match outcome {
            Ok(detail) => println!("PASS criterion {}: {name}: {detail}", i + 1),
            Err(reason) => {
                failed += 1;
                println!("FAIL criterion {}: {name}: {reason}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", 8 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
