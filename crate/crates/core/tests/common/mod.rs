#![allow(dead_code)]

use std::collections::BTreeMap;

use rand::Rng;

use voi_core::testkit::probability_refs;
use voi_core::{DecisionModel, ParamRef, ProbabilityInterval};

/// Row index of a variable's table for a full assignment: mixed radix over
/// the parents in declared order, last parent fastest.
fn row_of(model: &DecisionModel, names: &[String], assignment: &[usize]) -> usize {
    names.iter().fold(0, |acc, name| {
        let i = model.chance().iter().position(|v| v.name() == name).unwrap();
        acc * model.chance()[i].outcomes().len() + assignment[i]
    })
}

/// Every full assignment with its probability, built directly from the
/// tables as a product of conditional probabilities.
pub fn brute_joint(model: &DecisionModel) -> Vec<(Vec<usize>, f64)> {
    let widths: Vec<usize> = model.chance().iter().map(|v| v.outcomes().len()).collect();
    let total: usize = widths.iter().product();
    let mut out = Vec::with_capacity(total);
    for mut k in 0..total {
        let mut assignment = vec![0; widths.len()];
        for i in (0..widths.len()).rev() {
            assignment[i] = k % widths[i];
            k /= widths[i];
        }
        let p = model
            .chance()
            .iter()
            .enumerate()
            .map(|(i, v)| v.rows()[row_of(model, v.parents(), &assignment)][assignment[i]])
            .product();
        out.push((assignment, p));
    }
    out
}

pub fn brute_utility(model: &DecisionModel, alt: usize, assignment: &[usize]) -> f64 {
    let col = row_of(model, model.utility().relevant_vars(), assignment);
    model.utility().values()[alt][col]
}

pub fn brute_expected_utilities(model: &DecisionModel) -> Vec<f64> {
    let n_alts = model.decision().alternatives().len();
    let joint = brute_joint(model);
    (0..n_alts)
        .map(|a| joint.iter().map(|(x, p)| p * brute_utility(model, a, x)).sum())
        .collect()
}

pub fn brute_marginal(model: &DecisionModel, var: usize, outcome: usize) -> f64 {
    brute_joint(model)
        .iter()
        .filter(|(x, _)| x[var] == outcome)
        .map(|(_, p)| p)
        .sum()
}

/// Perfect-information value of observing `observed` (variable indices) by
/// grouping the joint on the observed outcomes.
pub fn brute_vpi(model: &DecisionModel, observed: &[usize]) -> f64 {
    let n_alts = model.decision().alternatives().len();
    let mut groups: BTreeMap<Vec<usize>, Vec<f64>> = BTreeMap::new();
    let mut totals = vec![0.0; n_alts];
    for (x, p) in brute_joint(model) {
        let key: Vec<usize> = observed.iter().map(|&v| x[v]).collect();
        let g = groups.entry(key).or_insert_with(|| vec![0.0; n_alts]);
        for a in 0..n_alts {
            let w = p * brute_utility(model, a, &x);
            g[a] += w;
            totals[a] += w;
        }
    }
    let max = |xs: &[f64]| xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    groups.values().map(|g| max(g)).sum::<f64>() - max(&totals)
}

/// Adaptive Simpson quadrature of `f` over `[a, b]` to absolute tolerance
/// `tol`.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn step(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        step(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + step(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    step(f, a, b, fa, fm, fb, whole, tol, 50)
}

/// A random distribution over `width` outcomes, every entry at least
/// a few percent.
pub fn normalized(rng: &mut impl Rng, width: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..width).map(|_| rng.random_range(0.05..1.0)).collect();
    let total: f64 = w.iter().sum();
    let mut row: Vec<f64> = w.iter().map(|x| x / total).collect();
    let head: f64 = row[..width - 1].iter().sum();
    row[width - 1] = 1.0 - head;
    row
}

/// Up to `k` interval overrides on distinct rows.
pub fn random_overrides(model: &DecisionModel, rng: &mut impl Rng, k: usize) -> Vec<(ParamRef, ProbabilityInterval)> {
    let mut rows: Vec<(String, Vec<(String, String)>)> = Vec::new();
    let mut out = Vec::new();
    let mut refs = probability_refs(model);
    for _ in 0..refs.len() {
        if out.len() == k {
            break;
        }
        let r = refs.swap_remove(rng.random_range(0..refs.len()));
        let ParamRef::Probability { variable, given, .. } = &r else {
            unreachable!()
        };
        let key = (variable.clone(), given.clone());
        if rows.contains(&key) {
            continue;
        }
        rows.push(key);
        let (a, b) = (rng.random_range(0.0..1.0), rng.random_range(0.0..1.0));
        out.push((r, ProbabilityInterval::new(f64::min(a, b), f64::max(a, b)).unwrap()));
    }
    out
}
