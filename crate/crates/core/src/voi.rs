//! Value of information.
//!
//! Two quantities live here. [`observational_vpi`] is the classic value of
//! perfect information on chance variables: how much better the decision
//! maker does by learning their outcomes before choosing. [`meta_vpi`]
//! applies the same idea one level up, to the second-order distributions
//! attached to model parameters: how much better the decision would be if
//! the assessment scenarios were carried out and the parameters took their
//! post-assessment values. [`recommend`] compares the latter against the
//! summed assessment cost.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::confidence::SecondOrderDistribution;
use crate::error::{Error, Result};
use crate::model::{choose, render_assignment, DecisionModel, Evaluator, ParamRef, Slot};

pub const DEFAULT_SAMPLES: usize = 100_000;
pub const DEFAULT_SEED: u64 = 0;
pub const MIN_SAMPLES: usize = 100;

/// Samples per generator substream. Substream `k` covers samples
/// `k * CHUNK .. (k + 1) * CHUNK`, so results do not depend on how chunks
/// are scheduled across threads.
const CHUNK: usize = 1024;

/// Name of the baseline convention recorded in every [`FocusReport`]: the
/// no-information alternative is the one maximizing expected utility
/// averaged over the second-order distributions, i.e. with annotated
/// parameters at their means rather than their stored point values.
pub const BASELINE_CONVENTION: &str = "second-order-mean";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutcomeRow {
    pub outcome: String,
    pub probability: f64,
    pub best_alternative: String,
    pub conditional_eu: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObservationalVpiReport {
    pub observed: Vec<String>,
    pub eu_with_info: f64,
    pub eu_baseline: f64,
    pub vpi: f64,
    /// Observed joint outcomes with positive probability, in mixed-radix
    /// order of `observed`.
    pub outcomes: Vec<OutcomeRow>,
}

impl ObservationalVpiReport {
    /// CSV with header `outcome,probability,best_alternative,conditional_eu`.
    pub fn to_csv(&self) -> Result<String> {
        let mut writer = csv::Writer::from_writer(Vec::new());
        for row in &self.outcomes {
            writer.serialize(row)?;
        }
        let bytes = writer.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

/// Value of observing `observed` (cost-free, perfectly, before deciding).
/// Names are deduplicated and put in declaration order.
pub fn observational_vpi<S: AsRef<str>>(model: &DecisionModel, observed: &[S]) -> Result<ObservationalVpiReport> {
    model.check()?;
    let mut vars = Vec::new();
    for name in observed {
        let name = name.as_ref();
        let idx = model
            .variable_index(name)
            .ok_or_else(|| Error::UnknownVariable(name.to_string()))?;
        if !vars.contains(&idx) {
            vars.push(idx);
        }
    }
    vars.sort_unstable();

    let ev = Evaluator::new(model)?;
    let params = ev.base();
    let n_alts = ev.n_alts();
    let widths: Vec<usize> = vars.iter().map(|&v| model.chance()[v].outcomes().len()).collect();
    let n_states: usize = widths.iter().product();
    let mut prob = vec![0.0; n_states];
    // Unnormalized Σ p(term) u(a, term) per observed state.
    let mut weighted = vec![0.0; n_states * n_alts];
    for term in 0..ev.n_terms() {
        let p = ev.probability(params, term);
        if p == 0.0 {
            continue;
        }
        let state = vars
            .iter()
            .zip(&widths)
            .fold(0, |acc, (&v, &w)| acc * w + ev.outcome(term, v));
        prob[state] += p;
        for alt in 0..n_alts {
            weighted[state * n_alts + alt] += p * ev.utility(params, alt, term);
        }
    }

    let names: Vec<String> = vars.iter().map(|&v| model.chance()[v].name().to_string()).collect();
    let alternatives = model.decision().alternatives();
    let mut eu_with_info = 0.0;
    let mut totals = vec![0.0; n_alts];
    let mut outcomes = Vec::new();
    for state in 0..n_states {
        let row = &weighted[state * n_alts..(state + 1) * n_alts];
        for (t, w) in totals.iter_mut().zip(row) {
            *t += w;
        }
        if prob[state] <= 0.0 {
            continue;
        }
        let (best, _) = choose(row);
        eu_with_info += row[best];
        outcomes.push(OutcomeRow {
            outcome: render_assignment(&model.decode_assignment(&names, state)),
            probability: prob[state],
            best_alternative: alternatives[best].clone(),
            conditional_eu: row[best] / prob[state],
        });
    }
    let (base, _) = choose(&totals);
    let eu_baseline = totals[base];
    Ok(ObservationalVpiReport {
        observed: names,
        eu_with_info,
        eu_baseline,
        vpi: (eu_with_info - eu_baseline).max(0.0),
        outcomes,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetaVpi {
    pub estimate: f64,
    pub std_error: f64,
    /// Alternative chosen without further assessment.
    pub baseline_alternative: String,
}

/// Outcome of weighing one cluster of annotated parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FocusReport {
    pub cluster: Vec<ParamRef>,
    pub vpi_estimate: f64,
    pub vpi_std_error: f64,
    pub total_cost: f64,
    /// `vpi_estimate > total_cost`
    pub recommend: bool,
    pub samples: usize,
    pub seed: u64,
    pub baseline_alternative: String,
    pub baseline_convention: String,
}

impl FocusReport {
    pub fn net_value(&self) -> f64 {
        self.vpi_estimate - self.total_cost
    }
}

struct Draw<'a> {
    slot: Slot,
    reference: ParamRef,
    distribution: &'a SecondOrderDistribution,
}

/// Canonicalizes `cluster`, drops repeats, and pairs each parameter with
/// its annotation. Parameters sharing a distribution row are rejected since
/// substituting one would rescale the other.
fn cluster_draws<'a>(model: &'a DecisionModel, cluster: &[ParamRef]) -> Result<Vec<Draw<'a>>> {
    let mut draws: Vec<Draw<'a>> = Vec::new();
    for reference in cluster {
        let reference = model.canonicalize(reference)?;
        let slot = model.resolve(&reference)?;
        if draws.iter().any(|d| d.slot == slot) {
            continue;
        }
        if let Some(other) = draws.iter().find(|d| d.slot.conflicts_with(&slot)) {
            return Err(Error::SharedRow(other.reference.to_string(), reference.to_string()));
        }
        let annotation = model
            .annotation(&reference)
            .ok_or_else(|| Error::MissingAnnotation(reference.to_string()))?;
        draws.push(Draw {
            slot,
            reference,
            distribution: &annotation.distribution,
        });
    }
    Ok(draws)
}

/// Sum of the assessment costs of the cluster's annotations.
pub fn cluster_cost(model: &DecisionModel, cluster: &[ParamRef]) -> Result<f64> {
    Ok(cluster_draws(model, cluster)?
        .iter()
        .map(|d| model.annotation(&d.reference).map_or(0.0, |a| a.cost))
        .sum())
}

/// Monte Carlo value of perfect information on the post-assessment values
/// of the cluster's parameters.
///
/// Each sample draws every parameter independently from its annotation,
/// substitutes the draws (renormalizing sibling outcomes) and records the
/// expected utility of every alternative. With `a*` the alternative that
/// maximizes the sample-averaged expected utility, the estimate is the
/// mean of `max_a EU(a) - EU(a*)` over samples and the standard error is
/// the sample standard deviation of that term over `sqrt(samples)`.
/// Results are bit-identical for equal inputs and seed.
pub fn meta_vpi(model: &DecisionModel, cluster: &[ParamRef], samples: usize, seed: u64) -> Result<MetaVpi> {
    model.check()?;
    if samples < MIN_SAMPLES {
        return Err(Error::InvalidArgument(format!(
            "at least {MIN_SAMPLES} samples are required, got {samples}"
        )));
    }
    let draws = cluster_draws(model, cluster)?;
    let ev = Evaluator::new(model)?;
    let n_alts = ev.n_alts();
    let n_chunks = samples.div_ceil(CHUNK);

    let chunks: Vec<Vec<f64>> = (0..n_chunks)
        .into_par_iter()
        .map(|chunk| -> Result<Vec<f64>> {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(chunk as u64);
            let len = CHUNK.min(samples - chunk * CHUNK);
            let mut out = vec![0.0; len * n_alts];
            let mut params = ev.base().to_vec();
            for row in out.chunks_exact_mut(n_alts) {
                params.copy_from_slice(ev.base());
                for draw in &draws {
                    let value = draw.distribution.sample(&mut rng);
                    ev.substitute(&mut params, draw.slot, value)
                        .ok_or_else(|| Error::InvalidSubstitution {
                            reference: draw.reference.to_string(),
                            value,
                        })?;
                }
                ev.expected_utilities(&params, row);
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;

    let rows = || chunks.iter().flat_map(|c| c.chunks_exact(n_alts));
    let n = samples as f64;
    let mut mean_eu = vec![0.0; n_alts];
    for row in rows() {
        for (m, eu) in mean_eu.iter_mut().zip(row) {
            *m += eu;
        }
    }
    mean_eu.iter_mut().for_each(|m| *m /= n);
    let (baseline, _) = choose(&mean_eu);

    let gain = |row: &[f64]| row.iter().copied().fold(f64::NEG_INFINITY, f64::max) - row[baseline];
    let estimate = rows().map(gain).sum::<f64>() / n;
    let sum_sq: f64 = rows().map(|r| (gain(r) - estimate).powi(2)).sum();
    let std_error = (sum_sq / (n - 1.0)).sqrt() / n.sqrt();

    Ok(MetaVpi {
        estimate,
        std_error,
        baseline_alternative: model.decision().alternatives()[baseline].clone(),
    })
}

/// Weighs refining `cluster`: recommended iff the estimated value of
/// perfect information on it exceeds the summed assessment cost.
pub fn recommend(model: &DecisionModel, cluster: &[ParamRef], samples: usize, seed: u64) -> Result<FocusReport> {
    let vpi = meta_vpi(model, cluster, samples, seed)?;
    let draws = cluster_draws(model, cluster)?;
    let total_cost = cluster_cost(model, cluster)?;
    Ok(FocusReport {
        cluster: draws.into_iter().map(|d| d.reference).collect(),
        vpi_estimate: vpi.estimate,
        vpi_std_error: vpi.std_error,
        total_cost,
        recommend: vpi.estimate > total_cost,
        samples,
        seed,
        baseline_alternative: vpi.baseline_alternative,
        baseline_convention: BASELINE_CONVENTION.to_string(),
    })
}

/// One single-parameter report per annotation, best net value first.
/// Parameter `i` (in annotation order) uses seed `seed + i`.
pub fn rank_parameters(model: &DecisionModel, samples: usize, seed: u64) -> Result<Vec<(ParamRef, FocusReport)>> {
    let mut ranked = model
        .annotations()
        .iter()
        .enumerate()
        .map(|(i, a)| {
            let report = recommend(
                model,
                std::slice::from_ref(&a.target),
                samples,
                seed.wrapping_add(i as u64),
            )?;
            Ok((a.target.clone(), report))
        })
        .collect::<Result<Vec<_>>>()?;
    ranked.sort_by(|a, b| b.1.net_value().total_cmp(&a.1.net_value()));
    Ok(ranked)
}
