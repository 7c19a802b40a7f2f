use serde::Serialize;

use super::{render_assignment, renormalize_row, DecisionModel};
use crate::error::{Error, Result};

/// Upper bound on the number of full joint assignments enumerated.
pub const MAX_JOINT_TERMS: usize = 1 << 22;

/// Expected utilities closer than this are reported as a tie.
pub const TIE_TOL: f64 = 1e-9;

/// Resolved location of a parameter inside the flat parameter vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Slot {
    Row {
        var: usize,
        row: usize,
        outcome: usize,
    },
    /// Every row of a conditioned variable (marginal reference).
    AllRows {
        var: usize,
        outcome: usize,
    },
    Utility {
        alt: usize,
        col: usize,
    },
}

impl Slot {
    /// Identity of the distribution row(s) touched by a substitution, used to
    /// reject clusters and overrides that would interfere with each other.
    pub(crate) fn row_key(&self) -> Option<(usize, Option<usize>)> {
        match *self {
            Slot::Row { var, row, .. } => Some((var, Some(row))),
            Slot::AllRows { var, .. } => Some((var, None)),
            Slot::Utility { .. } => None,
        }
    }

    pub(crate) fn conflicts_with(&self, other: &Slot) -> bool {
        match (self.row_key(), other.row_key()) {
            (Some((va, ra)), Some((vb, rb))) => va == vb && (ra.is_none() || rb.is_none() || ra == rb),
            _ => matches!((self, other), (Slot::Utility { .. }, Slot::Utility { .. }) if self == other),
        }
    }
}

/// Precomputed enumeration of a validated model.
///
/// All probabilities and utilities live in one flat vector so that Monte
/// Carlo and sweep code can copy, substitute and re-evaluate without
/// touching the model itself.
#[derive(Clone, Debug)]
pub(crate) struct Evaluator {
    n_vars: usize,
    widths: Vec<usize>,
    row_counts: Vec<usize>,
    offsets: Vec<usize>,
    util_offset: usize,
    util_cols: usize,
    n_alts: usize,
    slots: Vec<usize>,
    outcomes: Vec<usize>,
    term_util_col: Vec<usize>,
    base: Vec<f64>,
}

impl Evaluator {
    /// The model must pass validation.
    pub(crate) fn new(model: &DecisionModel) -> Result<Self> {
        let chance = model.chance();
        let n_vars = chance.len();
        let widths: Vec<usize> = chance.iter().map(|v| v.outcomes().len()).collect();
        let n_terms = widths
            .iter()
            .try_fold(1usize, |acc, &w| acc.checked_mul(w).filter(|&n| n <= MAX_JOINT_TERMS))
            .ok_or(Error::TooLarge(usize::MAX))?;

        let mut base = Vec::new();
        let mut offsets = Vec::with_capacity(n_vars);
        let mut row_counts = Vec::with_capacity(n_vars);
        for v in chance {
            offsets.push(base.len());
            row_counts.push(v.rows().len());
            for row in v.rows() {
                base.extend_from_slice(row);
            }
        }
        let util_offset = base.len();
        let relevant = model.utility().relevant_vars();
        let util_cols = model.assignment_count(relevant).unwrap_or(1);
        for row in model.utility().values() {
            base.extend_from_slice(row);
        }

        let index_of = |names: &[String]| -> Vec<usize> {
            names
                .iter()
                .map(|n| model.variable_index(n).expect("validated model"))
                .collect()
        };
        let parent_idx: Vec<Vec<usize>> = chance.iter().map(|v| index_of(v.parents())).collect();
        let relevant_idx = index_of(relevant);

        let mut slots = Vec::with_capacity(n_terms * n_vars);
        let mut outcomes = Vec::with_capacity(n_terms * n_vars);
        let mut term_util_col = Vec::with_capacity(n_terms);
        let mut digits = vec![0usize; n_vars];
        for _ in 0..n_terms {
            for v in 0..n_vars {
                let row = parent_idx[v].iter().fold(0, |acc, &p| acc * widths[p] + digits[p]);
                slots.push(offsets[v] + row * widths[v] + digits[v]);
                outcomes.push(digits[v]);
            }
            term_util_col.push(relevant_idx.iter().fold(0, |acc, &r| acc * widths[r] + digits[r]));
            for v in (0..n_vars).rev() {
                digits[v] += 1;
                if digits[v] < widths[v] {
                    break;
                }
                digits[v] = 0;
            }
        }

        Ok(Self {
            n_vars,
            widths,
            row_counts,
            offsets,
            util_offset,
            util_cols,
            n_alts: model.decision().alternatives().len(),
            slots,
            outcomes,
            term_util_col,
            base,
        })
    }

    pub(crate) fn base(&self) -> &[f64] {
        &self.base
    }

    pub(crate) fn n_alts(&self) -> usize {
        self.n_alts
    }

    pub(crate) fn n_terms(&self) -> usize {
        self.term_util_col.len()
    }

    /// Outcome index of variable `var` in joint term `term`.
    pub(crate) fn outcome(&self, term: usize, var: usize) -> usize {
        self.outcomes[term * self.n_vars + var]
    }

    pub(crate) fn term_outcomes(&self, term: usize) -> &[usize] {
        &self.outcomes[term * self.n_vars..(term + 1) * self.n_vars]
    }

    pub(crate) fn probability(&self, params: &[f64], term: usize) -> f64 {
        self.slots[term * self.n_vars..(term + 1) * self.n_vars]
            .iter()
            .map(|&s| params[s])
            .product()
    }

    pub(crate) fn utility(&self, params: &[f64], alt: usize, term: usize) -> f64 {
        params[self.util_offset + alt * self.util_cols + self.term_util_col[term]]
    }

    pub(crate) fn expected_utilities(&self, params: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|x| *x = 0.0);
        for term in 0..self.n_terms() {
            let p = self.probability(params, term);
            if p == 0.0 {
                continue;
            }
            for (alt, eu) in out.iter_mut().enumerate() {
                *eu += p * self.utility(params, alt, term);
            }
        }
    }

    pub(crate) fn marginal_distribution(&self, params: &[f64], var: usize) -> Vec<f64> {
        let mut dist = vec![0.0; self.widths[var]];
        for term in 0..self.n_terms() {
            dist[self.outcome(term, var)] += self.probability(params, term);
        }
        dist
    }

    pub(crate) fn current_value(&self, params: &[f64], slot: Slot) -> f64 {
        match slot {
            Slot::Row { var, row, outcome } => params[self.offsets[var] + row * self.widths[var] + outcome],
            Slot::AllRows { var, outcome } => self.marginal_distribution(params, var)[outcome],
            Slot::Utility { alt, col } => params[self.util_offset + alt * self.util_cols + col],
        }
    }

    /// Writes `value` into `slot`, renormalizing sibling outcomes. Returns
    /// `None` if a probability leaves `[0, 1]`.
    pub(crate) fn substitute(&self, params: &mut [f64], slot: Slot, value: f64) -> Option<()> {
        match slot {
            Slot::Row { var, row, outcome } => {
                let w = self.widths[var];
                let start = self.offsets[var] + row * w;
                renormalize_row(&mut params[start..start + w], outcome, value)
            }
            Slot::AllRows { var, outcome } => {
                let mut dist = self.marginal_distribution(params, var);
                renormalize_row(&mut dist, outcome, value)?;
                let w = self.widths[var];
                for row in 0..self.row_counts[var] {
                    let start = self.offsets[var] + row * w;
                    params[start..start + w].copy_from_slice(&dist);
                }
                Some(())
            }
            Slot::Utility { alt, col } => {
                if !value.is_finite() {
                    return None;
                }
                params[self.util_offset + alt * self.util_cols + col] = value;
                Some(())
            }
        }
    }
}

/// Index of the chosen alternative and whether the top two are tied.
///
/// The first alternative (in declaration order) within [`TIE_TOL`] of the
/// maximum is chosen.
pub(crate) fn choose(eus: &[f64]) -> (usize, bool) {
    let best = eus.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let near: Vec<usize> = (0..eus.len()).filter(|&i| best - eus[i] < TIE_TOL).collect();
    (near[0], near.len() > 1)
}

/// One full assignment of the chance variables and its probability.
#[derive(Clone, Debug, PartialEq)]
pub struct JointEntry {
    /// Outcome index per chance variable, in declaration order.
    pub outcomes: Vec<usize>,
    pub probability: f64,
}

impl JointEntry {
    /// Canonical `Var=outcome,...` rendering.
    pub fn label(&self, model: &DecisionModel) -> String {
        let pairs: Vec<(&str, &str)> = model
            .chance()
            .iter()
            .zip(&self.outcomes)
            .map(|(v, &o)| (v.name(), v.outcomes()[o].as_str()))
            .collect();
        render_assignment(&pairs)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Optimal {
    pub alternative: String,
    pub expected_utility: f64,
    pub tie: bool,
}

impl DecisionModel {
    pub fn evaluate_joint(&self) -> Result<Vec<JointEntry>> {
        self.check()?;
        let ev = Evaluator::new(self)?;
        Ok((0..ev.n_terms())
            .map(|t| JointEntry {
                outcomes: ev.term_outcomes(t).to_vec(),
                probability: ev.probability(ev.base(), t),
            })
            .collect())
    }

    pub fn marginal(&self, variable: &str, outcome: &str) -> Result<f64> {
        let var = self
            .variable_index(variable)
            .ok_or_else(|| Error::UnknownVariable(variable.into()))?;
        let o = self.chance()[var]
            .outcome_index(outcome)
            .ok_or_else(|| Error::UnknownOutcome {
                variable: variable.into(),
                outcome: outcome.into(),
            })?;
        Ok(self.marginal_distribution(var)?[o])
    }

    pub(crate) fn marginal_distribution(&self, var: usize) -> Result<Vec<f64>> {
        self.check()?;
        let ev = Evaluator::new(self)?;
        Ok(ev.marginal_distribution(ev.base(), var))
    }

    /// Expected utility of every alternative, in declaration order.
    pub fn expected_utilities(&self) -> Result<Vec<f64>> {
        self.check()?;
        let ev = Evaluator::new(self)?;
        let mut out = vec![0.0; ev.n_alts()];
        ev.expected_utilities(ev.base(), &mut out);
        Ok(out)
    }

    pub fn expected_utility(&self, alternative: &str) -> Result<f64> {
        let alt = self
            .decision()
            .alternative_index(alternative)
            .ok_or_else(|| Error::UnknownAlternative(alternative.into()))?;
        Ok(self.expected_utilities()?[alt])
    }

    pub fn optimal_alternative(&self) -> Result<Optimal> {
        let eus = self.expected_utilities()?;
        let (best, tie) = choose(&eus);
        Ok(Optimal {
            alternative: self.decision().alternatives()[best].clone(),
            expected_utility: eus[best],
            tie,
        })
    }
}
