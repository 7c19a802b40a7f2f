//! Discrete single-decision models.
//!
//! A [`DecisionModel`] holds chance variables with conditional probability
//! tables, one decision variable and a utility table over the alternatives
//! and a subset of the chance variables. Models are immutable values: every
//! transformation ([`DecisionModel::refine`], [`DecisionModel::with_annotation`],
//! value substitution) returns a new model.

mod eval;
pub mod file;
mod paramref;
mod refine;
mod validate;

pub(crate) use eval::{choose, Evaluator, Slot};
pub use eval::{JointEntry, Optimal};
pub use paramref::ParamRef;
pub use refine::{ConditionalTable, NewParent};
pub use validate::{Diagnostic, DiagnosticKind};

use crate::confidence::SecondOrderAnnotation;
use crate::error::{Error, Result};

/// Tolerance on probability row sums and on the joint total.
pub const NORMALIZATION_TOL: f64 = 1e-9;

/// Rows within this distance of 1 are rescaled when a model is loaded.
pub const LOAD_RENORMALIZE_TOL: f64 = 1e-6;

/// Characters with syntactic meaning in parameter references and
/// assignment keys.
const RESERVED: &[char] = &['=', ',', '|', '(', ')'];

pub(crate) fn is_valid_label(label: &str) -> bool {
    !label.is_empty() && label.trim() == label && !label.contains(RESERVED)
}

/// Renders `A=x,B=y` for a list of (variable, outcome) pairs.
pub fn render_assignment<S: AsRef<str>, T: AsRef<str>>(pairs: &[(S, T)]) -> String {
    pairs
        .iter()
        .map(|(v, o)| format!("{}={}", v.as_ref(), o.as_ref()))
        .collect::<Vec<_>>()
        .join(",")
}

/// Parses `A=x,B=y` (whitespace around tokens is ignored). The empty string
/// is the empty assignment.
pub fn parse_assignment(text: &str) -> Option<Vec<(String, String)>> {
    let text = text.trim();
    if text.is_empty() {
        return Some(Vec::new());
    }
    text.split(',')
        .map(|pair| {
            let (v, o) = pair.split_once('=')?;
            let (v, o) = (v.trim(), o.trim());
            (is_valid_label(v) && is_valid_label(o)).then(|| (v.to_string(), o.to_string()))
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChanceVariable {
    name: String,
    outcomes: Vec<String>,
    parents: Vec<String>,
    /// One distribution per full parent assignment, in mixed-radix order
    /// with the last parent varying fastest.
    rows: Vec<Vec<f64>>,
}

impl ChanceVariable {
    pub fn new(name: impl Into<String>, outcomes: Vec<String>, parents: Vec<String>, rows: Vec<Vec<f64>>) -> Self {
        Self {
            name: name.into(),
            outcomes,
            parents,
            rows,
        }
    }

    /// A variable without parents and a single distribution row.
    pub fn root(name: impl Into<String>, outcomes: &[&str], distribution: &[f64]) -> Self {
        Self::new(
            name,
            outcomes.iter().map(|s| s.to_string()).collect(),
            Vec::new(),
            vec![distribution.to_vec()],
        )
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn outcomes(&self) -> &[String] {
        &self.outcomes
    }

    pub fn parents(&self) -> &[String] {
        &self.parents
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn outcome_index(&self, outcome: &str) -> Option<usize> {
        self.outcomes.iter().position(|o| o == outcome)
    }

    #[cfg(test)]
    pub(crate) fn rows_mut(&mut self) -> &mut Vec<Vec<f64>> {
        &mut self.rows
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecisionVariable {
    name: String,
    alternatives: Vec<String>,
}

impl DecisionVariable {
    pub fn new(name: impl Into<String>, alternatives: Vec<String>) -> Self {
        Self {
            name: name.into(),
            alternatives,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn alternatives(&self) -> &[String] {
        &self.alternatives
    }

    pub fn alternative_index(&self, label: &str) -> Option<usize> {
        self.alternatives.iter().position(|a| a == label)
    }
}

/// Utilities indexed by alternative, then by assignment of the relevant
/// variables (mixed radix, last variable fastest).
#[derive(Clone, Debug, PartialEq)]
pub struct UtilityTable {
    relevant_vars: Vec<String>,
    values: Vec<Vec<f64>>,
}

impl UtilityTable {
    pub fn new(relevant_vars: Vec<String>, values: Vec<Vec<f64>>) -> Self {
        Self { relevant_vars, values }
    }

    pub fn relevant_vars(&self) -> &[String] {
        &self.relevant_vars
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    #[cfg(test)]
    pub(crate) fn values_mut(&mut self) -> &mut Vec<Vec<f64>> {
        &mut self.values
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecisionModel {
    chance: Vec<ChanceVariable>,
    decision: DecisionVariable,
    utility: UtilityTable,
    annotations: Vec<SecondOrderAnnotation>,
}

impl DecisionModel {
    /// Assembles a model without checking it; see [`DecisionModel::validate`].
    pub fn new(
        chance: Vec<ChanceVariable>,
        decision: DecisionVariable,
        utility: UtilityTable,
        annotations: Vec<SecondOrderAnnotation>,
    ) -> Self {
        Self {
            chance,
            decision,
            utility,
            annotations,
        }
    }

    pub fn chance(&self) -> &[ChanceVariable] {
        &self.chance
    }

    pub fn decision(&self) -> &DecisionVariable {
        &self.decision
    }

    pub fn utility(&self) -> &UtilityTable {
        &self.utility
    }

    pub fn annotations(&self) -> &[SecondOrderAnnotation] {
        &self.annotations
    }

    pub fn variable_index(&self, name: &str) -> Option<usize> {
        self.chance.iter().position(|v| v.name == name)
    }

    pub fn variable(&self, name: &str) -> Result<&ChanceVariable> {
        self.variable_index(name)
            .map(|i| &self.chance[i])
            .ok_or_else(|| Error::UnknownVariable(name.to_string()))
    }

    /// Outcome counts of the named variables, `None` if any is unknown.
    pub(crate) fn radix(&self, names: &[String]) -> Option<Vec<usize>> {
        names
            .iter()
            .map(|n| self.variable_index(n).map(|i| self.chance[i].outcomes.len()))
            .collect()
    }

    /// Number of full assignments of the named variables.
    pub(crate) fn assignment_count(&self, names: &[String]) -> Option<usize> {
        self.radix(names).map(|r| r.iter().product())
    }

    /// Outcome labels for each index of a mixed-radix assignment over `names`.
    pub(crate) fn decode_assignment(&self, names: &[String], mut index: usize) -> Vec<(String, String)> {
        let radix = self.radix(names).unwrap_or_default();
        let mut digits = vec![0; radix.len()];
        for (slot, &r) in digits.iter_mut().zip(&radix).rev() {
            *slot = index % r;
            index /= r;
        }
        names
            .iter()
            .zip(digits)
            .map(|(n, d)| {
                let var = &self.chance[self.variable_index(n).expect("radix checked")];
                (n.clone(), var.outcomes[d].clone())
            })
            .collect()
    }

    /// Mixed-radix index of an assignment over `names`; pairs may come in
    /// any order but must cover `names` exactly.
    pub(crate) fn encode_assignment(
        &self,
        names: &[String],
        pairs: &[(String, String)],
    ) -> std::result::Result<usize, String> {
        if pairs.len() != names.len() {
            return Err(format!(
                "expected an assignment of [{}], got {} pair(s)",
                names.join(", "),
                pairs.len()
            ));
        }
        let mut index = 0;
        for name in names {
            let var = self.variable(name).map_err(|_| format!("unknown variable `{name}`"))?;
            let (_, outcome) = pairs
                .iter()
                .find(|(v, _)| v == name)
                .ok_or_else(|| format!("missing value for `{name}`"))?;
            let digit = var
                .outcome_index(outcome)
                .ok_or_else(|| format!("`{name}` has no outcome `{outcome}`"))?;
            index = index * var.outcomes.len() + digit;
        }
        Ok(index)
    }

    /// Annotation whose target is `target` (after canonicalization).
    pub fn annotation(&self, target: &ParamRef) -> Option<&SecondOrderAnnotation> {
        let canonical = self.canonicalize(target).ok()?;
        self.annotations.iter().find(|a| a.target == canonical)
    }

    /// Returns a copy with `annotation` added, replacing any annotation on
    /// the same target. The target is stored in canonical form.
    pub fn with_annotation(&self, mut annotation: SecondOrderAnnotation) -> Result<Self> {
        annotation.target = self.canonicalize(&annotation.target)?;
        annotation.check_against(self)?;
        let mut next = self.clone();
        match next.annotations.iter_mut().find(|a| a.target == annotation.target) {
            Some(existing) => *existing = annotation,
            None => next.annotations.push(annotation),
        }
        Ok(next)
    }

    /// Returns a copy with every entry addressed by `target` replaced by
    /// `value`, using the same sibling renormalization as the Monte Carlo
    /// and sweep code paths.
    pub fn with_value(&self, target: &ParamRef, value: f64) -> Result<Self> {
        self.check()?;
        let slot = self.resolve(target)?;
        let mut next = self.clone();
        match slot {
            Slot::Row { var, row, outcome } => {
                let reference = target.to_string();
                let row = &mut next.chance[var].rows[row];
                renormalize_row(row, outcome, value).ok_or(Error::InvalidSubstitution { reference, value })?;
            }
            Slot::AllRows { var, outcome } => {
                let mut row = self.marginal_distribution(var)?;
                renormalize_row(&mut row, outcome, value).ok_or(Error::InvalidSubstitution {
                    reference: target.to_string(),
                    value,
                })?;
                for r in next.chance[var].rows.iter_mut() {
                    r.clone_from(&row);
                }
            }
            Slot::Utility { alt, col } => next.utility.values[alt][col] = value,
        }
        Ok(next)
    }

    pub(crate) fn chance_mut(&mut self) -> &mut Vec<ChanceVariable> {
        &mut self.chance
    }

    #[cfg(test)]
    pub(crate) fn utility_mut(&mut self) -> &mut UtilityTable {
        &mut self.utility
    }

    pub(crate) fn annotations_mut(&mut self) -> &mut Vec<SecondOrderAnnotation> {
        &mut self.annotations
    }

    /// Returns `Err(Error::Invalid)` unless [`DecisionModel::validate`] is clean.
    pub fn check(&self) -> Result<()> {
        let diagnostics = self.validate();
        if diagnostics.is_empty() {
            Ok(())
        } else {
            Err(Error::Invalid(diagnostics))
        }
    }
}

/// Sets `row[outcome] = value` and rescales the other entries by
/// `(1 - value) / (1 - old)`, or spreads `1 - value` uniformly over them when
/// the old entry was 1. Returns `None` when the result leaves `[0, 1]`.
pub(crate) fn renormalize_row(row: &mut [f64], outcome: usize, value: f64) -> Option<()> {
    if !(0.0..=1.0).contains(&value) {
        return None;
    }
    let old = row[outcome];
    let rest = 1.0 - old;
    let others = row.len() - 1;
    for (i, entry) in row.iter_mut().enumerate() {
        if i == outcome {
            *entry = value;
        } else if rest > 0.0 {
            *entry *= (1.0 - value) / rest;
        } else {
            *entry = (1.0 - value) / others as f64;
        }
    }
    row.iter().all(|p| (0.0..=1.0 + 1e-12).contains(p)).then_some(())
}
