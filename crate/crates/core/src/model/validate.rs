use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::eval::Evaluator;
use super::{is_valid_label, DecisionModel, ParamRef, NORMALIZATION_TOL};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DiagnosticKind {
    InvalidLabel,
    DuplicateName,
    TooFewOutcomes,
    UnknownParent,
    Cycle,
    MissingRow,
    ExtraRow,
    RowShape,
    ProbabilityOutOfRange,
    RowNotNormalized,
    NoAlternatives,
    UnknownUtilityVariable,
    UtilityShape,
    JointNotNormalized,
    Annotation,
    Schema,
}

/// A single violated invariant. `subject` is a variable or alternative name
/// or a canonical parameter reference.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub subject: String,
    pub kind: DiagnosticKind,
    pub message: String,
}

impl Diagnostic {
    pub fn new(subject: impl Into<String>, kind: DiagnosticKind, message: impl Into<String>) -> Self {
        Self {
            subject: subject.into(),
            kind,
            message: message.into(),
        }
    }
}

impl DecisionModel {
    /// Checks every structural and numeric invariant. An empty list means
    /// the model is valid.
    pub fn validate(&self) -> Vec<Diagnostic> {
        let mut out = Vec::new();
        self.check_names(&mut out);
        let parents_known = self.check_parents(&mut out);
        if parents_known {
            self.check_cycles(&mut out);
            self.check_rows(&mut out);
        }
        self.check_utility(&mut out);
        if out.is_empty() {
            self.check_joint(&mut out);
        }
        if out.is_empty() {
            for annotation in self.annotations() {
                out.extend(annotation.diagnostics(self));
            }
            let mut seen = HashSet::new();
            for a in self.annotations() {
                if let Ok(target) = self.canonicalize(&a.target) {
                    if !seen.insert(target.clone()) {
                        out.push(Diagnostic::new(
                            target.to_string(),
                            DiagnosticKind::Annotation,
                            "more than one annotation on this parameter",
                        ));
                    }
                }
            }
        }
        out
    }

    fn check_names(&self, out: &mut Vec<Diagnostic>) {
        let mut names = HashSet::new();
        let decision = self.decision().name();
        for name in self.chance().iter().map(|v| v.name()).chain([decision]) {
            if !is_valid_label(name) {
                out.push(Diagnostic::new(
                    name,
                    DiagnosticKind::InvalidLabel,
                    "invalid variable name",
                ));
            }
            if !names.insert(name) {
                out.push(Diagnostic::new(
                    name,
                    DiagnosticKind::DuplicateName,
                    "variable name is not unique",
                ));
            }
        }
        for v in self.chance() {
            if v.outcomes().len() < 2 {
                out.push(Diagnostic::new(
                    v.name(),
                    DiagnosticKind::TooFewOutcomes,
                    "needs at least two outcomes",
                ));
            }
            let mut seen = HashSet::new();
            for o in v.outcomes() {
                if !is_valid_label(o) || !seen.insert(o) {
                    out.push(Diagnostic::new(
                        v.name(),
                        DiagnosticKind::InvalidLabel,
                        format!("outcome `{o}` is invalid or repeated"),
                    ));
                }
            }
        }
        let alternatives = self.decision().alternatives();
        if alternatives.is_empty() {
            out.push(Diagnostic::new(
                decision,
                DiagnosticKind::NoAlternatives,
                "decision has no alternatives",
            ));
        }
        let mut seen = HashSet::new();
        for a in alternatives {
            if !is_valid_label(a) || !seen.insert(a) {
                out.push(Diagnostic::new(
                    decision,
                    DiagnosticKind::InvalidLabel,
                    format!("alternative `{a}` is invalid or repeated"),
                ));
            }
        }
    }

    fn check_parents(&self, out: &mut Vec<Diagnostic>) -> bool {
        let before = out.len();
        for v in self.chance() {
            let mut seen = HashSet::new();
            for p in v.parents() {
                if self.variable_index(p).is_none() {
                    out.push(Diagnostic::new(
                        v.name(),
                        DiagnosticKind::UnknownParent,
                        format!("parent `{p}` is not a chance variable"),
                    ));
                } else if !seen.insert(p) {
                    out.push(Diagnostic::new(
                        v.name(),
                        DiagnosticKind::DuplicateName,
                        format!("parent `{p}` listed twice"),
                    ));
                }
            }
        }
        out.len() == before
    }

    fn check_cycles(&self, out: &mut Vec<Diagnostic>) {
        // 0 = unvisited, 1 = on stack, 2 = done
        let n = self.chance().len();
        let mut state = vec![0u8; n];
        let mut reported = HashSet::new();
        fn visit(
            model: &DecisionModel,
            v: usize,
            state: &mut [u8],
            reported: &mut HashSet<usize>,
            out: &mut Vec<Diagnostic>,
        ) {
            state[v] = 1;
            for p in model.chance()[v].parents() {
                let Some(pi) = model.variable_index(p) else { continue };
                match state[pi] {
                    0 => visit(model, pi, state, reported, out),
                    1 => {
                        if reported.insert(pi) {
                            out.push(Diagnostic::new(
                                p.as_str(),
                                DiagnosticKind::Cycle,
                                "variable is its own ancestor",
                            ));
                        }
                    }
                    _ => {}
                }
            }
            state[v] = 2;
        }
        for v in 0..n {
            if state[v] == 0 {
                visit(self, v, &mut state, &mut reported, out);
            }
        }
    }

    fn check_rows(&self, out: &mut Vec<Diagnostic>) {
        for v in self.chance() {
            let expected = self.assignment_count(v.parents()).unwrap_or(0);
            let rows = v.rows();
            if rows.len() < expected {
                out.push(Diagnostic::new(
                    v.name(),
                    DiagnosticKind::MissingRow,
                    format!("{} of {expected} parent assignments have no row", expected - rows.len()),
                ));
            } else if rows.len() > expected {
                out.push(Diagnostic::new(
                    v.name(),
                    DiagnosticKind::ExtraRow,
                    format!("{} rows for {expected} parent assignments", rows.len()),
                ));
            }
            for (r, row) in rows.iter().enumerate().take(expected) {
                let subject = || {
                    if v.outcomes().is_empty() {
                        return v.name().to_string();
                    }
                    ParamRef::Probability {
                        variable: v.name().into(),
                        outcome: v.outcomes()[0].clone(),
                        given: self.decode_assignment(v.parents(), r),
                    }
                    .to_string()
                };
                if row.len() != v.outcomes().len() {
                    out.push(Diagnostic::new(
                        subject(),
                        DiagnosticKind::RowShape,
                        format!("row has {} entries for {} outcomes", row.len(), v.outcomes().len()),
                    ));
                    continue;
                }
                if row.iter().any(|p| !(0.0..=1.0).contains(p)) {
                    out.push(Diagnostic::new(
                        subject(),
                        DiagnosticKind::ProbabilityOutOfRange,
                        "probability outside [0, 1]",
                    ));
                    continue;
                }
                let sum: f64 = row.iter().sum();
                if (sum - 1.0).abs() > NORMALIZATION_TOL {
                    out.push(Diagnostic::new(
                        subject(),
                        DiagnosticKind::RowNotNormalized,
                        format!("row not normalized: sums to {sum}"),
                    ));
                }
            }
        }
    }

    fn check_utility(&self, out: &mut Vec<Diagnostic>) {
        let utility = self.utility();
        let mut seen = HashSet::new();
        let mut known = true;
        for name in utility.relevant_vars() {
            if self.variable_index(name).is_none() {
                known = false;
                out.push(Diagnostic::new(
                    name.as_str(),
                    DiagnosticKind::UnknownUtilityVariable,
                    "utility depends on an unknown chance variable",
                ));
            } else if !seen.insert(name) {
                out.push(Diagnostic::new(
                    name.as_str(),
                    DiagnosticKind::DuplicateName,
                    "relevant variable listed twice",
                ));
            }
        }
        if !known {
            return;
        }
        let cols = self.assignment_count(utility.relevant_vars()).unwrap_or(0);
        let alternatives = self.decision().alternatives();
        if utility.values().len() != alternatives.len() {
            out.push(Diagnostic::new(
                self.decision().name(),
                DiagnosticKind::UtilityShape,
                format!(
                    "{} utility rows for {} alternatives",
                    utility.values().len(),
                    alternatives.len()
                ),
            ));
            return;
        }
        for (alt, row) in alternatives.iter().zip(utility.values()) {
            if row.len() != cols {
                out.push(Diagnostic::new(
                    alt.as_str(),
                    DiagnosticKind::UtilityShape,
                    format!("{} utility entries for {cols} assignments", row.len()),
                ));
            } else if let Some(c) = row.iter().position(|u| !u.is_finite()) {
                let reference = ParamRef::Utility {
                    alternative: alt.clone(),
                    given: self.decode_assignment(utility.relevant_vars(), c),
                };
                out.push(Diagnostic::new(
                    reference.to_string(),
                    DiagnosticKind::UtilityShape,
                    "utility is not finite",
                ));
            }
        }
    }

    fn check_joint(&self, out: &mut Vec<Diagnostic>) {
        match Evaluator::new(self) {
            Ok(ev) => {
                let total: f64 = (0..ev.n_terms()).map(|t| ev.probability(ev.base(), t)).sum();
                if (total - 1.0).abs() > NORMALIZATION_TOL {
                    out.push(Diagnostic::new(
                        "joint",
                        DiagnosticKind::JointNotNormalized,
                        format!("joint distribution sums to {total}"),
                    ));
                }
            }
            Err(e) => out.push(Diagnostic::new(
                "joint",
                DiagnosticKind::JointNotNormalized,
                e.to_string(),
            )),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ChanceVariable;
    use crate::testkit::football;

    #[test]
    fn football_is_valid() {
        assert_eq!(football().validate(), vec![]);
    }

    #[test]
    fn unnormalized_row_is_reported_once() {
        let mut model = football();
        model.chance_mut()[3].rows_mut()[2] = vec![0.5, 0.4];
        let diags = model.validate();
        assert_eq!(diags.len(), 1, "{diags:?}");
        assert_eq!(diags[0].kind, DiagnosticKind::RowNotNormalized);
        assert_eq!(diags[0].subject, "p(Win=yes | Sus=yes, Field=wet, Bonus=yes)");
    }

    #[test]
    fn self_parent_is_a_cycle() {
        let mut model = football();
        let field = ChanceVariable::new(
            "Field",
            vec!["dry".into(), "wet".into()],
            vec!["Field".into()],
            vec![vec![0.7, 0.3], vec![0.7, 0.3]],
        );
        model.chance_mut()[1] = field;
        let diags = model.validate();
        assert!(
            diags
                .iter()
                .any(|d| d.kind == DiagnosticKind::Cycle && d.subject == "Field"),
            "{diags:?}"
        );
    }

    #[test]
    fn two_variable_cycle() {
        let mut model = football();
        let chance = model.chance_mut();
        chance[0] = ChanceVariable::new(
            "Sus",
            vec!["yes".into(), "no".into()],
            vec!["Win".into()],
            vec![vec![0.6, 0.4], vec![0.6, 0.4]],
        );
        let diags = model.validate();
        assert!(diags.iter().any(|d| d.kind == DiagnosticKind::Cycle), "{diags:?}");
    }

    #[test]
    fn structural_problems() {
        let mut model = football();
        model.chance_mut()[3].rows_mut().pop();
        model.chance_mut().push(ChanceVariable::new(
            "Bonus",
            vec!["yes".into()],
            vec![],
            vec![vec![1.0]],
        ));
        let kinds: Vec<_> = model.validate().into_iter().map(|d| d.kind).collect();
        assert!(kinds.contains(&DiagnosticKind::MissingRow));
        assert!(kinds.contains(&DiagnosticKind::DuplicateName));
        assert!(kinds.contains(&DiagnosticKind::TooFewOutcomes));
    }
}
