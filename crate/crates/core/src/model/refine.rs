//! Extending the conversation: conditioning a directly assessed variable on
//! newly identified influencing events.

use serde::{Deserialize, Serialize};

use super::{ChanceVariable, DecisionModel, DiagnosticKind, ParamRef};
use crate::error::{Error, Result};

/// A conditioning variable for [`DecisionModel::refine`]: either one that
/// already exists in the model, or a new variable with its own table.
#[derive(Clone, Debug, PartialEq)]
pub enum NewParent {
    Existing(String),
    New(ChanceVariable),
}

impl NewParent {
    pub fn name(&self) -> &str {
        match self {
            Self::Existing(name) => name,
            Self::New(v) => v.name(),
        }
    }
}

/// Distribution of the refined variable for each assignment of its new
/// parents. Rows are given as (assignment, probabilities aligned with the
/// refined variable's outcomes); assignment pairs may be in any order.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ConditionalTable {
    pub rows: Vec<(Vec<(String, String)>, Vec<f64>)>,
}

impl ConditionalTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn row(mut self, assignment: &[(&str, &str)], distribution: &[f64]) -> Self {
        self.rows.push((
            assignment.iter().map(|(v, o)| (v.to_string(), o.to_string())).collect(),
            distribution.to_vec(),
        ));
        self
    }
}

impl DecisionModel {
    /// Returns a new model in which the parentless variable addressed by
    /// `target` is conditioned on `parents` with table `cpt`. New parents
    /// are inserted just before the target. Annotations carry over; a
    /// reference such as `p(Win=yes)` then addresses the marginal.
    pub fn refine(&self, target: &ParamRef, parents: &[NewParent], cpt: &ConditionalTable) -> Result<Self> {
        self.check()?;
        let variable = match target {
            ParamRef::Probability { variable, given, .. } if given.is_empty() => variable,
            _ => {
                return Err(Error::Refine(format!(
                    "`{target}` must be an unconditioned probability reference"
                )))
            }
        };
        let target_idx = self
            .variable_index(variable)
            .ok_or_else(|| Error::UnknownVariable(variable.clone()))?;
        if !self.chance()[target_idx].parents().is_empty() {
            return Err(Error::Refine(format!(
                "`{variable}` already has parents; refine its parents instead"
            )));
        }
        if parents.is_empty() {
            return Err(Error::Refine("no conditioning variables given".into()));
        }

        let mut next = self.clone();
        let mut inserted = Vec::new();
        for parent in parents {
            match parent {
                NewParent::Existing(name) => {
                    if name == variable {
                        return Err(Error::Refine(format!(
                            "cycle introduced: `{name}` cannot condition itself"
                        )));
                    }
                    if self.variable_index(name).is_none() {
                        return Err(Error::UnknownVariable(name.clone()));
                    }
                }
                NewParent::New(v) => {
                    let clash = self.variable_index(v.name()).is_some()
                        || self.decision().name() == v.name()
                        || inserted.iter().any(|w: &ChanceVariable| w.name() == v.name());
                    if clash {
                        return Err(Error::Refine(format!("name clash: `{}` already exists", v.name())));
                    }
                    inserted.push(v.clone());
                }
            }
        }
        let parent_names: Vec<String> = parents.iter().map(|p| p.name().to_string()).collect();
        for i in 0..parent_names.len() {
            if parent_names[..i].contains(&parent_names[i]) {
                return Err(Error::Refine(format!("`{}` listed twice", parent_names[i])));
            }
        }

        let width = self.chance()[target_idx].outcomes().len();
        let outcomes = self.chance()[target_idx].outcomes().to_vec();
        let n_inserted = inserted.len();
        let chance = next.chance_mut();
        for (offset, v) in inserted.into_iter().enumerate() {
            chance.insert(target_idx + offset, v);
        }
        let count = next
            .assignment_count(&parent_names)
            .ok_or_else(|| Error::Refine("conditioning variables do not resolve".into()))?;

        let mut rows: Vec<Option<Vec<f64>>> = vec![None; count];
        for (assignment, dist) in &cpt.rows {
            let index = next
                .encode_assignment(&parent_names, assignment)
                .map_err(|e| Error::Refine(format!("bad conditional table row: {e}")))?;
            if dist.len() != width {
                return Err(Error::Refine(format!(
                    "conditional table row has {} entries for {width} outcomes",
                    dist.len()
                )));
            }
            if rows[index].replace(dist.clone()).is_some() {
                return Err(Error::Refine(format!(
                    "conditional table repeats the row for {}",
                    super::render_assignment(&next.decode_assignment(&parent_names, index))
                )));
            }
        }
        let rows = rows
            .into_iter()
            .enumerate()
            .map(|(i, row)| {
                row.ok_or_else(|| {
                    Error::Refine(format!(
                        "incomplete conditional table: no row for {}",
                        super::render_assignment(&next.decode_assignment(&parent_names, i))
                    ))
                })
            })
            .collect::<Result<Vec<_>>>()?;

        next.chance_mut()[target_idx + n_inserted] =
            ChanceVariable::new(variable.clone(), outcomes, parent_names, rows);

        let diagnostics = next.validate();
        if let Some(cycle) = diagnostics.iter().find(|d| d.kind == DiagnosticKind::Cycle) {
            return Err(Error::Refine(format!("cycle introduced at `{}`", cycle.subject)));
        }
        if !diagnostics.is_empty() {
            return Err(Error::Invalid(diagnostics));
        }
        Ok(next)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testkit::{football, football_direct, table_one_cpt, table_one_events};

    fn win() -> ParamRef {
        ParamRef::probability("Win", "yes", &[])
    }

    #[test]
    fn table_one_refinement_gives_053() {
        let direct = football_direct(0.5);
        let refined = direct.refine(&win(), &table_one_events(), &table_one_cpt()).unwrap();
        assert!((refined.marginal("Win", "yes").unwrap() - 0.53).abs() < 1e-9);
        assert!((refined.expected_utility("Bet").unwrap() - 300.0).abs() < 1e-9);
        // The input is untouched.
        assert_eq!(direct.marginal("Win", "yes").unwrap(), 0.5);
        assert_eq!(
            refined.chance().iter().map(|v| v.name()).collect::<Vec<_>>(),
            ["Sus", "Field", "Bonus", "Win"]
        );
        assert_eq!(refined.validate(), vec![]);
        // Same tables as the hand-built Table 1 model.
        assert_eq!(refined.chance(), football().chance());
    }

    #[test]
    fn constant_rows_preserve_the_marginal() {
        let direct = football_direct(0.37);
        let field = ChanceVariable::root("Field", &["dry", "wet"], &[0.7, 0.3]);
        let cpt = ConditionalTable::new()
            .row(&[("Field", "dry")], &[0.37, 0.63])
            .row(&[("Field", "wet")], &[0.37, 0.63]);
        let refined = direct.refine(&win(), &[NewParent::New(field)], &cpt).unwrap();
        assert!((refined.marginal("Win", "yes").unwrap() - 0.37).abs() < 1e-12);
    }

    #[test]
    fn field_only_refinement() {
        // Collapsing Table 1 over Sus and Bonus gives p(Win | dry) = 0.56 and
        // p(Win | wet) = 0.46, so p(Win) = 0.46 + 0.10 p(dry).
        let field = ChanceVariable::root("Field", &["dry", "wet"], &[0.7, 0.3]);
        let cpt = ConditionalTable::new()
            .row(&[("Field", "dry")], &[0.56, 0.44])
            .row(&[("Field", "wet")], &[0.46, 0.54]);
        let refined = football_direct(0.5)
            .refine(&win(), &[NewParent::New(field)], &cpt)
            .unwrap();
        assert!((refined.marginal("Win", "yes").unwrap() - 0.53).abs() < 1e-12);
    }

    #[test]
    fn incomplete_table_is_rejected() {
        let field = ChanceVariable::root("Field", &["dry", "wet"], &[0.7, 0.3]);
        let cpt = ConditionalTable::new().row(&[("Field", "dry")], &[0.56, 0.44]);
        let err = football_direct(0.5)
            .refine(&win(), &[NewParent::New(field)], &cpt)
            .unwrap_err();
        assert!(err.to_string().contains("Field=wet"), "{err}");
    }

    #[test]
    fn name_clash_and_cycles() {
        let model = football_direct(0.5);
        let clash = ChanceVariable::root("Win", &["a", "b"], &[0.5, 0.5]);
        let cpt = ConditionalTable::new();
        let err = model.refine(&win(), &[NewParent::New(clash)], &cpt).unwrap_err();
        assert!(err.to_string().contains("name clash"), "{err}");

        // Field conditioned on Win, then Win refined on Field.
        let mut model = model;
        let win_idx = model.variable_index("Win").unwrap();
        let field = ChanceVariable::new(
            "Field",
            vec!["dry".into(), "wet".into()],
            vec!["Win".into()],
            vec![vec![0.7, 0.3], vec![0.7, 0.3]],
        );
        model.chance_mut().insert(win_idx + 1, field);
        let cpt = ConditionalTable::new()
            .row(&[("Field", "dry")], &[0.56, 0.44])
            .row(&[("Field", "wet")], &[0.46, 0.54]);
        let err = model
            .refine(&win(), &[NewParent::Existing("Field".into())], &cpt)
            .unwrap_err();
        assert!(err.to_string().contains("cycle"), "{err}");
    }

    #[test]
    fn conditioned_target_is_rejected() {
        let err = football().refine(&win(), &[], &ConditionalTable::new()).unwrap_err();
        assert!(err.to_string().contains("already has parents"), "{err}");
    }
}
