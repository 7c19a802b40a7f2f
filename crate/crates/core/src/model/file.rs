//! JSON model file format.
//!
//! ```json
//! {
//!   "chance": [
//!     {"name": "Field", "outcomes": ["dry", "wet"], "parents": [],
//!      "table": {"": {"dry": 0.7, "wet": 0.3}}},
//!     {"name": "Win", "outcomes": ["yes", "no"], "parents": ["Field"],
//!      "table": {"Field=dry": {"yes": 0.56, "no": 0.44},
//!                "Field=wet": {"yes": 0.46, "no": 0.54}}}
//!   ],
//!   "decision": {"name": "Wager", "alternatives": ["Bet", "Do-not-bet"]},
//!   "utility": {"relevant_vars": ["Win"],
//!               "entries": {"Bet": {"Win=yes": 5000, "Win=no": -5000},
//!                           "Do-not-bet": {"Win=yes": 0, "Win=no": 0}}},
//!   "annotations": []
//! }
//! ```
//!
//! Table rows and utility entries are keyed by canonical assignment strings
//! with variables in declared order; the empty string keys the single row
//! of a parentless variable.

use std::path::Path;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use super::{
    parse_assignment, render_assignment, ChanceVariable, ConditionalTable, DecisionModel, DecisionVariable, Diagnostic,
    DiagnosticKind, NewParent, ParamRef, UtilityTable, LOAD_RENORMALIZE_TOL,
};
use crate::confidence::AnnotationEntry;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub chance: Vec<ChanceEntry>,
    pub decision: DecisionEntry,
    pub utility: UtilityEntry,
    #[serde(default)]
    pub annotations: Vec<AnnotationEntry>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChanceEntry {
    pub name: String,
    pub outcomes: Vec<String>,
    #[serde(default)]
    pub parents: Vec<String>,
    pub table: IndexMap<String, IndexMap<String, f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecisionEntry {
    pub name: String,
    pub alternatives: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UtilityEntry {
    #[serde(default)]
    pub relevant_vars: Vec<String>,
    pub entries: IndexMap<String, IndexMap<String, f64>>,
}

/// Reads and fully validates a model file.
pub fn load_model(path: impl AsRef<Path>) -> Result<DecisionModel> {
    parse_model(&std::fs::read_to_string(path)?)
}

/// Parses and fully validates model JSON.
pub fn parse_model(json: &str) -> Result<DecisionModel> {
    let file: ModelFile = serde_json::from_str(json)?;
    file.into_model()
}

/// Parses model JSON and reports every diagnostic instead of stopping at
/// the first failure. Only malformed JSON is an error.
pub fn inspect_model(json: &str) -> Result<Vec<Diagnostic>> {
    let file: ModelFile = serde_json::from_str(json)?;
    Ok(match file.into_unchecked() {
        Ok(model) => model.validate(),
        Err(diagnostics) => diagnostics,
    })
}

/// Pretty-printed model JSON.
pub fn to_json(model: &DecisionModel) -> String {
    serde_json::to_string_pretty(&ModelFile::from(model)).expect("model file serializes")
}

pub fn save_model(model: &DecisionModel, path: impl AsRef<Path>) -> Result<()> {
    let mut text = to_json(model);
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

impl ModelFile {
    pub fn into_model(self) -> Result<DecisionModel> {
        let model = self.into_unchecked().map_err(Error::Invalid)?;
        model.check()?;
        Ok(model)
    }

    /// Converts to a model, renormalizing rows within the load tolerance.
    /// Errors are problems the in-memory model cannot represent (unknown
    /// keys, missing parents); numeric invariants are left to validation.
    pub fn into_unchecked(self) -> std::result::Result<DecisionModel, Vec<Diagnostic>> {
        let mut diags = Vec::new();
        let widths: IndexMap<&str, &[String]> =
            self.chance.iter().map(|c| (c.name.as_str(), &c.outcomes[..])).collect();

        let mut chance = Vec::with_capacity(self.chance.len());
        for entry in &self.chance {
            match keyed_rows(&entry.parents, &widths, &entry.table, &entry.outcomes) {
                Ok(rows) => {
                    let rows = rows
                        .into_iter()
                        .map(|row| row.map(renormalize_on_load).unwrap_or_default())
                        .collect();
                    chance.push(ChanceVariable::new(
                        entry.name.clone(),
                        entry.outcomes.clone(),
                        entry.parents.clone(),
                        rows,
                    ));
                }
                Err(messages) => diags.extend(
                    messages
                        .into_iter()
                        .map(|(kind, m)| Diagnostic::new(entry.name.as_str(), kind, m)),
                ),
            }
        }

        let mut utility_rows = Vec::new();
        match resolve_radix(&self.utility.relevant_vars, &widths) {
            Ok(radix) => {
                let count: usize = radix.iter().map(|o| o.len()).product();
                for alt in &self.decision.alternatives {
                    let Some(entries) = self.utility.entries.get(alt) else {
                        diags.push(Diagnostic::new(
                            alt.as_str(),
                            DiagnosticKind::UtilityShape,
                            "no utility entries for alternative",
                        ));
                        continue;
                    };
                    let mut row = vec![None; count];
                    for (key, value) in entries {
                        match assignment_index(&self.utility.relevant_vars, &radix, key) {
                            Ok(i) => {
                                if row[i].replace(*value).is_some() {
                                    diags.push(Diagnostic::new(
                                        alt.as_str(),
                                        DiagnosticKind::ExtraRow,
                                        format!("entry `{key}` appears twice"),
                                    ));
                                }
                            }
                            Err((kind, m)) => diags.push(Diagnostic::new(alt.as_str(), kind, m)),
                        }
                    }
                    if row.iter().any(Option::is_none) {
                        diags.push(Diagnostic::new(
                            alt.as_str(),
                            DiagnosticKind::UtilityShape,
                            "utility entries do not cover every assignment of the relevant variables",
                        ));
                    }
                    utility_rows.push(row.into_iter().map(|u| u.unwrap_or(f64::NAN)).collect());
                }
            }
            Err(messages) => diags.extend(
                messages
                    .into_iter()
                    .map(|(kind, m)| Diagnostic::new(self.decision.name.as_str(), kind, m)),
            ),
        }
        for key in self.utility.entries.keys() {
            if !self.decision.alternatives.contains(key) {
                diags.push(Diagnostic::new(
                    key.as_str(),
                    DiagnosticKind::UtilityShape,
                    "utility entries for an unknown alternative",
                ));
            }
        }

        let mut annotations = Vec::new();
        for entry in self.annotations {
            let subject = entry.target.clone();
            match entry.into_annotation() {
                Ok(a) => annotations.push(a),
                Err(e) => diags.push(Diagnostic::new(subject, DiagnosticKind::Annotation, e.to_string())),
            }
        }

        if !diags.is_empty() {
            return Err(diags);
        }
        let mut model = DecisionModel::new(
            chance,
            DecisionVariable::new(self.decision.name, self.decision.alternatives),
            UtilityTable::new(self.utility.relevant_vars, utility_rows),
            Vec::new(),
        );
        // Canonicalize annotation targets where they resolve; validation
        // reports the rest.
        for mut a in annotations {
            if let Ok(target) = model.canonicalize(&a.target) {
                a.target = target;
            }
            model.annotations_mut().push(a);
        }
        Ok(model)
    }
}

fn renormalize_on_load(mut row: Vec<f64>) -> Vec<f64> {
    let sum: f64 = row.iter().sum();
    if sum > 0.0 && (sum - 1.0).abs() <= LOAD_RENORMALIZE_TOL {
        row.iter_mut().for_each(|p| *p /= sum);
    }
    row
}

type Problems = Vec<(DiagnosticKind, String)>;

fn resolve_radix<'a>(
    vars: &[String],
    widths: &IndexMap<&str, &'a [String]>,
) -> std::result::Result<Vec<&'a [String]>, Problems> {
    let mut errors = Vec::new();
    let mut radix = Vec::with_capacity(vars.len());
    for v in vars {
        match widths.get(v.as_str()) {
            Some(outcomes) => radix.push(*outcomes),
            None => errors.push((DiagnosticKind::UnknownParent, format!("`{v}` is not a chance variable"))),
        }
    }
    if errors.is_empty() {
        Ok(radix)
    } else {
        Err(errors)
    }
}

/// Mixed-radix index of an assignment key over `vars`.
fn assignment_index(
    vars: &[String],
    radix: &[&[String]],
    key: &str,
) -> std::result::Result<usize, (DiagnosticKind, String)> {
    let bad = || {
        (
            DiagnosticKind::ExtraRow,
            format!("key `{key}` is not an assignment of [{}]", vars.join(", ")),
        )
    };
    let pairs =
        parse_assignment(key).ok_or_else(|| (DiagnosticKind::Schema, format!("malformed assignment key `{key}`")))?;
    if pairs.len() != vars.len() {
        return Err(bad());
    }
    vars.iter().zip(radix).try_fold(0, |index, (v, outcomes)| {
        pairs
            .iter()
            .find(|(pv, _)| pv == v)
            .and_then(|(_, o)| outcomes.iter().position(|x| x == o))
            .map(|d| index * outcomes.len() + d)
            .ok_or_else(bad)
    })
}

/// Places assignment-keyed rows at their mixed-radix index. Missing rows
/// come back as `None`.
fn keyed_rows(
    vars: &[String],
    widths: &IndexMap<&str, &[String]>,
    table: &IndexMap<String, IndexMap<String, f64>>,
    columns: &[String],
) -> std::result::Result<Vec<Option<Vec<f64>>>, Problems> {
    let radix = resolve_radix(vars, widths)?;
    let count: usize = radix.iter().map(|o| o.len()).product();
    let mut errors = Vec::new();
    let mut rows: Vec<Option<Vec<f64>>> = vec![None; count];
    for (key, cells) in table {
        let index = match assignment_index(vars, &radix, key) {
            Ok(i) => i,
            Err(e) => {
                errors.push(e);
                continue;
            }
        };
        let mut row = Vec::with_capacity(columns.len());
        for c in columns {
            match cells.get(c) {
                Some(p) => row.push(*p),
                None => errors.push((DiagnosticKind::RowShape, format!("row `{key}` has no entry for `{c}`"))),
            }
        }
        if let Some(extra) = cells.keys().find(|k| !columns.contains(k)) {
            errors.push((
                DiagnosticKind::RowShape,
                format!("row `{key}` has unknown entry `{extra}`"),
            ));
        }
        if rows[index].replace(row).is_some() {
            errors.push((DiagnosticKind::ExtraRow, format!("row `{key}` appears twice")));
        }
    }
    if errors.is_empty() {
        Ok(rows)
    } else {
        Err(errors)
    }
}

/// Body of a refinement: conditioning variables (names of existing
/// variables or full new variable entries) and the conditional table of the
/// refined variable keyed by assignments of those variables.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RefineEntry {
    pub parents: Vec<ParentEntry>,
    pub cpt: IndexMap<String, IndexMap<String, f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParentEntry {
    Existing(String),
    New(ChanceEntry),
}

impl RefineEntry {
    /// Resolves the entry against `model` for refining `variable`.
    pub fn into_parts(self, model: &DecisionModel, variable: &str) -> Result<(Vec<NewParent>, ConditionalTable)> {
        let target = model.variable(variable)?;
        let mut widths: IndexMap<&str, &[String]> = model.chance().iter().map(|c| (c.name(), c.outcomes())).collect();
        for p in &self.parents {
            if let ParentEntry::New(entry) = p {
                widths.entry(entry.name.as_str()).or_insert(&entry.outcomes[..]);
            }
        }
        let refine_error =
            |problems: Problems| Error::Refine(problems.into_iter().map(|(_, m)| m).collect::<Vec<_>>().join("; "));
        let mut parents = Vec::with_capacity(self.parents.len());
        for p in &self.parents {
            parents.push(match p {
                ParentEntry::Existing(name) => NewParent::Existing(name.clone()),
                ParentEntry::New(entry) => {
                    let rows =
                        keyed_rows(&entry.parents, &widths, &entry.table, &entry.outcomes).map_err(refine_error)?;
                    let rows = rows
                        .into_iter()
                        .map(|row| row.map(renormalize_on_load).unwrap_or_default())
                        .collect();
                    NewParent::New(ChanceVariable::new(
                        entry.name.clone(),
                        entry.outcomes.clone(),
                        entry.parents.clone(),
                        rows,
                    ))
                }
            });
        }
        let mut cpt = ConditionalTable::new();
        for (key, cells) in &self.cpt {
            let assignment =
                parse_assignment(key).ok_or_else(|| Error::Refine(format!("malformed assignment key `{key}`")))?;
            let mut row = Vec::with_capacity(target.outcomes().len());
            for o in target.outcomes() {
                row.push(
                    *cells
                        .get(o)
                        .ok_or_else(|| Error::Refine(format!("row `{key}` has no entry for `{o}`")))?,
                );
            }
            if let Some(extra) = cells.keys().find(|k| !target.outcomes().contains(k)) {
                return Err(Error::Refine(format!("row `{key}` has unknown entry `{extra}`")));
            }
            cpt.rows.push((assignment, renormalize_on_load(row)));
        }
        Ok((parents, cpt))
    }

    /// Refines `target` (an unconditioned probability reference) of `model`.
    pub fn apply(self, model: &DecisionModel, target: &ParamRef) -> Result<DecisionModel> {
        let ParamRef::Probability { variable, .. } = target else {
            return Err(Error::Refine(format!("`{target}` is not a probability reference")));
        };
        let (parents, cpt) = self.into_parts(model, variable)?;
        model.refine(target, &parents, &cpt)
    }
}

impl From<&DecisionModel> for ModelFile {
    fn from(model: &DecisionModel) -> Self {
        let chance = model
            .chance()
            .iter()
            .map(|v| ChanceEntry {
                name: v.name().to_string(),
                outcomes: v.outcomes().to_vec(),
                parents: v.parents().to_vec(),
                table: v
                    .rows()
                    .iter()
                    .enumerate()
                    .map(|(i, row)| {
                        (
                            render_assignment(&model.decode_assignment(v.parents(), i)),
                            v.outcomes().iter().cloned().zip(row.iter().copied()).collect(),
                        )
                    })
                    .collect(),
            })
            .collect();
        let relevant = model.utility().relevant_vars();
        let entries = model
            .decision()
            .alternatives()
            .iter()
            .zip(model.utility().values())
            .map(|(alt, row)| {
                (
                    alt.clone(),
                    row.iter()
                        .enumerate()
                        .map(|(i, u)| (render_assignment(&model.decode_assignment(relevant, i)), *u))
                        .collect(),
                )
            })
            .collect();
        Self {
            chance,
            decision: DecisionEntry {
                name: model.decision().name().to_string(),
                alternatives: model.decision().alternatives().to_vec(),
            },
            utility: UtilityEntry {
                relevant_vars: relevant.to_vec(),
                entries,
            },
            annotations: model
                .annotations()
                .iter()
                .map(AnnotationEntry::from_annotation)
                .collect(),
        }
    }
}
