use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::eval::{Evaluator, Slot};
use super::{is_valid_label, DecisionModel};
use crate::error::{Error, Result};

/// Address of a single probability or utility entry.
///
/// Canonical renderings are `p(Win=yes | Sus=no, Field=dry, Bonus=yes)` and
/// `u(Bet | Win=yes)`, with the conditioning pairs in the declared order of
/// the variable's parents (or of the utility table's relevant variables).
///
/// `p(Win=yes)` on a variable that has parents addresses the marginal:
/// substituting a value for it gives every row of `Win` the same
/// distribution, so the variable no longer depends on its parents.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum ParamRef {
    Probability {
        variable: String,
        outcome: String,
        given: Vec<(String, String)>,
    },
    Utility {
        alternative: String,
        given: Vec<(String, String)>,
    },
}

impl ParamRef {
    pub fn probability(variable: &str, outcome: &str, given: &[(&str, &str)]) -> Self {
        Self::Probability {
            variable: variable.into(),
            outcome: outcome.into(),
            given: own(given),
        }
    }

    pub fn utility(alternative: &str, given: &[(&str, &str)]) -> Self {
        Self::Utility {
            alternative: alternative.into(),
            given: own(given),
        }
    }

    pub fn is_probability(&self) -> bool {
        matches!(self, Self::Probability { .. })
    }

    pub fn given(&self) -> &[(String, String)] {
        match self {
            Self::Probability { given, .. } | Self::Utility { given, .. } => given,
        }
    }
}

fn own(pairs: &[(&str, &str)]) -> Vec<(String, String)> {
    pairs.iter().map(|(v, o)| (v.to_string(), o.to_string())).collect()
}

fn write_given(f: &mut fmt::Formatter<'_>, given: &[(String, String)]) -> fmt::Result {
    if given.is_empty() {
        return Ok(());
    }
    f.write_str(" | ")?;
    for (i, (v, o)) in given.iter().enumerate() {
        if i > 0 {
            f.write_str(", ")?;
        }
        write!(f, "{v}={o}")?;
    }
    Ok(())
}

impl fmt::Display for ParamRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Probability {
                variable,
                outcome,
                given,
            } => {
                write!(f, "p({variable}={outcome}")?;
                write_given(f, given)?;
                f.write_str(")")
            }
            Self::Utility { alternative, given } => {
                write!(f, "u({alternative}")?;
                write_given(f, given)?;
                f.write_str(")")
            }
        }
    }
}

impl FromStr for ParamRef {
    type Err = Error;

    fn from_str(input: &str) -> Result<Self> {
        let fail = |reason: &str| Error::ParseRef {
            input: input.to_string(),
            reason: reason.to_string(),
        };
        let text = input.trim();
        let (kind, rest) = text.split_at(text.find('(').ok_or_else(|| fail("missing `(`"))?);
        let body = rest
            .strip_prefix('(')
            .and_then(|r| r.strip_suffix(')'))
            .ok_or_else(|| fail("expected `p(...)` or `u(...)`"))?;
        let (head, tail) = match body.split_once('|') {
            Some((h, t)) => (h.trim(), Some(t)),
            None => (body.trim(), None),
        };
        let given = match tail {
            None => Vec::new(),
            Some(t) => {
                let pairs =
                    super::parse_assignment(t).ok_or_else(|| fail("conditioning part must be `Var=outcome, ...`"))?;
                if pairs.is_empty() {
                    return Err(fail("empty conditioning part after `|`"));
                }
                pairs
            }
        };
        match kind.trim() {
            "p" => {
                let (variable, outcome) = head
                    .split_once('=')
                    .ok_or_else(|| fail("probability reference needs `Var=outcome`"))?;
                let (variable, outcome) = (variable.trim(), outcome.trim());
                if !is_valid_label(variable) || !is_valid_label(outcome) {
                    return Err(fail("invalid variable or outcome label"));
                }
                Ok(Self::Probability {
                    variable: variable.into(),
                    outcome: outcome.into(),
                    given,
                })
            }
            "u" => {
                if !is_valid_label(head) {
                    return Err(fail("invalid alternative label"));
                }
                Ok(Self::Utility {
                    alternative: head.into(),
                    given,
                })
            }
            _ => Err(fail("reference must start with `p` or `u`")),
        }
    }
}

impl Serialize for ParamRef {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ParamRef {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

impl DecisionModel {
    pub(crate) fn resolve(&self, reference: &ParamRef) -> Result<Slot> {
        let unresolved = |reason: String| Error::Unresolved {
            reference: reference.to_string(),
            reason,
        };
        match reference {
            ParamRef::Probability {
                variable,
                outcome,
                given,
            } => {
                let var = self
                    .variable_index(variable)
                    .ok_or_else(|| unresolved(format!("unknown variable `{variable}`")))?;
                let cv = &self.chance()[var];
                let outcome = cv
                    .outcome_index(outcome)
                    .ok_or_else(|| unresolved(format!("`{variable}` has no outcome `{outcome}`")))?;
                if given.is_empty() && !cv.parents().is_empty() {
                    return Ok(Slot::AllRows { var, outcome });
                }
                let row = self.encode_assignment(cv.parents(), given).map_err(unresolved)?;
                Ok(Slot::Row { var, row, outcome })
            }
            ParamRef::Utility { alternative, given } => {
                let alt = self
                    .decision()
                    .alternative_index(alternative)
                    .ok_or_else(|| unresolved(format!("unknown alternative `{alternative}`")))?;
                let col = self
                    .encode_assignment(self.utility().relevant_vars(), given)
                    .map_err(unresolved)?;
                Ok(Slot::Utility { alt, col })
            }
        }
    }

    /// Reorders the conditioning pairs of `reference` into declared order,
    /// failing if it does not resolve.
    pub fn canonicalize(&self, reference: &ParamRef) -> Result<ParamRef> {
        let slot = self.resolve(reference)?;
        Ok(self.render_slot(slot))
    }

    pub(crate) fn render_slot(&self, slot: Slot) -> ParamRef {
        match slot {
            Slot::Row { var, row, outcome } => {
                let cv = &self.chance()[var];
                ParamRef::Probability {
                    variable: cv.name().to_string(),
                    outcome: cv.outcomes()[outcome].clone(),
                    given: self.decode_assignment(cv.parents(), row),
                }
            }
            Slot::AllRows { var, outcome } => {
                let cv = &self.chance()[var];
                ParamRef::Probability {
                    variable: cv.name().to_string(),
                    outcome: cv.outcomes()[outcome].clone(),
                    given: Vec::new(),
                }
            }
            Slot::Utility { alt, col } => ParamRef::Utility {
                alternative: self.decision().alternatives()[alt].clone(),
                given: self.decode_assignment(self.utility().relevant_vars(), col),
            },
        }
    }

    /// Current value of the entry addressed by `reference`; for a marginal
    /// reference this is the marginal probability.
    pub fn value_of(&self, reference: &ParamRef) -> Result<f64> {
        self.check()?;
        let slot = self.resolve(reference)?;
        let evaluator = Evaluator::new(self)?;
        Ok(evaluator.current_value(evaluator.base(), slot))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn renders_canonical_forms() {
        let p = ParamRef::probability("Win", "yes", &[("Sus", "no"), ("Field", "dry"), ("Bonus", "yes")]);
        assert_eq!(p.to_string(), "p(Win=yes | Sus=no, Field=dry, Bonus=yes)");
        assert_eq!(
            ParamRef::utility("Bet", &[("Win", "yes")]).to_string(),
            "u(Bet | Win=yes)"
        );
        assert_eq!(ParamRef::probability("Win", "yes", &[]).to_string(), "p(Win=yes)");
        assert_eq!(ParamRef::utility("Bet", &[]).to_string(), "u(Bet)");
    }

    #[test]
    fn parses_loose_whitespace() {
        let r: ParamRef = " p( Win = yes |Sus=no ,Field= dry ) ".parse().unwrap();
        assert_eq!(r.to_string(), "p(Win=yes | Sus=no, Field=dry)");
        let u: ParamRef = "u(Do-not-bet|Win=no)".parse().unwrap();
        assert_eq!(u.to_string(), "u(Do-not-bet | Win=no)");
    }

    #[test]
    fn rejects_malformed_references() {
        for bad in [
            "",
            "p",
            "p(Win)",
            "q(Win=yes)",
            "p(Win=yes |)",
            "p(Win=yes",
            "u()",
            "p(=yes)",
        ] {
            assert!(bad.parse::<ParamRef>().is_err(), "{bad:?} should not parse");
        }
    }

    fn label() -> impl Strategy<Value = String> {
        "[A-Za-z][A-Za-z0-9_-]{0,6}"
    }

    fn reference() -> impl Strategy<Value = ParamRef> {
        let given = || prop::collection::vec((label(), label()), 0..4);
        prop_oneof![
            (label(), label(), given()).prop_map(|(variable, outcome, given)| {
                ParamRef::Probability {
                    variable,
                    outcome,
                    given,
                }
            }),
            (label(), given()).prop_map(|(alternative, given)| ParamRef::Utility { alternative, given }),
        ]
    }

    proptest! {
        #[test]
        fn parse_render_round_trip(r in reference()) {
            let text = r.to_string();
            let parsed: ParamRef = text.parse().unwrap();
            prop_assert_eq!(&parsed, &r);
            prop_assert_eq!(parsed.to_string(), text);
        }
    }
}
