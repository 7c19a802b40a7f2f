//! Interval-valued probabilities propagated by sweeping each interval
//! between its endpoints.
//!
//! A marginal is multilinear in the entries of the model's distribution
//! rows, so its extremes over a box of single-entry overrides are attained
//! at the box's corners. [`marginal_bounds`] enumerates those corners.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{DecisionModel, Evaluator, ParamRef, Slot};

/// Largest number of overrides accepted by [`marginal_bounds`].
pub const MAX_OVERRIDES: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawInterval")]
pub struct ProbabilityInterval {
    low: f64,
    high: f64,
}

#[derive(Deserialize)]
struct RawInterval {
    low: f64,
    high: f64,
}

impl TryFrom<RawInterval> for ProbabilityInterval {
    type Error = Error;

    fn try_from(raw: RawInterval) -> Result<Self> {
        Self::new(raw.low, raw.high)
    }
}

impl ProbabilityInterval {
    pub fn new(low: f64, high: f64) -> Result<Self> {
        if !(0.0 <= low && low <= high && high <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "[{low}, {high}] is not an interval inside [0, 1]"
            )));
        }
        Ok(ProbabilityInterval { low, high })
    }

    pub fn point(value: f64) -> Result<Self> {
        Self::new(value, value)
    }

    pub fn low(&self) -> f64 {
        self.low
    }

    pub fn high(&self) -> f64 {
        self.high
    }

    pub fn is_degenerate(&self) -> bool {
        self.low == self.high
    }

    pub fn contains(&self, x: f64) -> bool {
        self.low <= x && x <= self.high
    }
}

impl fmt::Display for ProbabilityInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.low, self.high)
    }
}

/// Parses `lo:hi`.
impl FromStr for ProbabilityInterval {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("expected `low:high`, got `{s}`"));
        let (lo, hi) = s.split_once(':').ok_or_else(bad)?;
        let lo = lo.trim().parse().map_err(|_| bad())?;
        let hi = hi.trim().parse().map_err(|_| bad())?;
        Self::new(lo, hi)
    }
}

/// Bounds on `p(A1 A2 ... An)` from bounds on the chain
/// `p(A1), p(A2 | A1), ..., p(An | A1 ... An-1)`: the products of the lows
/// and of the highs.
pub fn conjunction_bounds(chain: &[ProbabilityInterval]) -> Result<ProbabilityInterval> {
    if chain.is_empty() {
        return Err(Error::InvalidArgument("conjunction of an empty chain".into()));
    }
    let low = chain.iter().map(|i| i.low).product();
    let high = chain.iter().map(|i| i.high).product();
    ProbabilityInterval::new(low, high)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundsReport {
    /// `Var=outcome`
    pub target: String,
    pub interval: ProbabilityInterval,
    /// Marginal of the target in the unmodified model.
    pub point: f64,
    pub vertices: usize,
    /// Caveats about how the overrides were applied.
    pub notes: Vec<String>,
}

/// Bounds on the marginal `p(variable=outcome)` when each overridden entry
/// may take any value in its interval.
///
/// Each override moves one probability entry and rescales its siblings as
/// a point substitution would. Every one of the `2^k` endpoint
/// combinations is evaluated and the extremes returned.
pub fn marginal_bounds(
    model: &DecisionModel,
    overrides: &[(ParamRef, ProbabilityInterval)],
    target: (&str, &str),
) -> Result<BoundsReport> {
    model.check()?;
    if overrides.len() > MAX_OVERRIDES {
        return Err(Error::TooManyOverrides {
            count: overrides.len(),
            limit: MAX_OVERRIDES,
        });
    }
    let var = model
        .variable_index(target.0)
        .ok_or_else(|| Error::UnknownVariable(target.0.to_string()))?;
    let outcome = model.chance()[var]
        .outcome_index(target.1)
        .ok_or_else(|| Error::UnknownOutcome {
            variable: target.0.to_string(),
            outcome: target.1.to_string(),
        })?;

    let mut slots: Vec<(Slot, ParamRef, ProbabilityInterval)> = Vec::with_capacity(overrides.len());
    let mut notes = Vec::new();
    for (reference, interval) in overrides {
        if !reference.is_probability() {
            return Err(Error::InvalidArgument(format!(
                "{reference} is a utility; only probabilities take interval bounds"
            )));
        }
        let reference = model.canonicalize(reference)?;
        let slot = model.resolve(&reference)?;
        if let Some((_, other, _)) = slots.iter().find(|(s, ..)| s.conflicts_with(&slot)) {
            return Err(Error::SharedRow(other.to_string(), reference.to_string()));
        }
        let (ParamRef::Probability { variable, .. }, Slot::Row { var: v, .. } | Slot::AllRows { var: v, .. }) =
            (&reference, slot)
        else {
            unreachable!("probability references resolve to rows");
        };
        let width = model.chance()[v].outcomes().len();
        if width > 2 && !interval.is_degenerate() {
            notes.push(format!(
                "{reference}: the other {} outcomes of `{variable}` are rescaled proportionally, so their bounds are coupled",
                width - 1
            ));
        }
        if matches!(slot, Slot::AllRows { .. }) {
            notes.push(format!(
                "{reference}: `{variable}` is made independent of its parents at every vertex"
            ));
        }
        slots.push((slot, reference, *interval));
    }

    let ev = Evaluator::new(model)?;
    let point = ev.marginal_distribution(ev.base(), var)[outcome];
    let vertices = 1usize << slots.len();
    let (low, high) = (0..vertices)
        .into_par_iter()
        .map(|mask| -> Result<(f64, f64)> {
            let mut params = ev.base().to_vec();
            for (k, (slot, reference, interval)) in slots.iter().enumerate() {
                let value = if mask >> k & 1 == 1 {
                    interval.high
                } else {
                    interval.low
                };
                ev.substitute(&mut params, *slot, value)
                    .ok_or_else(|| Error::InvalidSubstitution {
                        reference: reference.to_string(),
                        value,
                    })?;
            }
            let p = ev.marginal_distribution(&params, var)[outcome];
            Ok((p, p))
        })
        .try_reduce(
            || (f64::INFINITY, f64::NEG_INFINITY),
            |a, b| Ok((a.0.min(b.0), a.1.max(b.1))),
        )?;

    Ok(BoundsReport {
        target: format!("{}={}", target.0, target.1),
        interval: ProbabilityInterval::new(low.clamp(0.0, 1.0), high.clamp(low.clamp(0.0, 1.0), 1.0))?,
        point,
        vertices,
        notes,
    })
}
