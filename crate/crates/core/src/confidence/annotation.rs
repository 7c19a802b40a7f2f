use serde::{Deserialize, Serialize};

use super::distribution::SecondOrderDistribution;
use super::fit::{fit_beta_on, fit_sketch, FractilePoint};
use crate::error::{Error, Result};
use crate::model::{DecisionModel, Diagnostic, DiagnosticKind, ParamRef};

/// Default gap between an annotation's mean and the model's point value
/// above which [`coherence_check`] warns.
pub const DEFAULT_COHERENCE_TOL: f64 = 0.01;

/// Stored parameters must agree with a refit from the elicitation this
/// closely when a model file is loaded.
pub const REFIT_TOL: f64 = 1e-6;

/// What the assessor actually supplied, kept so that saved files can be
/// refit and checked on load.
#[derive(Clone, Debug, PartialEq)]
pub enum Elicitation {
    Fractiles(Vec<FractilePoint>),
    Sketch(Vec<(f64, f64)>),
}

/// A second-order distribution and assessment cost attached to one
/// probability or utility entry.
#[derive(Clone, Debug, PartialEq)]
pub struct SecondOrderAnnotation {
    pub target: ParamRef,
    /// Free-text description of the assessment scenario.
    pub scenario: String,
    /// Expected cost of carrying out the scenario, in utility units.
    pub cost: f64,
    pub distribution: SecondOrderDistribution,
    pub elicitation: Option<Elicitation>,
}

impl SecondOrderAnnotation {
    pub fn new(
        target: ParamRef,
        scenario: impl Into<String>,
        cost: f64,
        distribution: SecondOrderDistribution,
    ) -> Self {
        Self {
            target,
            scenario: scenario.into(),
            cost,
            distribution,
            elicitation: None,
        }
    }

    /// Fits a beta to two fractiles. `bounds` defaults to the unit interval
    /// and must be given for utility targets.
    pub fn from_fractiles(
        target: ParamRef,
        scenario: impl Into<String>,
        cost: f64,
        fractiles: &[FractilePoint],
        bounds: Option<(f64, f64)>,
    ) -> Result<Self> {
        let (low, high) = bounds.unwrap_or((0.0, 1.0));
        let distribution = fit_beta_on(fractiles, low, high)?;
        Ok(Self {
            elicitation: Some(Elicitation::Fractiles(fractiles.to_vec())),
            ..Self::new(target, scenario, cost, distribution)
        })
    }

    pub fn from_sketch(
        target: ParamRef,
        scenario: impl Into<String>,
        cost: f64,
        sketch: &[(f64, f64)],
    ) -> Result<Self> {
        let distribution = fit_sketch(sketch)?;
        Ok(Self {
            elicitation: Some(Elicitation::Sketch(sketch.to_vec())),
            ..Self::new(target, scenario, cost, distribution)
        })
    }

    pub(crate) fn diagnostics(&self, model: &DecisionModel) -> Vec<Diagnostic> {
        let subject = self.target.to_string();
        let mut out = Vec::new();
        let mut push =
            |message: String| out.push(Diagnostic::new(subject.clone(), DiagnosticKind::Annotation, message));
        if let Err(e) = model.canonicalize(&self.target) {
            push(e.to_string());
        }
        if self.scenario.trim().is_empty() {
            push("assessment scenario is empty".into());
        }
        if !(self.cost.is_finite() && self.cost >= 0.0) {
            push(format!("cost {} must be finite and nonnegative", self.cost));
        }
        let (low, high) = self.distribution.support();
        if self.target.is_probability() && (low < 0.0 || high > 1.0) {
            push(format!(
                "support [{low}, {high}] of a probability annotation leaves [0, 1]"
            ));
        }
        out
    }

    pub(crate) fn check_against(&self, model: &DecisionModel) -> Result<()> {
        let diagnostics = self.diagnostics(model);
        if diagnostics.is_empty() {
            Ok(())
        } else {
            Err(Error::Invalid(diagnostics))
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoherenceWarning {
    pub target: ParamRef,
    pub distribution_mean: f64,
    pub point_value: f64,
}

impl std::fmt::Display for CoherenceWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{}: second-order mean {} differs from the model value {}",
            self.target, self.distribution_mean, self.point_value
        )
    }
}

/// Warns when the annotation's mean is more than `tolerance` away from the
/// model's current value for the target (the marginal, for a marginal
/// reference). For utility targets the tolerance is relative to the width
/// of the distribution's support.
pub fn coherence_check(
    model: &DecisionModel,
    annotation: &SecondOrderAnnotation,
    tolerance: f64,
) -> Result<Option<CoherenceWarning>> {
    let point_value = model.value_of(&annotation.target)?;
    let distribution_mean = annotation.distribution.mean();
    let scale = if annotation.target.is_probability() {
        1.0
    } else {
        let (low, high) = annotation.distribution.support();
        (high - low).max(f64::MIN_POSITIVE)
    };
    Ok(
        ((distribution_mean - point_value).abs() > tolerance * scale).then(|| CoherenceWarning {
            target: model
                .canonicalize(&annotation.target)
                .unwrap_or_else(|_| annotation.target.clone()),
            distribution_mean,
            point_value,
        }),
    )
}

/// `distribution` object of an annotation in the model file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase", deny_unknown_fields)]
pub enum DistributionEntry {
    Beta {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        alpha: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        beta: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        fractiles: Option<Vec<FractilePoint>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        bounds: Option<[f64; 2]>,
    },
    Sketch {
        /// Fitted knots `[value, cumulative]`.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        cdf: Option<Vec<[f64; 2]>>,
        /// Raw sketch `[value, relative density]`.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        points: Option<Vec<[f64; 2]>>,
    },
    Degenerate {
        value: f64,
    },
}

/// One entry of the model file's `annotations` list.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnnotationEntry {
    pub target: String,
    pub scenario: String,
    pub cost: f64,
    pub distribution: DistributionEntry,
}

fn pairs(points: &[[f64; 2]]) -> Vec<(f64, f64)> {
    points.iter().map(|[a, b]| (*a, *b)).collect()
}

impl DistributionEntry {
    /// Builds the distribution, refitting from the elicitation when one is
    /// present and checking it against any stored parameters.
    pub fn into_distribution(self) -> Result<(SecondOrderDistribution, Option<Elicitation>)> {
        match self {
            Self::Beta {
                alpha,
                beta,
                fractiles,
                bounds,
            } => {
                let (low, high) = bounds.map_or((0.0, 1.0), |[l, h]| (l, h));
                match (fractiles, alpha, beta) {
                    (Some(fractiles), alpha, beta) => {
                        let fitted = fit_beta_on(&fractiles, low, high)?;
                        if let SecondOrderDistribution::Beta {
                            alpha: fa, beta: fb, ..
                        } = fitted
                        {
                            let stale = |stored: Option<f64>, fit: f64| {
                                stored.is_some_and(|s| (s - fit).abs() > REFIT_TOL * fit.max(1.0))
                            };
                            if stale(alpha, fa) || stale(beta, fb) {
                                return Err(Error::InvalidDistribution(format!(
                                    "stored beta parameters ({}, {}) disagree with the fit to the fractiles ({fa}, {fb})",
                                    alpha.unwrap_or(f64::NAN),
                                    beta.unwrap_or(f64::NAN)
                                )));
                            }
                        }
                        Ok((fitted, Some(Elicitation::Fractiles(fractiles))))
                    }
                    (None, Some(a), Some(b)) => Ok((SecondOrderDistribution::beta_on(a, b, low, high)?, None)),
                    _ => Err(Error::InvalidDistribution(
                        "a beta needs either `fractiles` or both `alpha` and `beta`".into(),
                    )),
                }
            }
            Self::Sketch { cdf, points } => match (cdf, points) {
                (cdf, Some(points)) => {
                    let sketch = pairs(&points);
                    let fitted = fit_sketch(&sketch)?;
                    if let (Some(stored), SecondOrderDistribution::PiecewiseLinear { points: knots }) = (&cdf, &fitted)
                    {
                        let agree = stored.len() == knots.len()
                            && stored
                                .iter()
                                .zip(knots)
                                .all(|([x, f], (kx, kf))| (x - kx).abs() <= REFIT_TOL && (f - kf).abs() <= REFIT_TOL);
                        if !agree {
                            return Err(Error::InvalidDistribution(
                                "stored cdf knots disagree with the fit to the sketch points".into(),
                            ));
                        }
                    }
                    Ok((fitted, Some(Elicitation::Sketch(sketch))))
                }
                (Some(cdf), None) => Ok((SecondOrderDistribution::piecewise_linear(pairs(&cdf))?, None)),
                (None, None) => Err(Error::InvalidDistribution("a sketch needs `cdf` or `points`".into())),
            },
            Self::Degenerate { value } => Ok((SecondOrderDistribution::degenerate(value)?, None)),
        }
    }

    pub fn from_distribution(distribution: &SecondOrderDistribution, elicitation: Option<&Elicitation>) -> Self {
        match distribution {
            SecondOrderDistribution::Beta { alpha, beta, low, high } => Self::Beta {
                alpha: Some(*alpha),
                beta: Some(*beta),
                fractiles: match elicitation {
                    Some(Elicitation::Fractiles(f)) => Some(f.clone()),
                    _ => None,
                },
                bounds: (*low != 0.0 || *high != 1.0).then_some([*low, *high]),
            },
            SecondOrderDistribution::PiecewiseLinear { points } => Self::Sketch {
                cdf: Some(points.iter().map(|&(x, f)| [x, f]).collect()),
                points: match elicitation {
                    Some(Elicitation::Sketch(s)) => Some(s.iter().map(|&(x, w)| [x, w]).collect()),
                    _ => None,
                },
            },
            SecondOrderDistribution::Degenerate { value } => Self::Degenerate { value: *value },
        }
    }
}

impl AnnotationEntry {
    pub fn into_annotation(self) -> Result<SecondOrderAnnotation> {
        let target: ParamRef = self.target.parse()?;
        let (distribution, elicitation) = self.distribution.into_distribution()?;
        Ok(SecondOrderAnnotation {
            target,
            scenario: self.scenario,
            cost: self.cost,
            distribution,
            elicitation,
        })
    }

    /// Attaches the annotation to `model`, replacing any previous one on the
    /// same parameter, and reports whether its mean disagrees with the
    /// model's current value.
    pub fn apply(self, model: &DecisionModel) -> Result<(DecisionModel, Option<CoherenceWarning>)> {
        let annotation = self.into_annotation()?;
        let warning = coherence_check(model, &annotation, DEFAULT_COHERENCE_TOL)?;
        Ok((model.with_annotation(annotation)?, warning))
    }

    pub fn from_annotation(annotation: &SecondOrderAnnotation) -> Self {
        Self {
            target: annotation.target.to_string(),
            scenario: annotation.scenario.clone(),
            cost: annotation.cost,
            distribution: DistributionEntry::from_distribution(
                &annotation.distribution,
                annotation.elicitation.as_ref(),
            ),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testkit::{football, football_annotation};

    #[test]
    fn football_annotation_is_incoherent_with_053() {
        let model = football();
        let annotation = football_annotation(50.0);
        let warning = coherence_check(&model, &annotation, DEFAULT_COHERENCE_TOL)
            .unwrap()
            .unwrap();
        assert!((warning.point_value - 0.53).abs() < 1e-12);
        // Mean of Beta(24.897, 20.403) = 0.5496
        assert!((warning.distribution_mean - 0.5496).abs() < 1e-3);
        assert!(warning.to_string().contains("0.53"));
    }

    #[test]
    fn degenerate_at_point_value_is_coherent() {
        let model = football();
        let a = SecondOrderAnnotation::new(
            ParamRef::probability("Win", "yes", &[]),
            "none",
            0.0,
            SecondOrderDistribution::degenerate(model.marginal("Win", "yes").unwrap()).unwrap(),
        );
        assert_eq!(coherence_check(&model, &a, DEFAULT_COHERENCE_TOL).unwrap(), None);
    }

    #[test]
    fn utility_annotation_at_entry_value_is_coherent() {
        let model = football();
        let a = SecondOrderAnnotation::from_fractiles(
            ParamRef::utility("Bet", &[("Win", "yes")]),
            "ask the bookmaker",
            10.0,
            &[FractilePoint::new(0.25, 4000.0), FractilePoint::new(0.75, 6000.0)],
            Some((3000.0, 7000.0)),
        )
        .unwrap();
        let mean = a.distribution.mean();
        assert!((mean - 5000.0).abs() < 1e-6);
        assert_eq!(coherence_check(&model, &a, DEFAULT_COHERENCE_TOL).unwrap(), None);
        assert!(model.with_annotation(a).is_ok());
    }

    #[test]
    fn annotation_diagnostics() {
        let model = football();
        let mut a = football_annotation(-1.0);
        a.scenario = "  ".into();
        let diags = a.diagnostics(&model);
        assert_eq!(diags.len(), 2, "{diags:?}");

        let wide = SecondOrderAnnotation::new(
            ParamRef::probability("Win", "yes", &[]),
            "s",
            1.0,
            SecondOrderDistribution::piecewise_linear(vec![(-0.5, 0.0), (1.0, 1.0)]).unwrap(),
        );
        assert_eq!(wide.diagnostics(&model).len(), 1);
    }

    #[test]
    fn entry_round_trip_and_refit_check() {
        let a = football_annotation(50.0);
        let entry = AnnotationEntry::from_annotation(&a);
        let json = serde_json::to_string(&entry).unwrap();
        let back: AnnotationEntry = serde_json::from_str(&json).unwrap();
        assert_eq!(back.into_annotation().unwrap(), a);

        let tampered = json.replace("\"alpha\":", "\"alpha\":1.0,\"ignored\":");
        assert!(serde_json::from_str::<AnnotationEntry>(&tampered).is_err());

        let DistributionEntry::Beta { fractiles, .. } = entry.distribution else {
            panic!()
        };
        let stale = DistributionEntry::Beta {
            alpha: Some(3.0),
            beta: Some(3.0),
            fractiles,
            bounds: None,
        };
        assert!(stale.into_distribution().is_err());
    }

    #[test]
    fn sketch_entries() {
        let entry: DistributionEntry =
            serde_json::from_str(r#"{"family":"sketch","points":[[0.4,0],[0.55,1],[0.7,0]]}"#).unwrap();
        let (d, e) = entry.into_distribution().unwrap();
        assert!((d.cdf(0.55).unwrap() - 0.5).abs() < 1e-12);
        assert!(matches!(e, Some(Elicitation::Sketch(_))));
        let entry: DistributionEntry = serde_json::from_str(r#"{"family":"sketch","cdf":[[0,0],[1,1]]}"#).unwrap();
        assert!((entry.into_distribution().unwrap().0.mean() - 0.5).abs() < 1e-15);
    }
}
