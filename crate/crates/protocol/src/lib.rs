//! JSON bodies exchanged with the workbench service.
//!
//! Mutating requests carry an optional `expected_revision`; when present the
//! service refuses the mutation with 409 unless it matches the session's
//! current revision. Computation responses are wrapped in [`Revisioned`] so
//! every result names the model revision it was computed against.

use serde::{Deserialize, Serialize};

use voi_core::confidence::{AnnotationEntry, CoherenceWarning, DistributionEntry};
use voi_core::model::file::{ModelFile, RefineEntry};
use voi_core::voi::{ObservationalVpiReport, DEFAULT_SAMPLES, DEFAULT_SEED};
use voi_core::{BoundsReport, DecisionModel, Diagnostic, FocusReport, ParamRef, SweepResult};

pub const DEFAULT_PORT: u16 = 7431;

/// A computation result tagged with the revision it was computed against.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Revisioned<T> {
    pub revision: u64,
    #[serde(flatten)]
    pub body: T,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub revision: u64,
    pub operation: Operation,
}

/// Descriptor of a successful mutation, enough to replay it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "kebab-case")]
pub enum Operation {
    Refine { target: ParamRef, extension: RefineEntry },
    Annotate { annotation: AnnotationEntry },
    Undo,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SessionInfo {
    pub id: String,
    pub revision: u64,
    pub history: Vec<HistoryEntry>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSnapshot {
    pub revision: u64,
    pub model: ModelFile,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MutationResponse {
    pub revision: u64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<CoherenceWarning>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RefineRequest {
    #[serde(default)]
    pub expected_revision: Option<u64>,
    pub target: ParamRef,
    pub extension: RefineEntry,
}

/// Body of `PUT /sessions/{id}/annotations/{paramref}`; the target comes
/// from the path.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnnotationRequest {
    #[serde(default)]
    pub expected_revision: Option<u64>,
    pub scenario: String,
    pub cost: f64,
    pub distribution: DistributionEntry,
}

impl AnnotationRequest {
    pub fn into_entry(self, target: ParamRef) -> AnnotationEntry {
        AnnotationEntry {
            target: target.to_string(),
            scenario: self.scenario,
            cost: self.cost,
            distribution: self.distribution,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct UndoRequest {
    #[serde(default)]
    pub expected_revision: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SaveRequest {
    pub path: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SaveResponse {
    pub revision: u64,
    pub path: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Marginal {
    pub variable: String,
    pub outcome: String,
    pub probability: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlternativeValue {
    pub alternative: String,
    pub expected_utility: f64,
}

/// Marginals of every chance outcome, expected utility of every
/// alternative, and the optimal alternative with its expected utility.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub marginals: Vec<Marginal>,
    pub alternatives: Vec<AlternativeValue>,
    pub optimal: String,
    pub eu: f64,
    pub tie: bool,
}

impl Evaluation {
    pub fn of(model: &DecisionModel) -> voi_core::Result<Self> {
        let mut marginals = Vec::new();
        for v in model.chance() {
            for o in v.outcomes() {
                marginals.push(Marginal {
                    variable: v.name().to_string(),
                    outcome: o.clone(),
                    probability: model.marginal(v.name(), o)?,
                });
            }
        }
        let alternatives = model
            .decision()
            .alternatives()
            .iter()
            .zip(model.expected_utilities()?)
            .map(|(a, eu)| AlternativeValue {
                alternative: a.clone(),
                expected_utility: eu,
            })
            .collect();
        let optimal = model.optimal_alternative()?;
        Ok(Evaluation {
            marginals,
            alternatives,
            optimal: optimal.alternative,
            eu: optimal.expected_utility,
            tie: optimal.tie,
        })
    }

    pub fn marginal(&self, variable: &str, outcome: &str) -> Option<f64> {
        self.marginals
            .iter()
            .find(|m| m.variable == variable && m.outcome == outcome)
            .map(|m| m.probability)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VoiRequest {
    pub observe: Vec<String>,
}

pub type VoiResponse = ObservationalVpiReport;

fn default_samples() -> usize {
    DEFAULT_SAMPLES
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FocusRequest {
    pub cluster: Vec<ParamRef>,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub seed: u64,
}

impl FocusRequest {
    pub fn new(cluster: Vec<ParamRef>) -> Self {
        FocusRequest {
            cluster,
            samples: DEFAULT_SAMPLES,
            seed: DEFAULT_SEED,
        }
    }
}

/// Query string of `GET /sessions/{id}/rank`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankQuery {
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub seed: u64,
}

impl Default for RankQuery {
    fn default() -> Self {
        RankQuery {
            samples: DEFAULT_SAMPLES,
            seed: DEFAULT_SEED,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankEntry {
    pub param: ParamRef,
    pub net_value: f64,
    pub report: FocusReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankResponse {
    pub ranking: Vec<RankEntry>,
}

impl RankResponse {
    pub fn from_ranking(ranking: Vec<(ParamRef, FocusReport)>) -> Self {
        RankResponse {
            ranking: ranking
                .into_iter()
                .map(|(param, report)| RankEntry {
                    param,
                    net_value: report.net_value(),
                    report,
                })
                .collect(),
        }
    }
}

fn default_grid() -> usize {
    voi_core::sensitivity::DEFAULT_GRID
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRequest {
    pub param: ParamRef,
    #[serde(default = "default_grid")]
    pub grid: usize,
    #[serde(default)]
    pub range: Option<(f64, f64)>,
}

pub type SweepResponse = SweepResult;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntervalOverride {
    pub param: ParamRef,
    pub low: f64,
    pub high: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundsRequest {
    pub intervals: Vec<IntervalOverride>,
    /// `Var=outcome`
    pub target: String,
}

pub type BoundsResponse = BoundsReport;

/// Body of `POST /distributions/tabulate`: a distribution in the
/// annotation format (fractiles, sketch, explicit parameters) to be fitted
/// and tabulated for plotting.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TabulateRequest {
    pub distribution: DistributionEntry,
    #[serde(default = "default_grid")]
    pub points: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TabulatedPoint {
    pub x: f64,
    pub cdf: f64,
    /// Absent where the density is undefined (a point mass, or a kink of a
    /// piecewise-linear cdf).
    pub density: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tabulation {
    /// The fitted distribution with its parameters filled in.
    pub fitted: DistributionEntry,
    pub mean: f64,
    pub support: (f64, f64),
    pub points: Vec<TabulatedPoint>,
}

/// Error body of every non-2xx response.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub diagnostics: Vec<Diagnostic>,
}

/// Splits `Var=outcome`.
pub fn parse_target(text: &str) -> Option<(String, String)> {
    let (var, outcome) = text.split_once('=')?;
    let (var, outcome) = (var.trim(), outcome.trim());
    (!var.is_empty() && !outcome.is_empty()).then(|| (var.to_string(), outcome.to_string()))
}
