//! Discrete decision models with second-order confidence annotations.
//!
//! The crate evaluates single-decision models (chance variables, one decision,
//! a utility table), attaches distributions over post-assessment parameter
//! values to individual probability or utility entries, and decides which
//! parameters are worth refining by comparing a Monte Carlo estimate of the
//! value of perfect information on those distributions against the cost of
//! the assessment.
//!
//! Module map:
//!
//! - [`model`]: model types, canonical parameter references, exact
//!   evaluation, validation, refinement by conditioning, and the JSON file
//!   format.
//! - [`confidence`]: second-order distributions, the two-fractile beta fit,
//!   sketch fitting, annotations and coherence checks.
//! - [`voi`]: observational value of information, Monte Carlo meta-VPI,
//!   refine recommendations and parameter ranking.
//! - [`sensitivity`]: one-way sweeps with decision crossings.
//! - [`intervals`]: probability intervals and endpoint-sweep propagation.

pub mod confidence;
pub mod error;
pub mod intervals;
pub mod model;
pub mod sensitivity;
#[cfg(any(test, feature = "testkit"))]
pub mod testkit;
pub mod voi;

pub use confidence::{
    coherence_check, fit_beta_from_fractiles, fit_sketch, CoherenceWarning, FractilePoint, SecondOrderAnnotation,
    SecondOrderDistribution,
};
pub use error::{Error, Result};
pub use intervals::{conjunction_bounds, marginal_bounds, BoundsReport, ProbabilityInterval};
pub use model::{ChanceVariable, DecisionModel, DecisionVariable, Diagnostic, DiagnosticKind, ParamRef, UtilityTable};
pub use sensitivity::{sweep, SweepResult};
pub use voi::{FocusReport, ObservationalVpiReport};
