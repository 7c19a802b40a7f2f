use thiserror::Error;

use crate::model::Diagnostic;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("model is invalid ({} diagnostic(s)): {}", .0.len(), summarize(.0))]
    Invalid(Vec<Diagnostic>),

    #[error("unknown chance variable `{0}`")]
    UnknownVariable(String),

    #[error("variable `{variable}` has no outcome `{outcome}`")]
    UnknownOutcome { variable: String, outcome: String },

    #[error("unknown alternative `{0}`")]
    UnknownAlternative(String),

    #[error("cannot parse parameter reference `{input}`: {reason}")]
    ParseRef { input: String, reason: String },

    #[error("parameter reference `{reference}` does not resolve: {reason}")]
    Unresolved { reference: String, reason: String },

    #[error("parameter `{0}` carries no second-order annotation")]
    MissingAnnotation(String),

    #[error("parameters `{0}` and `{1}` address the same distribution row")]
    SharedRow(String, String),

    #[error("beta fit failed: {reason} (residual {residual:e})")]
    FitFailure { reason: String, residual: f64 },

    #[error("degenerate sketch: {0}")]
    DegenerateSketch(String),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("value {value} is outside the support [{low}, {high}]")]
    OutOfSupport { value: f64, low: f64, high: f64 },

    #[error("refine failed: {0}")]
    Refine(String),

    #[error("substituted value {value} for `{reference}` leaves the distribution row outside [0, 1]")]
    InvalidSubstitution { reference: String, value: f64 },

    #[error("{count} interval overrides exceed the limit of {limit}")]
    TooManyOverrides { count: usize, limit: usize },

    #[error("model has {0} joint assignments, too many to enumerate")]
    TooLarge(usize),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("malformed model file: {0}")]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

fn summarize(diagnostics: &[Diagnostic]) -> String {
    diagnostics
        .iter()
        .map(|d| format!("{}: {}", d.subject, d.message))
        .collect::<Vec<_>>()
        .join("; ")
}
