//! Second-order distributions: how far an assessment might move once an
//! assessment scenario is carried out, and what that scenario costs.

mod annotation;
mod distribution;
mod fit;
pub mod special;

pub use annotation::{
    coherence_check, AnnotationEntry, CoherenceWarning, DistributionEntry, Elicitation, SecondOrderAnnotation,
    DEFAULT_COHERENCE_TOL, REFIT_TOL,
};
pub use distribution::{SecondOrderDistribution, BETA_PARAM_MAX, BETA_PARAM_MIN};
pub use fit::{fit_beta_from_fractiles, fit_beta_on, fit_sketch, FractilePoint, FIT_RESIDUAL_TOL};
