//! Online learner: Bayesian posterior of the linear model plus a Thompson
//! sampling policy over posterior-predictive argmax frequencies.
//!
//! One agent serves one patient; nothing is pooled across patients.

pub mod oracle;
pub mod policy;
pub mod sampler;

pub use oracle::{conjugate_posterior_oracle, GaussianPosterior};
pub use policy::{
    argmax_frequencies, argmax_uniform_ties, decide, predictive_delta_pain,
    selection_probabilities, thompson_select, PolicyDecision,
};
pub use sampler::{fit_posterior, PosteriorDraws, SamplerConfig, SamplerMeta};
