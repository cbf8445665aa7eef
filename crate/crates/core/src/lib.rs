//! Contextual-bandit agent for personalized exercise recommendations inside
//! N-of-1 trials, together with the simulation engine used to evaluate it.
//!
//! * [`model`]: exercises, contexts and the linear pain-reduction model.
//! * [`agent`]: posterior sampling and the Thompson-sampling policy.
//! * [`environment`]: simulated patients for scenarios I-VII.
//! * [`trial`]: the baseline / A / B study timeline and regret.
//! * [`metrics`]: regret, diversity and probability summaries.
//! * [`report`] and [`config`]: batch runs and their output files.

pub mod agent;
pub mod config;
pub mod environment;
pub mod error;
pub mod metrics;
pub mod model;
pub mod report;
pub mod rng;
pub mod trial;

pub use agent::{
    decide, fit_posterior, selection_probabilities, thompson_select, PolicyDecision,
    PosteriorDraws, SamplerConfig,
};
pub use config::{RunConfig, RunManifest};
pub use environment::{PatientTruth, ScenarioId};
pub use error::{AgentError, MetricsError, ModelError, ReportError, TrialError};
pub use metrics::{summarize, ScenarioSummary};
pub use model::{
    burden, linear_mean, rolling_context, ActionSet, ActionSpec, Context, ExerciseAction,
    HistoryRecord, PatientParams, Phase,
};
pub use report::{emit_summary_table, run_all, RunOutcome};
pub use trial::{cumulative_regret, run_trial, simulate_patient, Design, TrialConfig, TrialResult};
