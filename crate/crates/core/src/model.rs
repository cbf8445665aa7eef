//! Domain types and the linear pain-reduction model shared by the agent and
//! the simulated environment.
//!
//! The expected pain reduction of an exercise in a given context is
//!
//! ```text
//! mu = tau[type]
//!    + (alpha + beta  * mean_intensity_3) * intensity
//!    + (gamma + delta * mean_duration_3)  * duration
//!    + (eta   + kappa * pain)             * burden
//! ```
//!
//! with `burden = intensity * duration` and durations normalized by the
//! longest exercise in the action set.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::ModelError;

/// Number of coefficients shared by all exercise types (alpha..kappa).
pub const N_SHARED_COEFFS: usize = 6;

/// Number of performed exercises averaged into the rolling context.
pub const CONTEXT_WINDOW: usize = 3;

/// Upper end of the pain scale.
pub const PAIN_MAX: f64 = 10.0;

/// One recommendable exercise.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExerciseAction {
    pub type_id: usize,
    pub intensity: f64,
    /// Duration divided by the longest duration in the action set.
    pub duration_norm: f64,
    pub duration_min: u32,
    pub label: String,
}

/// Raw action record as it appears in a configuration file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionSpec {
    pub label: String,
    pub type_id: usize,
    pub intensity: f64,
    pub duration_min: u32,
}

/// Ordered, validated set of exercises. Indices everywhere refer to this order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ActionSet {
    actions: Vec<ExerciseAction>,
    n_types: usize,
}

impl ActionSet {
    /// Validates the records and normalizes durations by the longest one.
    pub fn new(specs: &[ActionSpec]) -> Result<Self, ModelError> {
        if specs.is_empty() {
            return Err(ModelError::EmptyActionSet);
        }
        for (index, s) in specs.iter().enumerate() {
            let bad = |reason: &str| ModelError::InvalidAction {
                index,
                label: s.label.clone(),
                reason: reason.to_string(),
            };
            if !(0.0..=1.0).contains(&s.intensity) {
                return Err(bad("intensity must lie in [0, 1]"));
            }
            if s.duration_min == 0 {
                return Err(bad("duration must be a positive number of minutes"));
            }
        }
        let n_types = specs.iter().map(|s| s.type_id).max().unwrap_or(0) + 1;
        if let Some(missing) = (0..n_types).find(|t| !specs.iter().any(|s| s.type_id == *t)) {
            return Err(ModelError::TypeGap { n_types, missing });
        }
        let max_minutes = specs.iter().map(|s| s.duration_min).max().unwrap_or(1) as f64;
        let actions = specs
            .iter()
            .map(|s| ExerciseAction {
                type_id: s.type_id,
                intensity: s.intensity,
                duration_norm: s.duration_min as f64 / max_minutes,
                duration_min: s.duration_min,
                label: s.label.clone(),
            })
            .collect();
        Ok(Self { actions, n_types })
    }

    /// The eight-exercise example set: jogging at three intensities, three
    /// HIIT lengths, swimming and yoga.
    pub fn example_set() -> Self {
        Self::new(&example_specs()).expect("built-in action set is valid")
    }

    pub fn actions(&self) -> &[ExerciseAction] {
        &self.actions
    }

    pub fn get(&self, index: usize) -> Result<&ExerciseAction, ModelError> {
        self.actions.get(index).ok_or(ModelError::ActionIndex {
            index,
            len: self.actions.len(),
        })
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn n_types(&self) -> usize {
        self.n_types
    }

    /// Number of model coefficients: the shared ones plus one intercept per type.
    pub fn n_coeffs(&self) -> usize {
        N_SHARED_COEFFS + self.n_types
    }

    /// Specs that reproduce this set.
    pub fn specs(&self) -> Vec<ActionSpec> {
        self.actions
            .iter()
            .map(|a| ActionSpec {
                label: a.label.clone(),
                type_id: a.type_id,
                intensity: a.intensity,
                duration_min: a.duration_min,
            })
            .collect()
    }
}

/// Specs of [`ActionSet::example_set`].
pub fn example_specs() -> Vec<ActionSpec> {
    let row = |label: &str, type_id, intensity, duration_min| ActionSpec {
        label: label.to_string(),
        type_id,
        intensity,
        duration_min,
    };
    vec![
        row("Slow jogging", 0, 0.3, 30),
        row("Jogging", 0, 0.5, 30),
        row("Fast jogging", 0, 0.7, 30),
        row("HIIT", 1, 1.0, 6),
        row("HIIT", 1, 1.0, 12),
        row("HIIT", 1, 1.0, 18),
        row("Swimming", 2, 0.5, 45),
        row("Yoga", 3, 0.1, 60),
    ]
}

/// Covariates observed right before a decision.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Context {
    pub pain: f64,
    pub mean_intensity_3: f64,
    pub mean_duration_3: f64,
}

impl Context {
    pub fn new(pain: f64, mean_intensity_3: f64, mean_duration_3: f64) -> Self {
        Self {
            pain,
            mean_intensity_3,
            mean_duration_3,
        }
    }
}

/// Coefficients of the linear model plus the outcome noise scale.
///
/// Used both as a simulated patient's ground truth and as a posterior draw.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatientParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
    pub eta: f64,
    pub kappa: f64,
    pub tau: Vec<f64>,
    pub sigma: f64,
}

impl PatientParams {
    /// All coefficients zero, unit noise.
    pub fn zeros(n_types: usize) -> Self {
        Self {
            alpha: 0.0,
            beta: 0.0,
            gamma: 0.0,
            delta: 0.0,
            eta: 0.0,
            kappa: 0.0,
            tau: vec![0.0; n_types],
            sigma: 1.0,
        }
    }

    /// Builds params from a coefficient vector laid out as
    /// `[alpha, beta, gamma, delta, eta, kappa, tau_0, ..]`.
    pub fn from_coeffs(coeffs: &[f64], sigma: f64) -> Self {
        assert!(coeffs.len() >= N_SHARED_COEFFS, "coefficient vector too short");
        Self {
            alpha: coeffs[0],
            beta: coeffs[1],
            gamma: coeffs[2],
            delta: coeffs[3],
            eta: coeffs[4],
            kappa: coeffs[5],
            tau: coeffs[N_SHARED_COEFFS..].to_vec(),
            sigma,
        }
    }

    /// Inverse of [`PatientParams::from_coeffs`].
    pub fn coeffs(&self) -> Vec<f64> {
        let mut v = vec![
            self.alpha, self.beta, self.gamma, self.delta, self.eta, self.kappa,
        ];
        v.extend_from_slice(&self.tau);
        v
    }
}

/// Study phase a decision point belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Phase {
    Baseline,
    FixedA,
    AdaptiveB,
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Phase::Baseline => "Baseline",
            Phase::FixedA => "FixedA",
            Phase::AdaptiveB => "AdaptiveB",
        })
    }
}

/// One decision point of a patient's trial.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HistoryRecord {
    /// 1-based day index within the whole trial.
    pub t: usize,
    pub phase: Phase,
    pub action_index: usize,
    pub context: Context,
    /// Pain before minus pain two hours after the exercise.
    pub delta_pain: f64,
    /// False when the outcome was withheld from the agent.
    pub fed_back: bool,
}

/// Exercise load: normalized intensity times normalized duration.
#[inline]
pub fn burden(action: &ExerciseAction) -> f64 {
    action.intensity * action.duration_norm
}

/// Context for the next decision from the performed exercises so far.
///
/// Averages intensity and duration over the last [`CONTEXT_WINDOW`] records
/// (fewer if the history is shorter; zero if it is empty). Records whose
/// outcome was withheld still count, since the exercise was performed.
pub fn rolling_context(
    history: &[HistoryRecord],
    actions: &ActionSet,
    current_pain: f64,
) -> Result<Context, ModelError> {
    let recent = &history[history.len().saturating_sub(CONTEXT_WINDOW)..];
    if recent.is_empty() {
        return Ok(Context::new(current_pain, 0.0, 0.0));
    }
    let (mut si, mut sd) = (0.0, 0.0);
    for r in recent {
        let a = actions.get(r.action_index)?;
        si += a.intensity;
        sd += a.duration_norm;
    }
    let n = recent.len() as f64;
    Ok(Context::new(current_pain, si / n, sd / n))
}

/// Expected pain reduction of `action` in `context` under `params`.
#[inline]
pub fn linear_mean(
    params: &PatientParams,
    context: &Context,
    action: &ExerciseAction,
) -> Result<f64, ModelError> {
    let tau = *params.tau.get(action.type_id).ok_or(ModelError::TauIndex {
        len: params.tau.len(),
        type_id: action.type_id,
    })?;
    let y_intensity = (params.alpha + params.beta * context.mean_intensity_3) * action.intensity;
    let y_duration = (params.gamma + params.delta * context.mean_duration_3) * action.duration_norm;
    let y_burden = (params.eta + params.kappa * context.pain) * burden(action);
    Ok(tau + y_intensity + y_duration + y_burden)
}

/// Regression row matching the coefficient layout of [`PatientParams::coeffs`].
pub fn design_row(context: &Context, action: &ExerciseAction, n_types: usize) -> Vec<f64> {
    let b = burden(action);
    let mut row = vec![0.0; N_SHARED_COEFFS + n_types];
    row[0] = action.intensity;
    row[1] = context.mean_intensity_3 * action.intensity;
    row[2] = action.duration_norm;
    row[3] = context.mean_duration_3 * action.duration_norm;
    row[4] = b;
    row[5] = context.pain * b;
    row[N_SHARED_COEFFS + action.type_id] = 1.0;
    row
}
