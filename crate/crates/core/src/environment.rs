//! Simulated patients: ground-truth parameters, outcome generation, pain
//! dynamics and informative non-adherence for the seven evaluation scenarios.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::ModelError;
use crate::model::{linear_mean, Context, ExerciseAction, PatientParams, PAIN_MAX};

/// Persistence of pre-exercise pain from one day to the next.
pub const PAIN_PERSISTENCE: f64 = 0.5;
/// Carry-over of the previous day's pain reduction into the next day's pain.
pub const PAIN_RELIEF_CARRYOVER: f64 = 0.5;
/// Standard deviation of day-to-day pain innovations.
pub const PAIN_NOISE_SD: f64 = 0.5;
/// Outcome noise scale of the simulated patients.
pub const TRUE_SIGMA: f64 = 1.0;
/// Probability that a pain-increasing recommendation is not reported back (scenario VII).
pub const DROP_PROBABILITY: f64 = 0.5;
pub const BASELINE_PAIN_RANGE: (f64, f64) = (3.0, 8.0);

/// Evaluation scenario.
///
/// * I: outcomes are pure noise.
/// * II: outcomes follow the linear model.
/// * III-VI: as II with the type, intensity, duration, or intensity and
///   duration coefficients zeroed.
/// * VII: as II, but outcomes of pain-increasing recommendations are
///   withheld from the agent half of the time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ScenarioId {
    I,
    II,
    III,
    IV,
    V,
    VI,
    VII,
}

impl ScenarioId {
    pub const ALL: [ScenarioId; 7] = [
        ScenarioId::I,
        ScenarioId::II,
        ScenarioId::III,
        ScenarioId::IV,
        ScenarioId::V,
        ScenarioId::VI,
        ScenarioId::VII,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ScenarioId::I => "I",
            ScenarioId::II => "II",
            ScenarioId::III => "III",
            ScenarioId::IV => "IV",
            ScenarioId::V => "V",
            ScenarioId::VI => "VI",
            ScenarioId::VII => "VII",
        }
    }

    fn zeroes_type(self) -> bool {
        self == ScenarioId::III
    }

    fn zeroes_intensity(self) -> bool {
        matches!(self, ScenarioId::IV | ScenarioId::VI)
    }

    fn zeroes_duration(self) -> bool {
        matches!(self, ScenarioId::V | ScenarioId::VI)
    }
}

impl fmt::Display for ScenarioId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScenarioId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ScenarioId::ALL
            .into_iter()
            .find(|id| id.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown scenario '{s}' (expected I..VII)"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PatientTruth {
    pub params: PatientParams,
    pub patient_id: u64,
    pub baseline_pain: f64,
}

/// Pre-exercise pain, kept inside the pain scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PainState {
    current_pain: f64,
}

impl PainState {
    pub fn new(pain: f64) -> Self {
        Self {
            current_pain: pain.clamp(0.0, PAIN_MAX),
        }
    }

    pub fn current(self) -> f64 {
        self.current_pain
    }
}

/// Draws a patient. All coefficients are drawn N(0, 1) in a fixed order
/// before the scenario's group is zeroed, so one rng stream yields the same
/// underlying patient in every scenario.
pub fn draw_patient<R: Rng + ?Sized>(
    scenario: ScenarioId,
    n_types: usize,
    patient_id: u64,
    rng: &mut R,
) -> PatientTruth {
    let mut coeffs: Vec<f64> = (0..6 + n_types).map(|_| rng.sample(StandardNormal)).collect();
    let baseline_pain = rng.random_range(BASELINE_PAIN_RANGE.0..BASELINE_PAIN_RANGE.1);
    if scenario.zeroes_intensity() {
        coeffs[0] = 0.0;
        coeffs[1] = 0.0;
    }
    if scenario.zeroes_duration() {
        coeffs[2] = 0.0;
        coeffs[3] = 0.0;
    }
    if scenario.zeroes_type() {
        coeffs[6..].iter_mut().for_each(|t| *t = 0.0);
    }
    PatientTruth {
        params: PatientParams::from_coeffs(&coeffs, TRUE_SIGMA),
        patient_id,
        baseline_pain,
    }
}

/// Realized pain reduction. `noise` is a standard normal variate supplied by
/// the caller so that compared arms can share it.
pub fn true_delta_pain(
    scenario: ScenarioId,
    truth: &PatientTruth,
    context: &Context,
    action: &ExerciseAction,
    noise: f64,
) -> Result<f64, ModelError> {
    match scenario {
        ScenarioId::I => Ok(noise),
        _ => Ok(linear_mean(&truth.params, context, action)? + noise * truth.params.sigma),
    }
}

/// Whether the outcome of `action` is reported back to the agent.
pub fn adherent<R: Rng + ?Sized>(
    scenario: ScenarioId,
    truth: &PatientTruth,
    context: &Context,
    action: &ExerciseAction,
    rng: &mut R,
) -> Result<bool, ModelError> {
    if scenario != ScenarioId::VII {
        return Ok(true);
    }
    let would_hurt = linear_mean(&truth.params, context, action)? < 0.0;
    let coin: f64 = rng.random();
    Ok(!(would_hurt && coin < DROP_PROBABILITY))
}

/// Next decision point's pre-exercise pain: mean-reverting towards the
/// patient's baseline, lowered by part of the realized pain reduction.
pub fn next_pain<R: Rng + ?Sized>(
    state: PainState,
    baseline_pain: f64,
    realized_delta: f64,
    rng: &mut R,
) -> PainState {
    let z: f64 = rng.sample(StandardNormal);
    next_pain_with_noise(state, baseline_pain, realized_delta, z)
}

fn next_pain_with_noise(state: PainState, baseline: f64, delta: f64, z: f64) -> PainState {
    PainState::new(
        PAIN_PERSISTENCE * state.current()
            + (1.0 - PAIN_PERSISTENCE) * baseline
            - PAIN_RELIEF_CARRYOVER * delta
            + PAIN_NOISE_SD * z,
    )
}
