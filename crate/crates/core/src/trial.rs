//! Per-patient study timeline: a baseline week, then a fixed-recommendation
//! phase (A) and an adaptive phase (B) in A-B or B-A order.
//!
//! During B every decision is paired with a counterfactual: the action the
//! fixed schedule would have recommended, evaluated in the same context with
//! the same outcome noise. Regret is the running sum of fixed minus adaptive
//! pain reduction, so negative regret favors the agent.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::agent::{decide, fit_posterior, PolicyDecision, SamplerConfig};
use crate::environment::{
    adherent, draw_patient, next_pain, true_delta_pain, PainState, PatientTruth, ScenarioId,
};
use crate::error::TrialError;
use crate::model::{rolling_context, ActionSet, HistoryRecord, Phase};
use crate::rng::{derive_seed, patient_seed, stream, tag};

/// Order of the fixed and adaptive phases after baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Design {
    AB,
    BA,
}

impl Design {
    pub const ALL: [Design; 2] = [Design::AB, Design::BA];
}

impl fmt::Display for Design {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Design::AB => "AB",
            Design::BA => "BA",
        })
    }
}

impl FromStr for Design {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().replace('-', "").as_str() {
            "AB" => Ok(Design::AB),
            "BA" => Ok(Design::BA),
            _ => Err(format!("unknown design '{s}' (expected AB or BA)")),
        }
    }
}

/// Minimum kept draws per chain times chains for a production policy call.
pub const MIN_POLICY_DRAWS: usize = 200;

#[derive(Debug, Clone, PartialEq)]
pub struct TrialConfig {
    pub baseline_days: usize,
    pub phase_days: usize,
    pub decisions_per_day: usize,
    pub sampler: SamplerConfig,
    pub scenario: ScenarioId,
    pub design: Design,
    pub root_seed: u64,
}

impl TrialConfig {
    pub fn new(scenario: ScenarioId, design: Design, root_seed: u64) -> Self {
        Self {
            baseline_days: 7,
            phase_days: 14,
            decisions_per_day: 1,
            sampler: SamplerConfig::default(),
            scenario,
            design,
            root_seed,
        }
    }

    pub fn validate(&self) -> Result<(), TrialError> {
        if self.baseline_days == 0 || self.phase_days == 0 || self.decisions_per_day == 0 {
            return Err(TrialError::Config("day counts must be positive".into()));
        }
        if self.sampler.total_draws() < MIN_POLICY_DRAWS {
            return Err(TrialError::Config(format!(
                "sampler keeps {} draws; at least {MIN_POLICY_DRAWS} are required",
                self.sampler.total_draws()
            )));
        }
        self.sampler
            .validate()
            .map_err(|e| TrialError::Config(e.to_string()))
    }

    pub fn baseline_steps(&self) -> usize {
        self.baseline_days * self.decisions_per_day
    }

    pub fn phase_steps(&self) -> usize {
        self.phase_days * self.decisions_per_day
    }

    /// Records the agent has seen before its first adaptive decision.
    pub fn pre_b_steps(&self) -> usize {
        match self.design {
            Design::AB => self.baseline_steps() + self.phase_steps(),
            Design::BA => self.baseline_steps(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialResult {
    pub patient_id: u64,
    pub scenario: ScenarioId,
    pub design: Design,
    /// Baseline records, then A-phase records under A-B.
    pub pre_b_records: Vec<HistoryRecord>,
    pub adaptive_records: Vec<HistoryRecord>,
    /// Action the fixed schedule would have recommended at each B step.
    pub counterfactual_fixed_actions: Vec<usize>,
    pub counterfactual_fixed_deltas: Vec<f64>,
    pub decisions: Vec<PolicyDecision>,
    /// Cumulative fixed-minus-adaptive pain reduction.
    pub regret_series: Vec<f64>,
}

/// Round-robin through the action set in its configured order.
pub fn fixed_policy(t: usize, actions: &ActionSet) -> usize {
    assert!(t >= 1, "decision index is 1-based");
    (t - 1) % actions.len()
}

/// Cumulative regret after B step `t` (1-based).
pub fn cumulative_regret(result: &TrialResult, t: usize) -> Result<f64, TrialError> {
    let len = result.regret_series.len();
    if t == 0 || t > len {
        return Err(TrialError::RegretIndex { t, len });
    }
    Ok(result.regret_series[t - 1])
}

/// Draws the patient for `patient_id` under `cfg` and runs the trial.
pub fn simulate_patient(
    patient_id: u64,
    actions: &ActionSet,
    cfg: &TrialConfig,
) -> Result<TrialResult, TrialError> {
    let seed = patient_seed(cfg.root_seed, patient_id);
    let truth = draw_patient(
        cfg.scenario,
        actions.n_types(),
        patient_id,
        &mut stream(seed, &[tag::TRUTH]),
    );
    run_trial(&truth, actions, cfg)
}

fn standard_normal(seed: u64, path: &[u64]) -> f64 {
    stream(seed, path).sample(StandardNormal)
}

/// Runs one patient's trial.
///
/// Every random draw comes from a stream keyed by the patient seed, a
/// purpose and a step index, so B-phase outcome noise is identical under
/// both designs and independent of scheduling.
pub fn run_trial(
    truth: &PatientTruth,
    actions: &ActionSet,
    cfg: &TrialConfig,
) -> Result<TrialResult, TrialError> {
    cfg.validate()?;
    if truth.params.tau.len() != actions.n_types() {
        return Err(TrialError::Config(format!(
            "patient has {} type intercepts, action set has {} types",
            truth.params.tau.len(),
            actions.n_types()
        )));
    }
    let seed = patient_seed(cfg.root_seed, truth.patient_id);
    // Patients enter the fixed rotation at a random point.
    let schedule_offset = stream(seed, &[tag::SCHEDULE]).random_range(0..actions.len());
    let fixed_at = |t: usize| fixed_policy(t + schedule_offset, actions);

    let mut pain = PainState::new(truth.baseline_pain);
    let mut history: Vec<HistoryRecord> = Vec::with_capacity(cfg.pre_b_steps() + cfg.phase_steps());
    let mut t = 0usize;

    let fixed_phase = |phase: Phase,
                           steps: usize,
                           noise_tag: u64,
                           history: &mut Vec<HistoryRecord>,
                           t: &mut usize,
                           pain: &mut PainState|
     -> Result<(), TrialError> {
        for k in 1..=steps {
            *t += 1;
            let context = rolling_context(history, actions, pain.current())?;
            let action_index = fixed_at(*t);
            let noise = standard_normal(seed, &[noise_tag, k as u64]);
            let delta =
                true_delta_pain(cfg.scenario, truth, &context, &actions.actions()[action_index], noise)?;
            history.push(HistoryRecord {
                t: *t,
                phase,
                action_index,
                context,
                delta_pain: delta,
                fed_back: true,
            });
            *pain = next_pain(*pain, truth.baseline_pain, delta, &mut stream(seed, &[tag::PAIN, *t as u64]));
        }
        Ok(())
    };

    fixed_phase(Phase::Baseline, cfg.baseline_steps(), tag::BASELINE_NOISE, &mut history, &mut t, &mut pain)?;
    if cfg.design == Design::AB {
        fixed_phase(Phase::FixedA, cfg.phase_steps(), tag::FIXED_A_NOISE, &mut history, &mut t, &mut pain)?;
    }
    let n_pre = history.len();

    let steps = cfg.phase_steps();
    let mut decisions = Vec::with_capacity(steps);
    let mut fixed_actions = Vec::with_capacity(steps);
    let mut fixed_deltas = Vec::with_capacity(steps);
    let mut regret_series = Vec::with_capacity(steps);
    let mut regret = 0.0;

    for k in 1..=steps {
        t += 1;
        let wrap = |source| TrialError::Sampler {
            patient_id: truth.patient_id,
            decision: k,
            source,
        };
        let context = rolling_context(&history, actions, pain.current())?;
        let sampler = cfg.sampler.with_seed(derive_seed(seed, &[tag::SAMPLER, k as u64]));
        let posterior = fit_posterior(&history, actions, &sampler).map_err(wrap)?;
        let decision = decide(&posterior, &context, actions, derive_seed(seed, &[tag::AGENT, k as u64]))
            .map_err(wrap)?;

        let chosen = &actions.actions()[decision.chosen_index];
        let noise = standard_normal(seed, &[tag::ADAPTIVE_NOISE, k as u64]);
        let delta = true_delta_pain(cfg.scenario, truth, &context, chosen, noise)?;
        let fixed_index = fixed_at(t);
        let fixed_delta =
            true_delta_pain(cfg.scenario, truth, &context, &actions.actions()[fixed_index], noise)?;
        let fed_back = adherent(
            cfg.scenario,
            truth,
            &context,
            chosen,
            &mut stream(seed, &[tag::ADHERENCE, k as u64]),
        )?;

        regret += fixed_delta - delta;
        regret_series.push(regret);
        fixed_actions.push(fixed_index);
        fixed_deltas.push(fixed_delta);
        history.push(HistoryRecord {
            t,
            phase: Phase::AdaptiveB,
            action_index: decision.chosen_index,
            context,
            delta_pain: delta,
            fed_back,
        });
        decisions.push(decision);
        pain = next_pain(pain, truth.baseline_pain, delta, &mut stream(seed, &[tag::PAIN, t as u64]));
    }

    let adaptive_records = history.split_off(n_pre);
    Ok(TrialResult {
        patient_id: truth.patient_id,
        scenario: cfg.scenario,
        design: cfg.design,
        pre_b_records: history,
        adaptive_records,
        counterfactual_fixed_actions: fixed_actions,
        counterfactual_fixed_deltas: fixed_deltas,
        decisions,
        regret_series,
    })
}
