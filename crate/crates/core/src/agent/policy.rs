//! Thompson sampling over posterior-predictive argmax frequencies.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use super::sampler::PosteriorDraws;
use crate::error::AgentError;
use crate::model::{linear_mean, ActionSet, Context, ExerciseAction};
use crate::rng::{stream, tag};

/// Tolerance on the total mass of a selection distribution.
const PROB_SUM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolicyDecision {
    pub selection_probs: Vec<f64>,
    pub chosen_index: usize,
    pub rng_seed_used: u64,
}

impl PolicyDecision {
    pub fn max_prob(&self) -> f64 {
        self.selection_probs.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_prob(&self) -> f64 {
        self.selection_probs.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// One posterior-predictive pain reduction per draw.
pub fn predictive_delta_pain<R: Rng + ?Sized>(
    draws: &PosteriorDraws,
    context: &Context,
    action: &ExerciseAction,
    rng: &mut R,
) -> Result<Vec<f64>, AgentError> {
    if draws.is_empty() {
        return Err(AgentError::NoDraws);
    }
    draws
        .draws
        .iter()
        .map(|d| {
            let z: f64 = rng.sample(StandardNormal);
            Ok(linear_mean(d, context, action)? + d.sigma * z)
        })
        .collect()
}

/// Index of the largest value; ties are broken uniformly at random.
/// The rng is only consumed when there is a tie.
pub fn argmax_uniform_ties<R: Rng + ?Sized>(values: &[f64], rng: &mut R) -> usize {
    let best = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let n_best = values.iter().filter(|&&v| v == best).count();
    let pick = if n_best > 1 { rng.random_range(0..n_best) } else { 0 };
    values
        .iter()
        .enumerate()
        .filter(|(_, &v)| v == best)
        .nth(pick)
        .map(|(i, _)| i)
        .unwrap_or(0)
}

/// Fraction of rows in which each column attains the maximum.
///
/// `samples` is row-major with `n_actions` columns, one row per posterior draw.
pub fn argmax_frequencies<R: Rng + ?Sized>(
    samples: &[f64],
    n_actions: usize,
    rng: &mut R,
) -> Vec<f64> {
    assert!(n_actions > 0 && samples.len().is_multiple_of(n_actions));
    let rows = samples.len() / n_actions;
    let mut wins = vec![0usize; n_actions];
    for row in samples.chunks_exact(n_actions) {
        wins[argmax_uniform_ties(row, rng)] += 1;
    }
    wins.iter().map(|&w| w as f64 / rows as f64).collect()
}

/// Probability of each action having the largest predictive pain reduction.
///
/// For every posterior draw one predictive value is sampled per action
/// (independent noise per draw and action) and the winner is counted.
pub fn selection_probabilities<R: Rng + ?Sized>(
    draws: &PosteriorDraws,
    context: &Context,
    actions: &ActionSet,
    rng: &mut R,
) -> Result<Vec<f64>, AgentError> {
    if draws.is_empty() {
        return Err(AgentError::NoDraws);
    }
    let k = actions.len();
    let mut samples = Vec::with_capacity(draws.len() * k);
    for d in &draws.draws {
        for a in actions.actions() {
            let z: f64 = rng.sample(StandardNormal);
            samples.push(linear_mean(d, context, a)? + d.sigma * z);
        }
    }
    Ok(argmax_frequencies(&samples, k, rng))
}

/// Draws an action index from `probs`.
pub fn thompson_select<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> Result<usize, AgentError> {
    if probs.is_empty() {
        return Err(AgentError::InvalidProbabilities("empty".into()));
    }
    if let Some(p) = probs.iter().find(|p| !(p.is_finite() && **p >= 0.0)) {
        return Err(AgentError::InvalidProbabilities(format!("entry {p}")));
    }
    let total: f64 = probs.iter().sum();
    if total == 0.0 {
        return Err(AgentError::DegenerateDistribution);
    }
    if (total - 1.0).abs() > PROB_SUM_TOL {
        return Err(AgentError::InvalidProbabilities(format!("sum {total}")));
    }
    let u: f64 = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        last_positive = i;
        acc += p;
        if u < acc {
            return Ok(i);
        }
    }
    Ok(last_positive)
}

/// Full decision for one context: selection probabilities plus a sampled action.
///
/// All randomness derives from `seed`, which is recorded in the result.
pub fn decide(
    draws: &PosteriorDraws,
    context: &Context,
    actions: &ActionSet,
    seed: u64,
) -> Result<PolicyDecision, AgentError> {
    let mut predictive_rng = stream(seed, &[tag::PREDICTIVE]);
    let selection_probs = selection_probabilities(draws, context, actions, &mut predictive_rng)?;
    let mut select_rng = stream(seed, &[tag::SELECT]);
    let chosen_index = thompson_select(&selection_probs, &mut select_rng)?;
    Ok(PolicyDecision {
        selection_probs,
        chosen_index,
        rng_seed_used: seed,
    })
}
