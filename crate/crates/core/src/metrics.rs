//! Evaluation metrics: regret statistics, diversity of recommendations and
//! selection-probability extremes, aggregated per scenario and design.

use serde::Serialize;

use crate::agent::PolicyDecision;
use crate::environment::ScenarioId;
use crate::error::MetricsError;
use crate::model::ActionSet;
use crate::trial::{Design, TrialResult};

/// Shannon entropy in nats of the empirical distribution given by `counts`.
pub fn shannon_entropy(counts: &[usize]) -> Result<f64, MetricsError> {
    let total: usize = counts.iter().sum();
    if total == 0 {
        return Err(MetricsError::ZeroCounts);
    }
    let n = total as f64;
    Ok(counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum::<f64>()
        .max(0.0))
}

/// Population standard deviation.
pub fn dispersion(values: &[f64]) -> Result<f64, MetricsError> {
    if values.is_empty() {
        return Err(MetricsError::Empty("dispersion"));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    Ok((values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt())
}

/// Quantile with linear interpolation between order statistics
/// (position `q * (n - 1)` in the sorted sample).
pub fn quantile(values: &[f64], q: f64) -> Result<f64, MetricsError> {
    if values.is_empty() {
        return Err(MetricsError::Empty("quantile"));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    Ok(sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo]))
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Mean over decisions of the largest and smallest selection probability.
pub fn probability_extremes<'a, I>(decisions: I) -> Result<(f64, f64), MetricsError>
where
    I: IntoIterator<Item = &'a PolicyDecision>,
{
    let (mut max_sum, mut min_sum, mut n) = (0.0, 0.0, 0usize);
    for d in decisions {
        max_sum += d.max_prob();
        min_sum += d.min_prob();
        n += 1;
    }
    if n == 0 {
        return Err(MetricsError::Empty("probability_extremes"));
    }
    Ok((max_sum / n as f64, min_sum / n as f64))
}

/// Diversity of a sequence of recommended actions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Diversity {
    pub entropy_type: f64,
    pub std_duration: f64,
    pub std_intensity: f64,
}

pub fn diversity(indices: &[usize], actions: &ActionSet) -> Result<Diversity, MetricsError> {
    if indices.is_empty() {
        return Err(MetricsError::Empty("diversity"));
    }
    let mut counts = vec![0usize; actions.n_types()];
    let mut durations = Vec::with_capacity(indices.len());
    let mut intensities = Vec::with_capacity(indices.len());
    for &i in indices {
        let a = &actions.actions()[i];
        counts[a.type_id] += 1;
        durations.push(a.duration_norm);
        intensities.push(a.intensity);
    }
    Ok(Diversity {
        entropy_type: shannon_entropy(&counts)?,
        std_duration: dispersion(&durations)?,
        std_intensity: dispersion(&intensities)?,
    })
}

/// One row of the results table, plus the fixed arm's diversity over the
/// same decision points for reference.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioSummary {
    pub scenario: ScenarioId,
    pub design: Design,
    pub n_patients: usize,
    pub mean_regret: f64,
    /// 0.75 quantile of final regret across patients (the worst-quarter boundary).
    pub regret_q75: f64,
    pub entropy_type: f64,
    pub std_duration: f64,
    pub std_intensity: f64,
    pub mean_max_prob: f64,
    pub mean_min_prob: f64,
    pub fixed_entropy_type: f64,
    pub fixed_std_duration: f64,
    pub fixed_std_intensity: f64,
}

/// Aggregates the trials of one scenario/design cell.
///
/// Diversity metrics are computed per patient over the adaptive phase and
/// then averaged. Results are sorted by patient id first, so input order
/// does not affect the output.
pub fn summarize(results: &[TrialResult], actions: &ActionSet) -> Result<ScenarioSummary, MetricsError> {
    let first = results.first().ok_or(MetricsError::Empty("summarize"))?;
    if let Some(r) = results
        .iter()
        .find(|r| r.scenario != first.scenario || r.design != first.design)
    {
        return Err(MetricsError::MixedCells(format!(
            "{}/{} and {}/{}",
            first.scenario, first.design, r.scenario, r.design
        )));
    }
    let mut sorted: Vec<&TrialResult> = results.iter().collect();
    sorted.sort_by_key(|r| r.patient_id);

    let finals: Vec<f64> = sorted
        .iter()
        .map(|r| r.regret_series.last().copied().ok_or(MetricsError::Empty("regret series")))
        .collect::<Result<_, _>>()?;

    let mut adaptive = Vec::with_capacity(sorted.len());
    let mut fixed = Vec::with_capacity(sorted.len());
    for r in &sorted {
        let chosen: Vec<usize> = r.adaptive_records.iter().map(|rec| rec.action_index).collect();
        adaptive.push(diversity(&chosen, actions)?);
        fixed.push(diversity(&r.counterfactual_fixed_actions, actions)?);
    }
    let avg = |v: &[Diversity], f: fn(&Diversity) -> f64| mean(&v.iter().map(f).collect::<Vec<_>>());
    let (mean_max_prob, mean_min_prob) =
        probability_extremes(sorted.iter().flat_map(|r| r.decisions.iter()))?;

    Ok(ScenarioSummary {
        scenario: first.scenario,
        design: first.design,
        n_patients: sorted.len(),
        mean_regret: mean(&finals),
        regret_q75: quantile(&finals, 0.75)?,
        entropy_type: avg(&adaptive, |d| d.entropy_type),
        std_duration: avg(&adaptive, |d| d.std_duration),
        std_intensity: avg(&adaptive, |d| d.std_intensity),
        mean_max_prob,
        mean_min_prob,
        fixed_entropy_type: avg(&fixed, |d| d.entropy_type),
        fixed_std_duration: avg(&fixed, |d| d.std_duration),
        fixed_std_intensity: avg(&fixed, |d| d.std_intensity),
    })
}

/// Regret quantiles across patients at one step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegretQuantiles {
    pub t: usize,
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
}

/// Per-step median and quartiles of cumulative regret.
pub fn regret_quantiles(results: &[TrialResult]) -> Result<Vec<RegretQuantiles>, MetricsError> {
    let steps = results
        .iter()
        .map(|r| r.regret_series.len())
        .min()
        .ok_or(MetricsError::Empty("regret_quantiles"))?;
    (0..steps)
        .map(|k| {
            let col: Vec<f64> = results.iter().map(|r| r.regret_series[k]).collect();
            Ok(RegretQuantiles {
                t: k + 1,
                q25: quantile(&col, 0.25)?,
                median: quantile(&col, 0.5)?,
                q75: quantile(&col, 0.75)?,
            })
        })
        .collect()
}
