//! Batch runs: simulate every selected scenario/design cell and write the
//! per-step records, summary table and regret-quantile series.
//!
//! Output files (all inside the manifest's output directory):
//!
//! * `steps.csv`: one row per patient decision point, columns [`STEPS_HEADER`].
//!   Rows before the adaptive phase leave the adaptive and probability
//!   columns empty and put the realized outcome in the fixed column.
//! * `summary.json`: one [`ScenarioSummary`] per cell.
//! * `summary.md`: the same cells as a fixed-point table.
//! * `regret_quantiles.csv`: per cell and step, the 25%, 50% and 75%
//!   quantiles of cumulative regret across patients.
//! * `FAILED.txt`: written only when some patient simulations failed.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rayon::prelude::*;

use crate::config::RunManifest;
use crate::environment::ScenarioId;
use crate::error::{ReportError, TrialError};
use crate::metrics::{regret_quantiles, summarize, ScenarioSummary};
use crate::model::ActionSet;
use crate::trial::{simulate_patient, Design, TrialResult};

pub const STEPS_HEADER: [&str; 16] = [
    "patient_id",
    "scenario",
    "design",
    "phase",
    "t",
    "action_index",
    "type_id",
    "intensity",
    "duration_norm",
    "pain_before",
    "delta_pain_adaptive",
    "delta_pain_fixed_counterfactual",
    "fed_back",
    "selection_prob_chosen",
    "max_prob",
    "min_prob",
];

pub const STEPS_FILE: &str = "steps.csv";
pub const SUMMARY_JSON: &str = "summary.json";
pub const SUMMARY_TABLE: &str = "summary.md";
pub const QUANTILES_FILE: &str = "regret_quantiles.csv";
pub const FAILURE_SIDECAR: &str = "FAILED.txt";

/// A patient simulation that returned an error: scenario, design, patient id.
pub type PatientFailure = (ScenarioId, Design, u64, TrialError);

/// All trials of one scenario/design cell, ordered by patient id.
#[derive(Debug, Clone)]
pub struct CellResults {
    pub scenario: ScenarioId,
    pub design: Design,
    pub trials: Vec<TrialResult>,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub cells: Vec<CellResults>,
    pub summaries: Vec<ScenarioSummary>,
}

fn design_label(d: Design) -> &'static str {
    match d {
        Design::AB => "A-B",
        Design::BA => "B-A",
    }
}

/// Two decimals, without a sign on values that round to zero.
fn fixed2(v: f64) -> String {
    let s = format!("{v:.2}");
    if s == "-0.00" {
        "0.00".into()
    } else {
        s
    }
}

/// Formats summaries as a table ordered by scenario, A-B before B-A.
pub fn emit_summary_table(cells: &[ScenarioSummary]) -> String {
    let mut sorted: Vec<&ScenarioSummary> = cells.iter().collect();
    sorted.sort_by_key(|c| (c.scenario, c.design));
    let mut out = String::new();
    out.push_str("| Scenario | Design | Regret mean | Regret 0.75 quantile | Entropy type | SD duration | SD intensity | Max prob | Min prob |\n");
    out.push_str("|---|---|---:|---:|---:|---:|---:|---:|---:|\n");
    for c in &sorted {
        let _ = writeln!(
            out,
            "| {} | {} | {} | {} | {} | {} | {} | {} | {} |",
            c.scenario,
            design_label(c.design),
            fixed2(c.mean_regret),
            fixed2(c.regret_q75),
            fixed2(c.entropy_type),
            fixed2(c.std_duration),
            fixed2(c.std_intensity),
            fixed2(c.mean_max_prob),
            fixed2(c.mean_min_prob),
        );
    }
    out.push_str("\nFixed-arm reference over the same decision points:\n\n");
    out.push_str("| Scenario | Design | Entropy type | SD duration | SD intensity |\n");
    out.push_str("|---|---|---:|---:|---:|\n");
    for c in &sorted {
        let _ = writeln!(
            out,
            "| {} | {} | {} | {} | {} |",
            c.scenario,
            design_label(c.design),
            fixed2(c.fixed_entropy_type),
            fixed2(c.fixed_std_duration),
            fixed2(c.fixed_std_intensity),
        );
    }
    out
}

/// Appends the per-step rows of one trial to `out`.
pub fn write_step_rows(out: &mut String, r: &TrialResult, actions: &ActionSet) {
    let prefix = format!("{},{},{}", r.patient_id, r.scenario, r.design);
    for rec in &r.pre_b_records {
        let a = &actions.actions()[rec.action_index];
        let _ = writeln!(
            out,
            "{prefix},{},{},{},{},{},{},{},,{},{},,,",
            rec.phase,
            rec.t,
            rec.action_index,
            a.type_id,
            a.intensity,
            a.duration_norm,
            rec.context.pain,
            rec.delta_pain,
            rec.fed_back,
        );
    }
    for ((rec, d), fixed) in r
        .adaptive_records
        .iter()
        .zip(&r.decisions)
        .zip(&r.counterfactual_fixed_deltas)
    {
        let a = &actions.actions()[rec.action_index];
        let _ = writeln!(
            out,
            "{prefix},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            rec.phase,
            rec.t,
            rec.action_index,
            a.type_id,
            a.intensity,
            a.duration_norm,
            rec.context.pain,
            rec.delta_pain,
            fixed,
            rec.fed_back,
            d.selection_probs[d.chosen_index],
            d.max_prob(),
            d.min_prob(),
        );
    }
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<(), ReportError> {
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|source| ReportError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Simulates all selected cells without touching the filesystem.
///
/// Patients are distributed over `manifest.jobs` worker threads. Each
/// patient's randomness derives from its id alone, so the result does not
/// depend on the number of workers.
pub fn simulate_cells(
    manifest: &RunManifest,
) -> Result<(Vec<CellResults>, Vec<PatientFailure>), ReportError> {
    let jobs: Vec<(ScenarioId, Design, u64)> = manifest
        .cells()
        .into_iter()
        .flat_map(|(s, d)| (0..manifest.patients as u64).map(move |i| (s, d, i)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(manifest.jobs)
        .build()
        .map_err(|e| ReportError::Config(format!("thread pool: {e}")))?;
    let outcomes: Vec<Result<TrialResult, TrialError>> = pool.install(|| {
        jobs.par_iter()
            .map(|&(s, d, id)| simulate_patient(id, &manifest.actions, &manifest.trial_config(s, d)))
            .collect()
    });

    let mut cells: Vec<CellResults> = manifest
        .cells()
        .into_iter()
        .map(|(scenario, design)| CellResults {
            scenario,
            design,
            trials: Vec::with_capacity(manifest.patients),
        })
        .collect();
    let mut failures = Vec::new();
    for ((s, d, id), outcome) in jobs.into_iter().zip(outcomes) {
        match outcome {
            Ok(r) => {
                let cell = cells
                    .iter_mut()
                    .find(|c| c.scenario == s && c.design == d)
                    .expect("cell exists");
                cell.trials.push(r);
            }
            Err(e) => failures.push((s, d, id, e)),
        }
    }
    Ok((cells, failures))
}

/// Runs every selected cell and writes the output files.
///
/// On patient failures the outputs for the successful patients are still
/// written, `FAILED.txt` lists the failures and an error is returned.
pub fn run_all(manifest: &RunManifest) -> Result<RunOutcome, ReportError> {
    manifest.validate()?;
    let dir = &manifest.out_dir;
    fs::create_dir_all(dir).map_err(|source| ReportError::Io {
        path: dir.display().to_string(),
        source,
    })?;
    let (cells, failures) = simulate_cells(manifest)?;

    let mut steps = STEPS_HEADER.join(",");
    steps.push('\n');
    let mut quantiles = String::from("scenario,design,t,q25,median,q75\n");
    let mut summaries = Vec::new();
    for cell in &cells {
        for r in &cell.trials {
            write_step_rows(&mut steps, r, &manifest.actions);
        }
        if cell.trials.is_empty() {
            continue;
        }
        summaries.push(summarize(&cell.trials, &manifest.actions)?);
        for q in regret_quantiles(&cell.trials)? {
            let _ = writeln!(
                quantiles,
                "{},{},{},{},{},{}",
                cell.scenario, cell.design, q.t, q.q25, q.median, q.q75
            );
        }
    }

    write_file(dir, STEPS_FILE, &steps)?;
    write_file(dir, QUANTILES_FILE, &quantiles)?;
    write_file(dir, SUMMARY_JSON, &(serde_json::to_string_pretty(&summaries)? + "\n"))?;
    write_file(dir, SUMMARY_TABLE, &emit_summary_table(&summaries))?;

    let sidecar = dir.join(FAILURE_SIDECAR);
    if failures.is_empty() {
        if sidecar.exists() {
            fs::remove_file(&sidecar).map_err(|source| ReportError::Io {
                path: sidecar.display().to_string(),
                source,
            })?;
        }
        Ok(RunOutcome { cells, summaries })
    } else {
        let mut text = String::from("outputs are partial; failed patient simulations:\n");
        for (s, d, id, e) in &failures {
            let _ = writeln!(text, "{s},{d},{id}: {e}");
        }
        write_file(dir, FAILURE_SIDECAR, &text)?;
        Err(ReportError::PatientFailures {
            failed: failures.len(),
            sidecar: sidecar.display().to_string(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trial::Design;

    fn summary(scenario: ScenarioId, design: Design, regret: f64) -> ScenarioSummary {
        ScenarioSummary {
            scenario,
            design,
            n_patients: 1,
            mean_regret: regret,
            regret_q75: regret,
            entropy_type: 1.0,
            std_duration: 0.25,
            std_intensity: 0.3,
            mean_max_prob: 0.44,
            mean_min_prob: 0.01,
            fixed_entropy_type: 1.23,
            fixed_std_duration: 0.27,
            fixed_std_intensity: 0.32,
        }
    }

    #[test]
    fn table_rows_are_ordered_and_rounded() {
        let cells = vec![
            summary(ScenarioId::II, Design::BA, -10.504),
            summary(ScenarioId::I, Design::BA, -0.0001),
            summary(ScenarioId::II, Design::AB, -11.756),
            summary(ScenarioId::I, Design::AB, 0.0),
        ];
        let table = emit_summary_table(&cells);
        let rows: Vec<&str> = table.lines().skip(2).take(4).collect();
        assert!(rows[0].starts_with("| I | A-B | 0.00 | 0.00 |"));
        assert!(rows[1].starts_with("| I | B-A | 0.00 | 0.00 |"), "{}", rows[1]);
        assert!(rows[2].starts_with("| II | A-B | -11.76 |"));
        assert!(rows[3].starts_with("| II | B-A | -10.50 |"));
        assert!(rows[2].ends_with("| 1.00 | 0.25 | 0.30 | 0.44 | 0.01 |"));
        let header: Vec<&str> = table.lines().next().unwrap().split('|').map(str::trim).filter(|s| !s.is_empty()).collect();
        assert_eq!(
            header,
            ["Scenario", "Design", "Regret mean", "Regret 0.75 quantile", "Entropy type", "SD duration", "SD intensity", "Max prob", "Min prob"]
        );
    }

    #[test]
    fn fixed2_handles_negative_zero() {
        assert_eq!(fixed2(-0.004), "0.00");
        assert_eq!(fixed2(-0.006), "-0.01");
        assert_eq!(fixed2(1.234), "1.23");
    }
}
