//! Run configuration file (TOML) and the validated run manifest built from it.
//!
//! ```toml
//! scenario = "all"      # I..VII, a comma-separated list, or "all"
//! design = "all"        # AB, BA or "all"
//! patients = 100
//! seed = 2023
//! out = "results"
//! jobs = 1
//!
//! [trial]
//! baseline_days = 7
//! phase_days = 14
//! decisions_per_day = 1
//!
//! [sampler]
//! warmup_draws = 500
//! kept_draws = 1000
//! chains = 2
//!
//! [[actions]]
//! label = "Slow jogging"
//! type_id = 0
//! intensity = 0.3
//! duration_min = 30
//! ```
//!
//! Every key is optional; omitted keys take the defaults shown. When no
//! `[[actions]]` are given the built-in eight-exercise set is used.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::agent::SamplerConfig;
use crate::environment::ScenarioId;
use crate::error::ReportError;
use crate::model::{example_specs, ActionSet, ActionSpec};
use crate::trial::{Design, TrialConfig};

pub const DEFAULT_SEED: u64 = 2023;
pub const DEFAULT_PATIENTS: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrialSettings {
    pub baseline_days: usize,
    pub phase_days: usize,
    pub decisions_per_day: usize,
}

impl Default for TrialSettings {
    fn default() -> Self {
        Self {
            baseline_days: 7,
            phase_days: 14,
            decisions_per_day: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: String,
    pub design: String,
    pub patients: usize,
    pub seed: u64,
    pub out: PathBuf,
    pub jobs: usize,
    pub trial: TrialSettings,
    pub sampler: SamplerConfig,
    pub actions: Vec<ActionSpec>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            scenario: "all".into(),
            design: "all".into(),
            patients: DEFAULT_PATIENTS,
            seed: DEFAULT_SEED,
            out: PathBuf::from("results"),
            jobs: 1,
            trial: TrialSettings::default(),
            sampler: SamplerConfig::default(),
            actions: example_specs(),
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ReportError> {
        toml::from_str(text).map_err(|e| ReportError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, ReportError> {
        let text = std::fs::read_to_string(path).map_err(|source| ReportError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml_str(&text)
    }
}

/// Parses `all`, a single scenario, or a comma-separated list.
pub fn parse_scenarios(s: &str) -> Result<Vec<ScenarioId>, String> {
    if s.trim().eq_ignore_ascii_case("all") {
        return Ok(ScenarioId::ALL.to_vec());
    }
    let mut out: Vec<ScenarioId> = s.split(',').map(|p| p.trim().parse()).collect::<Result<_, _>>()?;
    out.sort();
    out.dedup();
    Ok(out)
}

/// Parses `all`, `AB` or `BA`.
pub fn parse_designs(s: &str) -> Result<Vec<Design>, String> {
    if s.trim().eq_ignore_ascii_case("all") {
        return Ok(Design::ALL.to_vec());
    }
    let mut out: Vec<Design> = s.split(',').map(|p| p.trim().parse()).collect::<Result<_, _>>()?;
    out.sort();
    out.dedup();
    Ok(out)
}

/// Everything a batch run needs, validated.
#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub config_path: Option<PathBuf>,
    pub scenarios: Vec<ScenarioId>,
    pub designs: Vec<Design>,
    pub patients: usize,
    pub root_seed: u64,
    pub out_dir: PathBuf,
    pub jobs: usize,
    pub trial: TrialSettings,
    pub sampler: SamplerConfig,
    pub actions: ActionSet,
}

impl RunManifest {
    pub fn from_config(cfg: &RunConfig, config_path: Option<PathBuf>) -> Result<Self, ReportError> {
        let scenarios = parse_scenarios(&cfg.scenario).map_err(ReportError::Config)?;
        let designs = parse_designs(&cfg.design).map_err(ReportError::Config)?;
        let actions = ActionSet::new(&cfg.actions).map_err(|e| ReportError::Config(e.to_string()))?;
        let manifest = Self {
            config_path,
            scenarios,
            designs,
            patients: cfg.patients,
            root_seed: cfg.seed,
            out_dir: cfg.out.clone(),
            jobs: cfg.jobs,
            trial: cfg.trial.clone(),
            sampler: cfg.sampler.clone(),
            actions,
        };
        manifest.validate()?;
        Ok(manifest)
    }

    pub fn validate(&self) -> Result<(), ReportError> {
        if self.patients == 0 {
            return Err(ReportError::Config("patient count must be at least 1".into()));
        }
        if self.jobs == 0 {
            return Err(ReportError::Config("jobs must be at least 1".into()));
        }
        if self.scenarios.is_empty() || self.designs.is_empty() {
            return Err(ReportError::Config("no scenario/design selected".into()));
        }
        for s in &self.scenarios {
            for d in &self.designs {
                self.trial_config(*s, *d)
                    .validate()
                    .map_err(|e| ReportError::Config(e.to_string()))?;
            }
        }
        Ok(())
    }

    /// Cells in output order: scenario I..VII, A-B before B-A.
    pub fn cells(&self) -> Vec<(ScenarioId, Design)> {
        let mut cells: Vec<_> = self
            .scenarios
            .iter()
            .flat_map(|s| self.designs.iter().map(move |d| (*s, *d)))
            .collect();
        cells.sort();
        cells
    }

    pub fn trial_config(&self, scenario: ScenarioId, design: Design) -> TrialConfig {
        TrialConfig {
            baseline_days: self.trial.baseline_days,
            phase_days: self.trial.phase_days,
            decisions_per_day: self.trial.decisions_per_day,
            sampler: self.sampler.clone(),
            scenario,
            design,
            root_seed: self.root_seed,
        }
    }
}
