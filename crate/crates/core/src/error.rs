use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("action set is empty")]
    EmptyActionSet,
    #[error("action {index} ({label}): {reason}")]
    InvalidAction {
        index: usize,
        label: String,
        reason: String,
    },
    #[error("type ids must cover 0..{n_types} without gaps; missing {missing}")]
    TypeGap { n_types: usize, missing: usize },
    #[error("tau has {len} entries but action type {type_id} was requested")]
    TauIndex { len: usize, type_id: usize },
    #[error("action index {index} out of range for {len} actions")]
    ActionIndex { index: usize, len: usize },
}

#[derive(Debug, Error)]
pub enum AgentError {
    #[error("invalid sampler config: {0}")]
    Config(String),
    #[error("sampler diagnostics failed: {0}")]
    SamplerFailure(String),
    #[error("posterior has no draws")]
    NoDraws,
    #[error("selection distribution is degenerate (all probabilities zero)")]
    DegenerateDistribution,
    #[error("selection probabilities are invalid: {0}")]
    InvalidProbabilities(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Error)]
pub enum TrialError {
    #[error("invalid trial config: {0}")]
    Config(String),
    #[error("patient {patient_id}, decision {decision}: {source}")]
    Sampler {
        patient_id: u64,
        decision: usize,
        #[source]
        source: AgentError,
    },
    #[error("regret index {t} out of range 1..={len}")]
    RegretIndex { t: usize, len: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("entropy of all-zero counts is undefined")]
    ZeroCounts,
    #[error("{0} of empty input")]
    Empty(&'static str),
    #[error("cannot summarize mixed cells: {0}")]
    MixedCells(String),
}

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("io error at {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Trial(#[from] TrialError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("{failed} patient simulation(s) failed; see {sidecar}")]
    PatientFailures { failed: usize, sidecar: String },
}
