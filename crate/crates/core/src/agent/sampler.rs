//! Posterior sampling for the linear pain-reduction model.
//!
//! Priors: every coefficient ~ Normal(0, 1), sigma ~ Exponential(1).
//!
//! The kernel is Metropolis-within-Gibbs with two blocks:
//!
//! * coefficients | sigma: Gaussian, drawn exactly. The Gram matrix `X'X` is
//!   eigendecomposed once per fit, so each sweep costs O(p^2) with no
//!   factorization (`(I + X'X / s^2)` shares the eigenvectors of `X'X`).
//! * log sigma | coefficients: random-walk Metropolis on the log scale with
//!   the proposal scale adapted during warmup.

use std::io::{self, Write};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::AgentError;
use crate::model::{design_row, ActionSet, HistoryRecord, PatientParams};
use crate::rng::{stream, tag};

/// Acceptance rate the log-sigma proposal adapts towards.
const TARGET_ACCEPTANCE: f64 = 0.44;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplerConfig {
    pub warmup_draws: usize,
    /// Draws kept per chain.
    pub kept_draws: usize,
    pub chains: usize,
    pub rng_seed: u64,
    /// Initial standard deviation of the log-sigma random-walk proposal.
    pub sigma_step: f64,
    /// Metropolis updates of log sigma per Gibbs sweep.
    pub sigma_moves_per_sweep: usize,
    /// Post-warmup acceptance rate bounds; a chain outside them fails the fit.
    pub min_acceptance: f64,
    pub max_acceptance: f64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            warmup_draws: 500,
            kept_draws: 1000,
            chains: 2,
            rng_seed: 0,
            sigma_step: 0.5,
            sigma_moves_per_sweep: 2,
            min_acceptance: 0.1,
            max_acceptance: 0.9,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<(), AgentError> {
        let bad = |m: &str| Err(AgentError::Config(m.to_string()));
        if self.warmup_draws == 0 {
            return bad("warmup_draws must be positive");
        }
        if self.kept_draws == 0 {
            return bad("kept_draws must be positive");
        }
        if self.chains == 0 {
            return bad("chains must be positive");
        }
        if !(self.sigma_step.is_finite() && self.sigma_step > 0.0) {
            return bad("sigma_step must be positive");
        }
        if self.sigma_moves_per_sweep == 0 {
            return bad("sigma_moves_per_sweep must be positive");
        }
        if !(0.0..=1.0).contains(&self.min_acceptance)
            || !(0.0..=1.0).contains(&self.max_acceptance)
            || self.min_acceptance >= self.max_acceptance
        {
            return bad("acceptance bounds must satisfy 0 <= min < max <= 1");
        }
        Ok(())
    }

    pub fn total_draws(&self) -> usize {
        self.kept_draws * self.chains
    }

    pub fn with_seed(&self, rng_seed: u64) -> Self {
        Self {
            rng_seed,
            ..self.clone()
        }
    }
}

/// Per-fit sampler diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SamplerMeta {
    pub n_draws: usize,
    pub chains: usize,
    pub n_observations: usize,
    /// Post-warmup log-sigma acceptance rate of each chain.
    pub acceptance: Vec<f64>,
    /// Proposals with a non-finite log density.
    pub divergences: usize,
    /// Adapted proposal scale of each chain.
    pub sigma_step: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorDraws {
    pub draws: Vec<PatientParams>,
    pub meta: SamplerMeta,
}

impl PosteriorDraws {
    pub fn len(&self) -> usize {
        self.draws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.draws.is_empty()
    }

    /// Writes the draws as whitespace-free CSV: one column per parameter.
    pub fn write_columns<W: Write>(&self, mut out: W) -> io::Result<()> {
        let n_types = self.draws.first().map_or(0, |d| d.tau.len());
        let mut header = vec!["alpha", "beta", "gamma", "delta", "eta", "kappa"]
            .into_iter()
            .map(String::from)
            .collect::<Vec<_>>();
        header.extend((0..n_types).map(|k| format!("tau_{k}")));
        header.push("sigma".into());
        writeln!(out, "{}", header.join(","))?;
        for d in &self.draws {
            let mut cols: Vec<String> = d.coeffs().iter().map(|v| v.to_string()).collect();
            cols.push(d.sigma.to_string());
            writeln!(out, "{}", cols.join(","))?;
        }
        Ok(())
    }
}

/// Sufficient statistics of the fed-back records.
struct Gram {
    n: usize,
    /// Eigenvectors of X'X, column-major.
    basis: DMatrix<f64>,
    /// Eigenvalues of X'X (clamped at zero).
    eigen: Vec<f64>,
    /// X'y rotated into the eigenbasis.
    xty_rot: Vec<f64>,
    yty: f64,
}

impl Gram {
    fn new(history: &[HistoryRecord], actions: &ActionSet) -> Result<Self, AgentError> {
        let p = actions.n_coeffs();
        let mut xtx = DMatrix::<f64>::zeros(p, p);
        let mut xty = DVector::<f64>::zeros(p);
        let mut yty = 0.0;
        let mut n = 0;
        for r in history.iter().filter(|r| r.fed_back) {
            let a = actions.get(r.action_index)?;
            let x = design_row(&r.context, a, actions.n_types());
            for i in 0..p {
                if x[i] == 0.0 {
                    continue;
                }
                xty[i] += x[i] * r.delta_pain;
                for j in 0..p {
                    xtx[(i, j)] += x[i] * x[j];
                }
            }
            yty += r.delta_pain * r.delta_pain;
            n += 1;
        }
        let eig = SymmetricEigen::new(xtx);
        let eigen = eig.eigenvalues.iter().map(|&l| l.max(0.0)).collect();
        let xty_rot = (eig.eigenvectors.transpose() * &xty).iter().copied().collect();
        Ok(Self {
            n,
            basis: eig.eigenvectors,
            eigen,
            xty_rot,
            yty,
        })
    }

    /// Residual sum of squares for coefficients `basis * u`.
    fn rss(&self, u: &[f64]) -> f64 {
        let mut quad = 0.0;
        let mut cross = 0.0;
        for k in 0..u.len() {
            quad += self.eigen[k] * u[k] * u[k];
            cross += u[k] * self.xty_rot[k];
        }
        (self.yty - 2.0 * cross + quad).max(0.0)
    }

    /// Log posterior density of `s = ln sigma` given the residual sum of
    /// squares, including the log-Jacobian of the transform.
    fn log_sigma_density(&self, s: f64, rss: f64) -> f64 {
        -(self.n as f64) * s - 0.5 * rss * (-2.0 * s).exp() - s.exp() + s
    }
}

struct ChainOutput {
    draws: Vec<PatientParams>,
    acceptance: f64,
    divergences: usize,
    step: f64,
}

fn run_chain(gram: &Gram, cfg: &SamplerConfig, chain: usize) -> ChainOutput {
    let mut rng = stream(cfg.rng_seed, &[tag::CHAIN, chain as u64]);
    let p = gram.eigen.len();
    let mut u = vec![0.0; p];
    let mut log_sigma = 0.0f64;
    let mut log_step = cfg.sigma_step.ln();
    let mut accepted = 0usize;
    let mut proposed = 0usize;
    let mut divergences = 0usize;
    let mut draws = Vec::with_capacity(cfg.kept_draws);
    let mut theta = vec![0.0; p];

    for sweep in 0..cfg.warmup_draws + cfg.kept_draws {
        let warm = sweep < cfg.warmup_draws;

        // coefficients | sigma, in the eigenbasis
        let inv_var = (-2.0 * log_sigma).exp();
        for k in 0..p {
            let precision = 1.0 + gram.eigen[k] * inv_var;
            let z: f64 = rng.sample(StandardNormal);
            u[k] = gram.xty_rot[k] * inv_var / precision + z / precision.sqrt();
        }

        // log sigma | coefficients
        let rss = gram.rss(&u);
        let mut current = gram.log_sigma_density(log_sigma, rss);
        for _ in 0..cfg.sigma_moves_per_sweep {
            let z: f64 = rng.sample(StandardNormal);
            let proposal = log_sigma + log_step.exp() * z;
            let candidate = gram.log_sigma_density(proposal, rss);
            let u01: f64 = rng.random();
            let accept_prob = if candidate.is_finite() {
                (candidate - current).exp().min(1.0)
            } else {
                divergences += 1;
                0.0
            };
            let accept = u01 < accept_prob;
            if accept {
                log_sigma = proposal;
                current = candidate;
            }
            if warm {
                let gain = 1.0 / ((sweep + 1) as f64).powf(0.6);
                log_step = (log_step + gain * (accept_prob - TARGET_ACCEPTANCE)).clamp(-8.0, 3.0);
            } else {
                proposed += 1;
                accepted += accept as usize;
            }
        }

        if !warm {
            for (i, t) in theta.iter_mut().enumerate() {
                *t = (0..p).map(|k| gram.basis[(i, k)] * u[k]).sum();
            }
            draws.push(PatientParams::from_coeffs(&theta, log_sigma.exp()));
        }
    }

    ChainOutput {
        draws,
        acceptance: accepted as f64 / proposed.max(1) as f64,
        divergences,
        step: log_step.exp(),
    }
}

/// Samples the posterior of the model given the fed-back records of `history`.
///
/// Records with `fed_back == false` are ignored. With no usable records the
/// draws follow the prior. Output is a deterministic function of the inputs
/// and `cfg.rng_seed`.
pub fn fit_posterior(
    history: &[HistoryRecord],
    actions: &ActionSet,
    cfg: &SamplerConfig,
) -> Result<PosteriorDraws, AgentError> {
    cfg.validate()?;
    let gram = Gram::new(history, actions)?;
    let chains: Vec<ChainOutput> = (0..cfg.chains).map(|c| run_chain(&gram, cfg, c)).collect();

    for (c, out) in chains.iter().enumerate() {
        if !(cfg.min_acceptance..=cfg.max_acceptance).contains(&out.acceptance) {
            return Err(AgentError::SamplerFailure(format!(
                "chain {c} acceptance {:.3} outside [{}, {}]",
                out.acceptance, cfg.min_acceptance, cfg.max_acceptance
            )));
        }
    }

    let meta = SamplerMeta {
        n_draws: cfg.total_draws(),
        chains: cfg.chains,
        n_observations: gram.n,
        acceptance: chains.iter().map(|c| c.acceptance).collect(),
        divergences: chains.iter().map(|c| c.divergences).sum(),
        sigma_step: chains.iter().map(|c| c.step).collect(),
    };
    let draws = chains.into_iter().flat_map(|c| c.draws).collect();
    Ok(PosteriorDraws { draws, meta })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agent::oracle::conjugate_posterior_oracle;
    use crate::model::{linear_mean, ActionSpec, Context, Phase};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn mean_sd(xs: impl Iterator<Item = f64>) -> (f64, f64) {
        let v: Vec<f64> = xs.collect();
        let n = v.len() as f64;
        let m = v.iter().sum::<f64>() / n;
        let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
        (m, var.sqrt())
    }

    /// Records with random contexts and actions; outcomes from `truth`.
    fn synthetic(
        truth: &PatientParams,
        actions: &ActionSet,
        n: usize,
        seed: u64,
    ) -> Vec<HistoryRecord> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|t| {
                let action_index = rng.random_range(0..actions.len());
                let context = Context::new(
                    rng.random_range(0.0..10.0),
                    rng.random_range(0.0..1.0),
                    rng.random_range(0.0..1.0),
                );
                let mu = linear_mean(truth, &context, &actions.actions()[action_index]).unwrap();
                let z: f64 = rng.sample(StandardNormal);
                HistoryRecord {
                    t: t + 1,
                    phase: Phase::Baseline,
                    action_index,
                    context,
                    delta_pain: mu + truth.sigma * z,
                    fed_back: true,
                }
            })
            .collect()
    }

    fn single_type_set() -> ActionSet {
        let mut specs = Vec::new();
        for intensity in [0.1, 0.4, 0.7, 1.0] {
            for duration_min in [6, 20, 40, 60] {
                specs.push(ActionSpec {
                    label: "x".into(),
                    type_id: 0,
                    intensity,
                    duration_min,
                });
            }
        }
        ActionSet::new(&specs).unwrap()
    }

    #[test]
    fn empty_history_recovers_prior() {
        let set = ActionSet::example_set();
        let cfg = SamplerConfig {
            kept_draws: 2000,
            rng_seed: 11,
            ..SamplerConfig::default()
        };
        let post = fit_posterior(&[], &set, &cfg).unwrap();
        assert_eq!(post.len(), 4000);
        assert_eq!(post.meta.n_observations, 0);
        for k in 0..set.n_coeffs() {
            let (m, sd) = mean_sd(post.draws.iter().map(|d| d.coeffs()[k]));
            assert!(m.abs() < 0.1, "coeff {k} mean {m}");
            assert!((sd - 1.0).abs() < 0.1, "coeff {k} sd {sd}");
        }
        let (ms, _) = mean_sd(post.draws.iter().map(|d| d.sigma));
        assert!((ms - 1.0).abs() < 0.15, "sigma mean {ms}");
        assert!(post.draws.iter().all(|d| d.sigma > 0.0 && d.tau.len() == 4));
    }

    #[test]
    fn recovers_truth_with_single_type() {
        let set = single_type_set();
        let truth = PatientParams {
            alpha: 0.8,
            beta: -0.5,
            gamma: -1.0,
            delta: 0.6,
            eta: 0.4,
            kappa: -0.3,
            tau: vec![0.0],
            sigma: 0.1,
        };
        let hist = synthetic(&truth, &set, 200, 3);
        let cfg = SamplerConfig {
            rng_seed: 5,
            ..SamplerConfig::default()
        };
        let post = fit_posterior(&hist, &set, &cfg).unwrap();
        let oracle = conjugate_posterior_oracle(&hist, &set, truth.sigma).unwrap();
        for k in 0..6 {
            let (m, _) = mean_sd(post.draws.iter().map(|d| d.coeffs()[k]));
            assert!((m - truth.coeffs()[k]).abs() < 0.15, "coeff {k}: {m}");
            assert!((m - oracle.mean[k]).abs() < 0.05, "coeff {k} vs oracle");
        }
        let (ms, _) = mean_sd(post.draws.iter().map(|d| d.sigma));
        assert!((ms - 0.1).abs() < 0.02, "sigma {ms}");
    }

    #[test]
    fn withheld_records_do_not_change_the_posterior() {
        let set = ActionSet::example_set();
        let truth = PatientParams::from_coeffs(&[0.5; 10], 1.0);
        let hist = synthetic(&truth, &set, 20, 9);
        let mut with_drop = hist.clone();
        with_drop.insert(
            5,
            HistoryRecord {
                delta_pain: 99.0,
                fed_back: false,
                ..hist[0].clone()
            },
        );
        let cfg = SamplerConfig {
            kept_draws: 200,
            warmup_draws: 100,
            ..SamplerConfig::default()
        };
        assert_eq!(
            fit_posterior(&hist, &set, &cfg).unwrap(),
            fit_posterior(&with_drop, &set, &cfg).unwrap()
        );
    }

    #[test]
    fn fit_is_deterministic_per_seed() {
        let set = ActionSet::example_set();
        let hist = synthetic(&PatientParams::zeros(4), &set, 15, 1);
        let cfg = SamplerConfig {
            kept_draws: 300,
            rng_seed: 77,
            ..SamplerConfig::default()
        };
        let a = fit_posterior(&hist, &set, &cfg).unwrap();
        let b = fit_posterior(&hist, &set, &cfg).unwrap();
        assert_eq!(a, b);
        let c = fit_posterior(&hist, &set, &cfg.with_seed(78)).unwrap();
        assert_ne!(a.draws, c.draws);
    }

    #[test]
    fn invalid_config_is_rejected() {
        let set = ActionSet::example_set();
        for cfg in [
            SamplerConfig { kept_draws: 0, ..Default::default() },
            SamplerConfig { chains: 0, ..Default::default() },
            SamplerConfig { sigma_step: -1.0, ..Default::default() },
            SamplerConfig { min_acceptance: 0.9, max_acceptance: 0.1, ..Default::default() },
        ] {
            assert!(matches!(fit_posterior(&[], &set, &cfg), Err(AgentError::Config(_))));
        }
    }

    #[test]
    fn impossible_acceptance_window_reports_failure() {
        let set = ActionSet::example_set();
        let cfg = SamplerConfig {
            min_acceptance: 0.99,
            max_acceptance: 1.0,
            kept_draws: 200,
            ..Default::default()
        };
        assert!(matches!(
            fit_posterior(&[], &set, &cfg),
            Err(AgentError::SamplerFailure(_))
        ));
    }

    #[test]
    fn acceptance_lands_near_target() {
        let set = ActionSet::example_set();
        let hist = synthetic(&PatientParams::from_coeffs(&[0.3; 10], 1.0), &set, 30, 2);
        let post = fit_posterior(&hist, &set, &SamplerConfig::default()).unwrap();
        for a in &post.meta.acceptance {
            assert!((0.25..0.65).contains(a), "acceptance {a}");
        }
        assert_eq!(post.meta.divergences, 0);
    }

    #[test]
    fn columnar_dump_has_one_row_per_draw() {
        let set = ActionSet::example_set();
        let cfg = SamplerConfig { kept_draws: 10, warmup_draws: 10, chains: 1, min_acceptance: 0.0, max_acceptance: 1.0, ..Default::default() };
        let post = fit_posterior(&[], &set, &cfg).unwrap();
        let mut buf = Vec::new();
        post.write_columns(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 11);
        assert_eq!(lines[0], "alpha,beta,gamma,delta,eta,kappa,tau_0,tau_1,tau_2,tau_3,sigma");
        assert!(lines[1..].iter().all(|l| l.split(',').count() == 11));
    }
}
