//! Closed-form reference posterior for a known noise scale.
//!
//! With sigma fixed the model is Bayesian linear regression with a standard
//! normal prior, so the posterior over coefficients is Gaussian. This module
//! computes it by conditioning on one record at a time (rank-one covariance
//! downdates), a route independent of the batch eigendecomposition the
//! sampler uses. It exists to validate [`super::fit_posterior`].

use crate::error::AgentError;
use crate::model::{design_row, ActionSet, HistoryRecord};

/// Gaussian over the coefficient vector `[alpha, .., kappa, tau_0, ..]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianPosterior {
    pub mean: Vec<f64>,
    /// Row-major covariance.
    pub cov: Vec<Vec<f64>>,
}

impl GaussianPosterior {
    pub fn sd(&self) -> Vec<f64> {
        (0..self.mean.len()).map(|i| self.cov[i][i].sqrt()).collect()
    }
}

/// Exact coefficient posterior given `sigma_fixed`, using fed-back records only.
pub fn conjugate_posterior_oracle(
    history: &[HistoryRecord],
    actions: &ActionSet,
    sigma_fixed: f64,
) -> Result<GaussianPosterior, AgentError> {
    if !(sigma_fixed.is_finite() && sigma_fixed > 0.0) {
        return Err(AgentError::Config("sigma_fixed must be positive".into()));
    }
    let p = actions.n_coeffs();
    let noise_var = sigma_fixed * sigma_fixed;
    let mut mean = vec![0.0; p];
    let mut cov: Vec<Vec<f64>> = (0..p)
        .map(|i| (0..p).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();

    for r in history.iter().filter(|r| r.fed_back) {
        let x = design_row(&r.context, actions.get(r.action_index)?, actions.n_types());
        let cx: Vec<f64> = cov
            .iter()
            .map(|row| row.iter().zip(&x).map(|(c, xi)| c * xi).sum())
            .collect();
        let innovation_var = noise_var + x.iter().zip(&cx).map(|(a, b)| a * b).sum::<f64>();
        if !(innovation_var.is_finite() && innovation_var > 0.0) {
            return Err(AgentError::SamplerFailure(
                "singular update in conjugate oracle".into(),
            ));
        }
        let residual = r.delta_pain - x.iter().zip(&mean).map(|(a, b)| a * b).sum::<f64>();
        for i in 0..p {
            mean[i] += cx[i] * residual / innovation_var;
        }
        for i in 0..p {
            for j in 0..p {
                cov[i][j] -= cx[i] * cx[j] / innovation_var;
            }
        }
    }
    Ok(GaussianPosterior { mean, cov })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ActionSpec, Context, Phase};

    #[test]
    fn no_records_gives_prior() {
        let set = ActionSet::example_set();
        let post = conjugate_posterior_oracle(&[], &set, 1.0).unwrap();
        assert!(post.mean.iter().all(|&m| m == 0.0));
        for i in 0..10 {
            for j in 0..10 {
                assert_eq!(post.cov[i][j], if i == j { 1.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn one_record_matches_hand_conditioning() {
        // Single action: type 0, intensity 1, duration 1; zero context.
        // Active regressors: alpha (I=1), gamma (D=1), eta (B=1), tau_0.
        // x'x = 4, so the innovation variance is s^2 + 4 and every active
        // coefficient gets mean y / (s^2 + 4); its variance is 1 - 1/(s^2 + 4)
        // and active pairs covary at -1/(s^2 + 4).
        let set = ActionSet::new(&[ActionSpec {
            label: "a".into(),
            type_id: 0,
            intensity: 1.0,
            duration_min: 20,
        }])
        .unwrap();
        let y = 2.5;
        let s = 0.5;
        let rec = HistoryRecord {
            t: 1,
            phase: Phase::Baseline,
            action_index: 0,
            context: Context::new(0.0, 0.0, 0.0),
            delta_pain: y,
            fed_back: true,
        };
        let post = conjugate_posterior_oracle(&[rec], &set, s).unwrap();
        let denom = s * s + 4.0;
        let active = [0usize, 2, 4, 6];
        for i in 0..7 {
            let want = if active.contains(&i) { y / denom } else { 0.0 };
            assert!((post.mean[i] - want).abs() < 1e-12, "mean {i}");
            for j in 0..7 {
                let want = match (active.contains(&i), active.contains(&j)) {
                    (true, true) if i == j => 1.0 - 1.0 / denom,
                    (true, true) => -1.0 / denom,
                    _ if i == j => 1.0,
                    _ => 0.0,
                };
                assert!((post.cov[i][j] - want).abs() < 1e-12, "cov {i},{j}");
            }
        }
    }

    #[test]
    fn rejects_nonpositive_sigma() {
        let set = ActionSet::example_set();
        assert!(conjugate_posterior_oracle(&[], &set, 0.0).is_err());
    }
}
