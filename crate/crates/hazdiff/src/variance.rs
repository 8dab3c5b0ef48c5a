//! Covariance estimators for the hazard-difference estimates: model-based
//! sandwich forms and the nonparametric bootstrap.
//!
//! Both sandwich estimators are diagonal per cause, `cov_jj = V_j / (W^2 n)`,
//! with `W` the derivative term shared across causes and `V_j` the score
//! variation. The bootstrap resamples whole records with replacement, refits
//! the entire pipeline per resample, and reports the sample covariance of the
//! replicate estimates. Replicate `b` draws from the stream
//! `stream(seed, b)`, so results do not depend on scheduling.

use rayon::prelude::*;

use crate::data::CompetingRisksSample;
use crate::engine::Engine;
use crate::error::{Error, Result};
use crate::nuisance::{ExternalNuisance, NuisanceSet};
use crate::rng;
use crate::scores::{point_estimate, ScoreConfig};

/// A covariance matrix for the estimate vector, already scaled to the
/// sampling variance of `beta` (the `1/n` is included).
#[derive(Debug, Clone)]
pub struct CovarianceEstimate {
    pub covariance: Vec<Vec<f64>>,
    pub source: VarianceSource,
    /// Successful bootstrap replicates, when applicable.
    pub replicates: Option<usize>,
    pub failures: usize,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarianceSource {
    Model,
    Bootstrap,
}

fn diagonal(j_count: usize, diag: &[f64]) -> Vec<Vec<f64>> {
    let mut cov = vec![vec![0.0; j_count]; j_count];
    for (j, &v) in diag.iter().enumerate() {
        cov[j][j] = v;
    }
    cov
}

/// Model-based sandwich for the Score-1 estimate:
/// `W = (1/n) sum_i A_i (A_i - pi_i) ∫_0^{X_i} S_c^{-1}(t-) e^{(sum_j beta_j) t} dt`,
/// `V_j = (1/n) sum_{cause-j events} e^{2 (sum beta) A_i X_i} S_c^{-2}(X_i-) (A_i - pi_i)^2`,
/// `cov_jj = V_j / (W^2 n)`.
pub fn sandwich_score1(
    sample: &CompetingRisksSample,
    nuisance: &NuisanceSet,
    beta: &[f64],
) -> Result<CovarianceEstimate> {
    let pi = nuisance.propensity_values(sample)?;
    let engine = Engine::new(sample, &pi, &nuisance.censoring)?;
    let (w, v) = engine.sandwich_score1(beta)?;
    finish_sandwich(sample, w, v)
}

/// Model-based sandwich for the Score-2 estimate:
/// `W = (1/n) sum_i A_i ∫_0^{X_i} (A_i - E_i(t)) dt`,
/// `V_j = (1/n) sum_{cause-j events} (A_i - E_i(X_i-))^2`.
pub fn sandwich_score2(
    sample: &CompetingRisksSample,
    nuisance: &NuisanceSet,
    beta: &[f64],
) -> Result<CovarianceEstimate> {
    let pi = nuisance.propensity_values(sample)?;
    let engine = Engine::new(sample, &pi, &nuisance.censoring)?;
    let (w, v) = engine.sandwich_score2(beta)?;
    finish_sandwich(sample, w, v)
}

fn finish_sandwich(
    sample: &CompetingRisksSample,
    w: f64,
    v: Vec<f64>,
) -> Result<CovarianceEstimate> {
    if w <= 0.0 {
        return Err(Error::estimation(format!("non-invertible W (W = {w:.3e})")));
    }
    let n = sample.len() as f64;
    let mut warnings = Vec::new();
    let diag: Vec<f64> = v
        .iter()
        .enumerate()
        .map(|(j, &vj)| {
            if vj == 0.0 {
                warnings.push(format!(
                    "cause {}: zero score variation; standard error is 0",
                    j + 1
                ));
            }
            vj / (w * w * n)
        })
        .collect();
    Ok(CovarianceEstimate {
        covariance: diagonal(sample.cause_count(), &diag),
        source: VarianceSource::Model,
        replicates: None,
        failures: 0,
        warnings,
    })
}

/// Nonparametric bootstrap: `replicates` resamples with replacement of whole
/// records, the full pipeline (nuisance refits plus the estimator) per
/// resample, and the sample covariance of the replicate estimates. Replicates
/// that fail to converge are dropped and counted; more than 10% failures is
/// an error.
pub fn bootstrap(
    sample: &CompetingRisksSample,
    config: &ScoreConfig,
    replicates: usize,
    seed: u64,
    external: Option<&ExternalNuisance>,
) -> Result<CovarianceEstimate> {
    if replicates < 2 {
        return Err(Error::input("bootstrap needs at least 2 replicates"));
    }
    let n = sample.len();
    let results: Vec<Option<Vec<f64>>> = (0..replicates)
        .into_par_iter()
        .map(|b| {
            let mut stream = rng::stream(seed, b as u64);
            let indices: Vec<usize> = (0..n).map(|_| rng::index(&mut stream, n)).collect();
            let resampled = match sample.resample(&indices) {
                Ok(s) => s,
                Err(_) => return None,
            };
            let ext = external.map(|e| e.resample(&indices));
            point_estimate(&resampled, config, ext.as_ref()).ok().map(|p| p.beta)
        })
        .collect();

    let ok: Vec<&Vec<f64>> = results.iter().flatten().collect();
    let failures = replicates - ok.len();
    if failures * 10 > replicates {
        return Err(Error::estimation(format!(
            "bootstrap: {failures} of {replicates} replicates failed"
        )));
    }
    if ok.len() < 2 {
        return Err(Error::estimation("bootstrap: fewer than 2 successful replicates"));
    }
    let j_count = sample.cause_count();
    let b_ok = ok.len() as f64;
    let mut mean = vec![0.0; j_count];
    for beta in &ok {
        for j in 0..j_count {
            mean[j] += beta[j];
        }
    }
    for m in &mut mean {
        *m /= b_ok;
    }
    let mut cov = vec![vec![0.0; j_count]; j_count];
    for beta in &ok {
        for j in 0..j_count {
            for l in 0..j_count {
                cov[j][l] += (beta[j] - mean[j]) * (beta[l] - mean[l]);
            }
        }
    }
    for row in &mut cov {
        for v in row.iter_mut() {
            *v /= b_ok - 1.0;
        }
    }
    let mut warnings = Vec::new();
    if failures > 0 {
        warnings.push(format!("bootstrap: {failures} replicates dropped"));
    }
    Ok(CovarianceEstimate {
        covariance: cov,
        source: VarianceSource::Bootstrap,
        replicates: Some(ok.len()),
        failures,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::SubjectRecord;
    use crate::nuisance::{CensoringModel, GammaDesign, OutcomeModel, Propensity};
    use crate::scores::Method;

    fn rec(time: f64, status: usize, treatment: u8, z: f64) -> SubjectRecord {
        SubjectRecord { time, status, treatment, covariates: vec![z] }
    }

    fn five_subject_sample() -> CompetingRisksSample {
        CompetingRisksSample::with_options(
            vec![
                rec(0.4, 1, 1, 0.2),
                rec(0.8, 2, 0, -0.1),
                rec(1.1, 1, 0, 0.5),
                rec(1.5, 0, 1, 0.3),
                rec(2.1, 2, 1, -0.4),
            ],
            vec!["z1".into()],
            2,
            None,
        )
        .unwrap()
    }

    fn unit_nuisance(sample: &CompetingRisksSample, pi: f64) -> NuisanceSet {
        NuisanceSet {
            propensity: Propensity::External(vec![pi; sample.len()]),
            censoring: CensoringModel::Unit,
            outcomes: (0..sample.cause_count())
                .map(|_| OutcomeModel {
                    gamma: vec![0.0],
                    design: GammaDesign::ZOnly,
                    initial_beta: None,
                    no_events: false,
                })
                .collect(),
        }
    }

    #[test]
    fn score1_sandwich_matches_term_by_term_accumulation() {
        let sample = five_subject_sample();
        let nuisance = unit_nuisance(&sample, 0.4);
        let beta = [0.15, -0.05];
        let b: f64 = beta.iter().sum();
        let est = sandwich_score1(&sample, &nuisance, &beta).unwrap();

        // independent accumulation: per-subject direct integrals
        let n = sample.len() as f64;
        let mut w = 0.0;
        let mut v = [0.0f64; 2];
        for r in sample.records() {
            let a = r.treatment as f64;
            let diff = a - 0.4;
            if r.treatment == 1 {
                // ∫_0^{X} e^{bt} dt with S_c = 1
                w += a * diff * ((b * r.time).exp() - 1.0) / b;
            }
            if r.status > 0 {
                let e2 = (2.0 * b * a * r.time).exp();
                v[r.status - 1] += e2 * diff * diff;
            }
        }
        w /= n;
        v[0] /= n;
        v[1] /= n;
        for j in 0..2 {
            let want = v[j] / (w * w * n);
            assert!(
                (est.covariance[j][j] - want).abs() < 1e-12,
                "cause {j}: {} vs {want}",
                est.covariance[j][j]
            );
        }
    }

    #[test]
    fn score2_sandwich_matches_logistic_antiderivative() {
        let sample = five_subject_sample();
        let pi = 0.35f64;
        let nuisance = unit_nuisance(&sample, pi);
        let beta = [0.25, 0.1];
        let b: f64 = beta.iter().sum();
        let est = sandwich_score2(&sample, &nuisance, &beta).unwrap();

        // with S_c = 1 and constant pi:
        // ∫_0^X (1 - E) dt = X + (1/b) ln(pi e^{-bX} + 1 - pi)
        let n = sample.len() as f64;
        let mut w = 0.0;
        let mut v = [0.0f64; 2];
        let e_at = |t: f64| {
            let num = (-b * t).exp() * pi;
            num / (num + 1.0 - pi)
        };
        for r in sample.records() {
            if r.treatment == 1 {
                w += r.time + (1.0 / b) * (pi * (-b * r.time).exp() + 1.0 - pi).ln();
            }
            if r.status > 0 {
                let diff = r.treatment as f64 - e_at(r.time);
                v[r.status - 1] += diff * diff;
            }
        }
        w /= n;
        v[0] /= n;
        v[1] /= n;
        for j in 0..2 {
            let want = v[j] / (w * w * n);
            assert!(
                (est.covariance[j][j] - want).abs() < 1e-12,
                "cause {j}: {} vs {want}",
                est.covariance[j][j]
            );
        }
    }

    #[test]
    fn no_cause_events_gives_zero_se_with_warning() {
        let sample = CompetingRisksSample::with_options(
            vec![rec(0.4, 1, 1, 0.2), rec(0.8, 1, 0, -0.1), rec(1.2, 0, 1, 0.6)],
            vec!["z1".into()],
            2,
            None,
        )
        .unwrap();
        let nuisance = unit_nuisance(&sample, 0.4);
        let est = sandwich_score1(&sample, &nuisance, &[0.1, 0.1]).unwrap();
        assert_eq!(est.covariance[1][1], 0.0);
        assert!(est.warnings.iter().any(|w| w.contains("cause 2")));
    }

    #[test]
    fn all_controls_gives_non_invertible_w() {
        let sample = CompetingRisksSample::with_options(
            vec![rec(0.4, 1, 0, 0.2), rec(0.8, 2, 0, -0.1)],
            vec!["z1".into()],
            2,
            None,
        )
        .unwrap();
        let nuisance = unit_nuisance(&sample, 0.4);
        let err = sandwich_score2(&sample, &nuisance, &[0.1, 0.1]).unwrap_err();
        assert!(err.to_string().contains("non-invertible W"), "{err}");
        let err1 = sandwich_score1(&sample, &nuisance, &[0.1, 0.1]).unwrap_err();
        assert!(err1.to_string().contains("non-invertible W"), "{err1}");
    }

    #[test]
    fn bootstrap_is_deterministic() {
        let sample = crate::simulate::generate_scenario(
            &crate::simulate::ScenarioSpec { scenario: 1, n: 60, seed: 9 },
        )
        .unwrap()
        .0;
        let config = ScoreConfig::new(Method::Score1Simplified);
        let a = bootstrap(&sample, &config, 2, 7, None).unwrap();
        let b = bootstrap(&sample, &config, 2, 7, None).unwrap();
        assert_eq!(a.covariance, b.covariance);
        assert_eq!(a.replicates, Some(2));
        // a different seed moves the estimate
        let c = bootstrap(&sample, &config, 2, 8, None).unwrap();
        assert_ne!(a.covariance, c.covariance);
    }

    #[test]
    fn bootstrap_rejects_tiny_b() {
        let sample = five_subject_sample();
        let config = ScoreConfig::new(Method::Score1Simplified);
        assert!(bootstrap(&sample, &config, 1, 7, None).is_err());
    }
}
