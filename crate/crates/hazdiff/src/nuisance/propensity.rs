//! Propensity-score fitting: logistic regression by Newton/IRLS with an
//! always-included intercept and optional declared pairwise interactions.

use crate::data::CompetingRisksSample;
use crate::error::{Error, Result};
use crate::numerics::{expit, solve};

use super::ResolvedDesign;

/// Fitted logistic propensity model `pi(z) = expit(alpha' x(z))` where the
/// design row `x(z)` is intercept + main effects + declared interactions.
#[derive(Debug, Clone)]
pub struct LogisticPropensity {
    /// Coefficients aligned with `terms`.
    pub coefficients: Vec<f64>,
    /// Term names: `intercept`, covariate names, `a:b` interactions.
    pub terms: Vec<String>,
    pub(crate) design: ResolvedDesign,
    pub iterations: usize,
}

impl LogisticPropensity {
    /// Fitted probability for a covariate vector.
    pub fn predict(&self, covariates: &[f64]) -> f64 {
        let row = self.design.row(covariates);
        let lp: f64 = row.iter().zip(&self.coefficients).map(|(x, c)| x * c).sum();
        expit(lp)
    }

    /// Fitted probabilities for every record of a sample.
    pub fn values(&self, sample: &CompetingRisksSample) -> Vec<f64> {
        sample.records().iter().map(|r| self.predict(&r.covariates)).collect()
    }
}

/// Maximize the binomial likelihood by damped Newton (IRLS).
///
/// Converges when the largest score component drops below 1e-10 or the
/// relative log-likelihood change falls below 1e-12; at most 100 iterations.
pub fn fit_propensity_logistic(
    sample: &CompetingRisksSample,
    design: ResolvedDesign,
) -> Result<LogisticPropensity> {
    let n = sample.len();
    let treated = sample.treated_count();
    if treated == 0 || treated == n {
        return Err(Error::estimation("one-arm sample: both treatment arms must be nonempty"));
    }

    let dim = design.dim();
    let rows: Vec<Vec<f64>> =
        sample.records().iter().map(|r| design.row(&r.covariates)).collect();
    let y: Vec<f64> = sample.records().iter().map(|r| r.treatment as f64).collect();

    let loglik = |beta: &[f64]| -> f64 {
        let mut ll = 0.0;
        for (row, &yi) in rows.iter().zip(&y) {
            let lp: f64 = row.iter().zip(beta).map(|(x, b)| x * b).sum();
            // log(1 + e^lp) computed stably
            let log1pe = if lp > 0.0 { lp + (-lp).exp().ln_1p() } else { lp.exp().ln_1p() };
            ll += yi * lp - log1pe;
        }
        ll
    };

    let mut beta = vec![0.0; dim];
    let mut ll = loglik(&beta);
    let mut iterations = 0;
    for iter in 0..100 {
        iterations = iter + 1;
        // score and observed information
        let mut score = vec![0.0; dim];
        let mut info = vec![0.0; dim * dim];
        for (row, &yi) in rows.iter().zip(&y) {
            let lp: f64 = row.iter().zip(&beta).map(|(x, b)| x * b).sum();
            let mu = expit(lp);
            let w = mu * (1.0 - mu);
            let resid = yi - mu;
            for a in 0..dim {
                score[a] += row[a] * resid;
                for b in a..dim {
                    info[a * dim + b] += w * row[a] * row[b];
                }
            }
        }
        for a in 0..dim {
            for b in 0..a {
                info[a * dim + b] = info[b * dim + a];
            }
        }

        let max_score = score.iter().fold(0.0f64, |m, s| m.max(s.abs()));
        let coef_norm = beta.iter().fold(0.0f64, |m, b| m.max(b.abs()));
        if coef_norm > 1e3 && max_score > 1e-6 {
            return Err(Error::estimation("propensity separation: coefficients diverge"));
        }
        if max_score < 1e-10 {
            // a score that only vanishes through saturated probabilities is
            // the floating-point face of separation: the likelihood is
            // monotone and the maximizer sits at infinity
            let max_lp = rows
                .iter()
                .map(|row| row.iter().zip(&beta).map(|(x, b)| x * b).sum::<f64>().abs())
                .fold(0.0f64, f64::max);
            if max_lp > 30.0 {
                return Err(Error::estimation(
                    "propensity separation: fitted probabilities saturate at 0/1",
                ));
            }
            return Ok(LogisticPropensity {
                coefficients: beta,
                terms: design.terms.clone(),
                design,
                iterations,
            });
        }

        let step = solve(&info, &score, dim).ok_or_else(|| {
            Error::estimation("propensity fit: singular information matrix")
        })?;

        // step-halving on likelihood decrease
        let mut scale = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let cand: Vec<f64> =
                beta.iter().zip(&step).map(|(b, s)| b + scale * s).collect();
            let cand_ll = loglik(&cand);
            if cand_ll >= ll - 1e-12 {
                let rel_change = (cand_ll - ll).abs() / (1.0 + ll.abs());
                beta = cand;
                let converged = rel_change < 1e-12;
                ll = cand_ll;
                accepted = true;
                if converged {
                    return Ok(LogisticPropensity {
                        coefficients: beta,
                        terms: design.terms.clone(),
                        design,
                        iterations,
                    });
                }
                break;
            }
            scale *= 0.5;
        }
        if !accepted {
            return Err(Error::estimation("propensity fit: step halving failed"));
        }
    }
    Err(Error::estimation(format!(
        "propensity fit did not converge in {iterations} iterations"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::SubjectRecord;
    use crate::nuisance::CovariateSpec;

    fn sample_from(a: &[u8], z: &[f64]) -> CompetingRisksSample {
        let records: Vec<SubjectRecord> = a
            .iter()
            .zip(z)
            .map(|(&a, &z)| SubjectRecord {
                time: 1.0,
                status: 1,
                treatment: a,
                covariates: vec![z],
            })
            .collect();
        CompetingRisksSample::new(records, vec!["z1".into()]).unwrap()
    }

    #[test]
    fn intercept_only_matches_logit_of_rate() {
        // 40 treated of 100 -> intercept = logit(0.4)
        let a: Vec<u8> = (0..100).map(|i| (i < 40) as u8).collect();
        let z = vec![0.0; 100];
        let s = sample_from(&a, &z);
        let design = CovariateSpec::intercept_only().resolve(&s).unwrap();
        let fit = fit_propensity_logistic(&s, design).unwrap();
        assert!((fit.coefficients[0] - (0.4f64 / 0.6).ln()).abs() < 1e-8);
        assert!((fit.predict(&[0.0]) - 0.4).abs() < 1e-10);
    }

    #[test]
    fn one_arm_sample_errors() {
        let a = vec![1u8; 10];
        let z: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let s = sample_from(&a, &z);
        let design = CovariateSpec::all().resolve(&s).unwrap();
        let err = fit_propensity_logistic(&s, design).unwrap_err();
        assert!(err.to_string().contains("one-arm"), "{err}");
    }

    #[test]
    fn six_record_fit_matches_grid_refinement_oracle() {
        // brute-force maximization of the log-likelihood over (intercept,
        // slope); arms overlap so the maximizer is interior
        let a = [0u8, 1, 0, 1, 1, 0];
        let z = [-1.0, 0.5, 0.8, 1.5, -0.2, 0.9];
        let s = sample_from(&a, &z);
        let design = CovariateSpec::all().resolve(&s).unwrap();
        let fit = fit_propensity_logistic(&s, design).unwrap();

        let ll = |b0: f64, b1: f64| -> f64 {
            a.iter().zip(&z).fold(0.0, |acc, (&ai, &zi)| {
                let lp = b0 + b1 * zi;
                let log1pe = if lp > 0.0 { lp + (-lp).exp().ln_1p() } else { lp.exp().ln_1p() };
                acc + ai as f64 * lp - log1pe
            })
        };
        // multi-resolution grid search: shrink a 41x41 grid around the best
        // point eight times
        let (mut c0, mut c1, mut half) = (0.0f64, 0.0f64, 8.0f64);
        for _ in 0..8 {
            let mut best = (f64::NEG_INFINITY, c0, c1);
            for i in 0..=40 {
                for j in 0..=40 {
                    let b0 = c0 - half + 2.0 * half * i as f64 / 40.0;
                    let b1 = c1 - half + 2.0 * half * j as f64 / 40.0;
                    let v = ll(b0, b1);
                    if v > best.0 {
                        best = (v, b0, b1);
                    }
                }
            }
            c0 = best.1;
            c1 = best.2;
            half /= 10.0;
        }
        assert!((fit.coefficients[0] - c0).abs() < 1e-6, "{} vs {c0}", fit.coefficients[0]);
        assert!((fit.coefficients[1] - c1).abs() < 1e-6, "{} vs {c1}", fit.coefficients[1]);
    }

    #[test]
    fn score_balance_at_mle() {
        // fitted score residual sums to zero for every design column
        let mut rng = crate::rng::stream(5, 0);
        let n = 200;
        let mut records = Vec::new();
        for _ in 0..n {
            let z1 = crate::rng::uniform01(&mut rng);
            let z2 = crate::rng::uniform01(&mut rng);
            let p = crate::numerics::expit(0.3 * z1 - 0.8 * z2 + 0.2);
            let a = (crate::rng::uniform01(&mut rng) < p) as u8;
            records.push(SubjectRecord {
                time: 1.0,
                status: 1,
                treatment: a,
                covariates: vec![z1, z2],
            });
        }
        let s =
            CompetingRisksSample::new(records, vec!["z1".into(), "z2".into()]).unwrap();
        let design = CovariateSpec::parse("z1,z2,z1:z2").unwrap().resolve(&s).unwrap();
        let fit = fit_propensity_logistic(&s, design.clone()).unwrap();
        let mut resid = vec![0.0; design.dim()];
        for r in s.records() {
            let row = design.row(&r.covariates);
            let d = r.treatment as f64 - fit.predict(&r.covariates);
            for (acc, x) in resid.iter_mut().zip(&row) {
                *acc += x * d;
            }
        }
        for v in resid {
            assert!(v.abs() < 1e-8, "residual {v}");
        }
    }

    #[test]
    fn separation_detected() {
        // perfectly separated data
        let a = [0u8, 0, 0, 1, 1, 1];
        let z = [-3.0, -2.0, -1.0, 1.0, 2.0, 3.0];
        let s = sample_from(&a, &z);
        let design = CovariateSpec::all().resolve(&s).unwrap();
        let err = fit_propensity_logistic(&s, design).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("separation") || msg.contains("converge"), "{msg}");
    }
}
