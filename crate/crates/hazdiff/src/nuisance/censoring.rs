//! Censoring-distribution models.
//!
//! Three variants: `Unit` (no censoring adjustment, `S_c = 1`), a Cox
//! proportional hazards working model fitted on the flipped status (Cox 1972,
//! Breslow 1972 for ties and baseline), and externally supplied per-subject
//! survival step tables.
//!
//! The Cox fit treats censorings as events and events as censorings, with
//! design `d = (treatment, covariates...)`. The fitted survival is
//! `S_c(t | a, z) = exp(-Lambda_0(t) e^{eta' d})` with the Breslow cumulative
//! baseline jumping at censoring times. Inside score integrals the survival
//! is always evaluated at the left limit `S_c(t- | a, z)` so the implied
//! weight process stays predictable.

use crate::data::CompetingRisksSample;
use crate::error::{Error, Result};
use crate::numerics::solve;

/// Censoring model variants.
#[derive(Debug, Clone)]
pub enum CensoringModel {
    /// `S_c = 1`: the simplified scores.
    Unit,
    /// Cox working model with Breslow baseline.
    Cox(CoxCensoring),
    /// Externally fitted per-subject survival curves.
    External(ExternalCensoring),
}

impl CensoringModel {
    /// Left-limit survival `S_c(t- | a, z)` for internal models.
    ///
    /// `External` tables are keyed by subject, not by covariate value; use
    /// [`ExternalCensoring`] accessors for those.
    pub fn survival_left(&self, t: f64, treatment: u8, covariates: &[f64]) -> Result<f64> {
        match self {
            CensoringModel::Unit => Ok(1.0),
            CensoringModel::Cox(c) => Ok(c.survival_left(t, treatment, covariates)),
            CensoringModel::External(_) => Err(Error::input(
                "external censoring tables are per-subject; evaluate by row index",
            )),
        }
    }

    pub fn is_unit(&self) -> bool {
        matches!(self, CensoringModel::Unit)
    }
}

/// Fitted Cox censoring model.
#[derive(Debug, Clone)]
pub struct CoxCensoring {
    /// Coefficients over `d = (treatment, covariates...)`.
    pub coefficients: Vec<f64>,
    pub term_names: Vec<String>,
    /// Censoring times carrying Breslow baseline jumps, ascending.
    pub baseline_times: Vec<f64>,
    /// Baseline jump at each time.
    pub baseline_jumps: Vec<f64>,
    pub iterations: usize,
}

impl CoxCensoring {
    pub fn linear_predictor(&self, treatment: u8, covariates: &[f64]) -> f64 {
        let mut lp = self.coefficients[0] * treatment as f64;
        for (c, z) in self.coefficients[1..].iter().zip(covariates) {
            lp += c * z;
        }
        lp
    }

    /// `Lambda_c0(t-)`: cumulative baseline strictly before `t`.
    pub fn cumulative_before(&self, t: f64) -> f64 {
        let k = self.baseline_times.partition_point(|&u| u < t);
        self.baseline_jumps[..k].iter().sum()
    }

    /// `Lambda_c0(t)`: cumulative baseline through `t`.
    pub fn cumulative_at(&self, t: f64) -> f64 {
        let k = self.baseline_times.partition_point(|&u| u <= t);
        self.baseline_jumps[..k].iter().sum()
    }

    /// `S_c(t- | a, z)`.
    pub fn survival_left(&self, t: f64, treatment: u8, covariates: &[f64]) -> f64 {
        (-self.cumulative_before(t) * self.linear_predictor(treatment, covariates).exp()).exp()
    }
}

/// Fit the Cox censoring model by Newton iteration with step-halving on the
/// partial likelihood; Breslow handling of ties; initial `eta = 0`.
pub fn fit_censoring_cox(sample: &CompetingRisksSample) -> Result<CoxCensoring> {
    let n = sample.len();
    let censored = sample.records().iter().filter(|r| r.status == 0).count();
    if censored == 0 {
        return Err(Error::estimation(
            "no censoring events; use Unit censoring model",
        ));
    }
    let p = sample.covariate_dim();
    let dim = p + 1;

    // subjects sorted by descending time; ties keep record order
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        sample.records()[b]
            .time
            .total_cmp(&sample.records()[a].time)
            .then(a.cmp(&b))
    });
    let design: Vec<Vec<f64>> = sample
        .records()
        .iter()
        .map(|r| {
            let mut d = Vec::with_capacity(dim);
            d.push(r.treatment as f64);
            d.extend_from_slice(&r.covariates);
            d
        })
        .collect();

    // partial log-likelihood, score, information in one descending sweep
    let evaluate = |eta: &[f64], with_derivs: bool| -> (f64, Vec<f64>, Vec<f64>) {
        let mut ll = 0.0;
        let mut score = vec![0.0; dim];
        let mut info = vec![0.0; dim * dim];
        let mut s0 = 0.0;
        let mut s1 = vec![0.0; dim];
        let mut s2 = vec![0.0; dim * dim];
        let mut idx = 0;
        while idx < n {
            let t = sample.records()[order[idx]].time;
            // absorb everyone tied at this time into the risk set
            let start = idx;
            while idx < n && sample.records()[order[idx]].time == t {
                let i = order[idx];
                let d = &design[i];
                let lp: f64 = d.iter().zip(eta).map(|(x, e)| x * e).sum();
                let w = lp.exp();
                s0 += w;
                for a in 0..dim {
                    s1[a] += w * d[a];
                    if with_derivs {
                        for b in a..dim {
                            s2[a * dim + b] += w * d[a] * d[b];
                        }
                    }
                }
                idx += 1;
            }
            // censoring "events" at this time share the full risk set (Breslow)
            for &i in &order[start..idx] {
                if sample.records()[i].status != 0 {
                    continue;
                }
                let d = &design[i];
                let lp: f64 = d.iter().zip(eta).map(|(x, e)| x * e).sum();
                ll += lp - s0.ln();
                if with_derivs {
                    for a in 0..dim {
                        let ea = s1[a] / s0;
                        score[a] += d[a] - ea;
                        for b in a..dim {
                            info[a * dim + b] += s2[a * dim + b] / s0 - ea * s1[b] / s0;
                        }
                    }
                }
            }
        }
        for a in 0..dim {
            for b in 0..a {
                info[a * dim + b] = info[b * dim + a];
            }
        }
        (ll, score, info)
    };

    let mut eta = vec![0.0; dim];
    let (mut ll, mut score, mut info) = evaluate(&eta, true);
    let mut iterations = 0;
    loop {
        let max_score = score.iter().fold(0.0f64, |m, s| m.max(s.abs()));
        if max_score < 1e-10 {
            break;
        }
        if iterations >= 100 {
            return Err(Error::estimation(format!(
                "censoring Cox fit did not converge: score norm {max_score:.3e} after {iterations} iterations"
            )));
        }
        iterations += 1;
        let step = match solve(&info, &score, dim) {
            Some(s) => s,
            None => {
                // degenerate design with vanishing score is a valid fit
                if max_score < 1e-8 {
                    break;
                }
                return Err(Error::estimation(
                    "censoring Cox fit: singular information matrix",
                ));
            }
        };
        let mut scale = 1.0;
        let mut moved = false;
        for _ in 0..30 {
            let cand: Vec<f64> = eta.iter().zip(&step).map(|(e, s)| e + scale * s).collect();
            let (cand_ll, cand_score, cand_info) = evaluate(&cand, true);
            if cand_ll >= ll - 1e-12 {
                eta = cand;
                ll = cand_ll;
                score = cand_score;
                info = cand_info;
                moved = true;
                break;
            }
            scale *= 0.5;
        }
        if !moved {
            return Err(Error::estimation("censoring Cox fit: step halving failed"));
        }
    }

    // Breslow baseline at the fitted coefficients
    let mut baseline_times = Vec::new();
    let mut baseline_jumps = Vec::new();
    {
        let mut s0 = 0.0;
        let mut idx = 0;
        while idx < n {
            let t = sample.records()[order[idx]].time;
            let start = idx;
            while idx < n && sample.records()[order[idx]].time == t {
                let i = order[idx];
                let lp: f64 =
                    design[i].iter().zip(&eta).map(|(x, e)| x * e).sum();
                s0 += lp.exp();
                idx += 1;
            }
            let d_cens = order[start..idx]
                .iter()
                .filter(|&&i| sample.records()[i].status == 0)
                .count();
            if d_cens > 0 {
                baseline_times.push(t);
                baseline_jumps.push(d_cens as f64 / s0);
            }
        }
        baseline_times.reverse();
        baseline_jumps.reverse();
    }

    let mut term_names = vec!["treatment".to_string()];
    term_names.extend(sample.covariate_names().iter().cloned());
    Ok(CoxCensoring { coefficients: eta, term_names, baseline_times, baseline_jumps, iterations })
}

/// Right-continuous survival step function: value `values[k]` on
/// `[times[k], times[k+1])`, implicitly 1 before `times[0]`.
#[derive(Debug, Clone)]
pub struct StepFunction {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

impl StepFunction {
    /// Constant function 1.
    pub fn one() -> Self {
        Self { times: Vec::new(), values: Vec::new() }
    }

    pub fn validate(&self, tau: f64) -> Result<()> {
        if self.times.len() != self.values.len() {
            return Err(Error::input("step function times/values length mismatch"));
        }
        let mut prev_t = f64::NEG_INFINITY;
        let mut prev_v = 1.0;
        for (&t, &v) in self.times.iter().zip(&self.values) {
            if t < 0.0 || t <= prev_t {
                return Err(Error::input("step function times must be nonnegative and increasing"));
            }
            if !(v > 0.0 && v <= 1.0) {
                return Err(Error::input(format!(
                    "survival value {v} outside (0, 1]"
                )));
            }
            if v > prev_v + 1e-12 {
                return Err(Error::input("survival step function must be nonincreasing"));
            }
            if t == 0.0 && v != 1.0 {
                return Err(Error::input("survival must start at 1"));
            }
            prev_t = t;
            prev_v = v;
        }
        if self.value_left(tau) <= 0.0 || self.value_at(tau) <= 0.0 {
            return Err(Error::input("survival must stay positive through tau"));
        }
        Ok(())
    }

    /// Left-limit value `S(t-)`.
    pub fn value_left(&self, t: f64) -> f64 {
        let k = self.times.partition_point(|&u| u < t);
        if k == 0 {
            1.0
        } else {
            self.values[k - 1]
        }
    }

    /// Right-continuous value `S(t)`.
    pub fn value_at(&self, t: f64) -> f64 {
        let k = self.times.partition_point(|&u| u <= t);
        if k == 0 {
            1.0
        } else {
            self.values[k - 1]
        }
    }
}

/// Externally supplied per-subject survival tables. The `own` curve is
/// `S_c(t | A_i, Z_i)` at the observed arm; the optional counterfactual
/// curves (both arms per subject) unlock the Score-2 weighting, which needs
/// `S_c(t | a, Z_i)` for `a = 0` and `1`.
#[derive(Debug, Clone)]
pub struct ExternalCensoring {
    pub own: Vec<StepFunction>,
    pub arm0: Option<Vec<StepFunction>>,
    pub arm1: Option<Vec<StepFunction>>,
}

impl ExternalCensoring {
    pub fn validate(&self, n: usize, tau: f64) -> Result<()> {
        if self.own.len() != n {
            return Err(Error::input(format!(
                "external censoring: expected {n} subject curves, got {}",
                self.own.len()
            )));
        }
        for s in &self.own {
            s.validate(tau)?;
        }
        for arm in [&self.arm0, &self.arm1].into_iter().flatten() {
            if arm.len() != n {
                return Err(Error::input("external censoring: arm table length mismatch"));
            }
            for s in arm {
                s.validate(tau)?;
            }
        }
        Ok(())
    }

    pub fn has_both_arms(&self) -> bool {
        self.arm0.is_some() && self.arm1.is_some()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::SubjectRecord;

    fn rec(time: f64, status: usize, treatment: u8, z: f64) -> SubjectRecord {
        SubjectRecord { time, status, treatment, covariates: vec![z] }
    }

    #[test]
    fn zero_censorings_errors() {
        let s = CompetingRisksSample::new(
            vec![rec(1.0, 1, 0, 0.0), rec(2.0, 2, 1, 1.0)],
            vec!["z1".into()],
        )
        .unwrap();
        let err = fit_censoring_cox(&s).unwrap_err();
        assert!(err.to_string().contains("Unit censoring"), "{err}");
    }

    #[test]
    fn covariate_free_breslow() {
        // single censoring at t=2 with 5 subjects at risk, all-zero design:
        // eta = 0, baseline jump 1/5, S_c(2|.) computed at the left limit of
        // any later time is e^{-0.2}
        let s = CompetingRisksSample::new(
            vec![
                rec(2.0, 0, 0, 0.0),
                rec(2.5, 1, 0, 0.0),
                rec(3.0, 1, 0, 0.0),
                rec(3.5, 2, 0, 0.0),
                rec(4.0, 1, 0, 0.0),
            ],
            vec!["z1".into()],
        )
        .unwrap();
        let fit = fit_censoring_cox(&s).unwrap();
        assert!(fit.coefficients.iter().all(|c| c.abs() < 1e-12));
        assert_eq!(fit.baseline_times, vec![2.0]);
        assert!((fit.baseline_jumps[0] - 0.2).abs() < 1e-12);
        // left limit at 2 has no jump yet; just after 2 the jump applies
        assert!((fit.survival_left(2.0, 0, &[0.0]) - 1.0).abs() < 1e-12);
        assert!((fit.survival_left(2.0 + 1e-9, 0, &[0.0]) - (-0.2f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn binary_design_matches_brute_force_partial_likelihood() {
        // 8 subjects, scalar binary design through the treatment column
        let s = CompetingRisksSample::new(
            vec![
                rec(0.5, 0, 1, 0.0),
                rec(1.0, 1, 0, 0.0),
                rec(1.5, 0, 0, 0.0),
                rec(2.0, 1, 1, 0.0),
                rec(2.5, 0, 1, 0.0),
                rec(3.0, 1, 0, 0.0),
                rec(3.5, 0, 0, 0.0),
                rec(4.0, 1, 1, 0.0),
            ],
            vec!["z1".into()],
        )
        .unwrap();
        // covariate z1 is constant, so only the treatment coefficient moves;
        // brute-force the profile over eta_0 by golden-section
        let pl = |e0: f64| -> f64 {
            let recs = s.records();
            let mut ll = 0.0;
            for r in recs.iter().filter(|r| r.status == 0) {
                let denom: f64 = recs
                    .iter()
                    .filter(|q| q.time >= r.time)
                    .map(|q| (e0 * q.treatment as f64).exp())
                    .sum();
                ll += e0 * r.treatment as f64 - denom.ln();
            }
            ll
        };
        let (mut lo, mut hi) = (-5.0f64, 5.0f64);
        let phi = (5.0f64.sqrt() - 1.0) / 2.0;
        for _ in 0..80 {
            let m1 = hi - phi * (hi - lo);
            let m2 = lo + phi * (hi - lo);
            if pl(m1) < pl(m2) {
                lo = m1;
            } else {
                hi = m2;
            }
        }
        let oracle = 0.5 * (lo + hi);

        let fit = fit_censoring_cox(&s).unwrap();
        assert!(
            (fit.coefficients[0] - oracle).abs() < 1e-6,
            "{} vs {oracle}",
            fit.coefficients[0]
        );

        // Breslow sums recomputed by hand at the fitted eta
        let eta = fit.coefficients[0];
        for (t, jump) in fit.baseline_times.iter().zip(&fit.baseline_jumps) {
            let denom: f64 = s
                .records()
                .iter()
                .filter(|q| q.time >= *t)
                .map(|q| (eta * q.treatment as f64).exp())
                .sum();
            assert!((jump - 1.0 / denom).abs() < 1e-10);
        }
    }

    #[test]
    fn partial_likelihood_score_vanishes_at_fit() {
        let mut rng = crate::rng::stream(17, 0);
        let mut records = Vec::new();
        for _ in 0..60 {
            let z = crate::rng::uniform01(&mut rng);
            let a = (crate::rng::uniform01(&mut rng) < 0.5) as u8;
            let t = crate::rng::exponential(&mut rng, 1.0 + z);
            let status = if crate::rng::uniform01(&mut rng) < 0.4 { 0 } else { 1 };
            records.push(rec(t, status, a, z));
        }
        let s = CompetingRisksSample::new(records, vec!["z1".into()]).unwrap();
        let fit = fit_censoring_cox(&s).unwrap();
        // score by direct double loop
        let mut score = vec![0.0; 2];
        for r in s.records().iter().filter(|r| r.status == 0) {
            let (mut s0, mut s1) = (0.0, vec![0.0; 2]);
            for q in s.records().iter().filter(|q| q.time >= r.time) {
                let d = [q.treatment as f64, q.covariates[0]];
                let w = (fit.coefficients[0] * d[0] + fit.coefficients[1] * d[1]).exp();
                s0 += w;
                s1[0] += w * d[0];
                s1[1] += w * d[1];
            }
            score[0] += r.treatment as f64 - s1[0] / s0;
            score[1] += r.covariates[0] - s1[1] / s0;
        }
        assert!(score.iter().all(|v| v.abs() < 1e-8), "{score:?}");
    }

    #[test]
    fn step_function_left_limits() {
        let f = StepFunction { times: vec![1.0, 2.0], values: vec![0.8, 0.5] };
        f.validate(3.0).unwrap();
        assert_eq!(f.value_left(0.5), 1.0);
        assert_eq!(f.value_left(1.0), 1.0);
        assert_eq!(f.value_left(1.5), 0.8);
        assert_eq!(f.value_left(2.0), 0.8);
        assert_eq!(f.value_left(2.5), 0.5);
        assert_eq!(f.value_at(2.0), 0.5);
    }

    #[test]
    fn step_function_validation() {
        let bad = StepFunction { times: vec![1.0, 2.0], values: vec![0.5, 0.8] };
        assert!(bad.validate(3.0).is_err());
        let zero = StepFunction { times: vec![1.0], values: vec![0.0] };
        assert!(zero.validate(3.0).is_err());
    }
}
