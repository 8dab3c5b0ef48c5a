//! Scenario generation, Monte Carlo replication, and the efficient-score
//! oracle.
//!
//! Eight data-generating mechanisms cover independent censoring (1-4) and
//! dependent censoring (5-8), with both causes sharing the same law and true
//! hazard difference 0.1 per cause:
//!
//! | id | covariates            | logit pi(Z)                    | lambda(Z)                  | censoring                      |
//! |----|-----------------------|--------------------------------|----------------------------|--------------------------------|
//! | 1  | Z1,Z2 ~ U(0,0.5)      | Z1 - Z2                        | 1 + Z1 + Z2                | U(0,3)                         |
//! | 2  | Z1,Z2 ~ U(0,0.5)      | 0.25(Z1-Z2) - 0.5 Z1 Z2        | 0.3 + Z1 + Z2              | U(0,3)                         |
//! | 3  | Z1~N(0,1),Z2~N(Z1,1)  | 0.25(Z1-Z2) + 0.5 Z1 Z2 - 1    | 0.3 + |Z1| + ln(1+|Z2|)    | U(0,3)                         |
//! | 4  | Z1~N(0,1),Z2~N(Z1,1)  | 0.25(Z1-Z2) + 0.5 Z1 Z2 - 1    | exp(Z1 + Z2)               | U(0,3)                         |
//! | 5  | Z1,Z2 ~ U(0,0.5)      | Z1 - Z2                        | 1 + Z1 + Z2                | Exp(exp(-1 + A + Z1 + Z2))     |
//! | 6  | Z1,Z2 ~ U(0,0.5)      | 0.25(Z1-Z2) - 0.5 Z1 Z2        | 0.3 + Z1 + Z2              | Exp(exp(-1 + A + Z1 + Z2))     |
//! | 7  | Z1,Z2 ~ U(0,0.5)      | 0.25(Z1-Z2) - 0.5 Z1 Z2        | 0.3 + Z1 + Z2              | hazard max(0, 2t + A - Z1 - Z2)|
//! | 8  | Z1~N(0,1),Z2~N(Z1,1)  | 0.25(Z1-Z2) + 0.5 Z1 Z2 - 1    | 0.3 + |Z1| + ln(1+|Z2|)    | Exp(exp(-A + Z1 - Z2))         |
//!
//! Cause-specific hazards are `h_j = 0.1 A + lambda(Z)` for both causes, so
//! the total event time is exponential given `(A, Z)` and the cause is a
//! coin flip with probability `h_1 / (h_1 + h_2)`. Scenario 7's censoring
//! hazard is clamped at zero before inverse-transform sampling, giving the
//! piecewise-quadratic cumulative hazard a closed-form inverse.
//!
//! Determinism: replicate `r` of a run seeded with `seed` generates from
//! `stream(stream_seed(seed, r), 0)` and hands `stream_seed(stream_seed(seed, r), 1)`
//! to any bootstrap, so per-replicate results are independent of worker
//! scheduling and of the method list order.

use rayon::prelude::*;
use serde::Serialize;

use crate::data::{CompetingRisksSample, SubjectRecord};
use crate::error::{Error, Result};
use crate::numerics::{expit, gl16};
use crate::rng;
use crate::scores::{fit, Method, ScoreConfig};

/// One of the eight data-generating mechanisms plus a sample size and seed.
#[derive(Debug, Clone, Serialize)]
pub struct ScenarioSpec {
    pub scenario: u8,
    pub n: usize,
    pub seed: u64,
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<()> {
        if !(1..=8).contains(&self.scenario) {
            return Err(Error::input(format!(
                "scenario {} is not valid; expected 1-8",
                self.scenario
            )));
        }
        if self.n < 10 {
            return Err(Error::input("scenario sample size must be at least 10"));
        }
        Ok(())
    }

    /// The estimator configuration the scenario's fitted-model column calls
    /// for: interacted propensity design in scenarios 3, 4, 8; Cox censoring
    /// for the non-simplified scores; Unit censoring otherwise.
    pub fn default_config(&self, method: Method) -> ScoreConfig {
        let mut config = ScoreConfig::new(method);
        if matches!(self.scenario, 3 | 4 | 8) {
            config.nuisance.propensity_spec =
                crate::nuisance::CovariateSpec::parse("z1,z2,z1:z2").expect("static spec");
        }
        config
    }
}

/// True data-generating quantities, for oracle evaluation at simulation time.
#[derive(Debug, Clone)]
pub struct TruthSet {
    /// True hazard differences, one per cause.
    pub beta0: Vec<f64>,
    pub scenario: u8,
}

impl TruthSet {
    /// Baseline covariate effect `lambda(z)`, shared by both causes.
    pub fn lambda(&self, z: &[f64]) -> f64 {
        scenario_lambda(self.scenario, z)
    }

    /// True propensity.
    pub fn pi0(&self, z: &[f64]) -> f64 {
        expit(scenario_logit_pi(self.scenario, z))
    }

    /// True censoring survival `S_c(t | a, z)`.
    pub fn censoring_survival(&self, t: f64, a: u8, z: &[f64]) -> f64 {
        match self.scenario {
            1..=4 => (1.0 - t / 3.0).max(0.0),
            5 | 6 => (-t * (-1.0 + a as f64 + z[0] + z[1]).exp()).exp(),
            7 => (-censoring_cumhaz_s7(t, a, z)).exp(),
            8 => (-t * (-(a as f64) + z[0] - z[1]).exp()).exp(),
            _ => unreachable!(),
        }
    }
}

fn scenario_lambda(id: u8, z: &[f64]) -> f64 {
    match id {
        1 | 5 => 1.0 + z[0] + z[1],
        2 | 6 | 7 => 0.3 + z[0] + z[1],
        3 | 8 => 0.3 + z[0].abs() + (1.0 + z[1].abs()).ln(),
        4 => (z[0] + z[1]).exp(),
        _ => unreachable!(),
    }
}

fn scenario_logit_pi(id: u8, z: &[f64]) -> f64 {
    match id {
        1 | 5 => z[0] - z[1],
        2 | 6 | 7 => 0.25 * (z[0] - z[1]) - 0.5 * z[0] * z[1],
        3 | 4 | 8 => 0.25 * (z[0] - z[1]) + 0.5 * z[0] * z[1] - 1.0,
        _ => unreachable!(),
    }
}

/// Cumulative censoring hazard of Scenario 7 with the hazard clamped at 0:
/// with `c = a - z1 - z2`, the hazard `max(0, 2t + c)` integrates to
/// `t^2 + c t` when `c >= 0` and to `(t + c/2)^2` past `t0 = -c/2` otherwise.
fn censoring_cumhaz_s7(t: f64, a: u8, z: &[f64]) -> f64 {
    let c = a as f64 - z[0] - z[1];
    if c >= 0.0 {
        t * t + c * t
    } else {
        let t0 = -c / 2.0;
        if t <= t0 {
            0.0
        } else {
            let u = t + c / 2.0;
            u * u
        }
    }
}

fn draw_censoring<R: rand_core::RngCore>(id: u8, a: u8, z: &[f64], rng: &mut R) -> f64 {
    match id {
        1..=4 => 3.0 * rng::uniform01(rng),
        5 | 6 => rng::exponential(rng, (-1.0 + a as f64 + z[0] + z[1]).exp()),
        7 => {
            // inverse transform of the piecewise-quadratic cumulative hazard
            let e = -rng::uniform01(rng).ln();
            let c = a as f64 - z[0] - z[1];
            if c >= 0.0 {
                (-c + (c * c + 4.0 * e).sqrt()) / 2.0
            } else {
                -c / 2.0 + e.sqrt()
            }
        }
        8 => rng::exponential(rng, (-(a as f64) + z[0] - z[1]).exp()),
        _ => unreachable!(),
    }
}

fn draw_covariates<R: rand_core::RngCore>(id: u8, rng: &mut R) -> [f64; 2] {
    match id {
        1 | 2 | 5 | 6 | 7 => {
            let z1 = 0.5 * rng::uniform01(rng);
            let z2 = 0.5 * rng::uniform01(rng);
            [z1, z2]
        }
        3 | 4 | 8 => {
            let z1 = rng::standard_normal(rng);
            let z2 = z1 + rng::standard_normal(rng);
            [z1, z2]
        }
        _ => unreachable!(),
    }
}

/// Draw one subject given covariates and treatment: total event time is
/// exponential with rate `h_1 + h_2`, the cause a Bernoulli split.
pub(crate) fn draw_event<R: rand_core::RngCore>(
    id: u8,
    a: u8,
    z: &[f64],
    rng: &mut R,
) -> (f64, usize) {
    let lambda = scenario_lambda(id, z);
    let h1 = 0.1 * a as f64 + lambda;
    let h2 = 0.1 * a as f64 + lambda;
    let total = h1 + h2;
    let t = rng::exponential(rng, total);
    let cause = if rng::uniform01(rng) < h1 / total { 1 } else { 2 };
    (t, cause)
}

fn generate_with_rng<R: rand_core::RngCore>(
    spec: &ScenarioSpec,
    rng: &mut R,
) -> Result<(CompetingRisksSample, TruthSet)> {
    spec.validate()?;
    let id = spec.scenario;
    let mut records = Vec::with_capacity(spec.n);
    for _ in 0..spec.n {
        let z = draw_covariates(id, rng);
        let pi = expit(scenario_logit_pi(id, &z));
        let a = (rng::uniform01(rng) < pi) as u8;
        let (t, cause) = draw_event(id, a, &z, rng);
        let c = draw_censoring(id, a, &z, rng);
        let (time, status) = if t <= c { (t, cause) } else { (c, 0) };
        records.push(SubjectRecord {
            time,
            status,
            treatment: a,
            covariates: vec![z[0], z[1]],
        });
    }
    let sample = CompetingRisksSample::with_options(
        records,
        vec!["z1".into(), "z2".into()],
        2,
        None,
    )?;
    Ok((sample, TruthSet { beta0: vec![0.1, 0.1], scenario: id }))
}

/// Generate one sample from a scenario; fully determined by the spec.
pub fn generate_scenario(spec: &ScenarioSpec) -> Result<(CompetingRisksSample, TruthSet)> {
    let mut rng = rng::stream(spec.seed, 0);
    generate_with_rng(spec, &mut rng)
}

/// Per-component Monte Carlo statistics for one method.
#[derive(Debug, Clone, Serialize)]
pub struct ComponentStats {
    pub bias: f64,
    /// `None` when fewer than two replicates succeeded.
    pub sd: Option<f64>,
    pub mean_se: f64,
    pub median_se: f64,
    pub coverage: f64,
}

/// One method's Monte Carlo record.
#[derive(Debug, Clone, Serialize)]
pub struct MethodSummary {
    pub name: String,
    pub components: Vec<ComponentStats>,
    pub reps_used: usize,
    pub failures: usize,
    /// Replicate estimates (successful replicates only), per component.
    #[serde(skip)]
    pub replicate_beta: Vec<Vec<f64>>,
}

/// Bias / SD / SE / coverage per method and component.
#[derive(Debug, Clone, Serialize)]
pub struct MonteCarloSummary {
    pub scenario: u8,
    pub n: usize,
    pub reps: usize,
    pub seed: u64,
    pub truth: Vec<f64>,
    pub methods: Vec<MethodSummary>,
}

/// A named estimator configuration for the Monte Carlo driver.
#[derive(Debug, Clone)]
pub struct MethodSpec {
    pub name: String,
    pub config: ScoreConfig,
}

impl MethodSpec {
    pub fn new(name: impl Into<String>, config: ScoreConfig) -> Self {
        Self { name: name.into(), config }
    }
}

fn median(values: &mut [f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.sort_by(f64::total_cmp);
    let m = values.len();
    if m % 2 == 1 {
        values[m / 2]
    } else {
        0.5 * (values[m / 2 - 1] + values[m / 2])
    }
}

/// Run `reps` replicates of a scenario, fitting every method on each sample.
///
/// Replicate-level failures are recorded per method, not fatal. The
/// bootstrap seed of replicate `r` is derived from `(seed, r)` only, so the
/// summaries do not depend on the order of the method list.
pub fn run_monte_carlo(
    spec: &ScenarioSpec,
    methods: &[MethodSpec],
    reps: usize,
    seed: u64,
) -> Result<MonteCarloSummary> {
    spec.validate()?;
    if reps == 0 {
        return Err(Error::input("reps must be at least 1"));
    }
    if methods.is_empty() {
        return Err(Error::input("no methods requested"));
    }

    type RepRecord = Vec<Option<(Vec<f64>, Vec<f64>, Vec<bool>)>>;
    let truth = vec![0.1, 0.1];
    let per_rep: Vec<RepRecord> = (0..reps)
        .into_par_iter()
        .map(|rep| {
            let rep_seed = rng::stream_seed(seed, rep as u64);
            let mut gen_rng = rng::stream(rep_seed, 0);
            let boot_seed = rng::stream_seed(rep_seed, 1);
            let sample = match generate_with_rng(spec, &mut gen_rng) {
                Ok((s, _)) => s,
                Err(_) => return vec![None; methods.len()],
            };
            methods
                .iter()
                .map(|m| {
                    let mut config = m.config.clone();
                    config.seed = boot_seed;
                    fit(&sample, &config, None).ok().map(|est| {
                        let covers: Vec<bool> = est
                            .ci95
                            .iter()
                            .zip(&truth)
                            .map(|(ci, t)| ci[0] <= *t && *t <= ci[1])
                            .collect();
                        (est.beta, est.se, covers)
                    })
                })
                .collect()
        })
        .collect();

    let j_count = 2;
    let mut summaries = Vec::with_capacity(methods.len());
    for (mi, m) in methods.iter().enumerate() {
        let ok: Vec<&(Vec<f64>, Vec<f64>, Vec<bool>)> =
            per_rep.iter().filter_map(|r| r[mi].as_ref()).collect();
        let used = ok.len();
        let failures = reps - used;
        let mut components = Vec::with_capacity(j_count);
        for j in 0..j_count {
            let betas: Vec<f64> = ok.iter().map(|r| r.0[j]).collect();
            let mean = betas.iter().sum::<f64>() / used.max(1) as f64;
            let sd = if used >= 2 {
                let var =
                    betas.iter().map(|b| (b - mean).powi(2)).sum::<f64>() / (used - 1) as f64;
                Some(var.sqrt())
            } else {
                None
            };
            let ses: Vec<f64> = ok.iter().map(|r| r.1[j]).collect();
            let mean_se = ses.iter().sum::<f64>() / used.max(1) as f64;
            let mut ses_sorted = ses.clone();
            let median_se = median(&mut ses_sorted);
            let covered = ok.iter().filter(|r| r.2[j]).count();
            components.push(ComponentStats {
                bias: mean - truth[j],
                sd,
                mean_se,
                median_se,
                coverage: covered as f64 / used.max(1) as f64,
            });
        }
        summaries.push(MethodSummary {
            name: m.name.clone(),
            components,
            reps_used: used,
            failures,
            replicate_beta: ok.iter().map(|r| r.0.clone()).collect(),
        });
    }
    Ok(MonteCarloSummary {
        scenario: spec.scenario,
        n: spec.n,
        reps,
        seed,
        truth,
        methods: summaries,
    })
}

/// Output format for [`summarize_to_table`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableFormat {
    Text,
    Csv,
}

/// Render a Monte Carlo summary: a paper-style text table with
/// Bias / SD / SE / CP columns (3-decimal statistics, 2-decimal coverage), or
/// full-precision CSV carrying both mean and median standard errors.
pub fn summarize_to_table(summary: &MonteCarloSummary, format: TableFormat) -> String {
    match format {
        TableFormat::Text => {
            let mut out = format!(
                "Scenario {} (n = {}, reps = {}, true beta = {})\n",
                summary.scenario, summary.n, summary.reps, summary.truth[0]
            );
            out.push_str(&format!(
                "{:<12} {:<10} {:>8} {:>8} {:>8} {:>6}\n",
                "method", "component", "Bias", "SD", "SE", "CP"
            ));
            for m in &summary.methods {
                for (j, c) in m.components.iter().enumerate() {
                    let sd = match c.sd {
                        Some(v) => format!("{v:8.3}"),
                        None => format!("{:>8}", "NA"),
                    };
                    out.push_str(&format!(
                        "{:<12} {:<10} {:>8.3} {} {:>8.3} {:>6.2}\n",
                        m.name,
                        format!("beta{}", j + 1),
                        c.bias,
                        sd,
                        c.mean_se,
                        c.coverage
                    ));
                }
            }
            out
        }
        TableFormat::Csv => {
            let mut out = String::from(
                "scenario,method,component,bias,sd,mean_se,median_se,coverage,reps_used,failures\n",
            );
            for m in &summary.methods {
                for (j, c) in m.components.iter().enumerate() {
                    let sd = c.sd.map(|v| format!("{v:e}")).unwrap_or_else(|| "NA".into());
                    out.push_str(&format!(
                        "{},{},beta{},{:e},{},{:e},{:e},{:e},{},{}\n",
                        summary.scenario,
                        m.name,
                        j + 1,
                        c.bias,
                        sd,
                        c.mean_se,
                        c.median_se,
                        c.coverage,
                        m.reps_used,
                        m.failures
                    ));
                }
            }
            out
        }
    }
}

/// Parse the CSV rendering back into `(method, component, stats)` rows.
pub fn parse_summary_csv(text: &str) -> Result<Vec<(String, usize, ComponentStats)>> {
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 10 {
            return Err(Error::input(format!("summary CSV line {} malformed", i + 1)));
        }
        let parse = |s: &str| -> Result<f64> {
            s.parse::<f64>().map_err(|_| Error::input(format!("bad number `{s}`")))
        };
        let component: usize = fields[2]
            .strip_prefix("beta")
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::input("bad component"))?;
        rows.push((
            fields[1].to_string(),
            component,
            ComponentStats {
                bias: parse(fields[3])?,
                sd: if fields[4] == "NA" { None } else { Some(parse(fields[4])?) },
                mean_se: parse(fields[5])?,
                median_se: parse(fields[6])?,
                coverage: parse(fields[7])?,
            },
        ));
    }
    Ok(rows)
}

/// The efficient score evaluated at known true nuisances; a simulation-time
/// oracle. With all scenario hazards constant in `t` given `(A, Z)`, the
/// conditional expectations over `A | Z` reduce to two-point sums, so
///
/// `m_j(t, z) = pi (beta_j + lambda)^{-1} S_c(t|1,z) e^{-bt} /
///   [ pi (beta_j + lambda)^{-1} S_c(t|1,z) e^{-bt} + (1-pi) lambda^{-1} S_c(t|0,z) ]`
///
/// and per subject
/// `S_eff,j = 1{status=j} (A - m_j(X,Z)) / h_j(X|A,Z) - ∫_0^X (A - m_j(t,Z)) dt`.
/// The returned vector is the sample mean.
pub fn oracle_efficient_score(
    sample: &CompetingRisksSample,
    truth: &TruthSet,
    beta: &[f64],
) -> Result<Vec<f64>> {
    efficient_score_impl(sample, truth, beta, true)
}

/// The Remark-style simplified form under `C` independent of `(T, A)` given
/// `Z`: the censoring survival cancels from the two-point ratio.
pub fn oracle_efficient_score_independent(
    sample: &CompetingRisksSample,
    truth: &TruthSet,
    beta: &[f64],
) -> Result<Vec<f64>> {
    efficient_score_impl(sample, truth, beta, false)
}

fn efficient_score_impl(
    sample: &CompetingRisksSample,
    truth: &TruthSet,
    beta: &[f64],
    with_censoring: bool,
) -> Result<Vec<f64>> {
    let j_count = sample.cause_count();
    if beta.len() != j_count {
        return Err(Error::input("beta length must match the cause count"));
    }
    let b: f64 = beta.iter().sum();
    let (nodes, weights) = gl16();
    let subintervals = 8;

    let mut total = vec![0.0; j_count];
    for r in sample.records() {
        let z = &r.covariates;
        let lambda = truth.lambda(z);
        let pi = truth.pi0(z);
        let a = r.treatment as f64;
        let m_j = |j: usize, t: f64| -> f64 {
            let (s1, s0) = if with_censoring {
                (truth.censoring_survival(t, 1, z), truth.censoring_survival(t, 0, z))
            } else {
                (1.0, 1.0)
            };
            let num = pi * s1 * (-b * t).exp() / (beta[j] + lambda);
            let den = (1.0 - pi) * s0 / lambda;
            num / (num + den)
        };
        for j in 0..j_count {
            // ∫_0^X m_j(t) dt by composite Gauss-Legendre
            let mut integral_m = 0.0;
            let h = r.time / subintervals as f64;
            for s in 0..subintervals {
                let lo = s as f64 * h;
                let half = 0.5 * h;
                let mid = lo + half;
                for (x, w) in nodes.iter().zip(weights) {
                    integral_m += w * m_j(j, mid + half * x) * half;
                }
            }
            let mut v = -(a * r.time - integral_m);
            if r.status == j + 1 {
                let hazard = beta[j] * a + lambda;
                v += (a - m_j(j, r.time)) / hazard;
            }
            total[j] += v;
        }
    }
    Ok(total.iter().map(|v| v / sample.len() as f64).collect())
}
