//! The hazard-difference estimators.
//!
//! Two doubly robust estimating equations target the conditional
//! cause-specific hazard difference `beta_j` under the structural model
//! `h_j(t | A, Z) = beta_j A + lambda_j(t, Z)`:
//!
//! * **Score 1** weights the per-cause martingale residual by
//!   `e^{(sum_l beta_l) A t} S_c^{-1}(t- | A, Z) (A - pi(Z))`. Under the
//!   weighted Breslow baseline the treated terms cancel pointwise against
//!   the weighted risk-set means, leaving a closed-form solution driven by
//!   the controls.
//! * **Score 2** weights the residual by `A - E(t)`, where `E(t)` is the
//!   conditional probability of treatment among subjects still event-free at
//!   `t`; the root is found by damped Newton with a finite-difference
//!   Jacobian and a Broyden fallback.
//!
//! Both have simplified variants for independent censoring (`S_c = 1`), and
//! a naive additive-hazards regression with design `(A, Z)` serves as the
//! comparator.

mod solve;

use serde::Serialize;

use crate::data::{CompetingRisksSample, EventGrid};
use crate::engine::Engine;
use crate::error::{Error, Result};
use crate::numerics::invert;
use crate::nuisance::{
    outcome::lin_ying_system, BaselineMethod, CensoringChoice, ExternalNuisance, NuisanceConfig,
    NuisanceSet,
};

/// Estimator menu.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Score1,
    Score2,
    Score1Simplified,
    Score2Simplified,
    Regression,
}

impl Method {
    pub fn label(&self) -> &'static str {
        match self {
            Method::Score1 => "score1",
            Method::Score2 => "score2",
            Method::Score1Simplified => "score1s",
            Method::Score2Simplified => "score2s",
            Method::Regression => "regression",
        }
    }

    pub fn is_simplified(&self) -> bool {
        matches!(self, Method::Score1Simplified | Method::Score2Simplified)
    }

    fn default_baseline(&self) -> BaselineMethod {
        match self {
            Method::Score1 | Method::Score1Simplified => BaselineMethod::Weighted,
            _ => BaselineMethod::Plain,
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "1" | "score1" => Ok(Method::Score1),
            "2" | "score2" => Ok(Method::Score2),
            "1s" | "score1s" | "score1-simplified" => Ok(Method::Score1Simplified),
            "2s" | "score2s" | "score2-simplified" => Ok(Method::Score2Simplified),
            "reg" | "regression" => Ok(Method::Regression),
            other => Err(Error::input(format!(
                "unknown method `{other}`; expected one of 1, 2, 1s, 2s, reg"
            ))),
        }
    }
}

/// Variance estimator choice.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarianceMethod {
    Model,
    Bootstrap { replicates: usize },
}

/// Root-solver controls for Score 2.
#[derive(Debug, Clone)]
pub struct SolverControls {
    pub tol: f64,
    pub max_iter: usize,
    pub init: Option<Vec<f64>>,
}

impl Default for SolverControls {
    fn default() -> Self {
        Self { tol: 1e-9, max_iter: 100, init: None }
    }
}

/// Full estimator configuration.
#[derive(Debug, Clone)]
pub struct ScoreConfig {
    pub method: Method,
    /// Breslow baseline flavor; `None` picks the method default (weighted for
    /// Score 1, plain for Score 2).
    pub baseline: Option<BaselineMethod>,
    pub nuisance: NuisanceConfig,
    pub variance: VarianceMethod,
    pub solver: SolverControls,
    /// Seed for the bootstrap streams.
    pub seed: u64,
}

impl ScoreConfig {
    pub fn new(method: Method) -> Self {
        let censoring = match method {
            Method::Score1 | Method::Score2 => CensoringChoice::Cox,
            _ => CensoringChoice::Unit,
        };
        Self {
            method,
            baseline: None,
            nuisance: NuisanceConfig { censoring, ..NuisanceConfig::default() },
            variance: VarianceMethod::Model,
            solver: SolverControls::default(),
            seed: 0,
        }
    }

    pub fn baseline_method(&self) -> BaselineMethod {
        self.baseline.unwrap_or_else(|| self.method.default_baseline())
    }
}

/// Solver and data-quality diagnostics attached to an estimate.
#[derive(Debug, Clone, Serialize)]
pub struct Diagnostics {
    /// Sup-norm of the estimating function at the returned estimate.
    pub score_norm: f64,
    pub iterations: usize,
    pub solver: String,
    pub warnings: Vec<String>,
}

/// Nuisance coefficients reported alongside an estimate.
#[derive(Debug, Clone, Serialize, Default)]
pub struct NuisanceSummary {
    pub propensity_terms: Vec<String>,
    pub propensity_coefficients: Option<Vec<f64>>,
    pub censoring_terms: Vec<String>,
    pub censoring_coefficients: Option<Vec<f64>>,
    /// Per-cause outcome coefficients `gamma_j`.
    pub gamma: Vec<Vec<f64>>,
}

/// A fitted hazard-difference estimate: `beta` with covariance, standard
/// errors, and 95% normal confidence intervals.
#[derive(Debug, Clone, Serialize)]
pub struct HazardDiffEstimate {
    pub method: Method,
    pub beta: Vec<f64>,
    pub covariance: Vec<Vec<f64>>,
    pub se: Vec<f64>,
    pub ci95: Vec<[f64; 2]>,
    pub variance_source: String,
    pub diagnostics: Diagnostics,
    pub nuisance: NuisanceSummary,
}

impl HazardDiffEstimate {
    pub(crate) fn assemble(
        method: Method,
        beta: Vec<f64>,
        covariance: Vec<Vec<f64>>,
        variance_source: String,
        diagnostics: Diagnostics,
        nuisance: NuisanceSummary,
    ) -> Self {
        let se: Vec<f64> = covariance.iter().enumerate().map(|(j, row)| row[j].sqrt()).collect();
        let ci95 = beta
            .iter()
            .zip(&se)
            .map(|(b, s)| [b - 1.96 * s, b + 1.96 * s])
            .collect();
        Self { method, beta, covariance, se, ci95, variance_source, diagnostics, nuisance }
    }
}

/// The treated-odds weight
/// `E(t; beta, S_c, pi) = e^{-bt} S_c(t-|1,z) pi / (e^{-bt} S_c(t-|1,z) pi + S_c(t-|0,z) (1 - pi))`
/// with `b = sum_j beta_j` and `pi` clamped into `[1e-8, 1 - 1e-8]`.
pub fn e_curve_parts(beta_sum: f64, t: f64, pi: f64, sc1_left: f64, sc0_left: f64) -> f64 {
    let pi = pi.clamp(1e-8, 1.0 - 1e-8);
    let num = (-beta_sum * t).exp() * sc1_left * pi;
    num / (num + sc0_left * (1.0 - pi))
}

/// Evaluate the treated-odds weight at a covariate value using fitted
/// nuisances. External (per-subject) nuisances cannot be evaluated at
/// arbitrary `z`.
pub fn eval_e_curve(
    beta: &[f64],
    nuisance: &NuisanceSet,
    z: &[f64],
    t: f64,
) -> Result<f64> {
    let pi = match &nuisance.propensity {
        crate::nuisance::Propensity::Logistic(m) => m.predict(z),
        crate::nuisance::Propensity::External(_) => {
            return Err(Error::input(
                "external propensity is per-subject; evaluate the weight by row",
            ))
        }
    };
    let sc1 = nuisance.censoring.survival_left(t, 1, z)?;
    let sc0 = nuisance.censoring.survival_left(t, 0, z)?;
    Ok(e_curve_parts(beta.iter().sum(), t, pi, sc1, sc0))
}

fn gammas_of(nuisance: &NuisanceSet) -> Vec<Vec<f64>> {
    nuisance.outcomes.iter().map(|o| o.gamma.clone()).collect()
}

/// Evaluate the Score-1 estimating function at `beta`.
pub fn eval_score1(
    beta: &[f64],
    sample: &CompetingRisksSample,
    nuisance: &NuisanceSet,
    baseline: BaselineMethod,
) -> Result<Vec<f64>> {
    let pi = nuisance.propensity_values(sample)?;
    let engine = Engine::new(sample, &pi, &nuisance.censoring)?;
    let gammas = gammas_of(nuisance);
    let tables = engine.baseline_tables(&gammas, baseline)?;
    engine.eval_score1(beta, &gammas, &tables)
}

/// Evaluate the Score-2 estimating function at `beta`.
pub fn eval_score2(
    beta: &[f64],
    sample: &CompetingRisksSample,
    nuisance: &NuisanceSet,
    baseline: BaselineMethod,
) -> Result<Vec<f64>> {
    let pi = nuisance.propensity_values(sample)?;
    let engine = Engine::new(sample, &pi, &nuisance.censoring)?;
    let gammas = gammas_of(nuisance);
    let tables = engine.baseline_tables(&gammas, baseline)?;
    engine.eval_score2(beta, &gammas, &tables)
}

fn require_events(sample: &CompetingRisksSample) -> Result<()> {
    for j in 1..=sample.cause_count() {
        if sample.event_count(j) == 0 {
            return Err(Error::estimation(format!("no events for cause {j}")));
        }
    }
    Ok(())
}

pub(crate) struct PointFit {
    pub beta: Vec<f64>,
    pub diagnostics: Diagnostics,
    pub nuisance_summary: NuisanceSummary,
}

/// Point estimate without any variance computation; shared by `fit` and the
/// bootstrap refits.
pub(crate) fn point_estimate(
    sample: &CompetingRisksSample,
    config: &ScoreConfig,
    external: Option<&ExternalNuisance>,
) -> Result<PointFit> {
    require_events(sample)?;
    if config.method == Method::Regression {
        let (beta, _cov, gamma) = regression_core(sample)?;
        return Ok(PointFit {
            beta,
            diagnostics: Diagnostics {
                score_norm: 0.0,
                iterations: 0,
                solver: "closed-form".into(),
                warnings: Vec::new(),
            },
            nuisance_summary: NuisanceSummary { gamma, ..NuisanceSummary::default() },
        });
    }

    if config.method.is_simplified() && config.nuisance.censoring != CensoringChoice::Unit {
        return Err(Error::input(
            "simplified scores require the Unit censoring model (--censor none)",
        ));
    }

    let grid = EventGrid::new(sample);
    let nuisance = NuisanceSet::fit(sample, &grid, &config.nuisance, external)?;
    let pi = nuisance.propensity_values(sample)?;
    let engine = Engine::new(sample, &pi, &nuisance.censoring)?;
    let gammas = gammas_of(&nuisance);
    let mut warnings = Vec::new();
    if engine.clamp_count > 0 {
        warnings.push(format!(
            "propensity clamped into [1e-8, 1-1e-8] for {} subjects",
            engine.clamp_count
        ));
    }
    for (j, o) in nuisance.outcomes.iter().enumerate() {
        if o.no_events {
            warnings.push(format!("cause {}: no events; gamma set to zero", j + 1));
        }
    }

    let (beta, score_norm, iterations, solver, mut solver_warnings) = match config.method {
        Method::Score1 | Method::Score1Simplified => {
            if config.baseline_method() != BaselineMethod::Weighted {
                return Err(Error::input(
                    "the Score-1 closed form requires the weighted Breslow baseline",
                ));
            }
            let tables = engine.baseline_tables(&gammas, BaselineMethod::Weighted)?;
            let beta = engine.score1_closed_form(&gammas, &tables)?;
            let resid = engine.eval_score1(&beta, &gammas, &tables)?;
            let norm = resid.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            (beta, norm, 0, "closed-form".to_string(), Vec::new())
        }
        Method::Score2 | Method::Score2Simplified => {
            let tables = engine.baseline_tables(&gammas, config.baseline_method())?;
            let init = match &config.solver.init {
                Some(b) => b.clone(),
                None => {
                    // closed-form Score 1 as the starting point when it exists
                    match engine
                        .baseline_tables(&gammas, BaselineMethod::Weighted)
                        .and_then(|wt| engine.score1_closed_form(&gammas, &wt))
                    {
                        Ok(b) => b,
                        Err(_) => vec![0.0; engine.j_count],
                    }
                }
            };
            let bound = 50.0 / sample.tau();
            let outcome = solve::newton_with_broyden_fallback(
                |b| engine.eval_score2(b, &gammas, &tables),
                &init,
                config.solver.tol,
                config.solver.max_iter,
                bound,
            )?;
            let mut w = Vec::new();
            if outcome.boxed {
                w.push(format!("iterates boxed to |beta_j| <= {bound:.4}"));
            }
            (outcome.root, outcome.final_norm, outcome.iterations, outcome.solver.to_string(), w)
        }
        Method::Regression => unreachable!(),
    };
    warnings.append(&mut solver_warnings);

    let nuisance_summary = NuisanceSummary {
        propensity_terms: match &nuisance.propensity {
            crate::nuisance::Propensity::Logistic(m) => m.terms.clone(),
            crate::nuisance::Propensity::External(_) => vec!["external".into()],
        },
        propensity_coefficients: nuisance.propensity.coefficients().map(|c| c.to_vec()),
        censoring_terms: match &nuisance.censoring {
            crate::nuisance::CensoringModel::Cox(c) => c.term_names.clone(),
            crate::nuisance::CensoringModel::Unit => Vec::new(),
            crate::nuisance::CensoringModel::External(_) => vec!["external".into()],
        },
        censoring_coefficients: match &nuisance.censoring {
            crate::nuisance::CensoringModel::Cox(c) => Some(c.coefficients.clone()),
            _ => None,
        },
        gamma: gammas,
    };

    Ok(PointFit {
        beta,
        diagnostics: Diagnostics { score_norm, iterations, solver, warnings },
        nuisance_summary,
    })
}

/// Closed-form Score-1 estimate. Requires the weighted Breslow baseline.
pub fn score1_beta(
    sample: &CompetingRisksSample,
    config: &ScoreConfig,
    external: Option<&ExternalNuisance>,
) -> Result<HazardDiffEstimate> {
    fit(sample, config, external)
}

/// Score-2 estimate by root finding.
pub fn score2_beta(
    sample: &CompetingRisksSample,
    config: &ScoreConfig,
    external: Option<&ExternalNuisance>,
) -> Result<HazardDiffEstimate> {
    fit(sample, config, external)
}

/// Lin–Ying regression comparator: joint design `(A, Z)`, per-cause
/// closed-form solve with the standard sandwich covariance.
fn regression_core(
    sample: &CompetingRisksSample,
) -> Result<(Vec<f64>, Vec<f64>, Vec<Vec<f64>>)> {
    let grid = EventGrid::new(sample);
    let p = sample.covariate_dim();
    let dim = p + 1;
    let system = lin_ying_system(
        sample,
        &grid,
        |r| {
            let mut d = Vec::with_capacity(dim);
            d.push(r.treatment as f64);
            d.extend_from_slice(&r.covariates);
            d
        },
        dim,
    );
    let gram_inv = invert(&system.gram, dim).ok_or_else(|| {
        Error::estimation("singular Gram matrix in the regression fit")
    })?;
    let mut beta = Vec::with_capacity(sample.cause_count());
    let mut variances = Vec::with_capacity(sample.cause_count());
    let mut gamma = Vec::with_capacity(sample.cause_count());
    for j in 0..sample.cause_count() {
        let theta: Vec<f64> = (0..dim)
            .map(|i| (0..dim).map(|k| gram_inv[i * dim + k] * system.score[j][k]).sum())
            .collect();
        beta.push(theta[0]);
        gamma.push(theta[1..].to_vec());
        // Var(theta) = M^{-1} B M^{-1}; the treatment coordinate is entry (0,0)
        let mut mb = vec![0.0; dim];
        for k in 0..dim {
            mb[k] = (0..dim).map(|l| gram_inv[l] * system.meat[j][l * dim + k]).sum::<f64>();
        }
        let var: f64 = (0..dim).map(|k| mb[k] * gram_inv[k]).sum();
        variances.push(var.max(0.0));
    }
    Ok((beta, variances, gamma))
}

/// Fit the configured estimator and attach the requested variance.
pub fn fit(
    sample: &CompetingRisksSample,
    config: &ScoreConfig,
    external: Option<&ExternalNuisance>,
) -> Result<HazardDiffEstimate> {
    let point = point_estimate(sample, config, external)?;
    let j_count = sample.cause_count();
    let mut diagnostics = point.diagnostics;

    let (covariance, source) = match config.variance {
        VarianceMethod::Bootstrap { replicates } => {
            let cov = crate::variance::bootstrap(sample, config, replicates, config.seed, external)?;
            diagnostics.warnings.extend(cov.warnings.iter().cloned());
            (cov.covariance, format!("bootstrap(B={})", cov.replicates.unwrap_or(replicates)))
        }
        VarianceMethod::Model => match config.method {
            Method::Regression => {
                let (_beta, variances, _gamma) = regression_core(sample)?;
                let mut cov = vec![vec![0.0; j_count]; j_count];
                for j in 0..j_count {
                    cov[j][j] = variances[j];
                }
                (cov, "model".to_string())
            }
            Method::Score1 | Method::Score1Simplified => {
                let grid = EventGrid::new(sample);
                let nuisance = NuisanceSet::fit(sample, &grid, &config.nuisance, external)?;
                let est = crate::variance::sandwich_score1(sample, &nuisance, &point.beta)?;
                diagnostics.warnings.extend(est.warnings.iter().cloned());
                (est.covariance, "model".to_string())
            }
            Method::Score2 | Method::Score2Simplified => {
                let grid = EventGrid::new(sample);
                let nuisance = NuisanceSet::fit(sample, &grid, &config.nuisance, external)?;
                let est = crate::variance::sandwich_score2(sample, &nuisance, &point.beta)?;
                diagnostics.warnings.extend(est.warnings.iter().cloned());
                (est.covariance, "model".to_string())
            }
        },
    };

    Ok(HazardDiffEstimate::assemble(
        config.method,
        point.beta,
        covariance,
        source,
        diagnostics,
        point.nuisance_summary,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::SubjectRecord;
    use crate::nuisance::{CensoringModel, GammaDesign, Propensity};

    fn rec(time: f64, status: usize, treatment: u8, z: f64) -> SubjectRecord {
        SubjectRecord { time, status, treatment, covariates: vec![z] }
    }

    fn toy_sample() -> CompetingRisksSample {
        CompetingRisksSample::with_options(
            vec![
                rec(0.3, 1, 1, 0.4),
                rec(0.6, 2, 0, -0.2),
                rec(0.8, 1, 0, 0.1),
                rec(1.1, 0, 1, 0.7),
                rec(1.4, 2, 1, -0.5),
                rec(1.9, 1, 0, 0.3),
            ],
            vec!["z1".into()],
            2,
            None,
        )
        .unwrap()
    }

    fn known_nuisance(sample: &CompetingRisksSample, pi: f64) -> NuisanceSet {
        NuisanceSet {
            propensity: Propensity::External(vec![pi; sample.len()]),
            censoring: CensoringModel::Unit,
            outcomes: (0..sample.cause_count())
                .map(|_| crate::nuisance::OutcomeModel {
                    gamma: vec![0.0],
                    design: GammaDesign::ZOnly,
                    initial_beta: None,
                    no_events: false,
                })
                .collect(),
        }
    }

    #[test]
    fn e_curve_at_zero_is_pi() {
        for beta in [[0.0, 0.0], [0.3, -0.1], [1.0, 2.0]] {
            let b: f64 = beta.iter().sum();
            assert!((e_curve_parts(b, 0.0, 0.3, 1.0, 1.0) - 0.3).abs() < 1e-15);
        }
    }

    #[test]
    fn e_curve_logistic_form() {
        // pi = 1/2, S_c = 1: E(t) = 1 / (1 + e^{bt}); at b = 0, E = 1/2
        let b = 0.7f64;
        for t in [0.0f64, 0.5, 2.0] {
            let want = 1.0 / (1.0 + (b * t).exp());
            assert!((e_curve_parts(b, t, 0.5, 1.0, 1.0) - want).abs() < 1e-14);
        }
        assert!((e_curve_parts(0.0, 3.0, 0.5, 1.0, 1.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn e_curve_direct_arithmetic() {
        let (b, pi, sc1, sc0, t) = (0.2f64, 0.3f64, 0.8f64, 0.9f64, 2.0f64);
        let num = (-b * t).exp() * sc1 * pi;
        let want = num / (num + sc0 * (1.0 - pi));
        assert!((e_curve_parts(b, t, pi, sc1, sc0) - want).abs() < 1e-14);
    }

    proptest::proptest! {
        #[test]
        fn e_curve_stays_inside_unit_interval(
            b in -3.0f64..3.0,
            t in 0.0f64..5.0,
            pi in 1e-6f64..0.999999,
            sc1 in 0.05f64..1.0,
            sc0 in 0.05f64..1.0,
        ) {
            let e = e_curve_parts(b, t, pi, sc1, sc0);
            proptest::prop_assert!(e > 0.0 && e < 1.0);
        }
    }

    #[test]
    fn score1_vanishes_at_closed_form() {
        let sample = toy_sample();
        let ext = crate::nuisance::inject_external_nuisance(
            Some(vec![0.5; sample.len()]),
            None,
            &sample,
        )
        .unwrap();
        let config = ScoreConfig::new(Method::Score1Simplified);
        let est = fit(&sample, &config, Some(&ext)).unwrap();
        // defining property: the estimating function vanishes at the
        // closed-form estimate under the weighted baseline
        assert!(est.diagnostics.score_norm < 1e-8, "{}", est.diagnostics.score_norm);

        // and through the public evaluator with the same fitted nuisances
        let grid = EventGrid::new(&sample);
        let nuisance =
            NuisanceSet::fit(&sample, &grid, &config.nuisance, Some(&ext)).unwrap();
        let resid =
            eval_score1(&est.beta, &sample, &nuisance, BaselineMethod::Weighted).unwrap();
        assert!(resid.iter().all(|v| v.abs() < 1e-8), "{resid:?}");
    }

    #[test]
    fn score1_all_treated_errors_no_controls() {
        let sample = CompetingRisksSample::with_options(
            vec![rec(0.5, 1, 1, 0.1), rec(1.0, 2, 1, -0.3), rec(1.5, 1, 1, 0.6)],
            vec!["z1".into()],
            2,
            None,
        )
        .unwrap();
        let ext = crate::nuisance::inject_external_nuisance(
            Some(vec![0.5; 3]),
            None,
            &sample,
        )
        .unwrap();
        let config = ScoreConfig::new(Method::Score1Simplified);
        let err = fit(&sample, &config, Some(&ext)).unwrap_err();
        assert!(err.to_string().contains("no controls"), "{err}");
    }

    #[test]
    fn score1_zero_when_all_treated_and_pi_one() {
        // A - pi factor vanishes identically; evaluation (not fitting) path
        let sample = CompetingRisksSample::with_options(
            vec![rec(0.5, 1, 1, 0.1), rec(1.0, 2, 1, -0.3), rec(1.5, 1, 1, 0.6)],
            vec!["z1".into()],
            2,
            None,
        )
        .unwrap();
        let nuisance = NuisanceSet {
            propensity: Propensity::External(vec![1.0; 3]),
            censoring: CensoringModel::Unit,
            outcomes: known_nuisance(&sample, 0.5).outcomes,
        };
        // bypass the (0,1) validation: raw values feed the score directly
        let pi = vec![1.0; 3];
        let engine = Engine::new(&sample, &pi, &nuisance.censoring).unwrap();
        let gammas = vec![vec![0.0], vec![0.0]];
        let tables = engine.baseline_tables(&gammas, BaselineMethod::Plain).unwrap();
        let s = engine.eval_score1(&[0.2, -0.1], &gammas, &tables).unwrap();
        assert!(s.iter().all(|v| v.abs() == 0.0), "{s:?}");
    }

    #[test]
    fn score2_centering_collapse() {
        // pi matching A exactly with S_c = 1 and beta = 0 makes E_i = A_i up
        // to the clamp epsilon, so the score vanishes to that accuracy
        let sample = toy_sample();
        let pi: Vec<f64> = sample.records().iter().map(|r| r.treatment as f64).collect();
        let engine = Engine::new(&sample, &pi, &CensoringModel::Unit).unwrap();
        let gammas = vec![vec![0.3], vec![-0.2]];
        let tables = engine.baseline_tables(&gammas, BaselineMethod::Plain).unwrap();
        let s = engine.eval_score2(&[0.0, 0.0], &gammas, &tables).unwrap();
        assert!(s.iter().all(|v| v.abs() < 1e-7), "{s:?}");
    }

    #[test]
    fn score2_quadrature_matches_closed_form_antiderivative() {
        // with S_c = 1 and constant pi the integral of E over an interval has
        // the closed form -(1/b) ln(pi e^{-bt} + 1 - pi); the engine must
        // reproduce it through Gauss-Legendre to 1e-12.
        //
        // Exercised through W of the Score-2 sandwich, which integrates
        // 1 - E(t) over treated follow-up.
        let sample = CompetingRisksSample::with_options(
            vec![rec(2.0, 1, 1, 0.0)],
            vec!["z1".into()],
            1,
            None,
        )
        .unwrap();
        let pi_val = 0.3f64;
        let pi = vec![pi_val; 1];
        let engine = Engine::new(&sample, &pi, &CensoringModel::Unit).unwrap();
        let beta = [0.4f64];
        let b: f64 = beta.iter().sum();
        let (w, _v) = engine.sandwich_score2(&beta).unwrap();
        // ∫_0^2 E dt with the verified antiderivative F(t) = -(1/b) ln(pi e^{-bt} + 1 - pi)
        let f = |t: f64| -(1.0 / b) * (pi_val * (-b * t).exp() + 1.0 - pi_val).ln();
        // sanity-check the antiderivative by central differences
        let t0 = 0.7;
        let h = 1e-6;
        let deriv = (f(t0 + h) - f(t0 - h)) / (2.0 * h);
        let e_direct = e_curve_parts(b, t0, pi_val, 1.0, 1.0);
        assert!((deriv - e_direct).abs() < 1e-8, "antiderivative check: {deriv} vs {e_direct}");
        let int_e = f(2.0) - f(0.0);
        let want_w = 2.0 - int_e; // single treated subject, n = 1
        assert!((w - want_w).abs() < 1e-12, "{w} vs {want_w}");
    }

    #[test]
    fn score2_root_satisfies_solver_contract() {
        let sample = toy_sample();
        let ext = crate::nuisance::inject_external_nuisance(
            Some(vec![0.5; sample.len()]),
            None,
            &sample,
        )
        .unwrap();
        let config = ScoreConfig::new(Method::Score2Simplified);
        let est = fit(&sample, &config, Some(&ext)).unwrap();
        assert!(est.diagnostics.score_norm < 1e-9, "{}", est.diagnostics.score_norm);
        // residual through the public evaluator
        let grid = EventGrid::new(&sample);
        let nuisance =
            NuisanceSet::fit(&sample, &grid, &config.nuisance, Some(&ext)).unwrap();
        let resid = eval_score2(&est.beta, &sample, &nuisance, BaselineMethod::Plain).unwrap();
        assert!(resid.iter().all(|v| v.abs() < 1e-9), "{resid:?}");
    }

    #[test]
    fn cause_relabel_equivariance() {
        // swapping cause labels permutes the estimates
        let sample = toy_sample();
        let swapped_records: Vec<SubjectRecord> = sample
            .records()
            .iter()
            .map(|r| SubjectRecord {
                status: match r.status {
                    1 => 2,
                    2 => 1,
                    s => s,
                },
                ..r.clone()
            })
            .collect();
        let swapped =
            CompetingRisksSample::with_options(swapped_records, vec!["z1".into()], 2, None)
                .unwrap();
        for method in [Method::Score1Simplified, Method::Score2Simplified, Method::Regression] {
            let config = ScoreConfig::new(method);
            let a = fit(&sample, &config, None).unwrap();
            let b = fit(&swapped, &config, None).unwrap();
            assert!((a.beta[0] - b.beta[1]).abs() < 1e-9, "{method:?}");
            assert!((a.beta[1] - b.beta[0]).abs() < 1e-9, "{method:?}");
        }
    }

    #[test]
    fn unit_censoring_reduction_is_exact() {
        // a Cox censoring model with zero coefficients and no baseline jumps
        // reproduces the simplified scores bitwise
        let sample = toy_sample();
        let pi = vec![0.5; sample.len()];
        let cox_null = CensoringModel::Cox(crate::nuisance::CoxCensoring {
            coefficients: vec![0.0, 0.0],
            term_names: vec!["treatment".into(), "z1".into()],
            baseline_times: Vec::new(),
            baseline_jumps: Vec::new(),
            iterations: 0,
        });
        let gammas = vec![vec![0.25], vec![-0.4]];
        let beta = [0.12, -0.03];

        let e_unit = Engine::new(&sample, &pi, &CensoringModel::Unit).unwrap();
        let e_cox = Engine::new(&sample, &pi, &cox_null).unwrap();
        for method in [BaselineMethod::Plain, BaselineMethod::Weighted] {
            let t_unit = e_unit.baseline_tables(&gammas, method).unwrap();
            let t_cox = e_cox.baseline_tables(&gammas, method).unwrap();
            let s1u = e_unit.eval_score1(&beta, &gammas, &t_unit).unwrap();
            let s1c = e_cox.eval_score1(&beta, &gammas, &t_cox).unwrap();
            assert_eq!(s1u, s1c);
            let s2u = e_unit.eval_score2(&beta, &gammas, &t_unit).unwrap();
            let s2c = e_cox.eval_score2(&beta, &gammas, &t_cox).unwrap();
            assert_eq!(s2u, s2c);
        }
    }

    #[test]
    fn regression_reduces_to_two_sample_contrast() {
        // covariate-free sample: the regression equals the classical
        // two-sample additive-hazards estimator
        // sum_t H(t) [dNA_1j(t) - dNA_0j(t)] / ∫ H dt with H = Y0 Y1 / Y,
        // where dNA_aj are the per-arm Nelson-Aalen increments
        let records: Vec<SubjectRecord> = vec![
            (0.5, 1, 1),
            (0.9, 1, 0),
            (1.2, 2, 1),
            (1.6, 0, 0),
            (2.0, 1, 1),
            (2.5, 2, 0),
        ]
        .into_iter()
        .map(|(time, status, treatment)| SubjectRecord {
            time,
            status,
            treatment,
            covariates: Vec::new(),
        })
        .collect();
        let sample = CompetingRisksSample::with_options(records, Vec::new(), 2, None).unwrap();
        let config = ScoreConfig::new(Method::Regression);
        let est = fit(&sample, &config, None).unwrap();

        for j in 1..=2usize {
            let mut num = 0.0;
            let mut den = 0.0;
            let mut times: Vec<f64> = sample.records().iter().map(|r| r.time).collect();
            times.sort_by(f64::total_cmp);
            times.dedup();
            let mut prev = 0.0;
            for &t in &times {
                let y1 = sample
                    .records()
                    .iter()
                    .filter(|r| r.time >= t && r.treatment == 1)
                    .count() as f64;
                let y0 = sample
                    .records()
                    .iter()
                    .filter(|r| r.time >= t && r.treatment == 0)
                    .count() as f64;
                let y = y0 + y1;
                let h = y0 * y1 / y;
                den += h * (t - prev);
                let d1 = sample
                    .records()
                    .iter()
                    .filter(|r| r.time == t && r.status == j && r.treatment == 1)
                    .count() as f64;
                let d0 = sample
                    .records()
                    .iter()
                    .filter(|r| r.time == t && r.status == j && r.treatment == 0)
                    .count() as f64;
                if y1 > 0.0 {
                    num += h * d1 / y1;
                }
                if y0 > 0.0 {
                    num -= h * d0 / y0;
                }
                prev = t;
            }
            let oracle = num / den;
            assert!(
                (est.beta[j - 1] - oracle).abs() < 1e-8,
                "cause {j}: {} vs {oracle}",
                est.beta[j - 1]
            );
        }
    }
}
