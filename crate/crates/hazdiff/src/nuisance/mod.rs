//! Nuisance components behind the hazard-difference estimators: propensity
//! score, censoring survival, and per-cause additive-hazards outcome models,
//! plus injection of externally computed nuisances.

pub mod censoring;
pub mod outcome;
pub mod propensity;

use std::path::Path;

use crate::data::{CompetingRisksSample, EventGrid};
use crate::error::{Error, Result};

pub use censoring::{fit_censoring_cox, CensoringModel, CoxCensoring, ExternalCensoring, StepFunction};
pub use outcome::{fit_outcome_gamma, BaselineMethod, BaselineTables, GammaDesign, OutcomeModel};
pub use propensity::{fit_propensity_logistic, LogisticPropensity};

/// Covariate specification for the propensity design: named main effects and
/// declared pairwise interactions. The intercept is always included.
///
/// The CLI mini-grammar is a comma list of column names with `a:b` marking an
/// interaction, e.g. `z1,z2,z1:z2`.
#[derive(Debug, Clone, Default)]
pub struct CovariateSpec {
    /// Main-effect columns; `None` means all covariates.
    pub main: Option<Vec<String>>,
    /// Pairwise interactions.
    pub interactions: Vec<(String, String)>,
}

impl CovariateSpec {
    /// All covariates as main effects, no interactions.
    pub fn all() -> Self {
        Self::default()
    }

    /// Intercept only.
    pub fn intercept_only() -> Self {
        Self { main: Some(Vec::new()), interactions: Vec::new() }
    }

    /// Parse the mini-grammar `z1,z2,z1:z2`.
    pub fn parse(spec: &str) -> Result<Self> {
        let mut main = Vec::new();
        let mut interactions = Vec::new();
        for term in spec.split(',') {
            let term = term.trim();
            if term.is_empty() {
                continue;
            }
            match term.split_once(':') {
                Some((a, b)) => {
                    let (a, b) = (a.trim(), b.trim());
                    if a.is_empty() || b.is_empty() {
                        return Err(Error::input(format!("bad interaction term `{term}`")));
                    }
                    interactions.push((a.to_string(), b.to_string()));
                }
                None => main.push(term.to_string()),
            }
        }
        Ok(Self { main: Some(main), interactions })
    }

    /// Resolve names against a sample's covariate columns.
    pub fn resolve(&self, sample: &CompetingRisksSample) -> Result<ResolvedDesign> {
        let names = sample.covariate_names();
        let lookup = |name: &str| -> Result<usize> {
            names
                .iter()
                .position(|n| n == name)
                .ok_or_else(|| Error::input(format!("unknown covariate `{name}`")))
        };
        let main_idx: Vec<usize> = match &self.main {
            Some(cols) => cols.iter().map(|c| lookup(c)).collect::<Result<_>>()?,
            None => (0..names.len()).collect(),
        };
        let inter_idx: Vec<(usize, usize)> = self
            .interactions
            .iter()
            .map(|(a, b)| Ok((lookup(a)?, lookup(b)?)))
            .collect::<Result<_>>()?;
        let mut terms = vec!["intercept".to_string()];
        terms.extend(main_idx.iter().map(|&i| names[i].clone()));
        terms.extend(inter_idx.iter().map(|&(a, b)| format!("{}:{}", names[a], names[b])));
        Ok(ResolvedDesign { main_idx, inter_idx, terms })
    }
}

/// A covariate spec resolved to column indices.
#[derive(Debug, Clone)]
pub struct ResolvedDesign {
    main_idx: Vec<usize>,
    inter_idx: Vec<(usize, usize)>,
    pub terms: Vec<String>,
}

impl ResolvedDesign {
    pub fn dim(&self) -> usize {
        1 + self.main_idx.len() + self.inter_idx.len()
    }

    /// Design row `[1, z_main..., z_a * z_b...]`.
    pub fn row(&self, covariates: &[f64]) -> Vec<f64> {
        let mut row = Vec::with_capacity(self.dim());
        row.push(1.0);
        for &i in &self.main_idx {
            row.push(covariates[i]);
        }
        for &(a, b) in &self.inter_idx {
            row.push(covariates[a] * covariates[b]);
        }
        row
    }
}

/// Propensity component: internally fitted logistic model or externally
/// supplied per-subject probabilities.
#[derive(Debug, Clone)]
pub enum Propensity {
    Logistic(LogisticPropensity),
    External(Vec<f64>),
}

impl Propensity {
    /// Per-subject fitted probabilities.
    pub fn values(&self, sample: &CompetingRisksSample) -> Result<Vec<f64>> {
        match self {
            Propensity::Logistic(m) => Ok(m.values(sample)),
            Propensity::External(v) => {
                if v.len() != sample.len() {
                    return Err(Error::input(format!(
                        "external propensity has {} entries for {} records",
                        v.len(),
                        sample.len()
                    )));
                }
                Ok(v.clone())
            }
        }
    }

    pub fn coefficients(&self) -> Option<&[f64]> {
        match self {
            Propensity::Logistic(m) => Some(&m.coefficients),
            Propensity::External(_) => None,
        }
    }
}

/// The full nuisance set: one propensity model, one censoring model, and one
/// outcome model per cause.
#[derive(Debug, Clone)]
pub struct NuisanceSet {
    pub propensity: Propensity,
    pub censoring: CensoringModel,
    pub outcomes: Vec<OutcomeModel>,
}

/// What to fit for each nuisance component.
#[derive(Debug, Clone)]
pub struct NuisanceConfig {
    pub propensity_spec: CovariateSpec,
    pub censoring: CensoringChoice,
    pub gamma_design: GammaDesign,
}

impl Default for NuisanceConfig {
    fn default() -> Self {
        Self {
            propensity_spec: CovariateSpec::all(),
            censoring: CensoringChoice::Unit,
            gamma_design: GammaDesign::ZOnly,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CensoringChoice {
    Unit,
    Cox,
    External,
}

impl NuisanceSet {
    /// Fit every component per the config. External components must be
    /// supplied through `external` when selected.
    pub fn fit(
        sample: &CompetingRisksSample,
        grid: &EventGrid,
        config: &NuisanceConfig,
        external: Option<&ExternalNuisance>,
    ) -> Result<Self> {
        let propensity = match (&config.propensity_spec, external) {
            _ if external.map(|e| e.use_propensity).unwrap_or(false) => {
                let ext = external.unwrap();
                Propensity::External(ext.pi.clone())
            }
            (spec, _) => {
                let design = spec.resolve(sample)?;
                Propensity::Logistic(fit_propensity_logistic(sample, design)?)
            }
        };
        let censoring = match config.censoring {
            CensoringChoice::Unit => CensoringModel::Unit,
            CensoringChoice::Cox => CensoringModel::Cox(fit_censoring_cox(sample)?),
            CensoringChoice::External => {
                let ext = external.ok_or_else(|| {
                    Error::input("external censoring requested but no tables supplied")
                })?;
                let tables = ext.censoring.clone().ok_or_else(|| {
                    Error::input("external censoring requested but no tables supplied")
                })?;
                tables.validate(sample.len(), sample.tau())?;
                CensoringModel::External(tables)
            }
        };
        let mut outcomes = Vec::with_capacity(sample.cause_count());
        for j in 1..=sample.cause_count() {
            outcomes.push(fit_outcome_gamma(sample, grid, j, config.gamma_design)?);
        }
        Ok(Self { propensity, censoring, outcomes })
    }

    /// Validated per-subject propensity values.
    pub fn propensity_values(&self, sample: &CompetingRisksSample) -> Result<Vec<f64>> {
        let v = self.propensity.values(sample)?;
        if let Propensity::External(_) = self.propensity {
            for (i, &p) in v.iter().enumerate() {
                if !(p > 0.0 && p < 1.0) {
                    return Err(Error::input(format!(
                        "external propensity for row {i} is {p}, outside (0,1)"
                    )));
                }
            }
        }
        Ok(v)
    }
}

/// Externally computed nuisances ready for injection.
#[derive(Debug, Clone, Default)]
pub struct ExternalNuisance {
    pub pi: Vec<f64>,
    pub use_propensity: bool,
    pub censoring: Option<ExternalCensoring>,
}

impl ExternalNuisance {
    /// Carry the per-subject tables along under a bootstrap resample. The
    /// injected values are treated as data: resampling does not refit them.
    pub fn resample(&self, indices: &[usize]) -> Self {
        let pick = |v: &Vec<StepFunction>| indices.iter().map(|&i| v[i].clone()).collect();
        Self {
            pi: if self.use_propensity {
                indices.iter().map(|&i| self.pi[i]).collect()
            } else {
                Vec::new()
            },
            use_propensity: self.use_propensity,
            censoring: self.censoring.as_ref().map(|c| ExternalCensoring {
                own: pick(&c.own),
                arm0: c.arm0.as_ref().map(pick),
                arm1: c.arm1.as_ref().map(pick),
            }),
        }
    }
}

/// Validate and wrap externally computed nuisance tables.
///
/// `pi` must lie strictly inside `(0, 1)` per subject. Each censoring table
/// must start at 1, be nonincreasing, and stay positive through `tau`.
pub fn inject_external_nuisance(
    pi: Option<Vec<f64>>,
    censoring: Option<ExternalCensoring>,
    sample: &CompetingRisksSample,
) -> Result<ExternalNuisance> {
    let mut out = ExternalNuisance::default();
    if let Some(pi) = pi {
        if pi.len() != sample.len() {
            return Err(Error::input(format!(
                "external propensity has {} entries for {} records",
                pi.len(),
                sample.len()
            )));
        }
        for (i, &p) in pi.iter().enumerate() {
            if !(p > 0.0 && p < 1.0) {
                return Err(Error::input(format!(
                    "external propensity for row {i} is {p}, outside (0,1)"
                )));
            }
        }
        out.pi = pi;
        out.use_propensity = true;
    }
    if let Some(c) = censoring {
        c.validate(sample.len(), sample.tau())?;
        out.censoring = Some(c);
    }
    Ok(out)
}

/// Read an external propensity CSV with columns `row_id,pi_hat`. Row ids are
/// 0-based record indices; every record must appear exactly once.
pub fn read_external_propensity(path: impl AsRef<Path>, n: usize) -> Result<Vec<f64>> {
    let mut reader = csv::Reader::from_path(path.as_ref())
        .map_err(|e| Error::input(format!("cannot open {}: {e}", path.as_ref().display())))?;
    let headers = reader.headers().map_err(|e| Error::input(e.to_string()))?.clone();
    let id_col = headers
        .iter()
        .position(|h| h.trim() == "row_id")
        .ok_or_else(|| Error::input("missing column `row_id`"))?;
    let pi_col = headers
        .iter()
        .position(|h| h.trim() == "pi_hat")
        .ok_or_else(|| Error::input("missing column `pi_hat`"))?;
    let mut pi = vec![f64::NAN; n];
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| Error::input(format!("row {}: {e}", i + 1)))?;
        let id: usize = rec[id_col]
            .trim()
            .parse()
            .map_err(|_| Error::input(format!("row {}: bad row_id", i + 1)))?;
        if id >= n {
            return Err(Error::input(format!("row {}: row_id {id} out of range", i + 1)));
        }
        let v: f64 = rec[pi_col]
            .trim()
            .parse()
            .map_err(|_| Error::input(format!("row {}: bad pi_hat", i + 1)))?;
        pi[id] = v;
    }
    if pi.iter().any(|v| v.is_nan()) {
        return Err(Error::input("external propensity does not cover every record"));
    }
    Ok(pi)
}

/// Read a long-format external censoring CSV with columns
/// `row_id,time,sc_value` and an optional `arm` column (0/1).
///
/// Without `arm`, each curve is the subject's own-arm survival
/// `S_c(t | A_i, Z_i)`, which is all Score 1 needs. With `arm`, both
/// counterfactual curves are supplied per subject, unlocking the Score-2
/// weighting as well.
pub fn read_external_censoring(
    path: impl AsRef<Path>,
    sample: &CompetingRisksSample,
) -> Result<ExternalCensoring> {
    let mut reader = csv::Reader::from_path(path.as_ref())
        .map_err(|e| Error::input(format!("cannot open {}: {e}", path.as_ref().display())))?;
    let headers = reader.headers().map_err(|e| Error::input(e.to_string()))?.clone();
    let col = |name: &str| headers.iter().position(|h| h.trim() == name);
    let id_col = col("row_id").ok_or_else(|| Error::input("missing column `row_id`"))?;
    let t_col = col("time").ok_or_else(|| Error::input("missing column `time`"))?;
    let v_col = col("sc_value").ok_or_else(|| Error::input("missing column `sc_value`"))?;
    let arm_col = col("arm");

    let n = sample.len();
    let mut tables: Vec<Vec<(f64, f64, u8)>> = vec![Vec::new(); n];
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| Error::input(format!("row {}: {e}", i + 1)))?;
        let id: usize = rec[id_col]
            .trim()
            .parse()
            .map_err(|_| Error::input(format!("row {}: bad row_id", i + 1)))?;
        if id >= n {
            return Err(Error::input(format!("row {}: row_id {id} out of range", i + 1)));
        }
        let t: f64 = rec[t_col]
            .trim()
            .parse()
            .map_err(|_| Error::input(format!("row {}: bad time", i + 1)))?;
        let v: f64 = rec[v_col]
            .trim()
            .parse()
            .map_err(|_| Error::input(format!("row {}: bad sc_value", i + 1)))?;
        let arm: u8 = match arm_col {
            Some(c) => rec[c]
                .trim()
                .parse()
                .map_err(|_| Error::input(format!("row {}: bad arm", i + 1)))?,
            None => 2, // marker: own arm
        };
        tables[id].push((t, v, arm));
    }

    let build = |entries: &[(f64, f64, u8)], want: u8| -> StepFunction {
        let mut rows: Vec<(f64, f64)> = entries
            .iter()
            .filter(|(_, _, a)| *a == want)
            .map(|&(t, v, _)| (t, v))
            .collect();
        rows.sort_by(|a, b| a.0.total_cmp(&b.0));
        StepFunction {
            times: rows.iter().map(|r| r.0).collect(),
            values: rows.iter().map(|r| r.1).collect(),
        }
    };

    let ext = if arm_col.is_some() {
        let arm0: Vec<StepFunction> = tables.iter().map(|t| build(t, 0)).collect();
        let arm1: Vec<StepFunction> = tables.iter().map(|t| build(t, 1)).collect();
        let own: Vec<StepFunction> = sample
            .records()
            .iter()
            .enumerate()
            .map(|(i, r)| if r.treatment == 1 { arm1[i].clone() } else { arm0[i].clone() })
            .collect();
        ExternalCensoring { own, arm0: Some(arm0), arm1: Some(arm1) }
    } else {
        let own: Vec<StepFunction> = tables.iter().map(|t| build(t, 2)).collect();
        ExternalCensoring { own, arm0: None, arm1: None }
    };
    ext.validate(n, sample.tau())?;
    Ok(ext)
}
