//! Inject externally computed nuisances.
//!
//! Machine-learning propensity or censoring fits can be produced outside the
//! crate and injected as per-subject tables: propensity probabilities per
//! `row_id` and long-format survival step functions. Injecting the values of
//! the internally fitted models reproduces the internal pipeline exactly.
//!
//! ```bash
//! cargo run --release --example external_nuisance
//! ```

use hazdiff::data::EventGrid;
use hazdiff::nuisance::{
    fit_censoring_cox, fit_propensity_logistic, inject_external_nuisance, CensoringChoice,
    CovariateSpec, ExternalCensoring, StepFunction,
};
use hazdiff::scores::{fit, Method, ScoreConfig};
use hazdiff::simulate::{generate_scenario, ScenarioSpec};

fn main() -> hazdiff::Result<()> {
    let spec = ScenarioSpec { scenario: 5, n: 500, seed: 17 };
    let (sample, _) = generate_scenario(&spec)?;
    let _grid = EventGrid::new(&sample);

    // internal fits
    let design = CovariateSpec::all().resolve(&sample)?;
    let propensity = fit_propensity_logistic(&sample, design)?;
    let cox = fit_censoring_cox(&sample)?;

    // export them as per-subject tables, as an external tool would
    let pi: Vec<f64> = propensity.values(&sample);
    let step_for = |treatment: u8, z: &[f64]| -> StepFunction {
        let times = cox.baseline_times.clone();
        let lp = cox.linear_predictor(treatment, z).exp();
        let mut cum = 0.0;
        let values = cox
            .baseline_jumps
            .iter()
            .map(|j| {
                cum += j;
                (-cum * lp).exp()
            })
            .collect();
        StepFunction { times, values }
    };
    let own: Vec<StepFunction> =
        sample.records().iter().map(|r| step_for(r.treatment, &r.covariates)).collect();
    let arm0: Vec<StepFunction> =
        sample.records().iter().map(|r| step_for(0, &r.covariates)).collect();
    let arm1: Vec<StepFunction> =
        sample.records().iter().map(|r| step_for(1, &r.covariates)).collect();
    let external = inject_external_nuisance(
        Some(pi),
        Some(ExternalCensoring { own, arm0: Some(arm0), arm1: Some(arm1) }),
        &sample,
    )?;

    // internal pipeline
    let mut internal_cfg = ScoreConfig::new(Method::Score1);
    internal_cfg.nuisance.censoring = CensoringChoice::Cox;
    let internal = fit(&sample, &internal_cfg, None)?;

    // injected pipeline
    let mut external_cfg = ScoreConfig::new(Method::Score1);
    external_cfg.nuisance.censoring = CensoringChoice::External;
    let injected = fit(&sample, &external_cfg, Some(&external))?;

    println!("Score 1 with internal Cox censoring vs injected tables:");
    for j in 0..sample.cause_count() {
        println!(
            "  cause {}: internal beta = {:+.10}   injected beta = {:+.10}   diff = {:.2e}",
            j + 1,
            internal.beta[j],
            injected.beta[j],
            (internal.beta[j] - injected.beta[j]).abs()
        );
    }
    Ok(())
}
