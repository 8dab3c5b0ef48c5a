//! Command-line front end: `fit` estimates hazard differences from a CSV
//! file, `simulate` drives seeded Monte Carlo studies. Both emit
//! machine-readable results with an embedded run manifest (command, resolved
//! configuration, software version, seeds, input digest). Wall-clock timing
//! goes to stderr so that seeded outputs stay byte-identical across runs.
//!
//! Exit codes: 0 success, 2 usage/input error, 3 numerical failure.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::data::{CompetingRisksSample, CsvSchema};
use crate::error::{Error, Result};
use crate::nuisance::{
    inject_external_nuisance, read_external_censoring, read_external_propensity,
    CensoringChoice, CovariateSpec, ExternalNuisance, GammaDesign,
};
use crate::scores::{fit, Method, ScoreConfig, VarianceMethod};
use crate::simulate::{
    run_monte_carlo, summarize_to_table, MethodSpec, ScenarioSpec, TableFormat,
};

#[derive(Parser, Debug)]
#[command(
    name = "hazdiff",
    version,
    about = "Doubly robust conditional cause-specific hazard differences under competing risks"
)]
pub struct CliArgs {
    #[command(subcommand)]
    command: Command,
    /// Worker threads for replicate parallelism (env: HAZDIFF_JOBS).
    #[arg(long, global = true)]
    jobs: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fit a hazard-difference estimator on a CSV data set.
    Fit(FitArgs),
    /// Run a Monte Carlo simulation study.
    Simulate(SimulateArgs),
}

#[derive(Args, Debug, Clone, Serialize)]
struct FitArgs {
    /// Input CSV with columns time, status, treatment, covariates.
    data: PathBuf,
    /// Estimator: 1, 2, 1s, 2s, or reg.
    #[arg(long, default_value = "1")]
    score: String,
    /// Propensity model: logistic or external.
    #[arg(long, default_value = "logistic")]
    ps: String,
    /// Propensity design, e.g. `z1,z2,z1:z2`; defaults to all covariates.
    #[arg(long)]
    ps_spec: Option<String>,
    /// Censoring model: none, cox, or external.
    #[arg(long, default_value = "none")]
    censor: String,
    /// Outcome-coefficient design: z or az.
    #[arg(long, default_value = "z")]
    gamma_design: String,
    /// Variance estimator: model or bootstrap.
    #[arg(long, default_value = "model")]
    variance: String,
    /// Bootstrap replicates.
    #[arg(long, default_value_t = 100)]
    boot_b: usize,
    /// Seed for bootstrap streams.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Restrict covariates to these columns (comma list).
    #[arg(long)]
    covariates: Option<String>,
    /// Override the follow-up limit tau.
    #[arg(long)]
    tau: Option<f64>,
    /// External propensity CSV (row_id,pi_hat).
    #[arg(long)]
    external_propensity: Option<PathBuf>,
    /// External censoring CSV (row_id,time,sc_value[,arm]).
    #[arg(long)]
    external_censoring: Option<PathBuf>,
    /// Write the JSON result here as well as to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Serialize)]
struct SimulateArgs {
    /// TOML or JSON config file; replaces the inline flags below.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Scenario id 1-8.
    #[arg(long)]
    scenario: Option<u8>,
    #[arg(long, default_value_t = 1000)]
    n: usize,
    #[arg(long, default_value_t = 500)]
    reps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Comma list of methods: score1, score2, score1s, score2s, regression.
    #[arg(long, default_value = "score1s,score2s,regression")]
    methods: String,
    /// Use bootstrap variance with this many replicates for every method.
    #[arg(long)]
    bootstrap_b: Option<usize>,
    /// Prefix for the summary CSV, text table, and manifest files.
    #[arg(long, default_value = "hazdiff_sim")]
    out_prefix: String,
}

#[derive(serde::Deserialize, Debug)]
struct SimulateConfigFile {
    scenario: u8,
    n: usize,
    reps: usize,
    seed: u64,
    methods: Vec<String>,
    bootstrap_b: Option<usize>,
}

#[derive(Serialize)]
struct Manifest {
    command: String,
    version: String,
    seed: u64,
    config: serde_json::Value,
    input_sha256: Option<String>,
}

#[derive(Serialize)]
struct FitDocument {
    method: &'static str,
    beta: Vec<f64>,
    se: Vec<f64>,
    ci95: Vec<[f64; 2]>,
    covariance: Vec<Vec<f64>>,
    variance: String,
    diagnostics: crate::scores::Diagnostics,
    nuisance: crate::scores::NuisanceSummary,
    manifest: Manifest,
}

/// Entry point used by the `hazdiff` binary; returns the process exit code.
pub fn run<I, T>(argv: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let args = match CliArgs::try_parse_from(argv) {
        Ok(a) => a,
        Err(e) => {
            // clap handles --help/--version through this path as well
            let is_usage = e.use_stderr();
            let _ = e.print();
            return if is_usage { 2 } else { 0 };
        }
    };
    let jobs = args.jobs.or_else(|| {
        std::env::var("HAZDIFF_JOBS").ok().and_then(|v| v.parse().ok())
    });
    if let Some(j) = jobs {
        // ignore the error when a pool already exists (tests, repeated calls)
        let _ = rayon::ThreadPoolBuilder::new().num_threads(j.max(1)).build_global();
    }
    let started = Instant::now();
    let outcome = match &args.command {
        Command::Fit(f) => cmd_fit(f),
        Command::Simulate(s) => cmd_simulate(s),
    };
    eprintln!("elapsed: {:.3}s", started.elapsed().as_secs_f64());
    match outcome {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn sha256_hex(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path)?;
    let mut hasher = Sha256::new();
    hasher.update(&bytes);
    Ok(format!("{:x}", hasher.finalize()))
}

fn parse_fit_config(args: &FitArgs) -> Result<ScoreConfig> {
    let method: Method = args.score.parse()?;
    let censoring = match args.censor.as_str() {
        "none" => CensoringChoice::Unit,
        "cox" => CensoringChoice::Cox,
        "external" => CensoringChoice::External,
        other => {
            return Err(Error::input(format!(
                "unknown censoring model `{other}`; expected none, cox, or external"
            )))
        }
    };
    let gamma_design = match args.gamma_design.as_str() {
        "z" => GammaDesign::ZOnly,
        "az" => GammaDesign::JointAz,
        other => {
            return Err(Error::input(format!(
                "unknown gamma design `{other}`; expected z or az"
            )))
        }
    };
    let variance = match args.variance.as_str() {
        "model" => VarianceMethod::Model,
        "bootstrap" => VarianceMethod::Bootstrap { replicates: args.boot_b },
        other => {
            return Err(Error::input(format!(
                "unknown variance method `{other}`; expected model or bootstrap"
            )))
        }
    };
    let propensity_spec = match args.ps_spec.as_deref() {
        Some(spec) => CovariateSpec::parse(spec)?,
        None => CovariateSpec::all(),
    };
    let mut config = ScoreConfig::new(method);
    config.nuisance.propensity_spec = propensity_spec;
    config.nuisance.censoring = censoring;
    config.nuisance.gamma_design = gamma_design;
    config.variance = variance;
    config.seed = args.seed;
    Ok(config)
}

/// `hazdiff fit`: estimate on CSV data, emit a JSON result document.
fn cmd_fit_document(args: &FitArgs) -> Result<String> {
    let schema = CsvSchema {
        covariates: args
            .covariates
            .as_deref()
            .map(|s| s.split(',').map(|c| c.trim().to_string()).collect()),
        tau: args.tau,
        ..CsvSchema::default()
    };
    let sample = CompetingRisksSample::from_csv(&args.data, &schema)?;
    let config = parse_fit_config(args)?;

    let mut external: Option<ExternalNuisance> = None;
    if args.ps == "external" || args.external_propensity.is_some() {
        let path = args.external_propensity.as_ref().ok_or_else(|| {
            Error::input("--ps external requires --external-propensity <file>")
        })?;
        let pi = read_external_propensity(path, sample.len())?;
        external = Some(inject_external_nuisance(Some(pi), None, &sample)?);
    } else if args.ps != "logistic" {
        return Err(Error::input(format!(
            "unknown propensity model `{}`; expected logistic or external",
            args.ps
        )));
    }
    if config.nuisance.censoring == CensoringChoice::External
        || args.external_censoring.is_some()
    {
        let path = args.external_censoring.as_ref().ok_or_else(|| {
            Error::input("--censor external requires --external-censoring <file>")
        })?;
        let tables = read_external_censoring(path, &sample)?;
        let mut ext = external.take().unwrap_or_default();
        ext.censoring = Some(tables);
        external = Some(ext);
    }

    let estimate = fit(&sample, &config, external.as_ref())?;
    let manifest = Manifest {
        command: "fit".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        seed: args.seed,
        config: serde_json::to_value(args).map_err(|e| Error::input(e.to_string()))?,
        input_sha256: Some(sha256_hex(&args.data)?),
    };
    let doc = FitDocument {
        method: estimate.method.label(),
        beta: estimate.beta,
        se: estimate.se,
        ci95: estimate.ci95,
        covariance: estimate.covariance,
        variance: estimate.variance_source,
        diagnostics: estimate.diagnostics,
        nuisance: estimate.nuisance,
        manifest,
    };
    serde_json::to_string_pretty(&doc).map_err(|e| Error::input(e.to_string()))
}

fn cmd_fit(args: &FitArgs) -> Result<()> {
    let json = cmd_fit_document(args)?;
    if let Some(out) = &args.out {
        std::fs::write(out, format!("{json}\n"))?;
    }
    println!("{json}");
    Ok(())
}

fn method_specs(
    spec: &ScenarioSpec,
    names: &str,
    bootstrap_b: Option<usize>,
) -> Result<Vec<MethodSpec>> {
    let mut methods = Vec::new();
    for name in names.split(',') {
        let name = name.trim();
        if name.is_empty() {
            continue;
        }
        let method: Method = name.parse()?;
        let mut config = spec.default_config(method);
        if let Some(b) = bootstrap_b {
            config.variance = VarianceMethod::Bootstrap { replicates: b };
        }
        methods.push(MethodSpec::new(method.label(), config));
    }
    if methods.is_empty() {
        return Err(Error::input("no methods requested"));
    }
    Ok(methods)
}

fn cmd_simulate(args: &SimulateArgs) -> Result<()> {
    let (scenario, n, reps, seed, method_names, bootstrap_b) = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            let parsed: SimulateConfigFile = if path.extension().and_then(|e| e.to_str())
                == Some("json")
            {
                serde_json::from_str(&text)
                    .map_err(|e| Error::input(format!("bad config {}: {e}", path.display())))?
            } else {
                toml::from_str(&text)
                    .map_err(|e| Error::input(format!("bad config {}: {e}", path.display())))?
            };
            (
                parsed.scenario,
                parsed.n,
                parsed.reps,
                parsed.seed,
                parsed.methods.join(","),
                parsed.bootstrap_b,
            )
        }
        None => {
            let scenario = args
                .scenario
                .ok_or_else(|| Error::input("--scenario (or --config) is required"))?;
            (scenario, args.n, args.reps, args.seed, args.methods.clone(), args.bootstrap_b)
        }
    };
    if reps == 0 {
        return Err(Error::input("reps must be at least 1"));
    }
    let spec = ScenarioSpec { scenario, n, seed };
    spec.validate()?;
    let methods = method_specs(&spec, &method_names, bootstrap_b)?;

    let summary = run_monte_carlo(&spec, &methods, reps, seed)?;
    let table = summarize_to_table(&summary, TableFormat::Text);
    let csv = summarize_to_table(&summary, TableFormat::Csv);

    let manifest = Manifest {
        command: "simulate".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        seed,
        config: serde_json::json!({
            "scenario": scenario,
            "n": n,
            "reps": reps,
            "seed": seed,
            "methods": methods.iter().map(|m| m.name.clone()).collect::<Vec<_>>(),
            "bootstrap_b": bootstrap_b,
        }),
        input_sha256: None,
    };
    let manifest_json = serde_json::to_string_pretty(&manifest)
        .map_err(|e| Error::input(e.to_string()))?;

    std::fs::write(format!("{}_summary.csv", args.out_prefix), &csv)?;
    std::fs::write(format!("{}_table.txt", args.out_prefix), &table)?;
    std::fs::write(format!("{}_manifest.json", args.out_prefix), format!("{manifest_json}\n"))?;
    print!("{table}");
    for m in &summary.methods {
        if m.failures > 0 {
            eprintln!("note: {}: {} of {} replicates failed", m.name, m.failures, reps);
        }
    }
    Ok(())
}
