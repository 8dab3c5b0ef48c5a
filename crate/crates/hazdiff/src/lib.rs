//! Doubly robust estimation of conditional cause-specific hazard differences
//! under competing risks.
//!
//! The structural model is additive in a binary treatment:
//! `h_j(t | A, Z) = beta_j A + lambda_j(t, Z)` for causes `j = 1..=J`, with
//! the covariate effect `lambda_j` left unspecified. This crate fits the
//! hazard differences `beta_j` with two doubly robust estimating equations
//! that stay valid when either the treatment/censoring models or the outcome
//! models are correctly specified, along with the nuisance fitters
//! (logistic propensity, Cox censoring, Lin-Ying outcome models), model-based
//! and bootstrap variances, and a seeded Monte Carlo engine over eight
//! simulation scenarios.
//!
//! # Quick start
//!
//! ```
//! use hazdiff::scores::{fit, Method, ScoreConfig};
//! use hazdiff::simulate::{generate_scenario, ScenarioSpec};
//!
//! let spec = ScenarioSpec { scenario: 1, n: 400, seed: 7 };
//! let (sample, truth) = generate_scenario(&spec).unwrap();
//! let est = fit(&sample, &ScoreConfig::new(Method::Score1Simplified), None).unwrap();
//! assert_eq!(est.beta.len(), 2);
//! assert!((est.beta[0] - truth.beta0[0]).abs() < 1.0);
//! ```
//!
//! # Runnable examples
//!
//! Each major capability has a runnable example under `examples/`:
//!
//! ```bash
//! cargo run --release --example fit_from_csv
//! cargo run --release --example simulate_scenario
//! cargo run --release --example bootstrap_ci
//! cargo run --release --example double_robustness
//! cargo run --release --example efficient_score_oracle
//! cargo run --release --example external_nuisance
//! ```
//!
//! The thin `hazdiff` binary wraps the same library calls behind `fit` and
//! `simulate` subcommands; see the crate README.

pub mod cli;
pub mod data;
mod engine;
pub mod error;
mod numerics;
pub mod nuisance;
pub mod rng;
pub mod scores;
pub mod simulate;
pub mod variance;

pub use data::{CompetingRisksSample, CsvSchema, EventGrid, SubjectRecord};
pub use error::{Error, Result};
pub use scores::{fit, HazardDiffEstimate, Method, ScoreConfig, VarianceMethod};
pub use simulate::{generate_scenario, run_monte_carlo, MonteCarloSummary, ScenarioSpec};
