//! Additive-hazards outcome models for the competing risks.
//!
//! The working model for each cause is `Lambda_j(t, z; G_j, gamma_j) =
//! G_j(t) + gamma_j' z t` (Aalen 1989; Lin & Ying 1994). The covariate
//! coefficients solve the closed-form Lin–Ying estimating equations; the
//! baseline `G_j` is a Breslow-type step/piecewise-linear function stored in
//! the affine decomposition `G_j(t; beta_j) = P_j(t) - beta_j Q(t) - R_j(t)`
//! so score evaluation can re-evaluate it at any `beta_j` without refitting.

use crate::data::{CompetingRisksSample, EventGrid};
use crate::error::{Error, Result};
use crate::numerics::solve;

/// Design choice for the covariate-coefficient fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GammaDesign {
    /// Center covariates only (the default estimating equation).
    ZOnly,
    /// Joint `(A, Z)` design; the treatment coefficient is exposed as an
    /// initial value for `beta_j`.
    JointAz,
}

/// Breslow baseline flavor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaselineMethod {
    /// Unweighted risk-set averages.
    Plain,
    /// Inverse-probability weights `w_i(u) = A_i (1 - pi(Z_i)) / S_c(u- | A_i, Z_i)`,
    /// supported on the treated.
    Weighted,
}

/// Fitted per-cause outcome model.
#[derive(Debug, Clone)]
pub struct OutcomeModel {
    /// Covariate coefficients `gamma_j`.
    pub gamma: Vec<f64>,
    pub design: GammaDesign,
    /// Treatment coefficient from the joint design, usable as an initial
    /// `beta_j`.
    pub initial_beta: Option<f64>,
    /// Set when the cause has no observed events (gamma is the zero vector).
    pub no_events: bool,
}

/// Affine-in-beta baseline decomposition
/// `G_j(t; beta_j) = P_j(t) - beta_j Q(t) - R_j(t)` on a refined partition.
///
/// `P_j` jumps only at cause-j event times; `Q` and `R_j` are continuous and
/// piecewise linear, with `Q` nondecreasing. `G_j(0; beta_j) = 0`.
#[derive(Debug, Clone)]
pub struct BaselineTables {
    /// Partition `0 = c_0 < c_1 < ... < c_K`; every observed time and every
    /// censoring-baseline jump time is a cut.
    pub cuts: Vec<f64>,
    /// Jump of `P_j` at `c_k`, stored at index `k - 1`.
    pub p_jump: Vec<f64>,
    /// Slope of `Q` on `(c_{k-1}, c_k]`.
    pub q_slope: Vec<f64>,
    /// Slope of `R_j` on `(c_{k-1}, c_k]`.
    pub r_slope: Vec<f64>,
    pub method: BaselineMethod,
}

impl BaselineTables {
    /// Evaluate `G_j(t; beta_j)`.
    pub fn evaluate(&self, t: f64, beta_j: f64) -> f64 {
        let mut g = 0.0;
        for k in 1..self.cuts.len() {
            let (lo, hi) = (self.cuts[k - 1], self.cuts[k]);
            if t <= lo {
                break;
            }
            let len = (t.min(hi) - lo).max(0.0);
            g -= (beta_j * self.q_slope[k - 1] + self.r_slope[k - 1]) * len;
            if t >= hi {
                g += self.p_jump[k - 1];
            }
        }
        g
    }

    /// `Q(t)`.
    pub fn q_at(&self, t: f64) -> f64 {
        let mut q = 0.0;
        for k in 1..self.cuts.len() {
            let (lo, hi) = (self.cuts[k - 1], self.cuts[k]);
            if t <= lo {
                break;
            }
            q += self.q_slope[k - 1] * ((t.min(hi)) - lo).max(0.0);
        }
        q
    }
}

/// Shared Lin–Ying normal equations over an arbitrary per-subject design.
///
/// All quantities are on the sum scale:
/// `gram = sum_i ∫ Y_i (D_i - Dbar(t))⊗2 dt`,
/// `score[j] = sum_i ∫ (D_i - Dbar(t)) dN_ji(t)`,
/// `meat[j] = sum_i ∫ (D_i - Dbar(t))⊗2 dN_ji(t)`,
/// with `Dbar(t)` the at-risk mean and every integral evaluated exactly on
/// the event-grid partition.
pub(crate) struct LinYingSystem {
    pub dim: usize,
    pub gram: Vec<f64>,
    pub score: Vec<Vec<f64>>,
    pub meat: Vec<Vec<f64>>,
}

pub(crate) fn lin_ying_system(
    sample: &CompetingRisksSample,
    grid: &EventGrid,
    row: impl Fn(&crate::data::SubjectRecord) -> Vec<f64>,
    dim: usize,
) -> LinYingSystem {
    let n = sample.len();
    let j_count = sample.cause_count();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        sample.records()[b].time.total_cmp(&sample.records()[a].time).then(a.cmp(&b))
    });
    let rows: Vec<Vec<f64>> = sample.records().iter().map(|r| row(r)).collect();

    let m = grid.times.len();
    let mut gram = vec![0.0; dim * dim];
    let mut score = vec![vec![0.0; dim]; j_count];
    let mut meat = vec![vec![0.0; dim * dim]; j_count];

    let mut s0 = 0.0;
    let mut s1 = vec![0.0; dim];
    let mut s2 = vec![0.0; dim * dim];
    let mut idx = 0;
    // walk grid times in descending order, growing the risk set
    for k in (0..m).rev() {
        let t = grid.times[k];
        let start = idx;
        while idx < n && sample.records()[order[idx]].time == t {
            let d = &rows[order[idx]];
            s0 += 1.0;
            for a in 0..dim {
                s1[a] += d[a];
                for b in a..dim {
                    s2[a * dim + b] += d[a] * d[b];
                }
            }
            idx += 1;
        }
        let dt = t - if k == 0 { 0.0 } else { grid.times[k - 1] };
        // centered second moment: S2 - S1 S1' / S0
        for a in 0..dim {
            for b in a..dim {
                let centered = s2[a * dim + b] - s1[a] * s1[b] / s0;
                gram[a * dim + b] += centered * dt;
            }
        }
        // event contributions at this grid time
        for &i in &order[start..idx] {
            let status = sample.records()[i].status;
            if status == 0 {
                continue;
            }
            let d = &rows[i];
            let j = status - 1;
            for a in 0..dim {
                let ca = d[a] - s1[a] / s0;
                score[j][a] += ca;
                for b in a..dim {
                    let cb = d[b] - s1[b] / s0;
                    meat[j][a * dim + b] += ca * cb;
                }
            }
        }
    }
    for mat in std::iter::once(&mut gram).chain(meat.iter_mut()) {
        for a in 0..dim {
            for b in 0..a {
                mat[a * dim + b] = mat[b * dim + a];
            }
        }
    }
    LinYingSystem { dim, gram, score, meat }
}

/// Name a zero-variance design column, if any, for singular-Gram errors.
fn degenerate_column(system: &LinYingSystem, names: &[String]) -> Option<String> {
    for a in 0..system.dim {
        if system.gram[a * system.dim + a].abs() < 1e-10 {
            return Some(names[a].clone());
        }
    }
    None
}

/// Fit `gamma_j` for one cause by the Lin–Ying estimating equations.
pub fn fit_outcome_gamma(
    sample: &CompetingRisksSample,
    grid: &EventGrid,
    cause: usize,
    design: GammaDesign,
) -> Result<OutcomeModel> {
    debug_assert!(cause >= 1 && cause <= sample.cause_count());
    let p = sample.covariate_dim();
    let (dim, names): (usize, Vec<String>) = match design {
        GammaDesign::ZOnly => (p, sample.covariate_names().to_vec()),
        GammaDesign::JointAz => {
            let mut names = vec!["treatment".to_string()];
            names.extend(sample.covariate_names().iter().cloned());
            (p + 1, names)
        }
    };
    let system = lin_ying_system(sample, grid, |r| match design {
        GammaDesign::ZOnly => r.covariates.clone(),
        GammaDesign::JointAz => {
            let mut d = Vec::with_capacity(p + 1);
            d.push(r.treatment as f64);
            d.extend_from_slice(&r.covariates);
            d
        }
    }, dim);

    let no_events = sample.event_count(cause) == 0;
    if no_events {
        // the numerator vanishes identically
        return Ok(OutcomeModel {
            gamma: vec![0.0; p],
            design,
            initial_beta: if design == GammaDesign::JointAz { Some(0.0) } else { None },
            no_events: true,
        });
    }

    let solution = solve(&system.gram, &system.score[cause - 1], dim).ok_or_else(|| {
        match degenerate_column(&system, &names) {
            Some(col) => Error::estimation(format!(
                "singular Gram matrix: design column `{col}` has no at-risk variation"
            )),
            None => Error::estimation("singular Gram matrix in outcome fit"),
        }
    })?;

    Ok(match design {
        GammaDesign::ZOnly => OutcomeModel {
            gamma: solution,
            design,
            initial_beta: None,
            no_events: false,
        },
        GammaDesign::JointAz => OutcomeModel {
            gamma: solution[1..].to_vec(),
            design,
            initial_beta: Some(solution[0]),
            no_events: false,
        },
    })
}
