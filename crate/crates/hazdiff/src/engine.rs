//! Shared evaluation engine for the estimating equations.
//!
//! All score integrals are evaluated over a refined partition
//! `0 = c_0 < c_1 < ... < c_K` of the follow-up window: every distinct
//! observed time is a cut, and so is every jump time of the censoring
//! survival, so each integrand factor that is a step function is constant on
//! every interval `(c_{k-1}, c_k]`. Piecewise-constant integrands are then
//! integrated exactly; `e^{bt}` factors integrate in closed form per interval;
//! and the smooth treated-odds weight is integrated by 16-node Gauss-Legendre
//! per interval.
//!
//! Subjects are ranked by descending observed time, so the risk set on any
//! interval is a prefix of the rank order. Censoring weights are precomputed
//! per (interval, rank) into interval-major triangular arrays, once per fit;
//! score evaluation across solver iterates is then pure arithmetic.

use crate::data::CompetingRisksSample;
use crate::error::{Error, Result};
use crate::numerics::{gl16, int_exp};
use crate::nuisance::{BaselineMethod, BaselineTables, CensoringModel};

/// Clamp bound for the propensity inside the treated-odds weight.
const PI_CLAMP: f64 = 1e-8;

pub(crate) struct Engine {
    pub n: usize,
    pub j_count: usize,
    pub p_dim: usize,
    /// Partition cuts, `cuts[0] = 0`.
    pub cuts: Vec<f64>,
    /// Risk-prefix length per interval: ranks `0..risk_len[k-1]` are at risk
    /// on `(c_{k-1}, c_k]`.
    pub risk_len: Vec<usize>,
    /// Cut index of each rank's observed time.
    pub cut_of: Vec<usize>,
    /// Event ranks grouped by cut (index `k - 1`).
    pub events_at: Vec<Vec<usize>>,
    // per-rank data
    pub a: Vec<f64>,
    pub status: Vec<usize>,
    pub time: Vec<f64>,
    pub pi: Vec<f64>,
    /// Rank-major covariate rows.
    pub z: Vec<f64>,
    // censoring arrays, interval-major triangular
    offsets: Vec<usize>,
    /// `1 / S_c(c_{k-1} | A_i, Z_i)` per (interval, rank).
    own_inv: Vec<f64>,
    /// `(1 - pi~) S_c(c_{k-1}|0,z) / (pi~ S_c(c_{k-1}|1,z))` per (interval, rank);
    /// `None` when the censoring model cannot produce both arms.
    rho: Option<Vec<f64>>,
    /// How many subjects had their propensity clamped inside the odds weight.
    pub clamp_count: usize,
}

impl Engine {
    pub fn new(
        sample: &CompetingRisksSample,
        pi_values: &[f64],
        censoring: &CensoringModel,
    ) -> Result<Self> {
        let n = sample.len();
        let j_count = sample.cause_count();
        let p_dim = sample.covariate_dim();
        debug_assert_eq!(pi_values.len(), n);

        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&x, &y| {
            sample.records()[y].time.total_cmp(&sample.records()[x].time).then(x.cmp(&y))
        });

        // cuts: observed times plus censoring jump times within follow-up
        let t_max = sample.records()[order[0]].time;
        let mut cut_set: std::collections::BTreeSet<u64> =
            sample.records().iter().map(|r| r.time.to_bits()).collect();
        match censoring {
            CensoringModel::Unit => {}
            CensoringModel::Cox(c) => {
                for &t in &c.baseline_times {
                    if t > 0.0 && t <= t_max {
                        cut_set.insert(t.to_bits());
                    }
                }
            }
            CensoringModel::External(e) => {
                let mut add = |tables: &[crate::nuisance::StepFunction]| {
                    for f in tables {
                        for &t in &f.times {
                            if t > 0.0 && t <= t_max {
                                cut_set.insert(t.to_bits());
                            }
                        }
                    }
                };
                add(&e.own);
                if let (Some(a0), Some(a1)) = (&e.arm0, &e.arm1) {
                    add(a0);
                    add(a1);
                }
            }
        }
        let mut cuts = vec![0.0f64];
        cuts.extend(cut_set.into_iter().map(f64::from_bits));
        let k_count = cuts.len() - 1;

        // risk prefixes (two-pointer; cuts ascend, prefixes shrink)
        let mut risk_len = vec![0usize; k_count];
        let mut ptr = n;
        for k in 1..=k_count {
            while ptr > 0 && sample.records()[order[ptr - 1]].time < cuts[k] {
                ptr -= 1;
            }
            risk_len[k - 1] = ptr;
        }

        let mut cut_of = vec![0usize; n];
        let mut events_at = vec![Vec::new(); k_count];
        let mut a = vec![0.0; n];
        let mut status = vec![0usize; n];
        let mut time = vec![0.0; n];
        let mut pi = vec![0.0; n];
        let mut pi_clamped = vec![0.0; n];
        let mut z = vec![0.0; n * p_dim];
        let mut clamp_count = 0usize;
        for (rank, &i) in order.iter().enumerate() {
            let r = &sample.records()[i];
            let k = cuts.partition_point(|&c| c < r.time);
            debug_assert_eq!(cuts[k], r.time);
            cut_of[rank] = k;
            if r.status > 0 {
                events_at[k - 1].push(rank);
            }
            a[rank] = r.treatment as f64;
            status[rank] = r.status;
            time[rank] = r.time;
            let p = pi_values[i];
            if !p.is_finite() {
                return Err(Error::estimation("non-finite propensity value"));
            }
            pi[rank] = p;
            let clamped = p.clamp(PI_CLAMP, 1.0 - PI_CLAMP);
            if clamped != p {
                clamp_count += 1;
            }
            pi_clamped[rank] = clamped;
            z[rank * p_dim..(rank + 1) * p_dim].copy_from_slice(&r.covariates);
        }

        // interval-major triangular censoring arrays
        let mut offsets = vec![0usize; k_count + 1];
        for k in 1..=k_count {
            offsets[k] = offsets[k - 1] + risk_len[k - 1];
        }
        let total = offsets[k_count];
        let mut own_inv = vec![1.0f64; total];
        let mut rho: Option<Vec<f64>> = None;

        let base_odds: Vec<f64> =
            pi_clamped.iter().map(|&p| (1.0 - p) / p).collect();

        match censoring {
            CensoringModel::Unit => {
                let mut r = vec![0.0f64; total];
                for k in 1..=k_count {
                    let len = risk_len[k - 1];
                    let slice = &mut r[offsets[k - 1]..offsets[k - 1] + len];
                    slice.copy_from_slice(&base_odds[..len]);
                }
                rho = Some(r);
            }
            CensoringModel::Cox(c) => {
                let e_own: Vec<f64> = order
                    .iter()
                    .map(|&i| {
                        let rec = &sample.records()[i];
                        c.linear_predictor(rec.treatment, &rec.covariates).exp()
                    })
                    .collect();
                let e_diff: Vec<f64> = order
                    .iter()
                    .map(|&i| {
                        let rec = &sample.records()[i];
                        c.linear_predictor(1, &rec.covariates).exp()
                            - c.linear_predictor(0, &rec.covariates).exp()
                    })
                    .collect();
                let mut r = vec![0.0f64; total];
                for k in 1..=k_count {
                    // cumulative baseline through the left endpoint is the
                    // left limit everywhere on the interval
                    let lam = c.cumulative_at(cuts[k - 1]);
                    let len = risk_len[k - 1];
                    let off = offsets[k - 1];
                    for rank in 0..len {
                        let inv = (lam * e_own[rank]).exp();
                        if inv > 1e12 {
                            return Err(Error::estimation(format!(
                                "censoring survival underflow at t = {}",
                                cuts[k]
                            )));
                        }
                        own_inv[off + rank] = inv;
                        r[off + rank] = base_odds[rank] * (lam * e_diff[rank]).exp();
                    }
                }
                rho = Some(r);
            }
            CensoringModel::External(e) => {
                for k in 1..=k_count {
                    let t_left = cuts[k - 1];
                    let len = risk_len[k - 1];
                    let off = offsets[k - 1];
                    for rank in 0..len {
                        let s = e.own[order[rank]].value_at(t_left);
                        if s < 1e-12 {
                            return Err(Error::estimation(format!(
                                "censoring survival underflow at t = {}",
                                cuts[k]
                            )));
                        }
                        own_inv[off + rank] = 1.0 / s;
                    }
                }
                if let (Some(a0), Some(a1)) = (&e.arm0, &e.arm1) {
                    let mut r = vec![0.0f64; total];
                    for k in 1..=k_count {
                        let t_left = cuts[k - 1];
                        let len = risk_len[k - 1];
                        let off = offsets[k - 1];
                        for rank in 0..len {
                            let s0 = a0[order[rank]].value_at(t_left);
                            let s1 = a1[order[rank]].value_at(t_left);
                            if s0 < 1e-12 || s1 < 1e-12 {
                                return Err(Error::estimation(format!(
                                    "censoring survival underflow at t = {}",
                                    cuts[k]
                                )));
                            }
                            r[off + rank] = base_odds[rank] * s0 / s1;
                        }
                    }
                    rho = Some(r);
                }
            }
        }

        Ok(Self {
            n,
            j_count,
            p_dim,
            cuts,
            risk_len,
            cut_of,
            events_at,
            a,
            status,
            time,
            pi,
            z,
            offsets,
            own_inv,
            rho,
            clamp_count,
        })
    }

    fn k_count(&self) -> usize {
        self.cuts.len() - 1
    }

    fn own_inv_slice(&self, k: usize) -> &[f64] {
        &self.own_inv[self.offsets[k - 1]..self.offsets[k]]
    }

    fn rho_slice(&self, k: usize) -> Result<&[f64]> {
        let rho = self.rho.as_ref().ok_or_else(|| {
            Error::input(
                "Score-2 weighting needs both censoring arms; supply the `arm` column in the external censoring table",
            )
        })?;
        Ok(&rho[self.offsets[k - 1]..self.offsets[k]])
    }

    /// Per-rank `gamma_j' Z_i` per cause.
    fn gamma_dot_z(&self, gammas: &[Vec<f64>]) -> Vec<Vec<f64>> {
        gammas
            .iter()
            .map(|g| {
                (0..self.n)
                    .map(|rank| {
                        let row = &self.z[rank * self.p_dim..(rank + 1) * self.p_dim];
                        row.iter().zip(g).map(|(z, c)| z * c).sum()
                    })
                    .collect()
            })
            .collect()
    }

    /// Breslow baseline decomposition tables, one per cause.
    pub fn baseline_tables(
        &self,
        gammas: &[Vec<f64>],
        method: BaselineMethod,
    ) -> Result<Vec<BaselineTables>> {
        let kc = self.k_count();
        let gz = self.gamma_dot_z(gammas);
        let mut tables: Vec<BaselineTables> = (0..self.j_count)
            .map(|_| BaselineTables {
                cuts: self.cuts.clone(),
                p_jump: vec![0.0; kc],
                q_slope: vec![0.0; kc],
                r_slope: vec![0.0; kc],
                method,
            })
            .collect();

        match method {
            BaselineMethod::Plain => {
                // prefix sums over ranks for the unweighted risk-set means
                let mut pref_a = vec![0.0; self.n + 1];
                for r in 0..self.n {
                    pref_a[r + 1] = pref_a[r] + self.a[r];
                }
                let mut pref_gz: Vec<Vec<f64>> = Vec::with_capacity(self.j_count);
                for j in 0..self.j_count {
                    let mut p = vec![0.0; self.n + 1];
                    for r in 0..self.n {
                        p[r + 1] = p[r] + gz[j][r];
                    }
                    pref_gz.push(p);
                }
                for k in 1..=kc {
                    let len = self.risk_len[k - 1];
                    if len == 0 {
                        continue;
                    }
                    let y = len as f64;
                    let q = pref_a[len] / y;
                    for j in 0..self.j_count {
                        tables[j].q_slope[k - 1] = q;
                        tables[j].r_slope[k - 1] = pref_gz[j][len] / y;
                    }
                    for &rank in &self.events_at[k - 1] {
                        tables[self.status[rank] - 1].p_jump[k - 1] += 1.0 / y;
                    }
                }
            }
            BaselineMethod::Weighted => {
                // weights w_i(u) = A_i (1 - pi_i) / S_c(u- | A_i, Z_i) live on
                // the treated; the treated fraction of the weighted risk set
                // is identically 1, so Q has unit slope throughout
                for k in 1..=kc {
                    let len = self.risk_len[k - 1];
                    let own = self.own_inv_slice(k);
                    let mut den = 0.0;
                    let mut num_gz = vec![0.0; self.j_count];
                    for rank in 0..len {
                        if self.a[rank] == 1.0 {
                            let w = (1.0 - self.pi[rank]) * own[rank];
                            den += w;
                            for j in 0..self.j_count {
                                num_gz[j] += w * gz[j][rank];
                            }
                        }
                    }
                    for j in 0..self.j_count {
                        tables[j].q_slope[k - 1] = 1.0;
                        tables[j].r_slope[k - 1] =
                            if den > 0.0 { num_gz[j] / den } else { 0.0 };
                    }
                    for &rank in &self.events_at[k - 1] {
                        if self.a[rank] != 1.0 {
                            continue;
                        }
                        if den <= 0.0 {
                            return Err(Error::estimation(format!(
                                "weighted risk set empty at t = {}",
                                self.cuts[k]
                            )));
                        }
                        let w = (1.0 - self.pi[rank]) * own[rank];
                        tables[self.status[rank] - 1].p_jump[k - 1] += w / den;
                    }
                }
            }
        }
        Ok(tables)
    }

    /// Score-1 estimating function
    /// `S_1j = (1/n) sum_i ∫ e^{b A_i t} S_c^{-1}(t-|A_i,Z_i) (A_i - pi_i) dM_ji(t; beta_j, Lambda_j)`
    /// with `b = sum_l beta_l` and `dM` built from the baseline tables.
    pub fn eval_score1(
        &self,
        beta: &[f64],
        gammas: &[Vec<f64>],
        tables: &[BaselineTables],
    ) -> Result<Vec<f64>> {
        debug_assert_eq!(beta.len(), self.j_count);
        let b: f64 = beta.iter().sum();
        let gz = self.gamma_dot_z(gammas);
        let mut score = vec![0.0; self.j_count];

        // own-event jumps
        for rank in 0..self.n {
            let j = match self.status[rank] {
                0 => continue,
                s => s - 1,
            };
            let k = self.cut_of[rank];
            let own = self.own_inv_slice(k)[rank];
            let e_factor = if self.a[rank] == 1.0 { (b * self.time[rank]).exp() } else { 1.0 };
            score[j] += (self.a[rank] - self.pi[rank]) * e_factor * own;
        }

        // interval terms: continuous compensator + baseline jumps
        for k in 1..=self.k_count() {
            let len = self.risk_len[k - 1];
            if len == 0 {
                continue;
            }
            let own = self.own_inv_slice(k);
            let (lo, hi) = (self.cuts[k - 1], self.cuts[k]);
            let int_len = hi - lo;
            let int_exp_b = int_exp(b, lo, hi);
            let e_hi = (b * hi).exp();
            for j in 0..self.j_count {
                let q = tables[j].q_slope[k - 1];
                let r = tables[j].r_slope[k - 1];
                let p = tables[j].p_jump[k - 1];
                // constant part of the compensator density per arm
                let dens_treat = beta[j] * (1.0 - q) - r;
                let dens_ctrl = -beta[j] * q - r;
                let mut acc = 0.0;
                for rank in 0..len {
                    let diff = self.a[rank] - self.pi[rank];
                    if self.a[rank] == 1.0 {
                        acc -= diff * own[rank] * ((gz[j][rank] + dens_treat) * int_exp_b + p * e_hi);
                    } else {
                        acc -= diff * own[rank] * ((gz[j][rank] + dens_ctrl) * int_len + p);
                    }
                }
                score[j] += acc;
            }
        }
        for s in &mut score {
            *s /= self.n as f64;
        }
        Ok(score)
    }

    /// Closed-form Score-1 estimator under the weighted Breslow baseline.
    /// Only controls contribute; the treated terms cancel pointwise against
    /// the weighted risk-set means.
    pub fn score1_closed_form(
        &self,
        gammas: &[Vec<f64>],
        tables: &[BaselineTables],
    ) -> Result<Vec<f64>> {
        if !self.a.iter().any(|&a| a == 0.0) {
            return Err(Error::estimation("degenerate: no controls"));
        }
        debug_assert!(tables.iter().all(|t| t.method == BaselineMethod::Weighted));
        let gz = self.gamma_dot_z(gammas);
        let mut den = 0.0;
        let mut num = vec![0.0; self.j_count];

        for k in 1..=self.k_count() {
            let len = self.risk_len[k - 1];
            if len == 0 {
                continue;
            }
            let own = self.own_inv_slice(k);
            let int_len = self.cuts[k] - self.cuts[k - 1];
            for rank in 0..len {
                if self.a[rank] == 1.0 {
                    continue;
                }
                let w = self.pi[rank] * own[rank];
                den += w * int_len;
                for j in 0..self.j_count {
                    let r = tables[j].r_slope[k - 1];
                    let p = tables[j].p_jump[k - 1];
                    num[j] += w * ((gz[j][rank] - r) * int_len + p);
                }
            }
        }
        // own-event terms of the controls
        for rank in 0..self.n {
            if self.a[rank] == 1.0 || self.status[rank] == 0 {
                continue;
            }
            let k = self.cut_of[rank];
            let own = self.own_inv_slice(k)[rank];
            num[self.status[rank] - 1] -= self.pi[rank] * own;
        }
        if den <= 0.0 {
            return Err(Error::estimation(
                "degenerate: no control carries positive propensity weight",
            ));
        }
        Ok(num.iter().map(|v| v / den).collect())
    }

    /// Score-2 estimating function
    /// `S_2j = (1/n) sum_i ∫ {A_i - E_i(t)} dM_ji(t; beta_j, Lambda_j)`
    /// with the treated-odds weight `E_i(t) = 1 / (1 + rho_i(t) e^{bt})`.
    /// With the plain baseline this equals the centered display
    /// `(1/n) sum_i ∫ {A_i - E_i - Abar + Ebar}{dN_ji - Y_i(beta_j A_i + gamma_j'Z_i)dt}`.
    pub fn eval_score2(
        &self,
        beta: &[f64],
        gammas: &[Vec<f64>],
        tables: &[BaselineTables],
    ) -> Result<Vec<f64>> {
        debug_assert_eq!(beta.len(), self.j_count);
        let b: f64 = beta.iter().sum();
        let gz = self.gamma_dot_z(gammas);
        let (nodes, weights) = gl16();
        let n_nodes = nodes.len();
        let mut score = vec![0.0; self.j_count];

        // per-node accumulators: SE, SEA, SE*gz_j
        let mut se = vec![0.0; n_nodes + 1];
        let mut sea = vec![0.0; n_nodes + 1];
        let mut segz = vec![vec![0.0; n_nodes + 1]; self.j_count];
        let mut u = vec![0.0; n_nodes + 1];

        for k in 1..=self.k_count() {
            let len = self.risk_len[k - 1];
            if len == 0 {
                continue;
            }
            let rho = self.rho_slice(k)?;
            let (lo, hi) = (self.cuts[k - 1], self.cuts[k]);
            let half = 0.5 * (hi - lo);
            let mid = 0.5 * (hi + lo);
            for q in 0..n_nodes {
                u[q] = (b * (mid + half * nodes[q])).exp();
            }
            u[n_nodes] = (b * hi).exp(); // left-limit node at the cut itself
            se.iter_mut().for_each(|v| *v = 0.0);
            sea.iter_mut().for_each(|v| *v = 0.0);
            for g in segz.iter_mut() {
                g.iter_mut().for_each(|v| *v = 0.0);
            }

            for rank in 0..len {
                let r = rho[rank];
                let treated = self.a[rank] == 1.0;
                for q in 0..=n_nodes {
                    let e = 1.0 / (1.0 + r * u[q]);
                    se[q] += e;
                    if treated {
                        sea[q] += e;
                    }
                    for (j, g) in segz.iter_mut().enumerate() {
                        g[q] += e * gz[j][rank];
                    }
                }
            }

            // prefix aggregates that do not depend on t
            let mut s_a = 0.0;
            let mut s_gz = vec![0.0; self.j_count];
            let mut s_agz = vec![0.0; self.j_count];
            for rank in 0..len {
                s_a += self.a[rank];
                for j in 0..self.j_count {
                    s_gz[j] += gz[j][rank];
                    if self.a[rank] == 1.0 {
                        s_agz[j] += gz[j][rank];
                    }
                }
            }

            for j in 0..self.j_count {
                let qs = tables[j].q_slope[k - 1];
                let rs = tables[j].r_slope[k - 1];
                let ps = tables[j].p_jump[k - 1];
                // ∫ over the interval of
                //   sum_r (a_r - E_r(t)) (beta_j a_r + gz_jr - beta_j q - r)
                let mut integral = 0.0;
                for q in 0..n_nodes {
                    let integrand = beta[j] * s_a + s_agz[j]
                        - beta[j] * sea[q]
                        - segz[j][q]
                        - (s_a - se[q]) * (beta[j] * qs + rs);
                    integral += weights[q] * integrand;
                }
                score[j] -= integral * half;
                // baseline jump at the cut, left-limit weights
                if ps != 0.0 {
                    score[j] -= (s_a - se[n_nodes]) * ps;
                }
            }
            // own-event jumps at this cut
            for &rank in &self.events_at[k - 1] {
                let j = self.status[rank] - 1;
                let e = 1.0 / (1.0 + rho[rank] * u[n_nodes]);
                score[j] += self.a[rank] - e;
            }
        }
        for s in &mut score {
            *s /= self.n as f64;
        }
        Ok(score)
    }

    /// Score-1 sandwich ingredients: `W` (shared across causes) and `V_j`.
    ///
    /// `W = (1/n) sum_i A_i (A_i - pi_i) ∫_0^{X_i} S_c^{-1}(t-) e^{bt} dt`,
    /// `V_j = (1/n) sum_{events j} e^{2 b A_i X_i} S_c^{-2}(X_i-) (A_i - pi_i)^2`.
    pub fn sandwich_score1(&self, beta: &[f64]) -> Result<(f64, Vec<f64>)> {
        let b: f64 = beta.iter().sum();
        let mut w = 0.0;
        for k in 1..=self.k_count() {
            let len = self.risk_len[k - 1];
            let own = self.own_inv_slice(k);
            let ie = int_exp(b, self.cuts[k - 1], self.cuts[k]);
            for rank in 0..len {
                if self.a[rank] == 1.0 {
                    w += (1.0 - self.pi[rank]) * own[rank] * ie;
                }
            }
        }
        let mut v = vec![0.0; self.j_count];
        for rank in 0..self.n {
            let j = match self.status[rank] {
                0 => continue,
                s => s - 1,
            };
            let own = self.own_inv_slice(self.cut_of[rank])[rank];
            let diff = self.a[rank] - self.pi[rank];
            let e2 = if self.a[rank] == 1.0 { (2.0 * b * self.time[rank]).exp() } else { 1.0 };
            v[j] += e2 * own * own * diff * diff;
        }
        let nf = self.n as f64;
        Ok((w / nf, v.into_iter().map(|x| x / nf).collect()))
    }

    /// Score-2 sandwich ingredients:
    /// `W = (1/n) sum_i A_i ∫_0^{X_i} (A_i - E_i(t)) dt` by per-interval
    /// quadrature, `V_j = (1/n) sum_{events j} (A_i - E_i(X_i-))^2`.
    pub fn sandwich_score2(&self, beta: &[f64]) -> Result<(f64, Vec<f64>)> {
        let b: f64 = beta.iter().sum();
        let (nodes, weights) = gl16();
        let mut w = 0.0;
        for k in 1..=self.k_count() {
            let len = self.risk_len[k - 1];
            let rho = self.rho_slice(k)?;
            let (lo, hi) = (self.cuts[k - 1], self.cuts[k]);
            let half = 0.5 * (hi - lo);
            let mid = 0.5 * (hi + lo);
            for q in 0..nodes.len() {
                let u = (b * (mid + half * nodes[q])).exp();
                let mut sum = 0.0;
                for rank in 0..len {
                    if self.a[rank] == 1.0 {
                        // 1 - E = rho u / (1 + rho u)
                        let ru = rho[rank] * u;
                        sum += ru / (1.0 + ru);
                    }
                }
                w += weights[q] * sum * half;
            }
        }
        let mut v = vec![0.0; self.j_count];
        for rank in 0..self.n {
            let j = match self.status[rank] {
                0 => continue,
                s => s - 1,
            };
            let k = self.cut_of[rank];
            let rho = self.rho_slice(k)?[rank];
            let e = 1.0 / (1.0 + rho * (b * self.time[rank]).exp());
            let diff = self.a[rank] - e;
            v[j] += diff * diff;
        }
        let nf = self.n as f64;
        Ok((w / nf, v.into_iter().map(|x| x / nf).collect()))
    }
}
