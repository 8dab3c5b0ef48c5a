//! Right-censored competing-risks samples, the counting-process event grid,
//! and tabular input/output.
//!
//! The observation unit is `(time, status, treatment, covariates)` where
//! `status = 0` marks censoring and `status = j` a failure of cause `j`,
//! `j = 1..=J`. The derived views used everywhere else are the per-cause
//! counting processes `N_j(t) = 1{X <= t, status = j}` and the at-risk
//! process `Y(t) = 1{X >= t}`.
//!
//! # CSV schema
//!
//! Header row required. Columns `time`, `status`, `treatment` are mandatory;
//! every remaining numeric column is taken as a covariate unless an explicit
//! covariate list restricts them. Decimal point `.`, comma separator, UTF-8.

use std::collections::BTreeSet;
use std::path::Path;

use crate::error::{Error, Result};

/// One subject: observed time, event status, binary treatment, covariates.
#[derive(Debug, Clone, PartialEq)]
pub struct SubjectRecord {
    /// Observed time `X = min(T, C)`; positive and finite.
    pub time: f64,
    /// 0 = censored, `j` = failure of cause `j`.
    pub status: usize,
    /// Binary treatment indicator.
    pub treatment: u8,
    /// Covariate vector; same length for every record of a sample.
    pub covariates: Vec<f64>,
}

/// A validated competing-risks sample.
#[derive(Debug, Clone)]
pub struct CompetingRisksSample {
    records: Vec<SubjectRecord>,
    cause_count: usize,
    covariate_names: Vec<String>,
    tau: f64,
}

impl CompetingRisksSample {
    /// Build a sample from records, inferring the cause count from the
    /// maximum status and defaulting `tau` to the maximum observed time.
    pub fn new(records: Vec<SubjectRecord>, covariate_names: Vec<String>) -> Result<Self> {
        let max_status = records.iter().map(|r| r.status).max().unwrap_or(0);
        Self::with_options(records, covariate_names, max_status.max(1), None)
    }

    /// Build a sample with an explicit cause count and optional follow-up
    /// limit `tau` (defaults to the maximum observed time).
    pub fn with_options(
        records: Vec<SubjectRecord>,
        covariate_names: Vec<String>,
        cause_count: usize,
        tau: Option<f64>,
    ) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::input("sample is empty"));
        }
        if cause_count == 0 {
            return Err(Error::input("cause count must be at least 1"));
        }
        let p = covariate_names.len();
        let mut max_time = 0.0f64;
        for (i, r) in records.iter().enumerate() {
            let row = i + 1;
            if !r.time.is_finite() || r.time <= 0.0 {
                return Err(Error::input(format!(
                    "row {row}: time must be positive and finite, got {}",
                    r.time
                )));
            }
            if r.status > cause_count {
                return Err(Error::input(format!(
                    "row {row}: status {} exceeds cause count {cause_count}",
                    r.status
                )));
            }
            if r.treatment > 1 {
                return Err(Error::input(format!(
                    "row {row}: treatment must be 0 or 1, got {}",
                    r.treatment
                )));
            }
            if r.covariates.len() != p {
                return Err(Error::input(format!(
                    "row {row}: expected {p} covariates, got {}",
                    r.covariates.len()
                )));
            }
            if r.covariates.iter().any(|v| !v.is_finite()) {
                return Err(Error::input(format!("row {row}: non-finite covariate")));
            }
            max_time = max_time.max(r.time);
        }
        let tau = match tau {
            Some(t) => {
                if !t.is_finite() || t < max_time {
                    return Err(Error::input(format!(
                        "tau {t} must be finite and at least the maximum observed time {max_time}"
                    )));
                }
                t
            }
            None => max_time,
        };
        Ok(Self { records, cause_count, covariate_names, tau })
    }

    pub fn records(&self) -> &[SubjectRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Number of competing causes `J`.
    pub fn cause_count(&self) -> usize {
        self.cause_count
    }

    /// Covariate dimension `p`.
    pub fn covariate_dim(&self) -> usize {
        self.covariate_names.len()
    }

    pub fn covariate_names(&self) -> &[String] {
        &self.covariate_names
    }

    /// Upper limit of follow-up; all score integrals run over `[0, tau]`.
    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// Number of observed events of the given cause (1-based).
    pub fn event_count(&self, cause: usize) -> usize {
        self.records.iter().filter(|r| r.status == cause).count()
    }

    /// Number of treated subjects.
    pub fn treated_count(&self) -> usize {
        self.records.iter().filter(|r| r.treatment == 1).count()
    }

    /// Load a sample from CSV. See the module docs for the schema.
    pub fn from_csv(path: impl AsRef<Path>, schema: &CsvSchema) -> Result<Self> {
        let mut reader = csv::Reader::from_path(path.as_ref())
            .map_err(|e| Error::input(format!("cannot open {}: {e}", path.as_ref().display())))?;
        let headers: Vec<String> =
            reader.headers().map_err(|e| Error::input(format!("bad header: {e}")))?.iter()
                .map(|h| h.trim().to_string())
                .collect();

        let col = |name: &str| -> Result<usize> {
            headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| Error::input(format!("missing column `{name}`")))
        };
        let time_col = col(&schema.time)?;
        let status_col = col(&schema.status)?;
        let treatment_col = col(&schema.treatment)?;

        let covariate_cols: Vec<usize> = match &schema.covariates {
            Some(names) => {
                let mut idx = Vec::with_capacity(names.len());
                for name in names {
                    idx.push(col(name)?);
                }
                idx
            }
            None => (0..headers.len())
                .filter(|&i| i != time_col && i != status_col && i != treatment_col)
                .collect(),
        };
        if covariate_cols.is_empty() {
            return Err(Error::input("no covariate columns found"));
        }
        let covariate_names: Vec<String> =
            covariate_cols.iter().map(|&i| headers[i].clone()).collect();

        let parse = |field: &str, row: usize, name: &str| -> Result<f64> {
            field.trim().parse::<f64>().map_err(|_| {
                Error::input(format!("row {row}: column `{name}` is not numeric: `{field}`"))
            })
        };

        let mut records = Vec::new();
        let mut max_status = 0usize;
        for (i, rec) in reader.records().enumerate() {
            let row = i + 1;
            let rec = rec.map_err(|e| Error::input(format!("row {row}: {e}")))?;
            let time = parse(&rec[time_col], row, &schema.time)?;
            if !time.is_finite() || time <= 0.0 {
                return Err(Error::input(format!("row {row}: time must be positive, got {time}")));
            }
            let status_f = parse(&rec[status_col], row, &schema.status)?;
            if status_f < 0.0 || status_f.fract() != 0.0 {
                return Err(Error::input(format!(
                    "row {row}: status must be a nonnegative integer, got {status_f}"
                )));
            }
            let status = status_f as usize;
            max_status = max_status.max(status);
            let treat_f = parse(&rec[treatment_col], row, &schema.treatment)?;
            let treatment = if treat_f == 0.0 {
                0u8
            } else if treat_f == 1.0 {
                1u8
            } else {
                return Err(Error::input(format!(
                    "row {row}: treatment must be 0 or 1, got {treat_f}"
                )));
            };
            let mut covariates = Vec::with_capacity(covariate_cols.len());
            for (&c, name) in covariate_cols.iter().zip(&covariate_names) {
                covariates.push(parse(&rec[c], row, name)?);
            }
            records.push(SubjectRecord { time, status, treatment, covariates });
        }
        Self::with_options(records, covariate_names, max_status.max(1), schema.tau)
    }

    /// Write the sample as CSV with the canonical column order
    /// `time,status,treatment,<covariates...>`.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = csv::Writer::from_path(path.as_ref())
            .map_err(|e| Error::input(format!("cannot write {}: {e}", path.as_ref().display())))?;
        let mut header = vec!["time".to_string(), "status".to_string(), "treatment".to_string()];
        header.extend(self.covariate_names.iter().cloned());
        w.write_record(&header).map_err(|e| Error::input(e.to_string()))?;
        for r in &self.records {
            let mut row = vec![
                format!("{:.17e}", r.time),
                r.status.to_string(),
                r.treatment.to_string(),
            ];
            row.extend(r.covariates.iter().map(|v| format!("{v:.17e}")));
            w.write_record(&row).map_err(|e| Error::input(e.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }

    /// Resample records with replacement by index (bootstrap support).
    pub fn resample(&self, indices: &[usize]) -> Result<Self> {
        let records: Vec<SubjectRecord> =
            indices.iter().map(|&i| self.records[i].clone()).collect();
        Self::with_options(records, self.covariate_names.clone(), self.cause_count, None)
    }
}

/// Column-name mapping for CSV input.
#[derive(Debug, Clone)]
pub struct CsvSchema {
    pub time: String,
    pub status: String,
    pub treatment: String,
    /// Restrict covariates to these columns; `None` takes all remaining ones.
    pub covariates: Option<Vec<String>>,
    /// Override for the follow-up limit.
    pub tau: Option<f64>,
}

impl Default for CsvSchema {
    fn default() -> Self {
        Self {
            time: "time".into(),
            status: "status".into(),
            treatment: "treatment".into(),
            covariates: None,
            tau: None,
        }
    }
}

/// Counting-process aggregates on the grid of distinct observed times.
///
/// Ties between events and censorings at the same time keep the censored
/// subject in the risk set for that event: `Y(t) = 1{X >= t}` does this
/// automatically since both subjects share the same grid time.
#[derive(Debug, Clone)]
pub struct EventGrid {
    /// Strictly increasing distinct observed times.
    pub times: Vec<f64>,
    /// `Y(t_k)` = number of subjects with `X >= t_k`.
    pub at_risk: Vec<f64>,
    /// Treated subjects at risk at each grid time.
    pub treated_at_risk: Vec<f64>,
    /// `events[j][k]` = number of cause-`j+1` events at `t_k`.
    pub events: Vec<Vec<f64>>,
}

impl EventGrid {
    /// Build the grid for a sample.
    pub fn new(sample: &CompetingRisksSample) -> Self {
        let mut set = BTreeSet::new();
        for r in sample.records() {
            set.insert(r.time.to_bits());
        }
        let times: Vec<f64> = set.into_iter().map(f64::from_bits).collect();
        let m = times.len();
        let j_count = sample.cause_count();
        let mut at_risk = vec![0.0; m];
        let mut treated_at_risk = vec![0.0; m];
        let mut events = vec![vec![0.0; m]; j_count];
        for r in sample.records() {
            let k = times.partition_point(|&t| t < r.time);
            debug_assert_eq!(times[k], r.time);
            // subject contributes to Y(t) for every grid time <= its own
            at_risk[k] += 1.0;
            if r.treatment == 1 {
                treated_at_risk[k] += 1.0;
            }
            if r.status > 0 {
                events[r.status - 1][k] += 1.0;
            }
        }
        // suffix sums: Y(t_k) = #{X_i >= t_k}
        for k in (0..m.saturating_sub(1)).rev() {
            at_risk[k] += at_risk[k + 1];
            treated_at_risk[k] += treated_at_risk[k + 1];
        }
        Self { times, at_risk, treated_at_risk, events }
    }

    /// `∫_0^tau Y(t) dt` evaluated exactly on the grid partition.
    pub fn integrated_at_risk(&self) -> f64 {
        let mut total = 0.0;
        let mut prev = 0.0;
        for (t, y) in self.times.iter().zip(&self.at_risk) {
            total += y * (t - prev);
            prev = *t;
        }
        total
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rec(time: f64, status: usize, treatment: u8, z: f64) -> SubjectRecord {
        SubjectRecord { time, status, treatment, covariates: vec![z] }
    }

    #[test]
    fn four_row_sample_infers_causes() {
        let s = CompetingRisksSample::new(
            vec![rec(1.0, 0, 0, 0.1), rec(2.0, 1, 1, 0.2), rec(3.0, 2, 0, 0.3), rec(4.0, 1, 1, 0.4)],
            vec!["z1".into()],
        )
        .unwrap();
        assert_eq!(s.cause_count(), 2);
        assert_eq!(s.len(), 4);
        assert_eq!(s.tau(), 4.0);
    }

    #[test]
    fn csv_round_trip_and_validation() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        std::fs::write(&path, "time,status,treatment,z1,z2\n1.0,0,0,0.5,1.0\n2.0,1,1,0.25,2.0\n2.5,2,0,0.1,0.0\n3.0,1,1,0.9,1.5\n").unwrap();
        let s = CompetingRisksSample::from_csv(&path, &CsvSchema::default()).unwrap();
        assert_eq!(s.cause_count(), 2);
        assert_eq!(s.len(), 4);
        assert_eq!(s.covariate_names(), &["z1".to_string(), "z2".to_string()]);

        // restricted covariates
        let schema =
            CsvSchema { covariates: Some(vec!["z2".into()]), ..CsvSchema::default() };
        let s2 = CompetingRisksSample::from_csv(&path, &schema).unwrap();
        assert_eq!(s2.covariate_dim(), 1);
        assert_eq!(s2.records()[1].covariates, vec![2.0]);

        // write/read round trip
        let out = dir.path().join("out.csv");
        s.write_csv(&out).unwrap();
        let s3 = CompetingRisksSample::from_csv(&out, &CsvSchema::default()).unwrap();
        for (a, b) in s.records().iter().zip(s3.records()) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn negative_time_names_row() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "time,status,treatment,z1\n1.0,1,0,0.5\n2.0,0,1,0.25\n-1.0,1,0,0.1\n")
            .unwrap();
        let err = CompetingRisksSample::from_csv(&path, &CsvSchema::default()).unwrap_err();
        assert!(err.to_string().contains("row 3"), "{err}");
    }

    #[test]
    fn missing_column_reported() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.csv");
        std::fs::write(&path, "time,status,z1\n1.0,1,0.5\n").unwrap();
        let err = CompetingRisksSample::from_csv(&path, &CsvSchema::default()).unwrap_err();
        assert!(err.to_string().contains("treatment"), "{err}");
    }

    #[test]
    fn non_numeric_cell_reported_with_row() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("n.csv");
        std::fs::write(&path, "time,status,treatment,z1\n1.0,1,0,0.5\nx,0,1,0.2\n").unwrap();
        let err = CompetingRisksSample::from_csv(&path, &CsvSchema::default()).unwrap_err();
        assert!(err.to_string().contains("row 2"), "{err}");
    }

    #[test]
    fn status_above_observed_range_sets_cause_count() {
        // statuses {0,1,3}: J inferred as 3 even though cause 2 is empty
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("j3.csv");
        std::fs::write(&path, "time,status,treatment,z1\n1.0,1,0,0.5\n2.0,3,1,0.2\n3.0,0,0,0.1\n")
            .unwrap();
        let s = CompetingRisksSample::from_csv(&path, &CsvSchema::default()).unwrap();
        assert_eq!(s.cause_count(), 3);
        assert_eq!(s.event_count(2), 0);
    }

    #[test]
    fn grid_hand_counts() {
        // times (1,2,3), all cause-1 events
        let s = CompetingRisksSample::new(
            vec![rec(1.0, 1, 0, 0.0), rec(2.0, 1, 1, 0.0), rec(3.0, 1, 0, 0.0)],
            vec!["z1".into()],
        )
        .unwrap();
        let g = EventGrid::new(&s);
        assert_eq!(g.times, vec![1.0, 2.0, 3.0]);
        assert_eq!(g.at_risk, vec![3.0, 2.0, 1.0]);
        assert_eq!(g.events[0], vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn grid_tie_keeps_censored_subject_at_risk() {
        // one event and one censoring at t = 2
        let s = CompetingRisksSample::new(
            vec![rec(2.0, 1, 1, 0.0), rec(2.0, 0, 0, 0.0)],
            vec!["z1".into()],
        )
        .unwrap();
        let g = EventGrid::new(&s);
        assert_eq!(g.times, vec![2.0]);
        assert_eq!(g.at_risk, vec![2.0]);
        assert_eq!(g.events[0], vec![1.0]);
    }

    #[test]
    fn grid_event_totals_match_direct_scan() {
        // 50 pseudo-random subjects; oracle is a direct per-record count
        let mut rng = crate::rng::stream(11, 0);
        let mut records = Vec::new();
        for _ in 0..50 {
            let t = crate::rng::uniform01(&mut rng) * 3.0 + 0.01;
            let status = crate::rng::index(&mut rng, 3);
            let a = (crate::rng::uniform01(&mut rng) < 0.5) as u8;
            records.push(rec(t, status, a, 0.0));
        }
        let s = CompetingRisksSample::with_options(records, vec!["z1".into()], 2, None).unwrap();
        let g = EventGrid::new(&s);
        for j in 1..=2 {
            let direct = s.records().iter().filter(|r| r.status == j).count() as f64;
            let grid_total: f64 = g.events[j - 1].iter().sum();
            assert_eq!(direct, grid_total);
        }
        // Y(t_k) exactness
        for (k, &t) in g.times.iter().enumerate() {
            let direct = s.records().iter().filter(|r| r.time >= t).count() as f64;
            assert_eq!(g.at_risk[k], direct);
        }
    }

    proptest! {
        #[test]
        fn integrated_at_risk_matches_min_sum(times in proptest::collection::vec(0.01f64..5.0, 1..40)) {
            let records: Vec<SubjectRecord> =
                times.iter().map(|&t| rec(t, 1, 0, 0.0)).collect();
            let s = CompetingRisksSample::new(records, vec!["z1".into()]).unwrap();
            let g = EventGrid::new(&s);
            let tau = s.tau();
            let direct: f64 = times.iter().map(|&t| t.min(tau)).sum();
            let grid = g.integrated_at_risk();
            prop_assert!((grid - direct).abs() <= 1e-12 * direct.max(1.0));
        }

        #[test]
        fn grid_invariant_under_record_order(seed in 0u64..1000) {
            let mut rng = crate::rng::stream(seed, 0);
            let mut records = Vec::new();
            for _ in 0..30 {
                let t = crate::rng::uniform01(&mut rng) * 2.0 + 0.01;
                let status = crate::rng::index(&mut rng, 3);
                records.push(rec(t, status, 0, 0.0));
            }
            let s1 = CompetingRisksSample::with_options(records.clone(), vec!["z1".into()], 2, None).unwrap();
            let mut shuffled = records.clone();
            shuffled.reverse();
            let odd: Vec<_> = shuffled.iter().step_by(2).chain(shuffled.iter().skip(1).step_by(2)).cloned().collect();
            let s2 = CompetingRisksSample::with_options(odd, vec!["z1".into()], 2, None).unwrap();
            let g1 = EventGrid::new(&s1);
            let g2 = EventGrid::new(&s2);
            prop_assert_eq!(g1.times, g2.times);
            prop_assert_eq!(g1.at_risk, g2.at_risk);
            prop_assert_eq!(g1.events, g2.events);
        }
    }
}
