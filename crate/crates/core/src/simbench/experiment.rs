// SPDX-License-Identifier: MIT OR Apache-2.0

use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{adjusted_rand_index, generate, DgpSpec};
use crate::cusum::cusum_test;
use crate::error::{Error, Result};
use crate::model::RunConfig;
use crate::null_dist::{NullQuantileTable, StatisticKind};
use crate::rng::derive_seed;
use crate::scan::{test_single, SingleCpReport};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Size,
    Power,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RepRecord {
    pub rep: usize,
    pub data_seed: u64,
    pub run_seed: u64,
    pub reject: bool,
    pub scaled_stat: f64,
    pub r_hat: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ari: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub localization_error: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub kind: ExperimentKind,
    pub dgp: DgpSpec,
    pub statistic: StatisticKind,
    pub config: RunConfig,
    pub rep_count: usize,
    pub rejections: usize,
    pub rejection_rate: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub ari_samples: Vec<f64>,
    /// `|r_hat - t0|` for every replication.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub localization_errors: Vec<usize>,
    pub records: Vec<RepRecord>,
    /// Wall-clock per replication; not serialized so reports stay
    /// reproducible.
    #[serde(skip)]
    pub runtimes_ms: Vec<f64>,
}

impl ExperimentResult {
    pub fn median_ari(&self) -> Option<f64> {
        median(self.ari_samples.clone())
    }

    pub fn median_localization_error(&self) -> Option<f64> {
        median(self.localization_errors.iter().map(|&e| e as f64).collect())
    }

    /// One CSV row per replication.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record([
            "rep",
            "data_seed",
            "run_seed",
            "reject",
            "scaled_stat",
            "r_hat",
            "ari",
            "localization_error",
            "runtime_ms",
        ])?;
        for (i, r) in self.records.iter().enumerate() {
            out.write_record([
                r.rep.to_string(),
                r.data_seed.to_string(),
                r.run_seed.to_string(),
                r.reject.to_string(),
                r.scaled_stat.to_string(),
                r.r_hat.to_string(),
                r.ari.map(|v| v.to_string()).unwrap_or_default(),
                r.localization_error
                    .map(|v| v.to_string())
                    .unwrap_or_default(),
                self.runtimes_ms
                    .get(i)
                    .map(|v| format!("{v:.3}"))
                    .unwrap_or_default(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

fn median(mut v: Vec<f64>) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_unstable_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    })
}

fn run_test(
    series: &crate::model::Series,
    cfg: &RunConfig,
    table: &NullQuantileTable,
) -> Result<SingleCpReport> {
    let report = match table.kind {
        StatisticKind::SupG0 => test_single(series, cfg, table)?,
        StatisticKind::SupH0 => cusum_test(series, cfg, table)?,
    };
    Ok(report.without_curves())
}

fn run(
    kind: ExperimentKind,
    spec: &DgpSpec,
    cfg: &RunConfig,
    reps: usize,
    table: &NullQuantileTable,
) -> Result<ExperimentResult> {
    spec.validate()?;
    cfg.validate()?;
    if reps == 0 {
        return Err(Error::InvalidConfig("reps must be >= 1".into()));
    }
    let t0 = spec.change_points.first().copied();
    let outcomes = (0..reps)
        .into_par_iter()
        .map(|rep| -> Result<(RepRecord, f64)> {
            let started = Instant::now();
            let data_seed = derive_seed(cfg.seed, "rep-data", rep as u64);
            let run_seed = derive_seed(cfg.seed, "rep-run", rep as u64);
            let series = generate(spec, data_seed)?;
            let mut local = cfg.clone();
            local.seed = run_seed;
            let report = run_test(&series, &local, table)?;
            let (ari, localization_error) = match (kind, t0) {
                (ExperimentKind::Power, Some(t0)) => {
                    let est: Vec<usize> = report.change_point.into_iter().collect();
                    (
                        Some(adjusted_rand_index(&spec.change_points, &est, spec.len)?),
                        Some(report.r_hat.abs_diff(t0)),
                    )
                }
                _ => (None, None),
            };
            let record = RepRecord {
                rep,
                data_seed,
                run_seed,
                reject: report.reject,
                scaled_stat: report.scaled_stat,
                r_hat: report.r_hat,
                ari,
                localization_error,
            };
            Ok((record, started.elapsed().as_secs_f64() * 1e3))
        })
        .collect::<Result<Vec<_>>>()?;
    let (records, runtimes_ms): (Vec<RepRecord>, Vec<f64>) = outcomes.into_iter().unzip();
    let rejections = records.iter().filter(|r| r.reject).count();
    Ok(ExperimentResult {
        kind,
        dgp: spec.clone(),
        statistic: table.kind,
        config: cfg.clone(),
        rep_count: reps,
        rejections,
        rejection_rate: rejections as f64 / reps as f64,
        ari_samples: records.iter().filter_map(|r| r.ari).collect(),
        localization_errors: records
            .iter()
            .filter_map(|r| r.localization_error)
            .collect(),
        records,
        runtimes_ms,
    })
}

/// Empirical rejection rate over `reps` series from a null process.
pub fn run_size_experiment(
    spec: &DgpSpec,
    cfg: &RunConfig,
    reps: usize,
    table: &NullQuantileTable,
) -> Result<ExperimentResult> {
    if !spec.change_points.is_empty() {
        return Err(Error::InvalidConfig(
            "size experiments need a process without change-points".into(),
        ));
    }
    run(ExperimentKind::Size, spec, cfg, reps, table)
}

/// Rejection rate, ARI and localization error over `reps` series with a
/// single change.
pub fn run_power_experiment(
    spec: &DgpSpec,
    cfg: &RunConfig,
    reps: usize,
    table: &NullQuantileTable,
) -> Result<ExperimentResult> {
    if spec.change_points.len() != 1 {
        return Err(Error::InvalidConfig(
            "power experiments need exactly one change-point".into(),
        ));
    }
    run(ExperimentKind::Power, spec, cfg, reps, table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ClassifierKind;
    use crate::simbench::DgpKind;

    #[test]
    fn alpha_zero_never_rejects() {
        let spec = DgpSpec::single(DgpKind::StandardNull, 100, 3);
        let cfg = RunConfig::default()
            .with_classifier(ClassifierKind::LogisticL1)
            .with_alpha(0.0)
            .with_seed(1);
        let table = NullQuantileTable::reference(StatisticKind::SupG0);
        let res = run_size_experiment(&spec, &cfg, 10, &table).unwrap();
        assert_eq!(res.rejection_rate, 0.0);
    }

    #[test]
    fn deterministic_under_master_seed() {
        let spec = DgpSpec::single(DgpKind::DenseMean, 200, 10);
        let cfg = RunConfig::default()
            .with_classifier(ClassifierKind::LogisticL1)
            .with_seed(3);
        let table = NullQuantileTable::reference(StatisticKind::SupG0);
        let a = run_power_experiment(&spec, &cfg, 6, &table).unwrap();
        let b = run_power_experiment(&spec, &cfg, 6, &table).unwrap();
        assert_eq!(a.records, b.records);
        assert!(a.ari_samples.iter().all(|v| (-1.0..=1.0).contains(v)));
        assert_eq!(a.localization_errors.len(), 6);
    }

    #[test]
    fn size_requires_null_spec() {
        let spec = DgpSpec::single(DgpKind::DenseMean, 200, 10);
        let table = NullQuantileTable::reference(StatisticKind::SupG0);
        assert!(run_size_experiment(&spec, &RunConfig::default(), 2, &table).is_err());
    }
}
