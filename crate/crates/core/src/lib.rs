// SPDX-License-Identifier: MIT OR Apache-2.0

//! Offline change-point detection driven by a classifier's validation AUC.
//!
//! A series is split into a training head and tail and a validation window.
//! A classifier learns to tell head from tail, scores the window, and the
//! Mann-Whitney AUC of every candidate split of the window forms a scan
//! process. Its maximum, calibrated against a tabulated Brownian-motion
//! limit, tests for a single change; seeded binary segmentation extends
//! the test to several changes.
//!
//! ```no_run
//! use changeauc::{generate, test_single, DgpKind, DgpSpec, NullQuantileTable, RunConfig, StatisticKind};
//!
//! let series = generate(&DgpSpec::single(DgpKind::DenseMean, 600, 20), 7).unwrap();
//! let table = NullQuantileTable::reference(StatisticKind::SupG0);
//! let report = test_single(&series, &RunConfig::default().with_seed(7), &table).unwrap();
//! println!("reject={} at {:?}", report.reject, report.change_point);
//! ```

pub mod classifiers;
pub mod cli;
pub mod cusum;
pub mod error;
pub mod io;
pub mod model;
pub mod null_dist;
pub mod rng;
pub mod sbs;
pub mod scan;
mod serde_util;
pub mod simbench;

pub use classifiers::{predict_proba, train, FittedClassifier, TrainSet};
pub use cusum::{cusum_curve, cusum_test, CusumCurve};
pub use error::{Error, Result};
pub use io::{load_csv, ReportEnvelope};
pub use model::{
    candidate_grid, make_split_plan, CandidateGrid, ClassifierKind, RunConfig, Series, SplitPlan,
};
pub use null_dist::{
    build_table, NullQuantileTable, NullTableParams, QuantileCache, StatisticKind,
};
pub use sbs::{detect_multiple, MultiCpReport, SbsConfig};
pub use scan::{auc_at, auc_curve, scan, test_single, AucCurve, ScoreSeries, SingleCpReport};
pub use simbench::{
    adjusted_rand_index, generate, run_power_experiment, run_size_experiment, DgpKind, DgpSpec,
    ExperimentResult,
};
