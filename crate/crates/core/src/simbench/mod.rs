// SPDX-License-Identifier: MIT OR Apache-2.0

//! Synthetic benchmarks: data generators, the adjusted Rand index and
//! Monte Carlo size/power experiments.

mod ari;
mod dgp;
mod experiment;

pub use ari::{adjusted_rand_index, segment_labels};
pub use dgp::{cholesky, generate, DgpKind, DgpSpec};
pub use experiment::{
    run_power_experiment, run_size_experiment, ExperimentKind, ExperimentResult, RepRecord,
};
