// SPDX-License-Identifier: MIT OR Apache-2.0

use std::path::PathBuf;

/// Errors produced anywhere in the detection pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid trimming configuration: {0}")]
    InvalidTrim(String),

    #[error("empty candidate grid: lo={lo} > hi={hi}")]
    EmptyGrid { lo: usize, hi: usize },

    #[error("candidate k={k} outside grid [{lo}, {hi}]")]
    OutOfGrid { k: usize, lo: usize, hi: usize },

    #[error("invalid series: {0}")]
    InvalidSeries(String),

    #[error("training set must contain both classes")]
    SingleClass,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimMismatch { expected: usize, got: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("quantile table mismatch: {0}")]
    TableMismatch(String),

    #[error("invalid decay {0}: must lie in [1/2, 1)")]
    InvalidDecay(f64),

    #[error("segment of length {len} too short (need at least {min})")]
    SegmentTooShort { len: usize, min: usize },

    #[error("invalid change-points: {0}")]
    InvalidChangePoints(String),

    #[error("{path}:{row}:{col}: {msg}")]
    Parse {
        path: PathBuf,
        row: usize,
        col: usize,
        msg: String,
    },

    #[error("{0}: file contains no data rows")]
    EmptyFile(PathBuf),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
