// SPDX-License-Identifier: MIT OR Apache-2.0

//! Shared data model: the observed series, the three-way sample split, the
//! candidate grid and the run configuration.
//!
//! Time indices exposed by this module are 1-based: observation `Z_t` with
//! `t = 1..=T` lives in row `t - 1` of [`Series`].

use std::ops::RangeInclusive;

use serde::{Deserialize, Serialize};

use crate::classifiers::{ForestConfig, LogisticL1Config};
use crate::error::{Error, Result};

/// Shortest series accepted by any detection call.
pub const MIN_SERIES_LEN: usize = 20;

pub const DEFAULT_EPSILON: f64 = 0.15;
pub const DEFAULT_ETA: f64 = 0.05;
pub const DEFAULT_ALPHA: f64 = 0.05;

/// `floor(t * r)` with a small guard so that products like `1000 * 0.2`
/// land on the intended integer despite binary rounding.
pub(crate) fn floor_frac(t: usize, r: f64) -> usize {
    let x = t as f64 * r;
    (x + 1e-9 * x.abs().max(1.0)).floor().max(0.0) as usize
}

/// A time-ordered `T x p` matrix of finite observations, stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Series {
    values: Vec<f64>,
    len: usize,
    dim: usize,
}

impl Series {
    pub fn new(values: Vec<f64>, len: usize, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidSeries("dimension must be >= 1".into()));
        }
        if values.len() != len * dim {
            return Err(Error::InvalidSeries(format!(
                "buffer of {} values does not match {len} x {dim}",
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidSeries(format!(
                "non-finite value at t={}, column {}",
                i / dim + 1,
                i % dim + 1
            )));
        }
        Ok(Self { values, len, dim })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if let Some(t) = rows.iter().position(|r| r.len() != dim) {
            return Err(Error::InvalidSeries(format!(
                "row {} has {} columns, expected {dim}",
                t + 1,
                rows[t].len()
            )));
        }
        Self::new(rows.concat(), rows.len(), dim)
    }

    /// Univariate series.
    pub fn from_column(values: Vec<f64>) -> Result<Self> {
        let len = values.len();
        Self::new(values, len, 1)
    }

    /// Number of observations `T`.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Dimension `p`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Observation `Z_t` for 1-based `t`.
    pub fn at(&self, t: usize) -> &[f64] {
        self.row(t - 1)
    }

    /// Row by 0-based position.
    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.dim)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    /// Sub-series for the 1-based inclusive time range `[lo, hi]`.
    pub fn segment(&self, lo: usize, hi: usize) -> Result<Series> {
        if lo == 0 || lo > hi || hi > self.len {
            return Err(Error::InvalidSeries(format!(
                "segment [{lo}, {hi}] outside [1, {}]",
                self.len
            )));
        }
        Ok(Series {
            values: self.values[(lo - 1) * self.dim..hi * self.dim].to_vec(),
            len: hi - lo + 1,
            dim: self.dim,
        })
    }

    /// Series whose row `i` is row `order[i]` of `self`.
    pub fn reordered(&self, order: &[usize]) -> Series {
        debug_assert_eq!(order.len(), self.len);
        let mut values = Vec::with_capacity(self.values.len());
        for &i in order {
            values.extend_from_slice(self.row(i));
        }
        Series {
            values,
            len: self.len,
            dim: self.dim,
        }
    }
}

/// Three-way split of `[1, T]` into the training head `d0`, the validation
/// window `dv` and the training tail `d1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitPlan {
    len: usize,
    epsilon: f64,
    eta: f64,
    gamma: f64,
    m: usize,
}

impl SplitPlan {
    pub fn new(len: usize, epsilon: f64, eta: f64) -> Result<Self> {
        if len < MIN_SERIES_LEN {
            return Err(Error::SegmentTooShort {
                len,
                min: MIN_SERIES_LEN,
            });
        }
        if !(epsilon > 0.0 && epsilon < 0.5) {
            return Err(Error::InvalidTrim(format!(
                "epsilon={epsilon} must lie in (0, 1/2)"
            )));
        }
        if !(eta > 0.0 && eta < 0.5 - epsilon) {
            return Err(Error::InvalidTrim(format!(
                "eta={eta} must lie in (0, 1/2 - epsilon) = (0, {})",
                0.5 - epsilon
            )));
        }
        let gamma = epsilon + eta;
        let m = floor_frac(len, epsilon);
        if m == 0 {
            return Err(Error::InvalidTrim(format!(
                "floor(T * epsilon) = 0 for T={len}, epsilon={epsilon}"
            )));
        }
        if floor_frac(len, gamma) <= m {
            return Err(Error::InvalidTrim(format!(
                "floor(T * (epsilon + eta)) must exceed floor(T * epsilon) = {m}"
            )));
        }
        Ok(Self {
            len,
            epsilon,
            eta,
            gamma,
            m,
        })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// `epsilon + eta`.
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Size of each training block, `floor(T * epsilon)`.
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn d0(&self) -> RangeInclusive<usize> {
        1..=self.m
    }

    pub fn dv(&self) -> RangeInclusive<usize> {
        self.m + 1..=self.len - self.m
    }

    pub fn d1(&self) -> RangeInclusive<usize> {
        self.len - self.m + 1..=self.len
    }

    /// `|dv| = T - 2m`.
    pub fn validation_len(&self) -> usize {
        self.len - 2 * self.m
    }

    pub fn candidate_grid(&self) -> Result<CandidateGrid> {
        CandidateGrid::new(self, self.len)
    }
}

/// Admissible split points `k`, all integers in `[floor(T gamma), floor(T (1 - gamma))]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateGrid {
    lo: usize,
    hi: usize,
}

impl CandidateGrid {
    pub fn new(plan: &SplitPlan, len: usize) -> Result<Self> {
        if len != plan.len() {
            return Err(Error::InvalidTrim(format!(
                "plan built for T={} used with T={len}",
                plan.len()
            )));
        }
        let lo = floor_frac(len, plan.gamma());
        let hi = floor_frac(len, 1.0 - plan.gamma());
        if lo > hi {
            return Err(Error::EmptyGrid { lo, hi });
        }
        debug_assert!(lo > plan.m() && hi < len - plan.m());
        Ok(Self { lo, hi })
    }

    pub fn lo(&self) -> usize {
        self.lo
    }

    pub fn hi(&self) -> usize {
        self.hi
    }

    pub fn len(&self) -> usize {
        self.hi - self.lo + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, k: usize) -> bool {
        (self.lo..=self.hi).contains(&k)
    }

    pub fn iter(&self) -> RangeInclusive<usize> {
        self.lo..=self.hi
    }
}

/// Pure constructor form of [`SplitPlan::new`].
pub fn make_split_plan(len: usize, epsilon: f64, eta: f64) -> Result<SplitPlan> {
    SplitPlan::new(len, epsilon, eta)
}

pub fn candidate_grid(plan: &SplitPlan, len: usize) -> Result<CandidateGrid> {
    CandidateGrid::new(plan, len)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassifierKind {
    LogisticL1,
    #[default]
    RandomForest,
    ConstantGuess,
}

impl ClassifierKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ClassifierKind::LogisticL1 => "logistic_l1",
            ClassifierKind::RandomForest => "random_forest",
            ClassifierKind::ConstantGuess => "constant_guess",
        }
    }
}

impl std::str::FromStr for ClassifierKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "logistic_l1" | "logistic" | "logis" => Ok(Self::LogisticL1),
            "random_forest" | "rf" | "forest" => Ok(Self::RandomForest),
            "constant_guess" | "constant" => Ok(Self::ConstantGuess),
            other => Err(Error::InvalidConfig(format!(
                "unknown classifier '{other}'"
            ))),
        }
    }
}

/// Everything needed to rerun one detection.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub alpha: f64,
    pub seed: u64,
    pub classifier: ClassifierKind,
    pub epsilon: f64,
    pub eta: f64,
    pub logistic: LogisticL1Config,
    pub forest: ForestConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            alpha: DEFAULT_ALPHA,
            seed: 0,
            classifier: ClassifierKind::default(),
            epsilon: DEFAULT_EPSILON,
            eta: DEFAULT_ETA,
            logistic: LogisticL1Config::default(),
            forest: ForestConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn with_classifier(mut self, kind: ClassifierKind) -> Self {
        self.classifier = kind;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn gamma(&self) -> f64 {
        self.epsilon + self.eta
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.alpha) {
            return Err(Error::InvalidConfig(format!(
                "alpha={} must lie in [0, 1)",
                self.alpha
            )));
        }
        self.logistic.validate()?;
        self.forest.validate()
    }
}
