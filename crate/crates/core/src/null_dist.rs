// SPDX-License-Identifier: MIT OR Apache-2.0

//! Monte Carlo tabulation of the pivotal null limits.
//!
//! With `B` a standard Brownian motion on `[0, 1]`, the scaled AUC process
//! converges under no change to
//!
//! ```text
//! G0(r) = [ (B(1-e) - B(r)) / (1-e-r) - (B(r) - B(e)) / (r-e) ] / sqrt(12)
//! ```
//!
//! and the score CUSUM to the standardized bridge
//!
//! ```text
//! H0(r) = sqrt((1-2e) / ((r-e)(1-r-e))) * [ (B(r)-B(e)) - (r-e)/(1-2e) * (B(1-e)-B(e)) ]
//! ```
//!
//! Tables hold upper quantiles of `sup G0` / `sup H0` over `r` in `[g, 1-g]`.

use std::fs;
use std::path::{Path, PathBuf};

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::rng::stream;

pub const TABLE_FORMAT_VERSION: u32 = 1;

/// Levels tabulated by default: `alpha` in 20%, 10%, 5%, 1%, 0.5%.
pub const DEFAULT_ALPHAS: [f64; 5] = [0.2, 0.1, 0.05, 0.01, 0.005];

/// Reference quantiles at `epsilon = 0.15, eta = 0.05` from `10^5` paths of
/// `10^5` knots, aligned with [`DEFAULT_ALPHAS`].
pub const REFERENCE_SUP_G0: [f64; 5] = [2.231, 2.664, 3.040, 3.784, 4.051];
pub const REFERENCE_SUP_H0: [f64; 5] = [2.170, 2.529, 2.828, 3.413, 3.626];

/// Desk-scale simulation size.
pub const DESK_KNOTS: usize = 10_000;
pub const DESK_REPS: usize = 50_000;
/// Full-scale simulation size.
pub const FULL_KNOTS: usize = 100_000;
pub const FULL_REPS: usize = 100_000;

const MIN_KNOTS: usize = 1_000;
const MIN_REPS: usize = 1_000;
const PERCENTILE_GRID: usize = 1_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StatisticKind {
    /// Supremum of the AUC-process limit.
    SupG0,
    /// Supremum of the score-CUSUM limit.
    SupH0,
}

impl StatisticKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            StatisticKind::SupG0 => "sup_g0",
            StatisticKind::SupH0 => "sup_h0",
        }
    }
}

impl std::str::FromStr for StatisticKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "g0" | "sup_g0" | "auc" => Ok(Self::SupG0),
            "h0" | "sup_h0" | "cusum" => Ok(Self::SupH0),
            other => Err(Error::InvalidConfig(format!(
                "unknown statistic kind '{other}'"
            ))),
        }
    }
}

/// Brownian motion sampled at `i / K`, `i = 0..=K`.
#[derive(Clone, Debug, PartialEq)]
pub struct BrownianPath {
    knots: Vec<f64>,
}

impl BrownianPath {
    pub fn simulate<R: Rng + ?Sized>(intervals: usize, rng: &mut R) -> Self {
        let mut knots = Vec::with_capacity(intervals + 1);
        fill_path(&mut knots, intervals, rng);
        Self { knots }
    }

    /// Path with the given knot values; `values[0]` must be 0.
    pub fn from_knots(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 || values[0] != 0.0 {
            return Err(Error::InvalidConfig(
                "a path needs at least two knots starting at 0".into(),
            ));
        }
        Ok(Self { knots: values })
    }

    pub fn intervals(&self) -> usize {
        self.knots.len() - 1
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    /// Linear interpolation between knots.
    pub fn at(&self, r: f64) -> f64 {
        interpolate(&self.knots, r)
    }
}

fn fill_path<R: Rng + ?Sized>(buf: &mut Vec<f64>, intervals: usize, rng: &mut R) {
    let scale = (1.0 / intervals as f64).sqrt();
    buf.clear();
    buf.push(0.0);
    let mut b = 0.0;
    for _ in 0..intervals {
        let z: f64 = rng.sample(StandardNormal);
        b += z * scale;
        buf.push(b);
    }
}

fn interpolate(knots: &[f64], r: f64) -> f64 {
    let k = knots.len() - 1;
    let x = r * k as f64;
    let i = (x.floor() as usize).min(k);
    let frac = x - i as f64;
    if frac <= 1e-9 || i == k {
        knots[i]
    } else if frac >= 1.0 - 1e-9 {
        knots[i + 1]
    } else {
        knots[i] + frac * (knots[i + 1] - knots[i])
    }
}

/// Knot indices `i` with `i / K` in `[gamma, 1 - gamma]`.
fn knot_range(intervals: usize, gamma: f64) -> std::ops::RangeInclusive<usize> {
    let k = intervals as f64;
    let lo = (k * gamma - 1e-9).ceil() as usize;
    let hi = (k * (1.0 - gamma) + 1e-9).floor() as usize;
    lo..=hi
}

pub fn g0_at(path: &BrownianPath, epsilon: f64, r: f64) -> f64 {
    let b_eps = path.at(epsilon);
    let b_end = path.at(1.0 - epsilon);
    let br = path.at(r);
    ((b_end - br) / (1.0 - epsilon - r) - (br - b_eps) / (r - epsilon)) / 12f64.sqrt()
}

pub fn h0_at(path: &BrownianPath, epsilon: f64, r: f64) -> f64 {
    h0_value(
        path.at(r),
        path.at(epsilon),
        path.at(1.0 - epsilon),
        epsilon,
        r,
    )
}

#[inline]
fn h0_value(br: f64, b_eps: f64, b_end: f64, epsilon: f64, r: f64) -> f64 {
    let width = 1.0 - 2.0 * epsilon;
    let scale = (width / ((r - epsilon) * (1.0 - r - epsilon))).sqrt();
    scale * ((br - b_eps) - (r - epsilon) / width * (b_end - b_eps))
}

fn sup_g0_knots(knots: &[f64], epsilon: f64, gamma: f64) -> f64 {
    let k = (knots.len() - 1) as f64;
    let b_eps = interpolate(knots, epsilon);
    let b_end = interpolate(knots, 1.0 - epsilon);
    let inv = 1.0 / 12f64.sqrt();
    knot_range(knots.len() - 1, gamma)
        .map(|i| {
            let r = i as f64 / k;
            let br = knots[i];
            ((b_end - br) / (1.0 - epsilon - r) - (br - b_eps) / (r - epsilon)) * inv
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

fn sup_h0_knots(knots: &[f64], epsilon: f64, gamma: f64) -> f64 {
    let k = (knots.len() - 1) as f64;
    let b_eps = interpolate(knots, epsilon);
    let b_end = interpolate(knots, 1.0 - epsilon);
    knot_range(knots.len() - 1, gamma)
        .map(|i| h0_value(knots[i], b_eps, b_end, epsilon, i as f64 / k))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// `max G0(r)` over knots in `[gamma, 1 - gamma]`.
pub fn sup_g0_sample(path: &BrownianPath, epsilon: f64, gamma: f64) -> f64 {
    sup_g0_knots(&path.knots, epsilon, gamma)
}

/// `max H0(r)` over knots in `[gamma, 1 - gamma]`.
pub fn sup_h0_sample(path: &BrownianPath, epsilon: f64, gamma: f64) -> f64 {
    sup_h0_knots(&path.knots, epsilon, gamma)
}

/// Everything that determines a table.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NullTableParams {
    pub kind: StatisticKind,
    pub epsilon: f64,
    pub eta: f64,
    pub knots: usize,
    pub reps: usize,
    pub seed: u64,
}

impl NullTableParams {
    pub fn desk(kind: StatisticKind, epsilon: f64, eta: f64, seed: u64) -> Self {
        Self {
            kind,
            epsilon,
            eta,
            knots: DESK_KNOTS,
            reps: DESK_REPS,
            seed,
        }
    }

    pub fn gamma(&self) -> f64 {
        self.epsilon + self.eta
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon < 0.5) {
            return Err(Error::InvalidTrim(format!(
                "epsilon={} must lie in (0, 1/2)",
                self.epsilon
            )));
        }
        if !(self.eta > 0.0 && self.eta < 0.5 - self.epsilon) {
            return Err(Error::InvalidTrim(format!(
                "eta={} must lie in (0, 1/2 - epsilon)",
                self.eta
            )));
        }
        if self.knots < MIN_KNOTS || self.reps < MIN_REPS {
            return Err(Error::InvalidConfig(format!(
                "need knots >= {MIN_KNOTS} and reps >= {MIN_REPS}, got {} and {}",
                self.knots, self.reps
            )));
        }
        if knot_range(self.knots, self.gamma()).is_empty() {
            return Err(Error::InvalidConfig(
                "no knots inside [gamma, 1-gamma]".into(),
            ));
        }
        Ok(())
    }

    fn cache_key(&self) -> String {
        format!(
            "v{TABLE_FORMAT_VERSION}|{}|{:016x}|{:016x}|{}|{}|{}",
            self.kind.as_str(),
            self.epsilon.to_bits(),
            self.eta.to_bits(),
            self.knots,
            self.reps,
            self.seed
        )
    }
}

/// Simulates `reps` suprema; path `i` uses its own stream derived from
/// `(seed, i)`.
pub fn simulate_sup_samples(params: &NullTableParams) -> Result<Vec<f64>> {
    params.validate()?;
    let p = *params;
    let gamma = p.gamma();
    Ok((0..p.reps)
        .into_par_iter()
        .map_init(
            || Vec::with_capacity(p.knots + 1),
            |buf, i| {
                let mut rng = stream(p.seed, "bm-path", i as u64);
                fill_path(buf, p.knots, &mut rng);
                match p.kind {
                    StatisticKind::SupG0 => sup_g0_knots(buf, p.epsilon, gamma),
                    StatisticKind::SupH0 => sup_h0_knots(buf, p.epsilon, gamma),
                }
            },
        )
        .collect())
}

/// Linear interpolation between order statistics: position `(n - 1) q`
/// in the sorted sample (the "type 7" rule).
pub fn empirical_quantile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty());
    let h = (sorted.len() - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuantileEntry {
    pub alpha: f64,
    /// `Q(1 - alpha)`.
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NullQuantileTable {
    pub version: u32,
    pub kind: StatisticKind,
    pub epsilon: f64,
    pub eta: f64,
    pub gamma: f64,
    pub knots: usize,
    pub reps: usize,
    pub seed: u64,
    /// Sorted by decreasing `alpha`.
    pub quantiles: Vec<QuantileEntry>,
    /// Empirical quantiles at probabilities `i / (len - 1)`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub raw_percentiles: Vec<f64>,
    pub checksum: String,
}

impl NullQuantileTable {
    /// Table built from already simulated suprema.
    pub fn from_samples(
        params: &NullTableParams,
        mut samples: Vec<f64>,
        extra_alphas: &[f64],
    ) -> Self {
        samples.sort_unstable_by(f64::total_cmp);
        let mut alphas: Vec<f64> = DEFAULT_ALPHAS
            .iter()
            .chain(extra_alphas)
            .copied()
            .filter(|a| *a > 0.0 && *a < 1.0)
            .collect();
        alphas.sort_unstable_by(|a, b| b.total_cmp(a));
        alphas.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
        let quantiles = alphas
            .into_iter()
            .map(|alpha| QuantileEntry {
                alpha,
                value: empirical_quantile(&samples, 1.0 - alpha),
            })
            .collect();
        let raw_percentiles = (0..=PERCENTILE_GRID)
            .map(|i| empirical_quantile(&samples, i as f64 / PERCENTILE_GRID as f64))
            .collect();
        let mut table = Self {
            version: TABLE_FORMAT_VERSION,
            kind: params.kind,
            epsilon: params.epsilon,
            eta: params.eta,
            gamma: params.gamma(),
            knots: params.knots,
            reps: params.reps,
            seed: params.seed,
            quantiles,
            raw_percentiles,
            checksum: String::new(),
        };
        table.checksum = table.compute_checksum();
        table
    }

    /// Table holding only the reference values at `epsilon = 0.15, eta = 0.05`.
    pub fn reference(kind: StatisticKind) -> Self {
        let values = match kind {
            StatisticKind::SupG0 => REFERENCE_SUP_G0,
            StatisticKind::SupH0 => REFERENCE_SUP_H0,
        };
        let mut table = Self {
            version: TABLE_FORMAT_VERSION,
            kind,
            epsilon: 0.15,
            eta: 0.05,
            gamma: 0.15 + 0.05,
            knots: FULL_KNOTS,
            reps: FULL_REPS,
            seed: 0,
            quantiles: DEFAULT_ALPHAS
                .iter()
                .zip(values)
                .map(|(&alpha, value)| QuantileEntry { alpha, value })
                .collect(),
            raw_percentiles: Vec::new(),
            checksum: String::new(),
        };
        table.checksum = table.compute_checksum();
        table
    }

    pub fn params(&self) -> NullTableParams {
        NullTableParams {
            kind: self.kind,
            epsilon: self.epsilon,
            eta: self.eta,
            knots: self.knots,
            reps: self.reps,
            seed: self.seed,
        }
    }

    pub fn compute_checksum(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.params().cache_key().as_bytes());
        for q in &self.quantiles {
            h.update(q.alpha.to_bits().to_le_bytes());
            h.update(q.value.to_bits().to_le_bytes());
        }
        for v in &self.raw_percentiles {
            h.update(v.to_bits().to_le_bytes());
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn verify(&self) -> bool {
        self.version == TABLE_FORMAT_VERSION && self.checksum == self.compute_checksum()
    }

    /// `Q(1 - alpha)`. `alpha = 0` yields `+inf` so nothing is rejected.
    pub fn critical_value(&self, alpha: f64) -> Result<f64> {
        if alpha == 0.0 {
            return Ok(f64::INFINITY);
        }
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "alpha={alpha} outside (0, 1)"
            )));
        }
        if let Some(q) = self
            .quantiles
            .iter()
            .find(|q| (q.alpha - alpha).abs() < 1e-12)
        {
            return Ok(q.value);
        }
        if self.raw_percentiles.len() >= 2 {
            return Ok(empirical_quantile(&self.raw_percentiles, 1.0 - alpha));
        }
        Err(Error::TableMismatch(format!("alpha={alpha} not tabulated")))
    }

    pub fn is_monotone(&self) -> bool {
        self.quantiles.windows(2).all(|w| w[0].value <= w[1].value)
            && self.raw_percentiles.windows(2).all(|w| w[0] <= w[1])
    }
}

pub fn build_table(params: &NullTableParams, extra_alphas: &[f64]) -> Result<NullQuantileTable> {
    let samples = simulate_sup_samples(params)?;
    Ok(NullQuantileTable::from_samples(
        params,
        samples,
        extra_alphas,
    ))
}

/// Directory of JSON tables keyed by a hash of their parameters.
#[derive(Clone, Debug)]
pub struct QuantileCache {
    dir: PathBuf,
}

pub const CACHE_DIR_ENV: &str = "CHANGEAUC_CACHE_DIR";

impl QuantileCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    /// Explicit directory, else `$CHANGEAUC_CACHE_DIR`, else a directory
    /// under the system temp dir.
    pub fn resolve(explicit: Option<&Path>) -> Self {
        let dir = explicit
            .map(Path::to_path_buf)
            .or_else(|| std::env::var_os(CACHE_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| std::env::temp_dir().join("changeauc-quantiles"));
        Self { dir }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path_for(&self, params: &NullTableParams) -> PathBuf {
        let digest = Sha256::digest(params.cache_key().as_bytes());
        let hex: String = digest[..8].iter().map(|b| format!("{b:02x}")).collect();
        self.dir
            .join(format!("{}-{hex}.json", params.kind.as_str()))
    }

    pub fn load(&self, params: &NullTableParams) -> Option<NullQuantileTable> {
        let text = fs::read_to_string(self.path_for(params)).ok()?;
        let table: NullQuantileTable = serde_json::from_str(&text).ok()?;
        (table.params() == *params && table.verify()).then_some(table)
    }

    pub fn store(&self, table: &NullQuantileTable) -> Result<PathBuf> {
        fs::create_dir_all(&self.dir)?;
        let path = self.path_for(&table.params());
        let tmp = path.with_extension(format!("tmp{}", std::process::id()));
        fs::write(&tmp, serde_json::to_vec_pretty(table)?)?;
        fs::rename(&tmp, &path)?;
        Ok(path)
    }

    /// Cached table when present and intact; otherwise simulates it and
    /// tries to store it. A failed write is logged, not returned.
    pub fn get_or_build(
        &self,
        params: &NullTableParams,
        extra_alphas: &[f64],
    ) -> Result<NullQuantileTable> {
        if let Some(t) = self.load(params) {
            if extra_alphas
                .iter()
                .all(|&a| t.quantiles.iter().any(|q| (q.alpha - a).abs() < 1e-12))
            {
                return Ok(t);
            }
        }
        let table = build_table(params, extra_alphas)?;
        if let Err(e) = self.store(&table) {
            log::warn!(
                "could not cache quantile table in {}: {e}",
                self.dir.display()
            );
        }
        Ok(table)
    }
}
