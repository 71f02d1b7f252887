// SPDX-License-Identifier: MIT OR Apache-2.0

//! Multiple change-points by seeded binary segmentation.
//!
//! Each recursion node scans a deterministic multi-scale family of
//! sub-intervals with the single change-point AUC scan, calibrates a
//! threshold by permuting the node's segment, and splits at the estimate of
//! the strongest interval when its maximum AUC reaches the threshold.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{RunConfig, Series, SplitPlan, MIN_SERIES_LEN};
use crate::rng::{derive_seed, stream};
use crate::scan::scan;

pub const DEFAULT_DECAY: f64 = std::f64::consts::FRAC_1_SQRT_2;
pub const DEFAULT_MIN_LEN: usize = 40;
pub const DEFAULT_PERMUTATIONS: usize = 199;
pub const DEFAULT_THRESHOLD_QUANTILE: f64 = 0.9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    /// `l_k = T * decay^(k-1)`.
    pub length: f64,
    /// `T_k = 2 * ceil((1/decay)^(k-1)) - 1`.
    pub count: usize,
    /// `s_k = (T - l_k) / (T_k - 1)`, zero for the first layer.
    pub shift: f64,
}

/// Seeded intervals for a segment of length `len`, 1-based inclusive.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeededIntervalPlan {
    pub len: usize,
    pub decay: f64,
    pub min_len: usize,
    pub layers: Vec<Layer>,
    pub intervals: Vec<(usize, usize)>,
}

pub fn seeded_intervals(len: usize, decay: f64, min_len: usize) -> Result<SeededIntervalPlan> {
    if !(0.5..1.0).contains(&decay) {
        return Err(Error::InvalidDecay(decay));
    }
    if min_len == 0 || len < 2 * min_len {
        return Err(Error::InvalidConfig(format!(
            "need T >= 2 * min_len, got T={len}, min_len={min_len}"
        )));
    }
    let t = len as f64;
    let growth = 1.0 / decay;
    let n_layers = ((t.ln() / growth.ln()) - 1e-9).ceil().max(1.0) as usize;
    let mut layers = Vec::with_capacity(n_layers);
    let mut intervals = Vec::new();
    let mut seen = HashSet::new();
    for k in 1..=n_layers {
        let length = t * decay.powi(k as i32 - 1);
        let count = 2 * (growth.powi(k as i32 - 1) - 1e-9).ceil() as usize - 1;
        let shift = if count > 1 {
            (t - length) / (count - 1) as f64
        } else {
            0.0
        };
        layers.push(Layer {
            length,
            count,
            shift,
        });
        for i in 0..count {
            let start = i as f64 * shift;
            let lo = (start + 1e-9).floor() as usize + 1;
            let hi = ((start + length + 1e-9).floor() as usize).min(len);
            if hi + 1 >= lo + min_len && seen.insert((lo, hi)) {
                intervals.push((lo, hi));
            }
        }
    }
    Ok(SeededIntervalPlan {
        len,
        decay,
        min_len,
        layers,
        intervals,
    })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PermutationStatistic {
    /// Maximum AUC over the seeded intervals of the permuted segment, the
    /// same statistic the threshold is compared with.
    #[default]
    SeededMax,
    /// Maximum AUC of a single scan of the whole permuted segment.
    FullSegment,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PermutationConfig {
    pub permutations: usize,
    pub threshold_quantile: f64,
    pub seed: u64,
    pub statistic: PermutationStatistic,
}

impl Default for PermutationConfig {
    fn default() -> Self {
        Self {
            permutations: DEFAULT_PERMUTATIONS,
            threshold_quantile: DEFAULT_THRESHOLD_QUANTILE,
            seed: 0,
            statistic: PermutationStatistic::default(),
        }
    }
}

impl PermutationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.permutations < 19 {
            return Err(Error::InvalidConfig(format!(
                "need at least 19 permutations, got {}",
                self.permutations
            )));
        }
        if !(self.threshold_quantile > 0.0 && self.threshold_quantile < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "threshold quantile {} outside (0, 1)",
                self.threshold_quantile
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SbsConfig {
    pub decay: f64,
    pub min_len: usize,
    pub permutation: PermutationConfig,
}

impl Default for SbsConfig {
    fn default() -> Self {
        Self {
            decay: DEFAULT_DECAY,
            min_len: DEFAULT_MIN_LEN,
            permutation: PermutationConfig::default(),
        }
    }
}

/// Order statistic `ceil(q * B)` (1-based) of the permuted maxima.
pub fn ceiling_quantile(values: &[f64], q: f64) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    let idx = ((q * sorted.len() as f64) - 1e-9).ceil().max(1.0) as usize;
    sorted[idx.min(sorted.len()) - 1]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntervalScan {
    pub lo: usize,
    pub hi: usize,
    pub q_hat: f64,
    pub r_hat: usize,
}

fn interval_seed(base: u64, lo: usize, hi: usize) -> u64 {
    derive_seed(base, "interval", ((lo as u64) << 32) | hi as u64)
}

/// Scans every seeded interval of `series` that admits a valid split.
/// Positions are reported in the coordinates of `series` shifted by `offset`.
fn scan_intervals(
    series: &Series,
    offset: usize,
    cfg: &RunConfig,
    sbs: &SbsConfig,
    seed: u64,
) -> Result<Vec<IntervalScan>> {
    let plan = seeded_intervals(series.len(), sbs.decay, sbs.min_len)?;
    let scans = plan
        .intervals
        .par_iter()
        .map(|&(lo, hi)| -> Result<Option<IntervalScan>> {
            let len = hi - lo + 1;
            if len < MIN_SERIES_LEN || SplitPlan::new(len, cfg.epsilon, cfg.eta).is_err() {
                log::debug!("sbs: interval [{lo}, {hi}] too short to split; skipped");
                return Ok(None);
            }
            let seg = series.segment(lo, hi)?;
            let mut local = cfg.clone();
            local.seed = interval_seed(seed, lo + offset, hi + offset);
            let s = scan(&seg, &local)?;
            Ok(Some(IntervalScan {
                lo: lo + offset,
                hi: hi + offset,
                q_hat: s.curve.q_hat(),
                r_hat: s.curve.r_hat() + lo - 1 + offset,
            }))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(scans.into_iter().flatten().collect())
}

fn max_q(scans: &[IntervalScan]) -> Option<&IntervalScan> {
    scans
        .iter()
        .fold(None, |best: Option<&IntervalScan>, s| match best {
            Some(b) if b.q_hat >= s.q_hat => Some(b),
            _ => Some(s),
        })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Threshold {
    pub delta: f64,
    pub permuted_stats: Vec<f64>,
}

/// Threshold from `B` seeded time-permutations of `segment`.
pub fn permutation_threshold(
    segment: &Series,
    cfg: &RunConfig,
    sbs: &SbsConfig,
) -> Result<Threshold> {
    permutation_threshold_seeded(segment, cfg, sbs, sbs.permutation.seed)
}

fn permutation_threshold_seeded(
    segment: &Series,
    cfg: &RunConfig,
    sbs: &SbsConfig,
    seed: u64,
) -> Result<Threshold> {
    let pcfg = &sbs.permutation;
    pcfg.validate()?;
    if segment.len() < MIN_SERIES_LEN
        || SplitPlan::new(segment.len(), cfg.epsilon, cfg.eta).is_err()
    {
        return Err(Error::SegmentTooShort {
            len: segment.len(),
            min: MIN_SERIES_LEN,
        });
    }
    let stats = (0..pcfg.permutations)
        .into_par_iter()
        .map(|b| -> Result<f64> {
            let mut order: Vec<usize> = (0..segment.len()).collect();
            order.shuffle(&mut stream(seed, "permutation", b as u64));
            let permuted = segment.reordered(&order);
            let run_seed = derive_seed(cfg.seed, "permutation-run", b as u64);
            match pcfg.statistic {
                PermutationStatistic::FullSegment => {
                    let mut local = cfg.clone();
                    local.seed = run_seed;
                    Ok(scan(&permuted, &local)?.curve.q_hat())
                }
                PermutationStatistic::SeededMax => {
                    let scans = scan_intervals(&permuted, 0, cfg, sbs, run_seed)?;
                    Ok(max_q(&scans).map_or(f64::NEG_INFINITY, |s| s.q_hat))
                }
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Threshold {
        delta: ceiling_quantile(&stats, pcfg.threshold_quantile),
        permuted_stats: stats,
    })
}

/// One recursion step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeRecord {
    pub lo: usize,
    pub hi: usize,
    pub depth: usize,
    pub intervals_scanned: usize,
    pub best: Option<IntervalScan>,
    pub delta: Option<f64>,
    pub detected: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MultiCpReport {
    /// Estimated change-points, strictly increasing. Each `k` is the last
    /// index before a change.
    pub tau_hat: Vec<usize>,
    pub nodes: Vec<NodeRecord>,
    pub max_depth: usize,
    pub series_len: usize,
}

pub fn detect_multiple(series: &Series, cfg: &RunConfig, sbs: &SbsConfig) -> Result<MultiCpReport> {
    cfg.validate()?;
    sbs.permutation.validate()?;
    if !(0.5..1.0).contains(&sbs.decay) {
        return Err(Error::InvalidDecay(sbs.decay));
    }
    if series.len() < sbs.min_len {
        return Err(Error::SegmentTooShort {
            len: series.len(),
            min: sbs.min_len,
        });
    }
    let mut nodes = Vec::new();
    let mut tau = Vec::new();
    recurse(series, cfg, sbs, 1, series.len(), 0, &mut tau, &mut nodes)?;
    tau.sort_unstable();
    let max_depth = nodes.iter().map(|n| n.depth).max().unwrap_or(0);
    Ok(MultiCpReport {
        tau_hat: tau,
        nodes,
        max_depth,
        series_len: series.len(),
    })
}

#[allow(clippy::too_many_arguments)]
fn recurse(
    series: &Series,
    cfg: &RunConfig,
    sbs: &SbsConfig,
    lo: usize,
    hi: usize,
    depth: usize,
    tau: &mut Vec<usize>,
    nodes: &mut Vec<NodeRecord>,
) -> Result<()> {
    if hi - lo < sbs.min_len {
        return Ok(());
    }
    let segment = series.segment(lo, hi)?;
    let len = segment.len();
    let mut record = NodeRecord {
        lo,
        hi,
        depth,
        intervals_scanned: 0,
        best: None,
        delta: None,
        detected: false,
    };
    if len < 2 * sbs.min_len || SplitPlan::new(len, cfg.epsilon, cfg.eta).is_err() {
        log::debug!("sbs: segment [{lo}, {hi}] too short for seeded intervals");
        nodes.push(record);
        return Ok(());
    }
    let scans = scan_intervals(&segment, lo - 1, cfg, sbs, cfg.seed)?;
    record.intervals_scanned = scans.len();
    let Some(best) = max_q(&scans).cloned() else {
        nodes.push(record);
        return Ok(());
    };
    let node_seed = derive_seed(
        sbs.permutation.seed,
        "node",
        ((lo as u64) << 32) | hi as u64,
    );
    let threshold = permutation_threshold_seeded(&segment, cfg, sbs, node_seed)?;
    record.delta = Some(threshold.delta);
    record.detected = best.q_hat >= threshold.delta;
    record.best = Some(best.clone());
    nodes.push(record);
    if best.q_hat >= threshold.delta {
        tau.push(best.r_hat);
        recurse(series, cfg, sbs, lo, best.r_hat, depth + 1, tau, nodes)?;
        recurse(series, cfg, sbs, best.r_hat + 1, hi, depth + 1, tau, nodes)?;
    }
    Ok(())
}
