// SPDX-License-Identifier: MIT OR Apache-2.0

//! The AUC process over candidate splits and the single change-point test.
//!
//! For every candidate `k` the validation window is cut into a left group
//! `[m+1, k]` and a right group `[k+1, T-m]`, and `psi(k)` is the fraction of
//! (left, right) pairs whose right score is strictly larger. Because both
//! groups always cover the whole window, one global ranking of the scores
//! serves every split and the curve is a running Mann-Whitney rank sum.

use std::cmp::Ordering;
use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::classifiers::{self, FittedClassifier, TrainSet};
use crate::error::{Error, Result};
use crate::model::{CandidateGrid, RunConfig, Series, SplitPlan};
use crate::null_dist::{NullQuantileTable, StatisticKind};
use crate::rng::{derive_seed, stream};

/// Jitter scale used when every score is identical.
pub const FLAT_JITTER: f64 = 1.0 / (1u64 << 40) as f64;

/// Classifier scores over the validation window, made strictly ordered.
///
/// `effective_scores[i] = scores[i] + u[i] * delta` with `u[i] ~ U(0, 1)`
/// drawn from `jitter_seed` and `delta` below half the smallest gap between
/// distinct scores, so jitter only reorders tied scores. When two effective
/// scores still coincide after rounding, the raw score and then the jitter
/// draw decide, so the order is always strict.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreSeries {
    scores: Vec<f64>,
    jitter_seed: u64,
    jitter_scale: f64,
    effective_scores: Vec<f64>,
    draws: Vec<f64>,
    /// 1-based ascending ranks, a permutation of `1..=n`.
    ranks: Vec<u32>,
}

impl ScoreSeries {
    pub fn new(scores: Vec<f64>, jitter_seed: u64) -> Result<Self> {
        if let Some(i) = scores.iter().position(|s| !s.is_finite()) {
            return Err(Error::InvalidSeries(format!(
                "non-finite score at position {i}"
            )));
        }
        let n = scores.len();
        let mut sorted = scores.clone();
        sorted.sort_unstable_by(f64::total_cmp);
        let min_gap = sorted
            .windows(2)
            .map(|w| w[1] - w[0])
            .filter(|&g| g > 0.0)
            .fold(f64::INFINITY, f64::min);
        let jitter_scale = if min_gap.is_finite() {
            0.5 * min_gap
        } else {
            FLAT_JITTER
        };
        let mut rng = stream(jitter_seed, "jitter", 0);
        let draws: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
        let effective_scores: Vec<f64> = scores
            .iter()
            .zip(&draws)
            .map(|(s, u)| s + u * jitter_scale)
            .collect();

        let mut out = Self {
            scores,
            jitter_seed,
            jitter_scale,
            effective_scores,
            draws,
            ranks: vec![0; n],
        };
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_unstable_by(|&a, &b| out.compare(a, b));
        for (r, &i) in order.iter().enumerate() {
            out.ranks[i] = (r + 1) as u32;
        }
        Ok(out)
    }

    /// Strict total order on positions used by both the ranks and the
    /// pairwise oracle.
    pub fn compare(&self, a: usize, b: usize) -> Ordering {
        self.effective_scores[a]
            .total_cmp(&self.effective_scores[b])
            .then(self.scores[a].total_cmp(&self.scores[b]))
            .then(self.draws[a].total_cmp(&self.draws[b]))
            .then(a.cmp(&b))
    }

    pub fn less(&self, a: usize, b: usize) -> bool {
        self.compare(a, b) == Ordering::Less
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn effective_scores(&self) -> &[f64] {
        &self.effective_scores
    }

    pub fn ranks(&self) -> &[u32] {
        &self.ranks
    }

    pub fn jitter_seed(&self) -> u64 {
        self.jitter_seed
    }

    pub fn jitter_scale(&self) -> f64 {
        self.jitter_scale
    }
}

/// Scores the validation rows of `series` with `model`.
pub fn score_validation(
    series: &Series,
    plan: &SplitPlan,
    model: &FittedClassifier,
    jitter_seed: u64,
) -> Result<ScoreSeries> {
    let scores = plan
        .dv()
        .map(|t| model.predict_proba(series.at(t)))
        .collect::<Result<Vec<_>>>()?;
    ScoreSeries::new(scores, jitter_seed)
}

/// `psi(k)` for every candidate, with its maximum and the first maximizer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AucCurve {
    k_lo: usize,
    psi: Vec<f64>,
    q_hat: f64,
    r_hat: usize,
    scaled_stat: f64,
}

impl AucCurve {
    pub fn k_lo(&self) -> usize {
        self.k_lo
    }

    pub fn k_hi(&self) -> usize {
        self.k_lo + self.psi.len() - 1
    }

    pub fn psi(&self) -> &[f64] {
        &self.psi
    }

    pub fn psi_at(&self, k: usize) -> Option<f64> {
        k.checked_sub(self.k_lo)
            .and_then(|i| self.psi.get(i).copied())
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.psi
            .iter()
            .enumerate()
            .map(|(i, &v)| (self.k_lo + i, v))
    }

    /// Maximum AUC over the grid.
    pub fn q_hat(&self) -> f64 {
        self.q_hat
    }

    /// Smallest maximizing split.
    pub fn r_hat(&self) -> usize {
        self.r_hat
    }

    /// `sqrt(T) * (q_hat - 1/2)` with `T` the full series length.
    pub fn scaled_stat(&self) -> f64 {
        self.scaled_stat
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        crate::io::write_curve_csv(w, self.iter())
    }
}

fn check_scores(sc: &ScoreSeries, plan: &SplitPlan) -> Result<()> {
    if sc.len() != plan.validation_len() {
        return Err(Error::InvalidConfig(format!(
            "{} scores for a validation window of {}",
            sc.len(),
            plan.validation_len()
        )));
    }
    Ok(())
}

/// Direct pair count for one split; quadratic in the window size.
pub fn auc_at(sc: &ScoreSeries, k: usize, plan: &SplitPlan) -> Result<f64> {
    check_scores(sc, plan)?;
    let grid = plan.candidate_grid()?;
    if !grid.contains(k) {
        return Err(Error::OutOfGrid {
            k,
            lo: grid.lo(),
            hi: grid.hi(),
        });
    }
    let m = plan.m();
    let end = plan.len() - m;
    let mut count = 0u64;
    for i in m + 1..=k {
        for j in k + 1..=end {
            if sc.less(i - m - 1, j - m - 1) {
                count += 1;
            }
        }
    }
    Ok(count as f64 / ((k - m) as f64 * (end - k) as f64))
}

/// Whole curve via the rank-sum identity, O(n log n) overall.
pub fn auc_curve(sc: &ScoreSeries, grid: &CandidateGrid, plan: &SplitPlan) -> Result<AucCurve> {
    check_scores(sc, plan)?;
    let expected = plan.candidate_grid()?;
    if *grid != expected {
        return Err(Error::InvalidConfig(format!(
            "grid [{}, {}] does not belong to plan with grid [{}, {}]",
            grid.lo(),
            grid.hi(),
            expected.lo(),
            expected.hi()
        )));
    }
    let m = plan.m();
    let end = plan.len() - m;
    let rank_of = |t: usize| u64::from(sc.ranks()[t - m - 1]);

    // rank sum of the right group for k = lo
    let mut right_sum: u64 = (grid.lo() + 1..=end).map(rank_of).sum();
    let mut psi = Vec::with_capacity(grid.len());
    let mut best = (f64::NEG_INFINITY, grid.lo());
    for k in grid.iter() {
        let n0 = (k - m) as u64;
        let n1 = (end - k) as u64;
        let u = right_sum - n1 * (n1 + 1) / 2;
        let v = u as f64 / (n0 as f64 * n1 as f64);
        if v > best.0 {
            best = (v, k);
        }
        psi.push(v);
        if k < end {
            right_sum -= rank_of(k + 1);
        }
    }
    Ok(AucCurve {
        k_lo: grid.lo(),
        psi,
        q_hat: best.0,
        r_hat: best.1,
        scaled_stat: (plan.len() as f64).sqrt() * (best.0 - 0.5),
    })
}

/// Output of one pass of the pipeline: split, train, score, scan.
#[derive(Clone, Debug)]
pub struct Scan {
    pub plan: SplitPlan,
    pub grid: CandidateGrid,
    pub model: FittedClassifier,
    pub scores: ScoreSeries,
    pub curve: AucCurve,
}

/// Seeds for the classifier and the jitter, derived from the run seed.
pub fn train_seed(cfg: &RunConfig) -> u64 {
    derive_seed(cfg.seed, "train", 0)
}

pub fn jitter_seed(cfg: &RunConfig) -> u64 {
    derive_seed(cfg.seed, "jitter", 0)
}

/// Splits, trains on the two ends and scores the middle.
pub fn fit_and_score(
    series: &Series,
    cfg: &RunConfig,
) -> Result<(SplitPlan, FittedClassifier, ScoreSeries)> {
    cfg.validate()?;
    let plan = SplitPlan::new(series.len(), cfg.epsilon, cfg.eta)?;
    let data = TrainSet::from_split(series, &plan)?;
    let model = classifiers::train(&data, cfg, train_seed(cfg))?;
    let scores = score_validation(series, &plan, &model, jitter_seed(cfg))?;
    Ok((plan, model, scores))
}

pub fn scan(series: &Series, cfg: &RunConfig) -> Result<Scan> {
    let (plan, model, scores) = fit_and_score(series, cfg)?;
    let grid = plan.candidate_grid()?;
    let curve = auc_curve(&scores, &grid, &plan)?;
    Ok(Scan {
        plan,
        grid,
        model,
        scores,
        curve,
    })
}

/// Decision record for a single change-point test.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SingleCpReport {
    pub statistic: StatisticKind,
    pub reject: bool,
    pub alpha: f64,
    #[serde(with = "crate::serde_util::extended_f64")]
    pub critical_value: f64,
    /// The value compared with `critical_value`.
    pub scaled_stat: f64,
    /// `q_hat` for the AUC scan, `sup phi` for CUSUM.
    pub max_stat: f64,
    pub r_hat: usize,
    /// `Some(r_hat)` exactly when the test rejects.
    pub change_point: Option<usize>,
    pub series_len: usize,
    pub m: usize,
    pub grid: (usize, usize),
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub auc_curve: Option<AucCurve>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cusum_curve: Option<crate::cusum::CusumCurve>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl SingleCpReport {
    pub fn without_curves(mut self) -> Self {
        self.auc_curve = None;
        self.cusum_curve = None;
        self
    }
}

pub(crate) fn check_table(
    table: &NullQuantileTable,
    kind: StatisticKind,
    cfg: &RunConfig,
) -> Result<()> {
    if table.kind != kind {
        return Err(Error::TableMismatch(format!(
            "table is for {:?}, test needs {kind:?}",
            table.kind
        )));
    }
    if (table.epsilon - cfg.epsilon).abs() > 1e-12 || (table.gamma - cfg.gamma()).abs() > 1e-12 {
        return Err(Error::TableMismatch(format!(
            "table (epsilon={}, gamma={}) vs run (epsilon={}, gamma={})",
            table.epsilon,
            table.gamma,
            cfg.epsilon,
            cfg.gamma()
        )));
    }
    Ok(())
}

/// Level-`alpha` test for a single change-point: reject when
/// `sqrt(T) (q_hat - 1/2) >= Q(1 - alpha)`.
pub fn test_single(
    series: &Series,
    cfg: &RunConfig,
    table: &NullQuantileTable,
) -> Result<SingleCpReport> {
    check_table(table, StatisticKind::SupG0, cfg)?;
    let critical_value = table.critical_value(cfg.alpha)?;
    let s = scan(series, cfg)?;
    let reject = s.curve.scaled_stat() >= critical_value;
    Ok(SingleCpReport {
        statistic: StatisticKind::SupG0,
        reject,
        alpha: cfg.alpha,
        critical_value,
        scaled_stat: s.curve.scaled_stat(),
        max_stat: s.curve.q_hat(),
        r_hat: s.curve.r_hat(),
        change_point: reject.then_some(s.curve.r_hat()),
        series_len: series.len(),
        m: s.plan.m(),
        grid: (s.grid.lo(), s.grid.hi()),
        auc_curve: Some(s.curve),
        cusum_curve: None,
        warnings: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Plan whose validation window has exactly `n` points.
    fn plan_for(n: usize) -> SplitPlan {
        // m = floor(0.15 T); pick T with T - 2m = n
        (20..10 * n + 40)
            .filter_map(|t| SplitPlan::new(t, 0.15, 0.05).ok())
            .find(|p| p.validation_len() == n)
            .expect("no plan with that window")
    }

    #[test]
    fn tied_pair_ranked_below_larger_score() {
        for seed in 0..50 {
            let sc = ScoreSeries::new(vec![0.2, 0.2, 0.8], seed).unwrap();
            assert_eq!(sc.ranks()[2], 3);
            assert_ne!(sc.effective_scores()[0], sc.effective_scores()[1]);
        }
    }

    #[test]
    fn flat_scores_give_seeded_permutation() {
        let a = ScoreSeries::new(vec![0.5; 30], 1).unwrap();
        let b = ScoreSeries::new(vec![0.5; 30], 1).unwrap();
        let c = ScoreSeries::new(vec![0.5; 30], 2).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.ranks(), c.ranks());
        let mut r = a.ranks().to_vec();
        r.sort_unstable();
        assert_eq!(r, (1..=30).collect::<Vec<u32>>());
        assert_eq!(a.jitter_scale(), FLAT_JITTER);
    }

    #[test]
    fn four_point_pair_count() {
        // window of 4 with the split after the second point:
        // pairs (0.3<0.4) (0.3<0.9) (0.7<0.4) (0.7<0.9) -> 3/4
        let sc = ScoreSeries::new(vec![0.3, 0.7, 0.4, 0.9], 0).unwrap();
        let m = 1;
        let k = m + 2;
        let end = m + 4;
        let mut count = 0;
        for i in m + 1..=k {
            for j in k + 1..=end {
                count += usize::from(sc.less(i - m - 1, j - m - 1));
            }
        }
        assert_eq!(count as f64 / 4.0, 0.75);
    }

    #[test]
    fn perfect_and_reversed_separation() {
        let plan = plan_for(40);
        let grid = plan.candidate_grid().unwrap();
        let m = plan.m();
        let k = grid.lo() + grid.len() / 2;
        let split = k - m;
        let up: Vec<f64> = (0..40).map(|i| if i < split { 0.1 } else { 0.9 }).collect();
        let down: Vec<f64> = up.iter().map(|s| 1.0 - s).collect();
        let sc_up = ScoreSeries::new(up, 3).unwrap();
        let sc_down = ScoreSeries::new(down, 3).unwrap();
        assert_eq!(auc_at(&sc_up, k, &plan).unwrap(), 1.0);
        assert_eq!(auc_at(&sc_down, k, &plan).unwrap(), 0.0);
        let curve = auc_curve(&sc_up, &grid, &plan).unwrap();
        assert_eq!(curve.q_hat(), 1.0);
        assert_eq!(curve.r_hat(), k);
    }

    #[test]
    fn out_of_grid_rejected() {
        let plan = plan_for(40);
        let grid = plan.candidate_grid().unwrap();
        let sc = ScoreSeries::new(vec![0.0; 40], 0).unwrap();
        assert!(matches!(
            auc_at(&sc, grid.hi() + 1, &plan),
            Err(Error::OutOfGrid { .. })
        ));
    }

    #[test]
    fn incremental_matches_pairs_on_random_scores() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for n in [30usize, 41, 77, 150] {
            let plan = plan_for(n);
            let grid = plan.candidate_grid().unwrap();
            // heavy ties to exercise the jitter
            let scores: Vec<f64> = (0..n)
                .map(|_| (rng.gen::<f64>() * 5.0).floor() / 5.0)
                .collect();
            let sc = ScoreSeries::new(scores, rng.gen()).unwrap();
            let curve = auc_curve(&sc, &grid, &plan).unwrap();
            for (k, v) in curve.iter() {
                let oracle = auc_at(&sc, k, &plan).unwrap();
                assert!((v - oracle).abs() <= 1e-12, "n={n} k={k}: {v} vs {oracle}");
            }
        }
    }

    #[test]
    fn reversing_the_window_complements_psi() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let plan = plan_for(60);
        let grid = plan.candidate_grid().unwrap();
        let m = plan.m();
        let end = plan.len() - m;
        let scores: Vec<f64> = (0..60).map(|_| rng.gen::<f64>()).collect();
        let mut rev = scores.clone();
        rev.reverse();
        let a = ScoreSeries::new(scores, 0).unwrap();
        let b = ScoreSeries::new(rev, 0).unwrap();
        for k in grid.iter() {
            // split after k in the reversed window is split after m + end - k
            let k_rev = m + end - k;
            if !grid.contains(k_rev) {
                continue;
            }
            let x = auc_at(&a, k, &plan).unwrap();
            let y = auc_at(&b, k_rev, &plan).unwrap();
            assert!((x - (1.0 - y)).abs() < 1e-12);
        }
    }

    #[test]
    fn argmax_tie_takes_smallest_k() {
        let plan = plan_for(40);
        let grid = plan.candidate_grid().unwrap();
        let sc = ScoreSeries::new((0..40).map(|i| i as f64).collect(), 0).unwrap();
        let curve = auc_curve(&sc, &grid, &plan).unwrap();
        assert!(curve.psi().iter().all(|&v| v == 1.0));
        assert_eq!(curve.r_hat(), grid.lo());
    }
}
