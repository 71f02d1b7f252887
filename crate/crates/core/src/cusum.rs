// SPDX-License-Identifier: MIT OR Apache-2.0

//! CUSUM baseline on raw classifier scores.
//!
//! ```text
//! phi(k) = sqrt((T-2m) / ((k-m)(T-k-m))) * [ S(k) - (k-m)/(T-2m) * S(T-m) ] / sqrt(V)
//! ```
//!
//! where `S(k)` sums the scores of `[m+1, k]` and `V` is the smallest pooled
//! two-segment variance over all interior splits of the validation window.
//! The test statistic is `max_k -phi(k)`: a classifier trained with label 1
//! on the tail pushes later scores up, which drives `phi` negative.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{CandidateGrid, RunConfig, Series, SplitPlan};
use crate::null_dist::{NullQuantileTable, StatisticKind};
use crate::scan::{check_table, fit_and_score, ScoreSeries, SingleCpReport};

/// Lower clamp for the pooled variance.
pub const VARIANCE_FLOOR: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CusumCurve {
    pub k_lo: usize,
    pub phi: Vec<f64>,
    pub v_hat: f64,
    /// `v_hat` hit [`VARIANCE_FLOOR`].
    pub degenerate: bool,
    pub left_means: Vec<f64>,
    pub right_means: Vec<f64>,
    /// `max_k -phi(k)` and its first maximizer.
    pub max_stat: f64,
    pub argmax: usize,
    pub max_abs: f64,
    pub argmax_abs: usize,
}

impl CusumCurve {
    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.phi
            .iter()
            .enumerate()
            .map(|(i, &v)| (self.k_lo + i, v))
    }

    pub fn phi_at(&self, k: usize) -> Option<f64> {
        k.checked_sub(self.k_lo)
            .and_then(|i| self.phi.get(i).copied())
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        crate::io::write_curve_csv(w, self.iter())
    }
}

/// Prefix sums of centered scores and their squares.
struct Moments {
    s1: Vec<f64>,
    s2: Vec<f64>,
    center: f64,
}

impl Moments {
    fn new(w: &[f64]) -> Self {
        let center = w.iter().sum::<f64>() / w.len() as f64;
        let mut s1 = Vec::with_capacity(w.len() + 1);
        let mut s2 = Vec::with_capacity(w.len() + 1);
        s1.push(0.0);
        s2.push(0.0);
        for &x in w {
            let c = x - center;
            s1.push(s1.last().unwrap() + c);
            s2.push(s2.last().unwrap() + c * c);
        }
        Self { s1, s2, center }
    }

    /// Sum of squared deviations from the segment mean over positions `[a, b)`.
    fn ss(&self, a: usize, b: usize) -> f64 {
        let n = (b - a) as f64;
        let s = self.s1[b] - self.s1[a];
        (self.s2[b] - self.s2[a] - s * s / n).max(0.0)
    }
}

pub fn cusum_curve(sc: &ScoreSeries, grid: &CandidateGrid, plan: &SplitPlan) -> Result<CusumCurve> {
    let w = sc.scores();
    let n = plan.validation_len();
    if w.len() != n {
        return Err(Error::InvalidConfig(format!(
            "{} scores for a validation window of {n}",
            w.len()
        )));
    }
    if *grid != plan.candidate_grid()? {
        return Err(Error::InvalidConfig("grid does not belong to plan".into()));
    }
    let m = plan.m();
    let mom = Moments::new(w);

    // splits after position j (1..n-1) leave both segments nonempty
    let raw_v = (1..n)
        .map(|j| (mom.ss(0, j) + mom.ss(j, n)) / n as f64)
        .fold(f64::INFINITY, f64::min);
    let degenerate = !(raw_v >= VARIANCE_FLOOR);
    let v_hat = if degenerate { VARIANCE_FLOOR } else { raw_v };
    if degenerate {
        log::warn!("cusum: pooled variance {raw_v:e} below floor; scores are degenerate");
    }
    let inv_sd = 1.0 / v_hat.sqrt();

    let total = mom.s1[n];
    let mut phi = Vec::with_capacity(grid.len());
    let mut left_means = Vec::with_capacity(grid.len());
    let mut right_means = Vec::with_capacity(grid.len());
    for k in grid.iter() {
        let j = k - m;
        let nl = j as f64;
        let nr = (n - j) as f64;
        let left = mom.s1[j];
        let scale = (n as f64 / (nl * nr)).sqrt();
        phi.push(inv_sd * scale * (left - nl / n as f64 * total));
        left_means.push(mom.center + left / nl);
        right_means.push(mom.center + (total - left) / nr);
    }

    let (mut max_stat, mut argmax) = (f64::NEG_INFINITY, grid.lo());
    let (mut max_abs, mut argmax_abs) = (f64::NEG_INFINITY, grid.lo());
    for (i, &v) in phi.iter().enumerate() {
        if -v > max_stat {
            max_stat = -v;
            argmax = grid.lo() + i;
        }
        if v.abs() > max_abs {
            max_abs = v.abs();
            argmax_abs = grid.lo() + i;
        }
    }
    Ok(CusumCurve {
        k_lo: grid.lo(),
        phi,
        v_hat,
        degenerate,
        left_means,
        right_means,
        max_stat,
        argmax,
        max_abs,
        argmax_abs,
    })
}

/// Rejects when `max_k -phi(k) >= Q(1 - alpha)` of `sup H0`.
pub fn cusum_test(
    series: &Series,
    cfg: &RunConfig,
    table: &NullQuantileTable,
) -> Result<SingleCpReport> {
    check_table(table, StatisticKind::SupH0, cfg)?;
    let critical_value = table.critical_value(cfg.alpha)?;
    let (plan, _model, scores) = fit_and_score(series, cfg)?;
    let grid = plan.candidate_grid()?;
    let curve = cusum_curve(&scores, &grid, &plan)?;
    let reject = curve.max_stat >= critical_value;
    let warnings = if curve.degenerate {
        vec!["degenerate-variance: classifier scores have no spread".to_string()]
    } else {
        Vec::new()
    };
    Ok(SingleCpReport {
        statistic: StatisticKind::SupH0,
        reject,
        alpha: cfg.alpha,
        critical_value,
        scaled_stat: curve.max_stat,
        max_stat: curve.max_stat,
        r_hat: curve.argmax,
        change_point: reject.then_some(curve.argmax),
        series_len: series.len(),
        m: plan.m(),
        grid: (grid.lo(), grid.hi()),
        auc_curve: None,
        cusum_curve: Some(curve),
        warnings,
    })
}
