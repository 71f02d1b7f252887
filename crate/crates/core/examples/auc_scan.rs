// SPDX-License-Identifier: MIT OR Apache-2.0
//! The rank-sum scan on hand-made validation scores, without a classifier.
//! The incremental curve is checked against the direct AUC at every k.
//!
//! cargo run --release --example auc_scan

use changeauc::{auc_at, auc_curve, make_split_plan, ScoreSeries};

fn main() -> changeauc::Result<()> {
    let len = 200;
    let plan = make_split_plan(len, 0.15, 0.05)?;
    let grid = plan.candidate_grid()?;

    // Validation scores: low before t = 120, high after. Rounded to one
    // decimal so there are plenty of ties for the jitter to break.
    let scores: Vec<f64> = plan
        .dv()
        .map(|t| {
            let base = if t <= 120 { 0.3 } else { 0.7 };
            let wobble = ((t * 37) % 11) as f64 / 40.0;
            ((base + wobble) * 10.0).round() / 10.0
        })
        .collect();
    let sc = ScoreSeries::new(scores, 99)?;

    let curve = auc_curve(&sc, &grid, &plan)?;
    let mut worst = 0.0_f64;
    for (k, psi) in curve.iter() {
        worst = worst.max((psi - auc_at(&sc, k, &plan)?).abs());
    }

    println!("m = {}, grid = [{}, {}]", plan.m(), grid.lo(), grid.hi());
    println!("q_hat = {:.4} at r_hat = {}", curve.q_hat(), curve.r_hat());
    println!("sqrt(T)(q_hat - 1/2) = {:.3}", curve.scaled_stat());
    println!("largest gap between scan and direct AUC: {worst:.2e}");
    Ok(())
}
