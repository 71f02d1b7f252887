// SPDX-License-Identifier: MIT OR Apache-2.0
//! Seeded binary segmentation with a permutation threshold on a series
//! with two mean shifts.
//!
//! cargo run --release --example multiple_changes

use changeauc::sbs::seeded_intervals;
use changeauc::{
    adjusted_rand_index, detect_multiple, generate, ClassifierKind, DgpKind, DgpSpec, RunConfig,
    SbsConfig,
};

fn main() -> changeauc::Result<()> {
    let len = 900;
    let truth = vec![300, 600];
    let spec = DgpSpec::single(DgpKind::DenseMean, len, 10).with_change_points(truth.clone());
    let series = generate(&spec, 5)?;

    let cfg = RunConfig::default()
        .with_classifier(ClassifierKind::LogisticL1)
        .with_seed(8);
    let mut sbs = SbsConfig {
        min_len: len / 10,
        ..SbsConfig::default()
    };
    sbs.permutation.permutations = 49;
    sbs.permutation.seed = 8;

    let plan = seeded_intervals(len, sbs.decay, sbs.min_len)?;
    println!(
        "{} layers, {} seeded intervals",
        plan.layers.len(),
        plan.intervals.len()
    );

    let report = detect_multiple(&series, &cfg, &sbs)?;
    for node in &report.nodes {
        let best = node
            .best
            .as_ref()
            .map(|b| format!("auc {:.3} at {}", b.q_hat, b.r_hat))
            .unwrap_or_else(|| "too short".into());
        let delta = node.delta.map(|d| format!("{d:.3}")).unwrap_or("-".into());
        println!(
            "{}[{}, {}] {best}, threshold {delta}, detected {}",
            "  ".repeat(node.depth),
            node.lo,
            node.hi,
            node.detected
        );
    }
    println!("estimated {:?}, true {:?}", report.tau_hat, truth);
    println!(
        "ARI {:.3}",
        adjusted_rand_index(&truth, &report.tau_hat, len)?
    );
    Ok(())
}
