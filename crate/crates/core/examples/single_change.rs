// SPDX-License-Identifier: MIT OR Apache-2.0
//! One change in the mean of a 20-dimensional Gaussian series, tested with
//! the AUC scan and the tabulated critical value.
//!
//! cargo run --release --example single_change

use changeauc::{
    generate, test_single, ClassifierKind, DgpKind, DgpSpec, NullQuantileTable, RunConfig,
    StatisticKind,
};

fn main() -> changeauc::Result<()> {
    let spec = DgpSpec::single(DgpKind::DenseMean, 600, 20).with_change_points(vec![400]);
    let series = generate(&spec, 11)?;

    let cfg = RunConfig::default()
        .with_classifier(ClassifierKind::RandomForest)
        .with_seed(7)
        .with_alpha(0.05);
    let table = NullQuantileTable::reference(StatisticKind::SupG0);
    let report = test_single(&series, &cfg, &table)?;

    println!("T = {}, true change after t = 400", series.len());
    println!(
        "scaled statistic {:.3} vs critical value {:.3}",
        report.scaled_stat, report.critical_value
    );
    println!("max AUC {:.3} at k = {}", report.max_stat, report.r_hat);
    match report.change_point {
        Some(k) => println!("reject: change after t = {k}"),
        None => println!("no change detected"),
    }

    // A few points of the AUC process around the estimate.
    if let Some(curve) = &report.auc_curve {
        for (k, psi) in curve.iter().filter(|(k, _)| k % 50 == 0) {
            println!("  psi({k:>3}) = {psi:.3}");
        }
    }
    Ok(())
}
