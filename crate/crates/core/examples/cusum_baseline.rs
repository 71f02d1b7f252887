// SPDX-License-Identifier: MIT OR Apache-2.0
//! The CUSUM of classifier scores next to the AUC scan on the same series.
//!
//! cargo run --release --example cusum_baseline

use changeauc::{
    cusum_test, generate, test_single, ClassifierKind, DgpKind, DgpSpec, NullQuantileTable,
    RunConfig, StatisticKind,
};

fn main() -> changeauc::Result<()> {
    let cfg = RunConfig::default()
        .with_classifier(ClassifierKind::RandomForest)
        .with_seed(3);
    let g0 = NullQuantileTable::reference(StatisticKind::SupG0);
    let h0 = NullQuantileTable::reference(StatisticKind::SupH0);

    for (name, spec) in [
        ("null", DgpSpec::single(DgpKind::StandardNull, 500, 10)),
        ("dense mean", DgpSpec::single(DgpKind::DenseMean, 500, 10)),
    ] {
        let series = generate(&spec, 21)?;
        let auc = test_single(&series, &cfg, &g0)?;
        let cusum = cusum_test(&series, &cfg, &h0)?;
        println!("{name}");
        println!(
            "  auc   stat {:>6.3} crit {:.3} reject {:<5} k = {}",
            auc.scaled_stat, auc.critical_value, auc.reject, auc.r_hat
        );
        println!(
            "  cusum stat {:>6.3} crit {:.3} reject {:<5} k = {}",
            cusum.scaled_stat, cusum.critical_value, cusum.reject, cusum.r_hat
        );
        for w in &cusum.warnings {
            println!("  warning: {w}");
        }
    }
    Ok(())
}
