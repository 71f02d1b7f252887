// SPDX-License-Identifier: MIT OR Apache-2.0
//! A change in the covariance only. The means stay put, so a linear
//! classifier sees at most a weak signal; a forest picks up the
//! interaction and localizes the change.
//!
//! cargo run --release --example classifier_contrast

use changeauc::{
    generate, predict_proba, test_single, train, ClassifierKind, DgpKind, DgpSpec,
    NullQuantileTable, RunConfig, StatisticKind, TrainSet,
};

fn main() -> changeauc::Result<()> {
    let spec = DgpSpec::single(DgpKind::BandedCov, 800, 10);
    let series = generate(&spec, 17)?;
    let table = NullQuantileTable::reference(StatisticKind::SupG0);

    for kind in [ClassifierKind::LogisticL1, ClassifierKind::RandomForest] {
        let cfg = RunConfig::default().with_classifier(kind).with_seed(1);
        let report = test_single(&series, &cfg, &table)?;
        println!(
            "{:<14} stat {:>6.3} (crit {:.3}) reject {:<5} k = {}",
            kind.as_str(),
            report.scaled_stat,
            report.critical_value,
            report.reject,
            report.r_hat
        );
    }

    // The classifiers can also be used directly on a labelled sample.
    let plan = changeauc::make_split_plan(series.len(), 0.15, 0.05)?;
    let data = TrainSet::from_split(&series, &plan)?;
    let cfg = RunConfig::default().with_classifier(ClassifierKind::RandomForest);
    let model = train(&data, &cfg, 42)?;
    let first = predict_proba(&model, series.at(1))?;
    let last = predict_proba(&model, series.at(series.len()))?;
    println!("forest P(post-change): first point {first:.2}, last point {last:.2}");
    Ok(())
}
