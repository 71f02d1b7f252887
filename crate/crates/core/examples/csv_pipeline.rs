// SPDX-License-Identifier: MIT OR Apache-2.0
//! Round trip through files: write a series to CSV, load it back, detect,
//! and write the report and AUC curve the way the command-line tool does.
//!
//! cargo run --release --example csv_pipeline

use std::fs::File;
use std::io::BufWriter;

use changeauc::io::{save_series_csv, write_curve_csv};
use changeauc::{
    generate, load_csv, test_single, DgpKind, DgpSpec, NullQuantileTable, ReportEnvelope,
    RunConfig, StatisticKind,
};

fn main() -> changeauc::Result<()> {
    let dir = std::env::temp_dir().join("changeauc-example-csv");
    std::fs::create_dir_all(&dir)?;
    let data = dir.join("series.csv");

    let spec = DgpSpec::single(DgpKind::DenseMean, 500, 8);
    save_series_csv(&data, &generate(&spec, 9)?)?;

    let series = load_csv(&data, false)?;
    let cfg = RunConfig::default().with_seed(9);
    let report = test_single(
        &series,
        &cfg,
        &NullQuantileTable::reference(StatisticKind::SupG0),
    )?;

    if let Some(curve) = &report.auc_curve {
        let out = BufWriter::new(File::create(dir.join("curve.csv"))?);
        write_curve_csv(out, curve.iter())?;
    }
    let envelope = ReportEnvelope::new("detect", &cfg, report.without_curves());
    let json = envelope.to_json()?;
    std::fs::write(dir.join("report.json"), &json)?;

    println!(
        "loaded {} x {} from {}",
        series.len(),
        series.dim(),
        data.display()
    );
    println!("{json}");
    Ok(())
}
