// SPDX-License-Identifier: MIT OR Apache-2.0
//! Simulates the limiting null suprema and compares the resulting
//! quantiles with the built-in reference values. A cache directory keeps
//! the second call instant.
//!
//! cargo run --release --example null_quantiles

use changeauc::{build_table, NullQuantileTable, NullTableParams, QuantileCache, StatisticKind};

fn main() -> changeauc::Result<()> {
    for kind in [StatisticKind::SupG0, StatisticKind::SupH0] {
        // Smaller than the desk setting so the example runs in seconds.
        let params = NullTableParams {
            knots: 2_000,
            reps: 5_000,
            ..NullTableParams::desk(kind, 0.15, 0.05, 1)
        };
        let simulated = build_table(&params, &[])?;
        let reference = NullQuantileTable::reference(kind);

        println!("{}", kind.as_str());
        for q in &reference.quantiles {
            let sim = simulated.critical_value(q.alpha)?;
            println!(
                "  alpha {:<5} reference {:.3}  simulated {:.3}",
                q.alpha, q.value, sim
            );
        }
    }

    let dir = std::env::temp_dir().join("changeauc-example-cache");
    let cache = QuantileCache::new(&dir);
    let params = NullTableParams {
        knots: 1_000,
        reps: 1_000,
        ..NullTableParams::desk(StatisticKind::SupG0, 0.1, 0.05, 3)
    };
    let first = cache.get_or_build(&params, &[0.2])?;
    let second = cache.get_or_build(&params, &[0.2])?;
    println!(
        "cached table at {} (intact: {}, same on reload: {})",
        cache.path_for(&params).display(),
        second.verify(),
        first == second
    );
    Ok(())
}
