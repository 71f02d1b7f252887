// SPDX-License-Identifier: MIT OR Apache-2.0

//! Acceptance suite: one pass/fail line per criterion. Runs as its own
//! binary so the lines are always printed.

use std::path::Path;
use std::time::Instant;

use changeauc::cli::run_cli;
use changeauc::io::strip_timing;
use changeauc::null_dist::{REFERENCE_SUP_G0, REFERENCE_SUP_H0};
use changeauc::rng::derive_seed;
use changeauc::sbs::{PermutationConfig, SbsConfig};
use changeauc::{
    auc_at, auc_curve, build_table, detect_multiple, generate, make_split_plan,
    run_power_experiment, run_size_experiment, ClassifierKind, DgpKind, DgpSpec, NullQuantileTable,
    NullTableParams, RunConfig, ScoreSeries, StatisticKind,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

struct Outcome {
    pass: bool,
    detail: String,
}

fn quantile_table(kind: StatisticKind, reference: [f64; 5]) -> (Outcome, NullQuantileTable) {
    let params = NullTableParams::desk(kind, 0.15, 0.05, 1);
    let table = build_table(&params, &[]).expect("table");
    let mut pass = table.verify() && table.is_monotone();
    let mut cells = Vec::new();
    for (q, r) in table.quantiles.iter().zip(reference) {
        let ok = (q.value - r).abs() <= 0.05;
        pass &= ok;
        cells.push(format!(
            "{:.1}%: {:.3} vs {:.3}",
            100.0 * q.alpha,
            q.value,
            r
        ));
    }
    (
        Outcome {
            pass,
            detail: cells.join(", "),
        },
        table,
    )
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    let mut lengths = (usize::MAX, 0);
    for case in 0..100 {
        let len = rng.gen_range(43..=428);
        let plan = make_split_plan(len, 0.15, 0.05).unwrap();
        let n = plan.validation_len();
        lengths = (lengths.0.min(n), lengths.1.max(n));
        // every third instance has heavy ties
        let scores: Vec<f64> = (0..n)
            .map(|_| {
                let s: f64 = rng.gen();
                if case % 3 == 0 {
                    (s * 8.0).floor() / 8.0
                } else {
                    s
                }
            })
            .collect();
        let sc = ScoreSeries::new(scores, rng.gen()).unwrap();
        let grid = plan.candidate_grid().unwrap();
        let curve = auc_curve(&sc, &grid, &plan).unwrap();
        for k in grid.iter() {
            let direct = auc_at(&sc, k, &plan).unwrap();
            worst = worst.max((curve.psi_at(k).unwrap() - direct).abs());
        }
    }
    Outcome {
        pass: worst <= 1e-12 && lengths.0 >= 30 && lengths.1 <= 300,
        detail: format!(
            "max |incremental - direct| = {worst:.1e}, window lengths {}..{}",
            lengths.0, lengths.1
        ),
    }
}

fn criterion_4(g0: &NullQuantileTable) -> Outcome {
    let spec = DgpSpec::single(DgpKind::StandardNull, 500, 10);
    let cfg = RunConfig::default()
        .with_classifier(ClassifierKind::LogisticL1)
        .with_alpha(0.05)
        .with_seed(4);
    let res = run_size_experiment(&spec, &cfg, 200, g0).unwrap();
    Outcome {
        pass: (0.02..=0.09).contains(&res.rejection_rate),
        detail: format!(
            "rejection rate {:.3} ({} / 200)",
            res.rejection_rate, res.rejections
        ),
    }
}

fn criterion_5(g0: &NullQuantileTable) -> Outcome {
    let spec = DgpSpec::single(DgpKind::DenseMean, 1000, 50);
    let cfg = RunConfig::default()
        .with_classifier(ClassifierKind::RandomForest)
        .with_seed(5);
    let res = run_power_experiment(&spec, &cfg, 100, g0).unwrap();
    let ari = res.median_ari().unwrap();
    let loc = res.median_localization_error().unwrap();
    Outcome {
        pass: res.rejection_rate >= 0.95 && ari >= 0.9 && loc <= 25.0,
        detail: format!(
            "rejection {:.2}, median ARI {ari:.3}, median |R - 500| {loc}",
            res.rejection_rate
        ),
    }
}

fn criterion_6(g0: &NullQuantileTable) -> Outcome {
    let spec = DgpSpec::single(DgpKind::BandedCov, 1000, 500);
    let run = |kind, seed| {
        let cfg = RunConfig::default().with_classifier(kind).with_seed(seed);
        run_power_experiment(&spec, &cfg, 50, g0)
            .unwrap()
            .median_ari()
            .unwrap()
    };
    let logistic = run(ClassifierKind::LogisticL1, 6);
    let forest = run(ClassifierKind::RandomForest, 6);
    Outcome {
        pass: logistic <= 0.2 && forest >= 0.5,
        detail: format!("median ARI logistic {logistic:.3}, random forest {forest:.3}"),
    }
}

fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let logit = |s: f64| (s / (1.0 - s)).ln().clamp(-30.0, 30.0);
    let mut failures = 0;
    for _ in 0..50 {
        let len = rng.gen_range(60..=500);
        let plan = make_split_plan(len, 0.15, 0.05).unwrap();
        let grid = plan.candidate_grid().unwrap();
        let n = plan.validation_len();
        let base: Vec<f64> = (0..n).map(|_| rng.gen_range(1e-3..1.0 - 1e-3)).collect();
        let jitter = rng.gen();
        let curve_of = |scores: Vec<f64>| {
            let sc = ScoreSeries::new(scores, jitter).unwrap();
            auc_curve(&sc, &grid, &plan).unwrap()
        };
        let reference = curve_of(base.clone());
        for transformed in [
            base.iter().map(|s| s * s * s).collect::<Vec<_>>(),
            base.iter().map(|&s| logit(s)).collect(),
        ] {
            let c = curve_of(transformed);
            let same = c
                .psi()
                .iter()
                .map(|v| v.to_bits())
                .eq(reference.psi().iter().map(|v| v.to_bits()))
                && c.q_hat().to_bits() == reference.q_hat().to_bits()
                && c.r_hat() == reference.r_hat();
            failures += usize::from(!same);
        }
    }
    Outcome {
        pass: failures == 0,
        detail: format!("{failures} of 100 transformed curves differ"),
    }
}

fn criterion_8() -> Outcome {
    let cfg = RunConfig::default().with_classifier(ClassifierKind::LogisticL1);
    let sbs_for = |len: usize, seed: u64| SbsConfig {
        min_len: len / 10,
        permutation: PermutationConfig {
            permutations: 99,
            seed,
            ..Default::default()
        },
        ..Default::default()
    };

    let null_spec = DgpSpec::single(DgpKind::StandardNull, 800, 10);
    let empty = (0..100u64)
        .into_par_iter()
        .filter(|&r| {
            let series = generate(&null_spec, derive_seed(80, "null-data", r)).unwrap();
            let local = cfg.clone().with_seed(derive_seed(80, "null-run", r));
            let sbs = sbs_for(800, derive_seed(80, "null-perm", r));
            detect_multiple(&series, &local, &sbs)
                .unwrap()
                .tau_hat
                .is_empty()
        })
        .count();

    let len = 1500;
    let truth = [len / 3, 2 * len / 3];
    let two_spec = DgpSpec::single(DgpKind::DenseMean, len, 10).with_change_points(truth.to_vec());
    let tolerance = len / 20;
    let sizes: Vec<usize> = (0..50u64)
        .into_par_iter()
        .map(|r| {
            let series = generate(&two_spec, derive_seed(81, "two-data", r)).unwrap();
            let local = cfg.clone().with_seed(derive_seed(81, "two-run", r));
            let sbs = sbs_for(len, derive_seed(81, "two-perm", r));
            let tau = detect_multiple(&series, &local, &sbs).unwrap().tau_hat;
            let exact = tau.len() == 2
                && tau
                    .iter()
                    .zip(truth)
                    .all(|(&t, c)| t.abs_diff(c) <= tolerance);
            if exact {
                usize::MAX
            } else {
                tau.len()
            }
        })
        .collect();
    let recovered = sizes.iter().filter(|&&s| s == usize::MAX).count();
    let too_many = sizes.iter().filter(|&&s| s != usize::MAX && s > 2).count();
    Outcome {
        pass: empty >= 80 && recovered >= 40,
        detail: format!(
            "null: {empty}/100 empty; two changes: {recovered}/50 exact ({too_many} with extra detections)"
        ),
    }
}

fn run_twice(label: &str, args: &[&str], out: &Path) -> Result<(), String> {
    let mut payloads = Vec::new();
    for _ in 0..2 {
        let mut argv = vec!["changeauc"];
        argv.extend_from_slice(args);
        let out_str = out.to_str().unwrap();
        argv.extend(["--output", out_str]);
        let code = run_cli(argv);
        if code != 0 {
            return Err(format!("{label} exited with {code}"));
        }
        let json = std::fs::read_to_string(out).map_err(|e| e.to_string())?;
        payloads.push(strip_timing(&json).map_err(|e| e.to_string())?);
    }
    if payloads[0] == payloads[1] {
        Ok(())
    } else {
        Err(format!("{label} payloads differ"))
    }
}

fn criterion_9() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let p = |name: &str| dir.path().join(name);
    let data = p("series.csv");
    let data_s = data.to_str().unwrap().to_string();
    let cache = p("cache");
    let cache_s = cache.to_str().unwrap().to_string();
    let sim_report = p("sim.json");
    let sim_report_s = sim_report.to_str().unwrap().to_string();

    let mut failures = Vec::new();
    // simulate writes the CSV and the report; both must repeat exactly
    let mut csvs = Vec::new();
    for _ in 0..2 {
        let code = run_cli([
            "changeauc",
            "simulate",
            "--dgp",
            "dense_mean",
            "--T",
            "400",
            "--p",
            "10",
            "--seed",
            "3",
            "--output",
            &data_s,
            "--report",
            &sim_report_s,
        ]);
        if code != 0 {
            failures.push(format!("simulate exited with {code}"));
        }
        csvs.push((
            std::fs::read(&data).unwrap_or_default(),
            strip_timing(&std::fs::read_to_string(&sim_report).unwrap_or_default())
                .unwrap_or_default(),
        ));
    }
    if csvs[0] != csvs[1] {
        failures.push("simulate outputs differ".into());
    }

    let runs: Vec<(&str, Vec<&str>)> = vec![
        (
            "detect",
            vec![
                "detect",
                "--input",
                &data_s,
                "--classifier",
                "rf",
                "--seed",
                "7",
            ],
        ),
        (
            "detect (simulated table)",
            vec![
                "detect",
                "--input",
                &data_s,
                "--classifier",
                "logistic",
                "--seed",
                "7",
                "--alpha",
                "0.07",
                "--cache-dir",
                &cache_s,
                "--knots",
                "1000",
                "--table-reps",
                "2000",
            ],
        ),
        (
            "cusum",
            vec![
                "cusum",
                "--input",
                &data_s,
                "--classifier",
                "rf",
                "--seed",
                "7",
            ],
        ),
        (
            "detect-multi",
            vec![
                "detect-multi",
                "--input",
                &data_s,
                "--classifier",
                "logistic",
                "--seed",
                "7",
                "--permutations",
                "19",
                "--min-len",
                "100",
            ],
        ),
        (
            "quantiles",
            vec![
                "quantiles",
                "--kind",
                "h0",
                "--knots",
                "1000",
                "--reps",
                "2000",
                "--seed",
                "1",
                "--no-cache",
            ],
        ),
        (
            "benchmark",
            vec![
                "benchmark",
                "--dgp",
                "standard_null,dense_mean",
                "--classifier",
                "logistic,rf",
                "--T",
                "200",
                "--p",
                "5",
                "--reps",
                "4",
                "--seed",
                "9",
            ],
        ),
    ];
    for (label, args) in &runs {
        if let Err(e) = run_twice(label, args, &p("report.json")) {
            failures.push(e);
        }
    }
    Outcome {
        pass: failures.is_empty(),
        detail: if failures.is_empty() {
            format!(
                "{} subcommand runs repeated byte-identically",
                runs.len() + 1
            )
        } else {
            failures.join("; ")
        },
    }
}

fn report(n: usize, name: &str, started: Instant, outcome: &Outcome) {
    println!(
        "criterion {n} [{name}]: {} ({}) [{:.1}s]",
        if outcome.pass { "PASS" } else { "FAIL" },
        outcome.detail,
        started.elapsed().as_secs_f64()
    );
}

fn main() {
    let mut all = true;
    let mut record = |n: usize, name: &str, f: &mut dyn FnMut() -> Outcome| {
        let t = Instant::now();
        let o = f();
        report(n, name, t, &o);
        all &= o.pass;
    };

    let mut g0 = None;
    record(1, "sup G0 quantiles", &mut || {
        let (o, t) = quantile_table(StatisticKind::SupG0, REFERENCE_SUP_G0);
        g0 = Some(t);
        o
    });
    record(2, "sup H0 quantiles", &mut || {
        quantile_table(StatisticKind::SupH0, REFERENCE_SUP_H0).0
    });
    let g0 = g0.unwrap();
    record(3, "incremental AUC vs direct", &mut criterion_3);
    record(4, "size, standard_null", &mut || criterion_4(&g0));
    record(5, "power, dense_mean", &mut || criterion_5(&g0));
    record(6, "banded_cov classifier contrast", &mut || {
        criterion_6(&g0)
    });
    record(7, "monotone invariance", &mut criterion_7);
    record(8, "seeded binary segmentation", &mut criterion_8);
    record(9, "determinism", &mut criterion_9);

    if !all {
        println!("acceptance: at least one criterion failed");
        std::process::exit(1);
    }
    println!("acceptance: all criteria passed");
}
