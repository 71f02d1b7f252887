// SPDX-License-Identifier: MIT OR Apache-2.0

//! Command-line front end. Every command writes a [`ReportEnvelope`] that
//! echoes the full configuration, seeds included.

use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::cusum::cusum_test;
use crate::error::{Error, Result};
use crate::io::{load_csv, save_series_csv, ReportEnvelope};
use crate::model::{ClassifierKind, RunConfig, DEFAULT_EPSILON, DEFAULT_ETA};
use crate::null_dist::{
    NullQuantileTable, NullTableParams, QuantileCache, StatisticKind, DEFAULT_ALPHAS, DESK_KNOTS,
    DESK_REPS,
};
use crate::sbs::{detect_multiple, PermutationConfig, PermutationStatistic, SbsConfig};
use crate::scan::test_single;
use crate::simbench::{
    generate, run_power_experiment, run_size_experiment, DgpKind, DgpSpec, ExperimentResult,
};

/// Environment variable capping the worker count when `--threads` is absent.
pub const THREADS_ENV: &str = "CHANGEAUC_THREADS";

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

#[derive(Parser, Debug)]
#[command(
    name = "changeauc",
    version,
    about = "Classifier-based change-point detection"
)]
struct Cli {
    /// Worker threads (default: all cores, or $CHANGEAUC_THREADS).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Test for a single change-point with the AUC scan.
    Detect(DetectArgs),
    /// Estimate multiple change-points by seeded binary segmentation.
    DetectMulti(MultiArgs),
    /// Single change-point test with the score CUSUM.
    Cusum(DetectArgs),
    /// Build or load a null quantile table.
    Quantiles(QuantileArgs),
    /// Write a synthetic series as CSV.
    Simulate(SimulateArgs),
    /// Size/power experiments over a grid of settings.
    Benchmark(BenchmarkArgs),
}

#[derive(Args, Debug, Clone)]
struct SeedArgs {
    /// Master seed; required unless --no-seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Draw the seed from system entropy; it is still echoed in the report.
    #[arg(long, conflicts_with = "seed")]
    no_seed: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
enum TableSource {
    /// Built-in reference values when the trimming and level match, else simulate.
    Auto,
    Reference,
    Simulate,
}

#[derive(Args, Debug, Clone)]
struct TableArgs {
    #[arg(long, value_enum, default_value = "auto")]
    table: TableSource,
    /// Quantile cache directory (default: $CHANGEAUC_CACHE_DIR or a temp dir).
    #[arg(long)]
    cache_dir: Option<PathBuf>,
    #[arg(long, default_value_t = DESK_KNOTS)]
    knots: usize,
    #[arg(long = "table-reps", default_value_t = DESK_REPS)]
    table_reps: usize,
    #[arg(long, default_value_t = 1)]
    table_seed: u64,
}

#[derive(Args, Debug, Clone)]
struct RunArgs {
    #[arg(long)]
    input: PathBuf,
    /// The first CSV row holds column names.
    #[arg(long)]
    header: bool,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, default_value = "rf")]
    classifier: String,
    #[arg(long, default_value_t = DEFAULT_EPSILON)]
    epsilon: f64,
    #[arg(long, default_value_t = DEFAULT_ETA)]
    eta: f64,
    #[arg(long)]
    trees: Option<usize>,
    #[command(flatten)]
    seed: SeedArgs,
    /// JSON report path (default: stdout).
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct DetectArgs {
    #[command(flatten)]
    run: RunArgs,
    #[command(flatten)]
    table: TableArgs,
    /// Also write the scanned curve as CSV.
    #[arg(long)]
    emit_curve: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct MultiArgs {
    #[command(flatten)]
    run: RunArgs,
    #[arg(long, default_value_t = crate::sbs::DEFAULT_DECAY)]
    decay: f64,
    #[arg(long, default_value_t = crate::sbs::DEFAULT_MIN_LEN)]
    min_len: usize,
    #[arg(long, default_value_t = crate::sbs::DEFAULT_PERMUTATIONS)]
    permutations: usize,
    #[arg(long, default_value_t = crate::sbs::DEFAULT_THRESHOLD_QUANTILE)]
    threshold_quantile: f64,
    /// Statistic recomputed on each permutation: seeded or full.
    #[arg(long, default_value = "seeded")]
    permutation_statistic: String,
}

#[derive(Args, Debug)]
struct QuantileArgs {
    #[arg(long, default_value = "g0")]
    kind: String,
    #[arg(long, default_value_t = DEFAULT_EPSILON)]
    epsilon: f64,
    #[arg(long, default_value_t = DEFAULT_ETA)]
    eta: f64,
    #[arg(long, default_value_t = DESK_KNOTS)]
    knots: usize,
    #[arg(long, default_value_t = DESK_REPS)]
    reps: usize,
    /// Extra levels to tabulate besides the defaults.
    #[arg(long = "alpha")]
    alphas: Vec<f64>,
    #[arg(long)]
    cache_dir: Option<PathBuf>,
    /// Rebuild even if a cached table exists, and do not store the result.
    #[arg(long)]
    no_cache: bool,
    #[command(flatten)]
    seed: SeedArgs,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[arg(long)]
    dgp: String,
    #[arg(long = "T")]
    len: usize,
    #[arg(long = "p")]
    dim: usize,
    /// Comma-separated change-points; defaults to floor(T/2) for change kinds.
    #[arg(long, value_delimiter = ',')]
    change_points: Option<Vec<usize>>,
    #[arg(long, default_value_t = 1.0)]
    magnitude: f64,
    #[command(flatten)]
    seed: SeedArgs,
    /// Series CSV path.
    #[arg(long)]
    output: PathBuf,
    /// JSON report path (default: stdout).
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct BenchmarkArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    dgp: Vec<String>,
    #[arg(long, value_delimiter = ',', default_value = "rf")]
    classifier: Vec<String>,
    #[arg(long = "T", value_delimiter = ',', required = true)]
    len: Vec<usize>,
    #[arg(long = "p", value_delimiter = ',', required = true)]
    dim: Vec<usize>,
    #[arg(long, default_value_t = 100)]
    reps: usize,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Test statistic: g0 (AUC scan) or h0 (CUSUM).
    #[arg(long, default_value = "g0")]
    statistic: String,
    #[arg(long, default_value_t = DEFAULT_EPSILON)]
    epsilon: f64,
    #[arg(long, default_value_t = DEFAULT_ETA)]
    eta: f64,
    #[arg(long)]
    trees: Option<usize>,
    #[command(flatten)]
    table: TableArgs,
    #[command(flatten)]
    seed: SeedArgs,
    /// Per-replication CSV path.
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, Serialize)]
#[serde(rename_all = "snake_case")]
enum SeedSource {
    Flag,
    Entropy,
}

#[derive(Debug, Serialize)]
struct SeedEcho {
    seed: u64,
    source: SeedSource,
}

fn resolve_seed(args: &SeedArgs) -> Result<SeedEcho> {
    match (args.seed, args.no_seed) {
        (Some(seed), _) => Ok(SeedEcho {
            seed,
            source: SeedSource::Flag,
        }),
        (None, true) => Ok(SeedEcho {
            seed: rand::random(),
            source: SeedSource::Entropy,
        }),
        (None, false) => Err(Error::InvalidConfig(
            "--seed is required (or pass --no-seed to use entropy)".into(),
        )),
    }
}

#[derive(Debug, Serialize)]
struct TableEcho {
    source: TableSource,
    #[serde(skip_serializing_if = "Option::is_none")]
    params: Option<NullTableParams>,
    checksum: String,
}

fn is_default_trim(epsilon: f64, eta: f64) -> bool {
    (epsilon - DEFAULT_EPSILON).abs() < 1e-12 && (eta - DEFAULT_ETA).abs() < 1e-12
}

fn resolve_table(
    kind: StatisticKind,
    epsilon: f64,
    eta: f64,
    alpha: f64,
    args: &TableArgs,
) -> Result<(NullQuantileTable, TableEcho)> {
    let reference_ok = is_default_trim(epsilon, eta)
        && (alpha == 0.0 || DEFAULT_ALPHAS.iter().any(|&a| (a - alpha).abs() < 1e-12));
    let source = match args.table {
        TableSource::Auto if reference_ok => TableSource::Reference,
        TableSource::Auto => TableSource::Simulate,
        TableSource::Reference if !is_default_trim(epsilon, eta) => {
            return Err(Error::InvalidConfig(
                "reference quantiles exist only for epsilon=0.15, eta=0.05".into(),
            ))
        }
        s => s,
    };
    if source == TableSource::Reference {
        let table = NullQuantileTable::reference(kind);
        let checksum = table.checksum.clone();
        return Ok((
            table,
            TableEcho {
                source,
                params: None,
                checksum,
            },
        ));
    }
    let params = NullTableParams {
        kind,
        epsilon,
        eta,
        knots: args.knots,
        reps: args.table_reps,
        seed: args.table_seed,
    };
    let extra: Vec<f64> = if alpha > 0.0 { vec![alpha] } else { vec![] };
    let table = QuantileCache::resolve(args.cache_dir.as_deref()).get_or_build(&params, &extra)?;
    let checksum = table.checksum.clone();
    Ok((
        table,
        TableEcho {
            source,
            params: Some(params),
            checksum,
        },
    ))
}

fn run_config(run: &RunArgs, seed: u64) -> Result<RunConfig> {
    let mut cfg = RunConfig::default()
        .with_classifier(run.classifier.parse::<ClassifierKind>()?)
        .with_alpha(run.alpha)
        .with_seed(seed);
    cfg.epsilon = run.epsilon;
    cfg.eta = run.eta;
    if let Some(n) = run.trees {
        cfg.forest.n_trees = n;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn emit<C: Serialize, P: Serialize>(
    envelope: ReportEnvelope<C, P>,
    started: Instant,
    output: Option<&Path>,
) -> Result<()> {
    let envelope = envelope.with_timing(started.elapsed().as_secs_f64() * 1e3);
    let mut json = envelope.to_json()?;
    json.push('\n');
    match output {
        Some(path) => std::fs::write(path, json)?,
        None => std::io::stdout().write_all(json.as_bytes())?,
    }
    Ok(())
}

#[derive(Serialize)]
struct DetectEcho<'a> {
    input: &'a Path,
    header: bool,
    seed: SeedEcho,
    run: RunConfig,
    table: TableEcho,
}

fn cmd_detect(args: DetectArgs, kind: StatisticKind, started: Instant) -> Result<()> {
    let seed = resolve_seed(&args.run.seed)?;
    let cfg = run_config(&args.run, seed.seed)?;
    let (table, table_echo) = resolve_table(kind, cfg.epsilon, cfg.eta, cfg.alpha, &args.table)?;
    let series = load_csv(&args.run.input, args.run.header)?;
    let report = match kind {
        StatisticKind::SupG0 => test_single(&series, &cfg, &table)?,
        StatisticKind::SupH0 => cusum_test(&series, &cfg, &table)?,
    };
    if let Some(path) = &args.emit_curve {
        let file = File::create(path)?;
        match (&report.auc_curve, &report.cusum_curve) {
            (Some(c), _) => c.write_csv(file)?,
            (_, Some(c)) => c.write_csv(file)?,
            _ => {}
        }
    }
    let echo = DetectEcho {
        input: &args.run.input,
        header: args.run.header,
        seed,
        run: cfg,
        table: table_echo,
    };
    let command = match kind {
        StatisticKind::SupG0 => "detect",
        StatisticKind::SupH0 => "cusum",
    };
    emit(
        ReportEnvelope::new(command, echo, report.without_curves()),
        started,
        args.run.output.as_deref(),
    )
}

#[derive(Serialize)]
struct MultiEcho<'a> {
    input: &'a Path,
    header: bool,
    seed: SeedEcho,
    run: RunConfig,
    sbs: SbsConfig,
}

fn cmd_detect_multi(args: MultiArgs, started: Instant) -> Result<()> {
    let seed = resolve_seed(&args.run.seed)?;
    let cfg = run_config(&args.run, seed.seed)?;
    let statistic = match args.permutation_statistic.as_str() {
        "seeded" | "seeded_max" => PermutationStatistic::SeededMax,
        "full" | "full_segment" => PermutationStatistic::FullSegment,
        other => {
            return Err(Error::InvalidConfig(format!(
                "unknown permutation statistic '{other}'"
            )))
        }
    };
    let sbs = SbsConfig {
        decay: args.decay,
        min_len: args.min_len,
        permutation: PermutationConfig {
            permutations: args.permutations,
            threshold_quantile: args.threshold_quantile,
            seed: crate::rng::derive_seed(seed.seed, "sbs-permutation", 0),
            statistic,
        },
    };
    let series = load_csv(&args.run.input, args.run.header)?;
    let report = detect_multiple(&series, &cfg, &sbs)?;
    let echo = MultiEcho {
        input: &args.run.input,
        header: args.run.header,
        seed,
        run: cfg,
        sbs,
    };
    emit(
        ReportEnvelope::new("detect-multi", echo, report),
        started,
        args.run.output.as_deref(),
    )
}

#[derive(Serialize)]
struct QuantileEcho {
    seed: SeedEcho,
    params: NullTableParams,
    extra_alphas: Vec<f64>,
    cached: bool,
}

fn cmd_quantiles(args: QuantileArgs, started: Instant) -> Result<()> {
    let seed = resolve_seed(&args.seed)?;
    let params = NullTableParams {
        kind: args.kind.parse()?,
        epsilon: args.epsilon,
        eta: args.eta,
        knots: args.knots,
        reps: args.reps,
        seed: seed.seed,
    };
    params.validate()?;
    let table = if args.no_cache {
        crate::null_dist::build_table(&params, &args.alphas)?
    } else {
        QuantileCache::resolve(args.cache_dir.as_deref()).get_or_build(&params, &args.alphas)?
    };
    let echo = QuantileEcho {
        seed,
        params,
        extra_alphas: args.alphas,
        cached: !args.no_cache,
    };
    emit(
        ReportEnvelope::new("quantiles", echo, table),
        started,
        args.output.as_deref(),
    )
}

#[derive(Serialize)]
struct SimulateEcho<'a> {
    seed: SeedEcho,
    dgp: &'a DgpSpec,
    output: &'a Path,
}

#[derive(Serialize)]
struct SimulateSummary {
    rows: usize,
    columns: usize,
}

fn cmd_simulate(args: SimulateArgs, started: Instant) -> Result<()> {
    let seed = resolve_seed(&args.seed)?;
    let kind: DgpKind = args.dgp.parse()?;
    let mut spec = DgpSpec::single(kind, args.len, args.dim).with_magnitude(args.magnitude);
    if let Some(cps) = args.change_points {
        spec = spec.with_change_points(cps);
    }
    spec.validate()?;
    let series = generate(&spec, seed.seed)?;
    save_series_csv(&args.output, &series)?;
    let payload = SimulateSummary {
        rows: series.len(),
        columns: series.dim(),
    };
    let echo = SimulateEcho {
        seed,
        dgp: &spec,
        output: &args.output,
    };
    emit(
        ReportEnvelope::new("simulate", echo, payload),
        started,
        args.report.as_deref(),
    )
}

#[derive(Serialize)]
struct BenchmarkEcho {
    seed: SeedEcho,
    reps: usize,
    alpha: f64,
    statistic: StatisticKind,
    table: TableEcho,
}

#[derive(Serialize)]
struct BenchmarkSummary {
    settings: Vec<ExperimentResult>,
}

fn cmd_benchmark(args: BenchmarkArgs, started: Instant) -> Result<()> {
    let seed = resolve_seed(&args.seed)?;
    let statistic: StatisticKind = args.statistic.parse()?;
    let (table, table_echo) =
        resolve_table(statistic, args.epsilon, args.eta, args.alpha, &args.table)?;
    let kinds = args
        .dgp
        .iter()
        .map(|s| s.parse::<DgpKind>())
        .collect::<Result<Vec<_>>>()?;
    let classifiers = args
        .classifier
        .iter()
        .map(|s| s.parse::<ClassifierKind>())
        .collect::<Result<Vec<_>>>()?;
    let mut settings = Vec::new();
    let mut index = 0u64;
    for &kind in &kinds {
        for &classifier in &classifiers {
            for &len in &args.len {
                for &dim in &args.dim {
                    let spec = DgpSpec::single(kind, len, dim);
                    let mut cfg = RunConfig::default()
                        .with_classifier(classifier)
                        .with_alpha(args.alpha)
                        .with_seed(crate::rng::derive_seed(seed.seed, "setting", index));
                    cfg.epsilon = args.epsilon;
                    cfg.eta = args.eta;
                    if let Some(n) = args.trees {
                        cfg.forest.n_trees = n;
                    }
                    index += 1;
                    log::info!(
                        "benchmark: {} {} T={len} p={dim}",
                        kind.as_str(),
                        classifier.as_str()
                    );
                    let result = if spec.change_points.is_empty() {
                        run_size_experiment(&spec, &cfg, args.reps, &table)?
                    } else {
                        run_power_experiment(&spec, &cfg, args.reps, &table)?
                    };
                    settings.push(result);
                }
            }
        }
    }
    if let Some(path) = &args.csv {
        write_benchmark_csv(File::create(path)?, &settings)?;
    }
    let echo = BenchmarkEcho {
        seed,
        reps: args.reps,
        alpha: args.alpha,
        statistic,
        table: table_echo,
    };
    emit(
        ReportEnvelope::new("benchmark", echo, BenchmarkSummary { settings }),
        started,
        args.output.as_deref(),
    )
}

fn write_benchmark_csv<W: Write>(w: W, settings: &[ExperimentResult]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record([
        "dgp",
        "classifier",
        "T",
        "p",
        "rep",
        "data_seed",
        "reject",
        "scaled_stat",
        "r_hat",
        "ari",
        "localization_error",
    ])?;
    for s in settings {
        for r in &s.records {
            out.write_record([
                s.dgp.kind.as_str().to_string(),
                s.config.classifier.as_str().to_string(),
                s.dgp.len.to_string(),
                s.dgp.dim.to_string(),
                r.rep.to_string(),
                r.data_seed.to_string(),
                r.reject.to_string(),
                r.scaled_stat.to_string(),
                r.r_hat.to_string(),
                r.ari.map(|v| v.to_string()).unwrap_or_default(),
                r.localization_error
                    .map(|v| v.to_string())
                    .unwrap_or_default(),
            ])?;
        }
    }
    out.flush()?;
    Ok(())
}

fn exit_code(err: &Error) -> i32 {
    match err {
        Error::InvalidConfig(_)
        | Error::InvalidTrim(_)
        | Error::InvalidDecay(_)
        | Error::TableMismatch(_) => EXIT_USAGE,
        _ => EXIT_DATA,
    }
}

fn thread_cap(flag: Option<usize>) -> Option<usize> {
    flag.or_else(|| std::env::var(THREADS_ENV).ok()?.parse().ok())
        .filter(|&n| n > 0)
}

/// Parses `argv` (program name first), runs the command and returns the
/// process exit code.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let started = Instant::now();
    let run = move || match cli.command {
        Command::Detect(a) => cmd_detect(a, StatisticKind::SupG0, started),
        Command::Cusum(a) => cmd_detect(a, StatisticKind::SupH0, started),
        Command::DetectMulti(a) => cmd_detect_multi(a, started),
        Command::Quantiles(a) => cmd_quantiles(a, started),
        Command::Simulate(a) => cmd_simulate(a, started),
        Command::Benchmark(a) => cmd_benchmark(a, started),
    };
    let result = match thread_cap(cli.threads) {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(run),
            Err(e) => Err(Error::InvalidConfig(format!("thread pool: {e}"))),
        },
        None => run(),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
