//! `anchorcc` — multi-view anchor-correspondence clustering from the shell.
//!
//! Four subcommands: `generate` writes a synthetic multi-view dataset,
//! `cluster` runs the full pipeline on a dataset manifest, `sweep` runs the
//! λ×m hyperparameter grid across seeds, and `eval` scores a label file
//! against ground truth. All outputs are plain text (CSV and key=value
//! blocks); identical flags and seed reproduce byte-identical result files,
//! with wall-clock timings confined to the append-only run record.

use anchorcc::data_io::{
    generate_simulated, load_dataset, load_labels, save_dataset, save_labels, save_matrix,
    MultiViewDataset,
};
use anchorcc::metrics::MetricsReport;
use anchorcc::pipeline::{run, AlignMode, AnchorMode, ClusteringResult, PipelineConfig};
use anchorcc::anchor_graph::InitStrategy;
use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(name = "anchorcc", version, about = "Fast multi-view clustering with anchor correspondence", long_about = None)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic two-view clustering dataset.
    Generate(GenerateArgs),
    /// Run the full clustering pipeline on a dataset.
    Cluster(ClusterArgs),
    /// Run the λ × anchor-count grid over several seeds.
    Sweep(SweepArgs),
    /// Score a predicted label file against ground truth.
    Eval(EvalArgs),
}

#[derive(clap::Args)]
struct GenerateArgs {
    /// Output directory (created if needed).
    #[arg(long)]
    out: PathBuf,
    /// RNG seed; the dataset is a pure function of the seed.
    #[arg(long)]
    seed: u64,
    /// Cluster-center separation (circle radius).
    #[arg(long, default_value_t = 10.0)]
    sep: f64,
    /// Samples per cluster.
    #[arg(long, default_value_t = 50)]
    per_cluster: usize,
    /// Number of clusters.
    #[arg(long, default_value_t = 4)]
    clusters: usize,
}

#[derive(clap::Args)]
struct ClusterArgs {
    /// Dataset manifest file, or a directory containing `manifest.txt`.
    #[arg(long)]
    data: PathBuf,
    /// Number of anchors per view.
    #[arg(long)]
    anchors: usize,
    /// Number of clusters.
    #[arg(long)]
    clusters: usize,
    /// Structure-correspondence weight λ; `inf` selects structure-only
    /// weighting.
    #[arg(long, value_parser = parse_lambda)]
    lambda: Option<f64>,
    /// Anchor-graph regularizer β.
    #[arg(long)]
    beta: Option<f64>,
    /// Fixed-point step size α in (0, 1].
    #[arg(long)]
    alpha: Option<f64>,
    /// RNG seed for anchor initialization and k-means restarts.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// How correspondence plans enter the fusion.
    #[arg(long, value_enum, default_value_t = AlignFlag::Hard)]
    align: AlignFlag,
    /// Anchor-learning variant.
    #[arg(long, value_enum, default_value_t = AnchorModeFlag::Orthogonal)]
    anchor_mode: AnchorModeFlag,
    /// Anchor initialization for the learned modes.
    #[arg(long, value_enum, default_value_t = AnchorInitFlag::Kmeans)]
    anchor_init: AnchorInitFlag,
    /// Apply a seed-derived random column permutation to every view's
    /// anchor graph before alignment (induces the anchor-unaligned
    /// problem on purpose).
    #[arg(long)]
    scramble: bool,
    /// Additionally write each Z_i, each P_i, and Z_aligned as CSV.
    #[arg(long)]
    dump_matrices: bool,
    /// Output directory (created if needed).
    #[arg(long)]
    out: PathBuf,
}

#[derive(clap::Args)]
struct SweepArgs {
    /// Dataset manifest file, or a directory containing `manifest.txt`.
    /// The dataset must carry ground-truth labels.
    #[arg(long)]
    data: PathBuf,
    /// Number of clusters k; the anchor grid is {k, 2k, 5k}.
    #[arg(long)]
    clusters: usize,
    /// Number of seeds (0..N).
    #[arg(long, default_value_t = 5)]
    seeds: u64,
    /// Concurrent grid cells (0 = one per core). The ANCHORCC_JOBS
    /// environment variable overrides this flag.
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    /// Output CSV file.
    #[arg(long)]
    out: PathBuf,
}

#[derive(clap::Args)]
struct EvalArgs {
    /// Predicted labels, one integer per line.
    #[arg(long)]
    pred: PathBuf,
    /// Ground-truth labels, one integer per line.
    #[arg(long)]
    truth: PathBuf,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum AlignFlag {
    Hard,
    Relaxed,
    None,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum AnchorModeFlag {
    Orthogonal,
    Fixed,
    Unconstrained,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum AnchorInitFlag {
    Kmeans,
    Sample,
}

impl AlignFlag {
    fn to_mode(self) -> AlignMode {
        match self {
            AlignFlag::Hard => AlignMode::Hard,
            AlignFlag::Relaxed => AlignMode::Relaxed,
            AlignFlag::None => AlignMode::None,
        }
    }
    fn name(self) -> &'static str {
        match self {
            AlignFlag::Hard => "hard",
            AlignFlag::Relaxed => "relaxed",
            AlignFlag::None => "none",
        }
    }
}

impl AnchorModeFlag {
    fn to_mode(self) -> AnchorMode {
        match self {
            AnchorModeFlag::Orthogonal => AnchorMode::Orthogonal,
            AnchorModeFlag::Fixed => AnchorMode::Fixed,
            AnchorModeFlag::Unconstrained => AnchorMode::Unconstrained,
        }
    }
    fn name(self) -> &'static str {
        match self {
            AnchorModeFlag::Orthogonal => "orthogonal",
            AnchorModeFlag::Fixed => "fixed",
            AnchorModeFlag::Unconstrained => "unconstrained",
        }
    }
}

impl AnchorInitFlag {
    fn to_strategy(self) -> InitStrategy {
        match self {
            AnchorInitFlag::Kmeans => InitStrategy::Kmeans,
            AnchorInitFlag::Sample => InitStrategy::Sample,
        }
    }
    fn name(self) -> &'static str {
        match self {
            AnchorInitFlag::Kmeans => "kmeans",
            AnchorInitFlag::Sample => "sample",
        }
    }
}

/// Accept `inf`/`infinity` (case-insensitive) or any nonnegative number.
fn parse_lambda(s: &str) -> Result<f64, String> {
    if s.eq_ignore_ascii_case("inf") || s.eq_ignore_ascii_case("infinity") {
        return Ok(f64::INFINITY);
    }
    let v: f64 = s.parse().map_err(|_| format!("bad lambda {s:?}"))?;
    if v.is_nan() || v < 0.0 {
        return Err(format!("lambda must be nonnegative or inf, got {s}"));
    }
    Ok(v)
}

/// Render λ the way the sweep table labels it: `inf` for the
/// structure-only column, plain decimal otherwise.
fn lambda_label(lambda: f64) -> String {
    if lambda.is_infinite() {
        "inf".to_string()
    } else {
        format!("{lambda}")
    }
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    if let Err(err) = dispatch(Cli::parse()) {
        eprintln!("error: {err:#}");
        std::process::exit(1);
    }
}

fn dispatch(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Generate(args) => cmd_generate(args),
        Command::Cluster(args) => cmd_cluster(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Eval(args) => cmd_eval(args),
    }
}

fn cmd_generate(args: GenerateArgs) -> anyhow::Result<()> {
    let dataset = generate_simulated(args.seed, args.per_cluster, args.clusters, args.sep)
        .context("generating the dataset")?;
    let manifest = save_dataset(&dataset, &args.out).context("writing the dataset")?;
    println!(
        "wrote {} (n={}, v={}, k={})",
        manifest.display(),
        dataset.n(),
        dataset.v(),
        args.clusters
    );
    Ok(())
}

/// Resolve `--data`: a manifest file as-is, or `manifest.txt` inside a
/// directory.
fn resolve_manifest(data: &Path) -> PathBuf {
    if data.is_dir() {
        data.join("manifest.txt")
    } else {
        data.to_path_buf()
    }
}

fn build_config(args: &ClusterArgs) -> PipelineConfig {
    let mut cfg = PipelineConfig::new(args.anchors, args.clusters);
    if let Some(lambda) = args.lambda {
        cfg.lambda = lambda;
    }
    if let Some(beta) = args.beta {
        cfg.beta = beta;
    }
    if let Some(alpha) = args.alpha {
        cfg.alpha = alpha;
    }
    cfg.seed = args.seed;
    cfg.align_mode = args.align.to_mode();
    cfg.anchor_mode = args.anchor_mode.to_mode();
    cfg.anchor_init = args.anchor_init.to_strategy();
    cfg.scramble = args.scramble;
    cfg
}

fn cmd_cluster(args: ClusterArgs) -> anyhow::Result<()> {
    let manifest = resolve_manifest(&args.data);
    let dataset = load_dataset(&manifest)
        .with_context(|| format!("loading dataset {}", manifest.display()))?;
    let cfg = build_config(&args);

    let result = run(&dataset, &cfg)?;

    fs::create_dir_all(&args.out)
        .with_context(|| format!("creating output directory {}", args.out.display()))?;
    let labels_path = args.out.join("labels.csv");
    save_labels(&result.labels, &labels_path)?;
    let mut outputs = vec![labels_path.clone()];

    // Metrics block: only when the dataset carries ground truth.
    let metrics = dataset
        .labels()
        .map(|truth| MetricsReport::evaluate(&result.labels, truth))
        .transpose()?;
    if let Some(report) = &metrics {
        let block = metrics_block(report);
        print!("{block}");
        let metrics_path = args.out.join("metrics.txt");
        fs::write(&metrics_path, block)
            .with_context(|| format!("writing {}", metrics_path.display()))?;
        outputs.push(metrics_path);
    }

    if args.dump_matrices {
        outputs.extend(dump_matrices(&args.out, &result)?);
    }

    let record_path = args.out.join("run_record.txt");
    append_run_record(&record_path, &dataset, &args, &cfg, &result, &metrics, &outputs)?;
    println!("labels: {}", labels_path.display());
    println!("record: {}", record_path.display());
    Ok(())
}

fn metrics_block(report: &MetricsReport) -> String {
    format!(
        "acc={:.6}\nnmi={:.6}\nfscore={:.6}\n",
        report.acc, report.nmi, report.fscore
    )
}

/// Write each view's anchor graph, each correspondence plan as it entered
/// the fusion, and the fused graph. Returns the files written.
fn dump_matrices(out: &Path, result: &ClusteringResult) -> anyhow::Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    for (i, graph) in result.graphs.iter().enumerate() {
        let path = out.join(format!("z{i}.csv"));
        save_matrix(graph.matrix(), &path)?;
        written.push(path);
    }
    for (i, plan) in result.plans.iter().enumerate() {
        // Plans are indexed by the view they align (views 1..v).
        let path = out.join(format!("p{}.csv", i + 1));
        save_matrix(&plan.relaxed, &path)?;
        written.push(path);
        let hard_path = out.join(format!("p{}_hard.csv", i + 1));
        save_matrix(&plan.permutation_matrix(), &hard_path)?;
        written.push(hard_path);
    }
    let fused_path = out.join("z_aligned.csv");
    save_matrix(result.fused.matrix(), &fused_path)?;
    written.push(fused_path);
    Ok(written)
}

/// Append exactly one `[run]` block to the record file: config echo,
/// per-stage timings, metrics if present, output paths, tool version, seed.
#[allow(clippy::too_many_arguments)]
fn append_run_record(
    path: &Path,
    dataset: &MultiViewDataset,
    args: &ClusterArgs,
    cfg: &PipelineConfig,
    result: &ClusteringResult,
    metrics: &Option<MetricsReport>,
    outputs: &[PathBuf],
) -> anyhow::Result<()> {
    let timestamp = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let mut block = String::new();
    let _ = writeln!(block, "[run]");
    let _ = writeln!(block, "tool_version={}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(block, "timestamp_unix={timestamp}");
    let _ = writeln!(block, "dataset={}", dataset.name());
    let _ = writeln!(block, "n={}", dataset.n());
    let _ = writeln!(block, "v={}", dataset.v());
    let _ = writeln!(block, "anchors={}", cfg.m);
    let _ = writeln!(block, "clusters={}", cfg.k);
    let _ = writeln!(block, "lambda={}", lambda_label(cfg.lambda));
    let _ = writeln!(block, "beta={}", cfg.beta);
    let _ = writeln!(block, "alpha={}", cfg.alpha);
    let _ = writeln!(block, "seed={}", cfg.seed);
    let _ = writeln!(block, "align={}", args.align.name());
    let _ = writeln!(block, "anchor_mode={}", args.anchor_mode.name());
    let _ = writeln!(block, "anchor_init={}", args.anchor_init.name());
    let _ = writeln!(block, "scramble={}", cfg.scramble);
    let t = &result.timings;
    let _ = writeln!(block, "time_learn_s={:.6}", t.learn);
    let _ = writeln!(block, "time_align_s={:.6}", t.align);
    let _ = writeln!(block, "time_fuse_s={:.6}", t.fuse);
    let _ = writeln!(block, "time_embed_s={:.6}", t.embed);
    let _ = writeln!(block, "time_kmeans_s={:.6}", t.kmeans);
    let _ = writeln!(block, "time_total_s={:.6}", t.total);
    let _ = writeln!(block, "embedding_padded={}", result.embedding_padded);
    let _ = writeln!(block, "kmeans_inertia={:.6e}", result.kmeans_inertia);
    if let Some(report) = metrics {
        let _ = writeln!(block, "acc={:.6}", report.acc);
        let _ = writeln!(block, "nmi={:.6}", report.nmi);
        let _ = writeln!(block, "fscore={:.6}", report.fscore);
    }
    for file in outputs {
        let _ = writeln!(block, "output={}", file.display());
    }
    let _ = writeln!(block);

    let mut file = fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .with_context(|| format!("opening {}", path.display()))?;
    file.write_all(block.as_bytes())
        .with_context(|| format!("appending to {}", path.display()))?;
    Ok(())
}

fn cmd_sweep(args: SweepArgs) -> anyhow::Result<()> {
    let manifest = resolve_manifest(&args.data);
    let dataset = load_dataset(&manifest)
        .with_context(|| format!("loading dataset {}", manifest.display()))?;
    if dataset.labels().is_none() {
        bail!("sweep requires a dataset with ground-truth labels");
    }
    let truth = dataset.labels().expect("checked above").to_vec();

    let k = args.clusters;
    let lambdas = [1e-4, 1.0, 1e4, f64::INFINITY];
    let anchor_counts = [k, 2 * k, 5 * k];
    let mut cells = Vec::new();
    for &lambda in &lambdas {
        for &m in &anchor_counts {
            for seed in 0..args.seeds {
                cells.push((lambda, m, seed));
            }
        }
    }

    let jobs = match std::env::var("ANCHORCC_JOBS") {
        Ok(raw) => raw
            .parse::<usize>()
            .with_context(|| format!("bad ANCHORCC_JOBS value {raw:?}"))?,
        Err(_) => args.jobs,
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .context("building the sweep thread pool")?;

    // Each cell is an independent deterministic run; rows come back in
    // grid order regardless of scheduling.
    use rayon::prelude::*;
    let rows: Vec<String> = pool.install(|| {
        cells
            .par_iter()
            .map(|&(lambda, m, seed)| -> anyhow::Result<String> {
                let mut cfg = PipelineConfig::new(m, k);
                cfg.lambda = lambda;
                cfg.seed = seed;
                let result = run(&dataset, &cfg)?;
                let report = MetricsReport::evaluate(&result.labels, &truth)?;
                Ok(format!(
                    "{},{},{},{:.6},{:.6},{:.6}",
                    lambda_label(lambda),
                    m,
                    seed,
                    report.acc,
                    report.nmi,
                    report.fscore
                ))
            })
            .collect::<anyhow::Result<Vec<_>>>()
    })?;

    let mut table = String::from("lambda,m,seed,acc,nmi,fscore\n");
    for row in rows {
        table.push_str(&row);
        table.push('\n');
    }
    if let Some(parent) = args.out.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)
                .with_context(|| format!("creating {}", parent.display()))?;
        }
    }
    fs::write(&args.out, table).with_context(|| format!("writing {}", args.out.display()))?;
    println!(
        "wrote {} ({} rows)",
        args.out.display(),
        cells.len()
    );
    Ok(())
}

fn cmd_eval(args: EvalArgs) -> anyhow::Result<()> {
    let pred = load_labels(&args.pred)
        .with_context(|| format!("loading predictions {}", args.pred.display()))?;
    let truth = load_labels(&args.truth)
        .with_context(|| format!("loading ground truth {}", args.truth.display()))?;
    let report = MetricsReport::evaluate(&pred, &truth)?;
    print!("{}", metrics_block(&report));
    Ok(())
}
