use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use sqp_core::baselines::{comb_sum, Normalization};
use sqp_core::data::{
    load_descriptors, load_features, load_qrels, load_runs, write_descriptors, write_features, write_runs,
    ConfigurationId, EffectivenessMatrix, QueryId, RunList, ScoreSource,
};
use sqp_core::harness::{report, run_experiment, split_folds, synth_generate, ExperimentParams, Method, SynthSpec};
use sqp_core::matcher::{aggregate_all, write_assignments, TrainOptions, TrainedModel, DEFAULT_DEPTH};
use sqp_core::metrics::{build_matrix, MetricSpec};
use sqp_core::selection::{select_configurations, Objective, RiskParams, SelectedPool};
use sqp_core::{Error, Result};

#[derive(Parser)]
#[command(name = "sqp", version, about = "Risk-sensitive configuration selection and per-query matching")]
struct Cli {
    /// Worker threads (overrides SQP_WORKERS; default 1).
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate one run file per configuration into a matrix.
    Eval(EvalArgs),
    /// Greedy risk-reward selection of K configurations.
    Select(SelectArgs),
    /// Build a matching model from a pool and training features.
    Train(TrainArgs),
    /// Assign a configuration to each query in a feature file.
    Match(MatchArgs),
    /// CombSUM fusion of several run files.
    Fuse(FuseArgs),
    /// Cross-validated comparison of methods.
    Experiment(ExperimentArgs),
    /// Write a synthetic matrix, features and descriptors.
    Synth(SynthArgs),
}

#[derive(Args)]
struct EvalArgs {
    /// Directory of run files; each file stem is a configuration id.
    #[arg(long)]
    runs: PathBuf,
    #[arg(long)]
    qrels: PathBuf,
    /// p@K, ap, ndcg@K, rr or rbp:P[:D]
    #[arg(long)]
    metric: MetricSpec,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    rbp_residuals: Option<PathBuf>,
}

#[derive(Args)]
struct SelectArgs {
    #[arg(long)]
    matrix: PathBuf,
    #[arg(long)]
    baseline: ConfigurationId,
    #[arg(long, default_value = "e")]
    objective: Objective,
    #[arg(long, default_value_t = 0.0)]
    beta: f64,
    #[arg(long)]
    k: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    matrix: PathBuf,
    #[arg(long)]
    pool: PathBuf,
    /// Per-document features: query, doc, feature, value.
    #[arg(long)]
    features: PathBuf,
    #[arg(long)]
    zscore: bool,
    /// Documents aggregated per query.
    #[arg(long, default_value_t = DEFAULT_DEPTH)]
    depth: usize,
    /// Tag of the reference run the features come from.
    #[arg(long, default_value = "")]
    reference: String,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct MatchArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    features: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct FuseArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    runs: Vec<PathBuf>,
    #[arg(long, default_value = "minmax")]
    norm: Normalization,
    #[arg(long, default_value = "combsum")]
    tag: String,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long)]
    matrix: PathBuf,
    #[arg(long)]
    features: Option<PathBuf>,
    /// Configuration descriptors, needed by sqe_cosine.
    #[arg(long)]
    descriptors: Option<PathBuf>,
    #[arg(long, default_value = "best_trained,erisk_cosine,randomk_cosine,oracle_k,oracle")]
    methods: String,
    #[arg(long, default_value_t = 3)]
    draws: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 20)]
    k: usize,
    #[arg(long, default_value = "e")]
    objective: Objective,
    #[arg(long, default_value_t = 0.0)]
    beta: f64,
    /// First-step reference; the fold's best-trained configuration if absent.
    #[arg(long)]
    baseline: Option<ConfigurationId>,
    #[arg(long)]
    zscore: bool,
    #[arg(long, default_value_t = DEFAULT_DEPTH)]
    depth: usize,
    /// Methods every other method is t-tested against.
    #[arg(long, default_value = "best_trained")]
    refs: String,
    /// Method improved/degraded counts are measured against.
    #[arg(long, default_value = "best_trained")]
    count_ref: Method,
    /// Output stem: writes <stem>.tsv, <stem>.md and <stem>.per_query.tsv.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 4)]
    clusters: usize,
    #[arg(long, default_value_t = 3)]
    configs_per_cluster: usize,
    #[arg(long, default_value_t = 10)]
    queries_per_cluster: usize,
    #[arg(long, default_value_t = 0.4)]
    base: f64,
    #[arg(long, default_value_t = 0.3)]
    gap: f64,
    #[arg(long, default_value_t = 0.02)]
    noise: f64,
    #[arg(long)]
    feature_dim: Option<usize>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out_prefix: String,
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| io_err(path, e))
}

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn write_file(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> Result<()> {
    let mut w = create(path)?;
    f(&mut w).and_then(|_| w.flush()).map_err(|e| io_err(path, e))
}

fn eval(a: EvalArgs) -> Result<()> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(&a.runs)
        .map_err(|e| io_err(&a.runs, e))?
        .map(|e| e.map(|e| e.path()).map_err(|err| io_err(&a.runs, err)))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .filter(|p| p.is_file())
        .collect();
    files.sort();
    let mut runs = Vec::with_capacity(files.len());
    for f in &files {
        let stem = f
            .file_stem()
            .and_then(|s| s.to_str())
            .ok_or_else(|| Error::Input(format!("{}: run file name is not valid UTF-8", f.display())))?;
        runs.push((ConfigurationId::new(stem)?, load_runs(f)?));
    }
    if runs.is_empty() {
        return Err(Error::Input(format!("{}: no run files", a.runs.display())));
    }
    let qrels = load_qrels(&a.qrels)?;
    log::info!("evaluating {} configurations with {}", runs.len(), a.metric);
    let built = build_matrix(&runs, &qrels, a.metric)?;
    built.matrix.save(&a.out)?;
    if let Some(path) = a.rbp_residuals {
        let residuals = built.residuals.unwrap_or_default();
        write_file(&path, |w| {
            writeln!(w, "config_id\tquery_id\tresidual")?;
            for (c, q, r) in &residuals {
                writeln!(w, "{c}\t{q}\t{r}")?;
            }
            Ok(())
        })?;
    }
    Ok(())
}

fn select(a: SelectArgs) -> Result<()> {
    let matrix = EffectivenessMatrix::load(&a.matrix)?;
    let params = RiskParams::new(a.objective, a.beta, a.k, a.baseline);
    let pool = select_configurations(&matrix, matrix.queries(), matrix.configs(), &params)?;
    let json = pool.to_json()?;
    write_file(&a.out, |w| w.write_all(json.as_bytes()))
}

fn train(a: TrainArgs) -> Result<()> {
    let matrix = EffectivenessMatrix::load(&a.matrix)?;
    let pool = SelectedPool::load(&a.pool)?;
    let vectors = aggregate_all(&load_features(&a.features)?, a.depth)?;
    let options = TrainOptions {
        zscore: a.zscore,
        depth: a.depth,
        reference: a.reference,
    };
    let model = TrainedModel::train(&matrix, matrix.queries(), &pool.config_ids(), &vectors, &options)?;
    let json = model.to_json()?;
    write_file(&a.out, |w| w.write_all(json.as_bytes()))
}

fn match_queries(a: MatchArgs) -> Result<()> {
    let model = TrainedModel::load(&a.model)?;
    let vectors = aggregate_all(&load_features(&a.features)?, model.depth)?;
    let assignments = model.match_all(&vectors)?;
    write_file(&a.out, |w| write_assignments(w, &assignments))
}

fn fuse(a: FuseArgs) -> Result<()> {
    let mut per_query: Vec<(QueryId, Vec<RunList>)> = Vec::new();
    for path in &a.runs {
        for run in load_runs(path)? {
            match per_query.iter_mut().find(|(q, _)| *q == run.query_id) {
                Some((_, v)) => v.push(run),
                None => per_query.push((run.query_id.clone(), vec![run])),
            }
        }
    }
    let fused = per_query
        .iter()
        .map(|(_, runs)| comb_sum(runs, a.norm)?.to_run_list(&a.tag))
        .collect::<Result<Vec<_>>>()?;
    write_file(&a.out, |w| write_runs(w, &fused))
}

fn report_stem(out: &Path) -> PathBuf {
    match out.extension().and_then(|e| e.to_str()) {
        Some("tsv" | "md") => out.with_extension(""),
        _ => out.to_path_buf(),
    }
}

fn with_suffix(stem: &Path, suffix: &str) -> PathBuf {
    let mut s = stem.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn experiment(a: ExperimentArgs) -> Result<()> {
    let matrix = EffectivenessMatrix::load(&a.matrix)?;
    let methods = Method::parse_list(&a.methods)?;
    let features = a
        .features
        .as_ref()
        .map(|p| load_features(p).and_then(|r| aggregate_all(&r, a.depth)))
        .transpose()?;
    let descriptors = a.descriptors.as_ref().map(load_descriptors).transpose()?;
    let plan = split_folds(matrix.queries(), a.draws, a.seed)?;
    let params = ExperimentParams {
        k: a.k,
        objective: a.objective,
        beta: a.beta,
        baseline: a.baseline,
        seed: a.seed,
        zscore: a.zscore,
        references: Method::parse_list(&a.refs)?,
        count_reference: a.count_ref,
        ..ExperimentParams::default()
    };
    let r = run_experiment(
        &matrix,
        features.as_deref(),
        descriptors.as_deref(),
        &methods,
        &plan,
        &params,
    )?;
    let stem = report_stem(&a.out);
    write_file(&with_suffix(&stem, ".tsv"), |w| report::write_tsv(w, &r))?;
    write_file(&with_suffix(&stem, ".md"), |w| report::write_markdown(w, &r))?;
    write_file(&with_suffix(&stem, ".per_query.tsv"), |w| report::write_per_query(w, &r))
}

fn synth(a: SynthArgs) -> Result<()> {
    let spec = SynthSpec {
        n_clusters: a.clusters,
        configs_per_cluster: a.configs_per_cluster,
        queries_per_cluster: a.queries_per_cluster,
        base_effectiveness: a.base,
        planted_gap: a.gap,
        noise_sd: a.noise,
        feature_dim: a.feature_dim.unwrap_or(a.clusters),
        seed: a.seed,
    };
    let data = synth_generate(&spec)?;
    data.matrix.save(format!("{}.matrix.tsv", a.out_prefix))?;
    write_file(Path::new(&format!("{}.features.tsv", a.out_prefix)), |w| {
        write_features(w, &data.features)
    })?;
    write_file(Path::new(&format!("{}.descriptors.tsv", a.out_prefix)), |w| {
        write_descriptors(w, &data.descriptors)
    })
}

fn workers(flag: Option<usize>) -> Result<usize> {
    if let Some(n) = flag {
        return Ok(n.max(1));
    }
    match std::env::var("SQP_WORKERS") {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map(|n| n.max(1))
            .map_err(|_| Error::Input(format!("SQP_WORKERS={v:?} is not a positive integer"))),
        Err(_) => Ok(1),
    }
}

fn run(cli: Cli) -> Result<()> {
    let n = workers(cli.workers)?;
    // only fails if a pool was already built, which cannot happen here
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    match cli.command {
        Command::Eval(a) => eval(a),
        Command::Select(a) => select(a),
        Command::Train(a) => train(a),
        Command::Match(a) => match_queries(a),
        Command::Fuse(a) => fuse(a),
        Command::Experiment(a) => experiment(a),
        Command::Synth(a) => synth(a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("sqp: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
