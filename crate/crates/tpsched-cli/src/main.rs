//! Command-line front end: fit profiles from samples, build and refine
//! schedules, simulate them, generate synthetic workloads, and run
//! pipeline-comparison experiments.
//!
//! Exit codes: 0 success, 1 usage error, 2 validation error, 3 runtime
//! failure (deadlock, fit failure, I/O). `TPSCHED_SEED` sets the default
//! seed for commands that take one.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use tpsched::{
    analysis, dup, experiment, gen, io as tio, model, profiling, schedulers, sim, split,
};
use tpsched::Error;

#[derive(Parser)]
#[command(name = "tpsched", version, about = "Throughput-oriented DAG scheduling toolkit")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Fit link profiles and an execution matrix from measurement CSVs
    Fit(FitArgs),
    /// Place a DAG on a cluster and predict its throughput
    Schedule(ScheduleArgs),
    /// Improve a schedule by node splitting or task duplication
    Refine(RefineArgs),
    /// Simulate a schedule and compare against the analytic prediction
    Simulate(SimArgs),
    /// Generate a synthetic DAG/cluster/matrix bundle
    Gen(GenArgs),
    /// Run a grid of scheduler+refiner pipelines and report a table
    Experiment(ExpArgs),
}

#[derive(Args)]
struct FitArgs {
    /// Transfer sample CSVs (src,dst,size_bytes,time_s); repeatable
    #[arg(long = "transfers", required = true, num_args = 1..)]
    transfers: Vec<PathBuf>,
    /// Execution sample CSVs (task,node,time_s); repeatable
    #[arg(long = "execs", required = true, num_args = 1..)]
    execs: Vec<PathBuf>,
    /// Output cluster file with fitted link profiles
    #[arg(long)]
    out_cluster: PathBuf,
    /// Output execution matrix file
    #[arg(long)]
    out_matrix: PathBuf,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Algorithm {
    Heft,
    Tpheft,
    Manual,
}

#[derive(Args)]
struct ScheduleArgs {
    #[arg(long)]
    dag: PathBuf,
    #[arg(long)]
    cluster: PathBuf,
    #[arg(long)]
    matrix: PathBuf,
    #[arg(long, value_enum)]
    algorithm: Algorithm,
    /// Task->node placement JSON, required with --algorithm manual
    #[arg(long)]
    manual_map: Option<PathBuf>,
    /// Output schedule file
    #[arg(long)]
    out: PathBuf,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Method {
    Split,
    Dup,
}

#[derive(Args)]
struct RefineArgs {
    #[arg(long)]
    dag: PathBuf,
    #[arg(long)]
    cluster: PathBuf,
    #[arg(long)]
    matrix: PathBuf,
    #[arg(long)]
    schedule: PathBuf,
    #[arg(long, value_enum)]
    method: Method,
    #[arg(long, default_value_t = 8)]
    max_rounds: usize,
    /// Output schedule file
    #[arg(long)]
    out: PathBuf,
    /// Output DAG file (required with --method dup, which rewrites the DAG)
    #[arg(long)]
    out_dag: Option<PathBuf>,
}

#[derive(Args)]
struct SimArgs {
    #[arg(long)]
    dag: PathBuf,
    #[arg(long)]
    cluster: PathBuf,
    #[arg(long)]
    matrix: PathBuf,
    #[arg(long)]
    schedule: PathBuf,
    #[arg(long, default_value_t = 300)]
    instances: usize,
    #[arg(long, env = "TPSCHED_SEED", default_value_t = 0)]
    seed: u64,
    /// Completions to drop before measuring (default: max(2 x tasks, 20))
    #[arg(long)]
    warmup: Option<usize>,
    /// Seconds between source injections (0 saturates)
    #[arg(long, default_value_t = 0.0)]
    interarrival: f64,
    /// Relative uniform duration jitter, e.g. 0.02
    #[arg(long, default_value_t = 0.0)]
    jitter: f64,
    /// Write an event trace CSV to this path
    #[arg(long)]
    event_log: Option<PathBuf>,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Shape {
    Diamond,
    Linear,
    LayeredRandom,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, value_enum)]
    shape: Shape,
    /// Chain length (linear shape)
    #[arg(long, default_value_t = 5)]
    length: usize,
    /// Layer count (layered-random shape)
    #[arg(long, default_value_t = 3)]
    layers: usize,
    /// Tasks per layer (layered-random shape)
    #[arg(long, default_value_t = 3)]
    width: usize,
    /// Edge probability between consecutive layers (layered-random shape)
    #[arg(long, default_value_t = 0.5)]
    edge_prob: f64,
    #[arg(long, default_value_t = 4)]
    nodes: usize,
    #[arg(long, default_value_t = 1.0)]
    compute_scale: f64,
    #[arg(long, default_value_t = 1.0)]
    comm_scale: f64,
    #[arg(long, default_value_t = 0.0)]
    heterogeneity: f64,
    #[arg(long, env = "TPSCHED_SEED", default_value_t = 0)]
    seed: u64,
    /// Writes <prefix>-dag.json, <prefix>-cluster.json, <prefix>-matrix.json
    #[arg(long)]
    out_prefix: PathBuf,
}

#[derive(Args)]
struct ExpArgs {
    /// Experiment config JSON (bundles, pipelines, baseline, instances)
    #[arg(long)]
    config: PathBuf,
    /// Also write the report as CSV to this path
    #[arg(long)]
    out_csv: Option<PathBuf>,
    /// Override the config's seed
    #[arg(long, env = "TPSCHED_SEED")]
    seed: Option<u64>,
}

enum CliError {
    Usage(String),
    Lib(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Lib(e)
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn lib_exit_code(err: &Error) -> i32 {
    match err {
        Error::Invalid(_)
        | Error::Cycle
        | Error::CorruptRewrite
        | Error::MissingExec { .. }
        | Error::MissingLink { .. }
        | Error::UnknownNode(_)
        | Error::UnknownTask(_)
        | Error::NegativeTransferTime { .. }
        | Error::EmptySchedule
        | Error::SplitScheduleUnsupported(_)
        | Error::Parse { .. } => 2,
        Error::Config(_) => 1,
        _ => 3,
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    let result = match cli.cmd {
        Cmd::Fit(a) => cmd_fit(a),
        Cmd::Schedule(a) => cmd_schedule(a),
        Cmd::Refine(a) => cmd_refine(a),
        Cmd::Simulate(a) => cmd_simulate(a),
        Cmd::Gen(a) => cmd_gen(a),
        Cmd::Experiment(a) => cmd_experiment(a),
    };
    match result {
        Ok(()) => {}
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            std::process::exit(1);
        }
        Err(CliError::Lib(e)) => {
            eprintln!("error: {e}");
            std::process::exit(lib_exit_code(&e));
        }
    }
}

fn per_1000(tp: f64) -> f64 {
    tp * 1000.0
}

fn cmd_fit(args: FitArgs) -> Result<(), CliError> {
    let mut samples: BTreeMap<(model::NodeId, model::NodeId), Vec<profiling::TransferSample>> =
        BTreeMap::new();
    for path in &args.transfers {
        for (link, mut s) in tio::load_transfer_samples(path)? {
            samples.entry(link).or_default().append(&mut s);
        }
    }
    if samples.is_empty() {
        return Err(usage("transfer sample files contain no samples"));
    }
    let mut execs = Vec::new();
    for path in &args.execs {
        execs.extend(tio::load_exec_samples(path)?);
    }
    if execs.is_empty() {
        return Err(usage("execution sample files contain no samples"));
    }

    let mut nodes: std::collections::BTreeSet<model::NodeId> = std::collections::BTreeSet::new();
    let mut links = Vec::new();
    let mut failures = Vec::new();
    for ((src, dst), s) in &samples {
        nodes.insert(src.clone());
        nodes.insert(dst.clone());
        match profiling::fit_link_profile(s) {
            Ok(profile) => {
                println!(
                    "link {src}->{dst}: a={:.6e} b={:.6e} c={:.6e} (rss {:.3e}, {} samples)",
                    profile.a,
                    profile.b,
                    profile.c,
                    profiling::residual_sum_of_squares(&profile, s),
                    s.len()
                );
                links.push(tio::LinkFile {
                    src: src.clone(),
                    dst: dst.clone(),
                    a: profile.a,
                    b: profile.b,
                    c: profile.c,
                    symmetric: false,
                });
            }
            Err(e) => failures.push((format!("link {src}->{dst}: {e}"), e)),
        }
    }
    if let Some((_, first)) = failures.first() {
        for (msg, _) in &failures {
            eprintln!("error: {msg}");
        }
        return Err(CliError::Lib(match first {
            Error::UnderdeterminedFit(n) => Error::UnderdeterminedFit(*n),
            Error::IllConditionedFit(c) => Error::IllConditionedFit(*c),
            _ => Error::Config(format!("{} link fits failed", failures.len())),
        }));
    }

    let matrix = profiling::build_execution_matrix_dense(&execs)?;
    for node in matrix.exec.values().flat_map(|row| row.keys()) {
        nodes.insert(node.clone());
    }
    let cluster_file = tio::ClusterFile {
        nodes: nodes.into_iter().collect(),
        default_link: None,
        links,
    };
    write_json(&args.out_cluster, &cluster_file)?;
    tio::save_matrix(&args.out_matrix, &matrix)?;
    println!(
        "wrote {} and {}",
        args.out_cluster.display(),
        args.out_matrix.display()
    );
    Ok(())
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable value");
    text.push('\n');
    std::fs::write(path, text).map_err(|e| CliError::Lib(e.into()))
}

fn load_bundle(
    dag: &Path,
    cluster: &Path,
    matrix: &Path,
) -> Result<(model::TaskGraph, model::Cluster, model::ExecutionMatrix), CliError> {
    Ok((
        tio::load_graph(dag)?,
        tio::load_cluster(cluster)?,
        tio::load_matrix(matrix)?,
    ))
}

fn print_prediction(times: &analysis::ResourceTimes) -> Result<(), CliError> {
    println!("predicted schedule times:");
    for (res, t) in &times.times {
        println!("  {res}: {t:.6} s");
    }
    let est = analysis::predicted_throughput(times)?;
    println!("bottleneck: {} ({:.6} s)", est.bottleneck, est.max_schedule_time);
    println!(
        "predicted throughput: {:.6}/s ({:.2} per 1000 s)",
        est.throughput,
        per_1000(est.throughput)
    );
    Ok(())
}

fn cmd_schedule(args: ScheduleArgs) -> Result<(), CliError> {
    let (graph, cluster, matrix) = load_bundle(&args.dag, &args.cluster, &args.matrix)?;
    let schedule = match args.algorithm {
        Algorithm::Heft => schedulers::heft_schedule(&graph, &cluster, &matrix)?,
        Algorithm::Tpheft => schedulers::tpheft_schedule(&graph, &cluster, &matrix)?,
        Algorithm::Manual => {
            let Some(map_path) = &args.manual_map else {
                return Err(usage("--algorithm manual requires --manual-map"));
            };
            let map = tio::load_manual_map(map_path)?;
            schedulers::manual_schedule(&graph, &cluster, &matrix, &map)?
        }
    };
    let times = analysis::resource_times(&schedule, &graph, &cluster, &matrix)?;
    print_prediction(&times)?;
    tio::save_schedule(&args.out, &schedule)?;
    println!("wrote {}", args.out.display());
    Ok(())
}

fn cmd_refine(args: RefineArgs) -> Result<(), CliError> {
    let (graph, cluster, matrix) = load_bundle(&args.dag, &args.cluster, &args.matrix)?;
    let schedule = tio::load_schedule(&args.schedule)?;
    let before = analysis::resource_times(&schedule, &graph, &cluster, &matrix)?;
    let before_tp = analysis::predicted_throughput(&before)?.throughput;

    let (out_graph, out_schedule, rounds) = match args.method {
        Method::Split => {
            let out = split::iterate_split(&schedule, &graph, &cluster, &matrix, args.max_rounds)?;
            (graph.clone(), out.schedule, out.rounds.len())
        }
        Method::Dup => {
            if args.out_dag.is_none() {
                return Err(usage("--method dup requires --out-dag (the DAG is rewritten)"));
            }
            let out = dup::iterate_dup(&schedule, &graph, &cluster, &matrix, args.max_rounds)?;
            if out.rounds.is_empty() {
                println!(
                    "no duplication applied (bottleneck is not a reducible link); schedule unchanged"
                );
            }
            (out.graph, out.schedule, out.rounds.len())
        }
    };

    let after = analysis::resource_times(&out_schedule, &out_graph, &cluster, &matrix)?;
    let after_tp = analysis::predicted_throughput(&after)?.throughput;
    println!(
        "rounds applied: {rounds}; predicted throughput {:.2} -> {:.2} per 1000 s ({:+.2}%)",
        per_1000(before_tp),
        per_1000(after_tp),
        (after_tp - before_tp) / before_tp * 100.0
    );
    tio::save_schedule(&args.out, &out_schedule)?;
    println!("wrote {}", args.out.display());
    if let Some(out_dag) = &args.out_dag {
        tio::save_graph(out_dag, &out_graph)?;
        println!("wrote {}", out_dag.display());
    }
    Ok(())
}

fn cmd_simulate(args: SimArgs) -> Result<(), CliError> {
    let (graph, cluster, matrix) = load_bundle(&args.dag, &args.cluster, &args.matrix)?;
    let schedule = tio::load_schedule(&args.schedule)?;
    let config = sim::SimConfig {
        num_instances: args.instances,
        warmup_instances: args.warmup,
        input_interarrival: args.interarrival,
        seed: args.seed,
        jitter: args.jitter,
        event_log: args.event_log.is_some(),
    };
    let result = sim::simulate(&graph, &cluster, &matrix, &schedule, &config)?;
    println!(
        "measured throughput: {:.6}/s ({:.2} per 1000 s) over {} instances (warmup {})",
        result.throughput,
        per_1000(result.throughput),
        args.instances,
        result.warmup_instances
    );
    println!("steady-state period: {:.6} s", result.steady_state_period);
    println!("busy fractions:");
    for (res, frac) in &result.per_resource_busy_fraction {
        println!("  {res}: {frac:.4}");
    }
    let times = analysis::resource_times(&schedule, &graph, &cluster, &matrix)?;
    let predicted = analysis::predicted_throughput(&times)?.throughput;
    println!(
        "analytic prediction: {:.2} per 1000 s (simulated delta {:+.3}%)",
        per_1000(predicted),
        (result.throughput - predicted) / predicted * 100.0
    );
    if result.routing_violations > 0 {
        println!("routing violations: {}", result.routing_violations);
    }
    if let Some(path) = &args.event_log {
        tio::write_event_log(path, &result.events)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn build_shape(
    shape: Shape,
    length: usize,
    layers: usize,
    width: usize,
    edge_prob: f64,
) -> gen::DagShape {
    match shape {
        Shape::Diamond => gen::DagShape::Diamond,
        Shape::Linear => gen::DagShape::Linear { length },
        Shape::LayeredRandom => gen::DagShape::LayeredRandom { layers, width, edge_prob },
    }
}

fn cmd_gen(args: GenArgs) -> Result<(), CliError> {
    let params = gen::GenParams {
        shape: build_shape(args.shape, args.length, args.layers, args.width, args.edge_prob),
        nodes: args.nodes,
        compute_scale: args.compute_scale,
        comm_scale: args.comm_scale,
        heterogeneity: args.heterogeneity,
        seed: args.seed,
    };
    let (graph, cluster, matrix) = gen::generate(&params)?;
    let prefix = args.out_prefix.display();
    let dag_path = PathBuf::from(format!("{prefix}-dag.json"));
    let cluster_path = PathBuf::from(format!("{prefix}-cluster.json"));
    let matrix_path = PathBuf::from(format!("{prefix}-matrix.json"));
    tio::save_graph(&dag_path, &graph)?;
    tio::save_cluster(&cluster_path, &cluster)?;
    tio::save_matrix(&matrix_path, &matrix)?;
    println!(
        "wrote {} {} {}",
        dag_path.display(),
        cluster_path.display(),
        matrix_path.display()
    );
    Ok(())
}

#[derive(Deserialize)]
struct GenSpec {
    shape: String,
    #[serde(default)]
    length: Option<usize>,
    #[serde(default)]
    layers: Option<usize>,
    #[serde(default)]
    width: Option<usize>,
    #[serde(default)]
    edge_prob: Option<f64>,
    nodes: usize,
    #[serde(default = "one")]
    compute_scale: f64,
    #[serde(default = "one")]
    comm_scale: f64,
    #[serde(default)]
    heterogeneity: f64,
    #[serde(default)]
    seed: u64,
}

fn one() -> f64 {
    1.0
}

#[derive(Deserialize)]
#[serde(untagged)]
enum BundleSource {
    Files {
        dag: PathBuf,
        cluster: PathBuf,
        matrix: PathBuf,
    },
    Gen {
        gen: GenSpec,
    },
}

#[derive(Deserialize)]
struct BundleSpec {
    name: String,
    #[serde(flatten)]
    source: BundleSource,
}

#[derive(Deserialize)]
struct PipelineSpec {
    #[serde(default)]
    name: Option<String>,
    scheduler: String,
    #[serde(default)]
    refiner: Option<String>,
    #[serde(default)]
    manual_map: Option<PathBuf>,
}

#[derive(Deserialize)]
struct ExpFile {
    bundles: Vec<BundleSpec>,
    pipelines: Vec<PipelineSpec>,
    #[serde(default)]
    baseline: usize,
    #[serde(default = "default_instances")]
    instances: usize,
    #[serde(default)]
    seed: u64,
    #[serde(default = "default_rounds")]
    max_rounds: usize,
}

fn default_instances() -> usize {
    400
}

fn default_rounds() -> usize {
    8
}

fn gen_spec_to_params(spec: &GenSpec) -> Result<gen::GenParams, CliError> {
    let shape = match spec.shape.as_str() {
        "diamond" => gen::DagShape::Diamond,
        "linear" => gen::DagShape::Linear { length: spec.length.unwrap_or(5) },
        "layered-random" => gen::DagShape::LayeredRandom {
            layers: spec.layers.unwrap_or(3),
            width: spec.width.unwrap_or(3),
            edge_prob: spec.edge_prob.unwrap_or(0.5),
        },
        other => return Err(usage(format!("unknown DAG shape {other:?}"))),
    };
    Ok(gen::GenParams {
        shape,
        nodes: spec.nodes,
        compute_scale: spec.compute_scale,
        comm_scale: spec.comm_scale,
        heterogeneity: spec.heterogeneity,
        seed: spec.seed,
    })
}

fn cmd_experiment(args: ExpArgs) -> Result<(), CliError> {
    let text = std::fs::read_to_string(&args.config).map_err(|e| CliError::Lib(e.into()))?;
    let file: ExpFile = serde_json::from_str(&text).map_err(|source| {
        CliError::Lib(Error::Parse { path: args.config.display().to_string(), source })
    })?;
    if file.pipelines.is_empty() {
        return Err(usage("experiment config lists no pipelines"));
    }
    if file.bundles.is_empty() {
        return Err(usage("experiment config lists no bundles"));
    }
    if file.baseline >= file.pipelines.len() {
        return Err(usage(format!(
            "baseline index {} out of range for {} pipelines",
            file.baseline,
            file.pipelines.len()
        )));
    }

    let mut bundles = Vec::new();
    for spec in &file.bundles {
        let (graph, cluster, exec) = match &spec.source {
            BundleSource::Files { dag, cluster, matrix } => load_bundle(dag, cluster, matrix)?,
            BundleSource::Gen { gen: g } => gen::generate(&gen_spec_to_params(g)?)?,
        };
        bundles.push(experiment::Bundle { name: spec.name.clone(), graph, cluster, exec });
    }

    let mut pipelines = Vec::new();
    for spec in &file.pipelines {
        let scheduler = match spec.scheduler.as_str() {
            "heft" => experiment::SchedulerKind::Heft,
            "tpheft" => experiment::SchedulerKind::Tpheft,
            "manual" => {
                let Some(map_path) = &spec.manual_map else {
                    return Err(usage("manual pipeline requires manual_map"));
                };
                experiment::SchedulerKind::Manual(tio::load_manual_map(map_path)?)
            }
            other => return Err(usage(format!("unknown scheduler {other:?}"))),
        };
        let refiner = match spec.refiner.as_deref() {
            None | Some("none") => experiment::RefinerKind::None,
            Some("split") => experiment::RefinerKind::Split,
            Some("dup") => experiment::RefinerKind::Dup,
            Some(other) => return Err(usage(format!("unknown refiner {other:?}"))),
        };
        let name = spec.name.clone().unwrap_or_else(|| match spec.refiner.as_deref() {
            None | Some("none") => spec.scheduler.clone(),
            Some(r) => format!("{}+{r}", spec.scheduler),
        });
        pipelines.push(experiment::Pipeline { name, scheduler, refiner });
    }

    let config = experiment::ExperimentConfig {
        baseline: file.baseline,
        instances: file.instances,
        seed: args.seed.unwrap_or(file.seed),
        max_rounds: file.max_rounds,
    };
    let report = experiment::run_experiment(&bundles, &pipelines, &config);
    print!("{}", report.to_table());
    if let Some(path) = &args.out_csv {
        std::fs::write(path, report.to_csv()).map_err(|e| CliError::Lib(e.into()))?;
        println!("wrote {}", path.display());
    }
    if report.cells.iter().any(|c| c.error.is_some()) {
        eprintln!("note: some cells failed; see the error column");
    }
    Ok(())
}
