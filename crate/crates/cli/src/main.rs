use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, ensure, Context, Result};
use clap::error::{ContextKind, ContextValue, ErrorKind};
use clap::{ArgAction, Args, Parser, Subcommand};
use serde::Serialize;
use tadropedge::gnn::{
    evaluate, train, Activation, Architecture, Examples, GnnModel, Optimizer, ReadoutKind,
    TrainConfig,
};
use tadropedge::sampler::{
    build_plan, gamma_from_distribution, sample_subgraph, SamplingPlan, StrategyKind,
};
use tadropedge::synth::{generate_sbm, make_diffusion_dataset, SbmConfig};
use tadropedge::weights::{aggregate_resistance_weights, EdgeWeightTable, DEFAULT_WINDOW};
use tadropedge::{find_components, normalized_shift, rng, Graph, SamplingStrategy};
use tadropedge_cli::checks::{self, CheckOptions, Suite};
use tadropedge_cli::experiments::{
    run_inverse_comparison, run_source_localization, run_variance_sweep, InverseConfig, Method,
    ModelConfig, SearchGrid, SourceLocConfig, TaskConfig, VarianceConfig,
};
use tadropedge_cli::io::{self as fio, DatasetPaths};
use tadropedge_cli::report::{emit, num, write_csv, write_json};
use tadropedge_cli::{config, format_error};

#[derive(Parser, Debug)]
#[command(
    name = "tadrop",
    version,
    about = "Topology-aware edge dropping for graph neural networks"
)]
#[command(args_override_self = true, propagate_version = true)]
struct Cli {
    /// Flat JSON object of flag values; flags on the command line win.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate an SBM graph, its planted labels and a diffusion dataset.
    GenSbm(GenSbmArgs),
    /// Connected-component statistics of a graph.
    Components(ComponentsArgs),
    /// Aggregate resistance weights of every edge.
    Weights(WeightsArgs),
    /// Draw one edge-dropped subgraph.
    Sample(SampleArgs),
    /// Train a node classifier on user-supplied files.
    Train(TrainArgs),
    /// Output variance of an untrained model under edge dropping.
    Variance(VarianceArgs),
    /// Run a numerical self-check suite.
    Check(CheckArgs),
    /// Source-localization benchmark across dropping methods and seeds.
    BenchSourceLoc(BenchSourceLocArgs),
    /// Accuracy against keep probability for normal and inverse weighting.
    BenchInverse(BenchInverseArgs),
}

fn existing_path(s: &str) -> std::result::Result<PathBuf, std::io::Error> {
    let p = PathBuf::from(s);
    if p.exists() {
        Ok(p)
    } else {
        Err(std::io::Error::new(
            std::io::ErrorKind::NotFound,
            format!("{s} does not exist"),
        ))
    }
}

#[derive(Args, Debug)]
struct Common {
    /// Base random seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Seeds for multi-seed runs, comma separated.
    #[arg(long, value_delimiter = ',', action = ArgAction::Set, num_args = 1)]
    seeds: Vec<u64>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// JSON report path; printed to stdout when omitted.
    #[arg(long, value_name = "FILE")]
    report: Option<PathBuf>,
}

impl Common {
    fn seeds_or(&self, default: Vec<u64>) -> Vec<u64> {
        if self.seeds.is_empty() {
            default
        } else {
            self.seeds.clone()
        }
    }

    fn out_dir(&self) -> Result<&Path> {
        self.out.as_deref().context("--out DIR is required")
    }
}

/// Overrides for the synthetic task; unset fields keep the defaults
/// (50 nodes, 5 communities, 0.6/0.2, 1600 samples as 100/500/1000,
/// t up to 50, noise variance 0.025).
#[derive(Args, Debug, Default)]
struct TaskArgs {
    #[arg(long)]
    nodes: Option<usize>,
    #[arg(long)]
    communities: Option<usize>,
    #[arg(long)]
    p_intra: Option<f64>,
    #[arg(long)]
    p_inter: Option<f64>,
    /// Number of diffusion samples.
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    train: Option<usize>,
    #[arg(long)]
    val: Option<usize>,
    #[arg(long)]
    test: Option<usize>,
    #[arg(long)]
    t_max: Option<usize>,
    /// Variance of the additive Gaussian noise.
    #[arg(long)]
    noise_variance: Option<f64>,
}

impl TaskArgs {
    fn apply(&self, mut t: TaskConfig) -> TaskConfig {
        macro_rules! set {
            ($($f:ident),*) => { $(if let Some(v) = self.$f { t.$f = v; })* };
        }
        set!(
            nodes,
            communities,
            p_intra,
            p_inter,
            samples,
            train,
            val,
            test,
            t_max,
            noise_variance
        );
        t
    }
}

#[derive(Args, Debug)]
struct ModelArgs {
    /// Hidden feature count of the single graph filter layer.
    #[arg(long, default_value_t = 32)]
    hidden: usize,
    /// Filter order K.
    #[arg(long, default_value_t = 5)]
    order: usize,
    #[arg(long, default_value = "relu")]
    activation: Activation,
    #[arg(long, default_value_t = 400)]
    epochs: usize,
    /// Return the final parameters instead of the best validation epoch.
    #[arg(long)]
    no_select_best: bool,
}

impl ModelArgs {
    fn config(&self) -> ModelConfig {
        ModelConfig {
            hidden: self.hidden,
            order: self.order,
            activation: self.activation,
            epochs: self.epochs,
            select_best: !self.no_select_best,
        }
    }
}

#[derive(Args, Debug)]
struct GenSbmArgs {
    #[command(flatten)]
    task: TaskArgs,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct ComponentsArgs {
    #[arg(long, value_parser = existing_path)]
    graph: PathBuf,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct WeightArgs {
    /// Desired cluster count used to pick q from the eigengap.
    #[arg(long, default_value_t = 2)]
    alpha: usize,
    /// Search window around the desired count.
    #[arg(long, default_value_t = DEFAULT_WINDOW)]
    window: usize,
}

#[derive(Args, Debug)]
struct WeightsArgs {
    #[arg(long, value_parser = existing_path)]
    graph: PathBuf,
    #[command(flatten)]
    weights: WeightArgs,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct DropArgs {
    /// none, iid, cutoff, division, cdf, inv-cutoff, inv-division or inv-cdf.
    #[arg(long, default_value = "iid")]
    strategy: Method,
    /// Default keep probability.
    #[arg(long, default_value_t = 0.5)]
    p: f64,
    /// Weight threshold.
    #[arg(long, conflicts_with = "gamma_quantile")]
    gamma: Option<f64>,
    /// Weight threshold as a quantile of the weight distribution.
    #[arg(long)]
    gamma_quantile: Option<f64>,
    /// Weight file from `tadrop weights`; computed when omitted.
    #[arg(long, value_parser = existing_path)]
    weights: Option<PathBuf>,
    #[command(flatten)]
    weight_args: WeightArgs,
}

impl DropArgs {
    fn plan(&self, g: &Graph) -> Result<(Option<SamplingPlan>, Option<f64>)> {
        let Method::Drop(kind) = self.strategy else {
            return Ok((None, None));
        };
        if kind == StrategyKind::Iid {
            return Ok((Some(SamplingPlan::iid(g.edge_count(), self.p)?), None));
        }
        let table = match &self.weights {
            Some(path) => EdgeWeightTable {
                weights: fio::read_weights(path, g)?,
                q_per_component: Vec::new(),
                default_weight: 0.0,
                node_count: g.node_count(),
            },
            None => {
                aggregate_resistance_weights(g, self.weight_args.alpha, self.weight_args.window)
                    .context("computing edge weights")?
            }
        };
        let gamma = match (self.gamma, self.gamma_quantile) {
            (Some(g), _) => g,
            (None, Some(q)) => gamma_from_distribution(&table, q)?.max(f64::MIN_POSITIVE),
            (None, None) if kind.uses_gamma() => bail!(
                "--gamma or --gamma-quantile is required for {}",
                kind.name()
            ),
            (None, None) => 1.0,
        };
        let plan = build_plan(&table, SamplingStrategy::new(kind, self.p, gamma)?)?;
        Ok((Some(plan), kind.uses_gamma().then_some(gamma)))
    }
}

#[derive(Args, Debug)]
struct SampleArgs {
    #[arg(long, value_parser = existing_path)]
    graph: PathBuf,
    #[command(flatten)]
    drop: DropArgs,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct TrainArgs {
    #[arg(long, value_parser = existing_path)]
    graph: PathBuf,
    /// Node features, one tab-separated row per node.
    #[arg(long, value_parser = existing_path)]
    features: PathBuf,
    /// One class index per line.
    #[arg(long, value_parser = existing_path)]
    labels: PathBuf,
    #[arg(long, value_parser = existing_path)]
    train_mask: Option<PathBuf>,
    #[arg(long, value_parser = existing_path)]
    val_mask: Option<PathBuf>,
    #[arg(long, value_parser = existing_path)]
    test_mask: Option<PathBuf>,
    /// Number of graph filter layers.
    #[arg(long, default_value_t = 2)]
    layers: usize,
    #[arg(long, default_value_t = 64)]
    hidden: usize,
    #[arg(long, default_value_t = 2)]
    order: usize,
    #[arg(long, default_value = "relu")]
    activation: Activation,
    #[arg(long, default_value_t = 200)]
    epochs: usize,
    #[arg(long, default_value_t = 1e-2)]
    lr: f64,
    #[arg(long, default_value_t = 5e-4)]
    weight_decay: f64,
    #[arg(long, default_value = "adam")]
    optimizer: Optimizer,
    /// Keep the parameters from the best validation epoch.
    #[arg(long)]
    select_best: bool,
    #[command(flatten)]
    drop: DropArgs,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct VarianceArgs {
    #[command(flatten)]
    task: TaskArgs,
    /// Hidden widths of the untrained model.
    #[arg(long, value_delimiter = ',', action = ArgAction::Set, num_args = 1, default_value = "32,32,32")]
    widths: Vec<usize>,
    #[arg(long, default_value_t = 1)]
    order: usize,
    #[arg(long, default_value = "relu")]
    activation: Activation,
    #[arg(long, value_delimiter = ',', action = ArgAction::Set, num_args = 1, default_value = "iid,cdf")]
    strategies: Vec<StrategyKind>,
    #[arg(long, value_delimiter = ',', action = ArgAction::Set, num_args = 1, default_value = "0.3,0.5,0.7,1.0")]
    ps: Vec<f64>,
    #[arg(long, default_value_t = 0.9)]
    gamma_quantile: f64,
    /// Monte Carlo subgraphs per point.
    #[arg(long, default_value_t = 500)]
    mc_samples: usize,
    #[arg(long, default_value_t = DEFAULT_WINDOW)]
    window: usize,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct CheckArgs {
    /// gft, theorem1, prop1, eq11, variance or enumerate.
    #[arg(long)]
    suite: Suite,
    /// Run the graph-generic suites on this graph instead of random ones.
    #[arg(long, value_parser = existing_path)]
    graph: Option<PathBuf>,
    /// Number of trials; each suite has its own default.
    #[arg(long)]
    trials: Option<usize>,
    /// Monte Carlo samples for the enumerate suite.
    #[arg(long, default_value_t = 10_000)]
    mc_samples: usize,
    #[command(flatten)]
    task: TaskArgs,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct BenchSourceLocArgs {
    #[command(flatten)]
    task: TaskArgs,
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, value_delimiter = ',', action = ArgAction::Set, num_args = 1, default_value = "none,iid,cutoff,division,cdf")]
    methods: Vec<Method>,
    /// Learning rates searched per method and seed.
    #[arg(long, value_delimiter = ',', action = ArgAction::Set, num_args = 1, default_value = "1e-2")]
    lrs: Vec<f64>,
    #[arg(long, value_delimiter = ',', action = ArgAction::Set, num_args = 1, default_value = "1e-3")]
    weight_decays: Vec<f64>,
    /// Keep probabilities searched by the dropping methods.
    #[arg(long, value_delimiter = ',', action = ArgAction::Set, num_args = 1, default_value = "0.5")]
    ps: Vec<f64>,
    #[arg(long, value_delimiter = ',', action = ArgAction::Set, num_args = 1, default_value = "0.9")]
    gamma_quantiles: Vec<f64>,
    #[arg(long, default_value_t = DEFAULT_WINDOW)]
    window: usize,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct BenchInverseArgs {
    #[command(flatten)]
    task: TaskArgs,
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, value_delimiter = ',', action = ArgAction::Set, num_args = 1, default_value = "cdf,iid,inv-cdf")]
    methods: Vec<Method>,
    #[arg(long, value_delimiter = ',', action = ArgAction::Set, num_args = 1, default_value = "0.3,0.5,0.7,1.0")]
    ps: Vec<f64>,
    #[arg(long, default_value_t = 1e-2)]
    lr: f64,
    #[arg(long, default_value_t = 1e-3)]
    weight_decay: f64,
    #[arg(long, default_value_t = 0.9)]
    gamma_quantile: f64,
    #[arg(long, default_value_t = DEFAULT_WINDOW)]
    window: usize,
    #[command(flatten)]
    common: Common,
}

fn default_seeds() -> Vec<u64> {
    (0..7).collect()
}

fn gen_sbm(a: &GenSbmArgs) -> Result<()> {
    let task = a.task.apply(TaskConfig::default());
    let out = a.common.out_dir()?;
    let seed = a.common.seed;
    let sbm = SbmConfig {
        n: task.nodes,
        c: task.communities,
        p_intra: task.p_intra,
        p_inter: task.p_inter,
        seed,
    };
    let (g, labels) = generate_sbm(&sbm).context("generating the SBM graph")?;
    let data = make_diffusion_dataset(
        &g,
        &labels,
        task.samples,
        task.t_max,
        task.noise_variance.sqrt(),
        rng::derive_seed(seed, 1),
    )
    .context("generating diffusion samples")?;
    fio::write_graph(&out.join("graph.tsv"), &g)?;
    fio::write_labels(&out.join("labels.txt"), &labels)?;
    fio::write_dataset(&out.join("dataset.tsv"), &data)?;
    let intra = g
        .edges()
        .iter()
        .filter(|&&(i, j)| labels[i] == labels[j])
        .count();
    #[derive(Serialize)]
    struct Summary<'a> {
        schema: &'static str,
        task: &'a TaskConfig,
        seed: u64,
        edges: usize,
        intra_edges: usize,
        inter_edges: usize,
        files: [&'static str; 3],
    }
    let s = Summary {
        schema: "tadrop.gen-sbm/1",
        task: &task,
        seed,
        edges: g.edge_count(),
        intra_edges: intra,
        inter_edges: g.edge_count() - intra,
        files: ["graph.tsv", "labels.txt", "dataset.tsv"],
    };
    write_json(
        &a.common
            .report
            .clone()
            .unwrap_or_else(|| out.join("summary.json")),
        &s,
    )
}

fn components(a: &ComponentsArgs) -> Result<()> {
    let g = fio::read_graph(&a.graph)?;
    let lab = find_components(&g);
    let mut sizes = lab.sizes.clone();
    sizes.sort_unstable_by(|a, b| b.cmp(a));
    #[derive(Serialize)]
    struct Report {
        schema: &'static str,
        nodes: usize,
        edges: usize,
        count: usize,
        largest: usize,
        smallest: usize,
        sizes: Vec<usize>,
    }
    let r = Report {
        schema: "tadrop.components/1",
        nodes: g.node_count(),
        edges: g.edge_count(),
        count: lab.count,
        largest: sizes.first().copied().unwrap_or(0),
        smallest: sizes.last().copied().unwrap_or(0),
        sizes,
    };
    emit(a.common.report.as_deref(), &r)
}

#[derive(Serialize)]
struct WeightSummary {
    schema: &'static str,
    edges: usize,
    q_per_component: Vec<Option<usize>>,
    default_weight: f64,
    min: Option<f64>,
    max: Option<f64>,
    histogram: Vec<usize>,
}

fn weights(a: &WeightsArgs) -> Result<()> {
    let g = fio::read_graph(&a.graph)?;
    let table = aggregate_resistance_weights(&g, a.weights.alpha, a.weights.window)?;
    let out = a.common.out_dir()?;
    fio::write_weights(&out.join("weights.tsv"), &g, &table)?;
    let s = WeightSummary {
        schema: "tadrop.weights/1",
        edges: table.len(),
        q_per_component: table.q_per_component.clone(),
        default_weight: table.default_weight,
        min: table.min(),
        max: table.max(),
        histogram: table.histogram(32),
    };
    write_json(
        &a.common
            .report
            .clone()
            .unwrap_or_else(|| out.join("weights.json")),
        &s,
    )
}

fn sample(a: &SampleArgs) -> Result<()> {
    let g = fio::read_graph(&a.graph)?;
    let (plan, gamma) = a.drop.plan(&g)?;
    let plan = plan.unwrap_or_else(|| SamplingPlan::full(g.edge_count()));
    let h = sample_subgraph(&g, &plan, a.common.seed)?;
    let out = a.common.out_dir()?;
    fio::write_graph(&out.join("subgraph.tsv"), &h)?;
    #[derive(Serialize)]
    struct Report {
        schema: &'static str,
        strategy: Method,
        p: f64,
        gamma: Option<f64>,
        seed: u64,
        edges: usize,
        kept: usize,
        expected_kept: f64,
    }
    let r = Report {
        schema: "tadrop.sample/1",
        strategy: a.drop.strategy,
        p: a.drop.p,
        gamma,
        seed: a.common.seed,
        edges: g.edge_count(),
        kept: h.edge_count(),
        expected_kept: plan.expected_kept(),
    };
    write_json(
        &a.common
            .report
            .clone()
            .unwrap_or_else(|| out.join("sample.json")),
        &r,
    )
}

fn train_cmd(a: &TrainArgs) -> Result<()> {
    let paths = DatasetPaths {
        graph: a.graph.clone(),
        features: a.features.clone(),
        labels: a.labels.clone(),
        train_mask: a.train_mask.clone(),
        val_mask: a.val_mask.clone(),
        test_mask: a.test_mask.clone(),
    };
    let d = fio::load_node_dataset(&paths)?;
    let n = d.graph.node_count();
    ensure!(n > 0, "the graph has no nodes");
    ensure!(a.layers > 0, "--layers must be at least 1");
    if a.select_best {
        ensure!(d.masks.val.is_some(), "--select-best needs --val-mask");
    }
    let classes = d.labels.iter().max().map_or(0, |m| m + 1);
    let mut widths = vec![d.features.ncols()];
    widths.extend(std::iter::repeat_n(a.hidden, a.layers));
    let arch = Architecture {
        widths,
        order: a.order,
        activation: a.activation,
        readout: Some(ReadoutKind::Node),
        classes,
        nodes: n,
    };
    let seed = a.common.seed;
    let model = GnnModel::init(&arch, rng::derive_seed(seed, 2))?;
    let all: Vec<usize> = (0..n).collect();
    let ex = |nodes: &[usize]| Examples::node_level(d.features.clone(), &d.labels, nodes);
    let train_set = ex(d.masks.train.as_deref().unwrap_or(&all))?;
    let val_set = d.masks.val.as_deref().map(ex).transpose()?;
    let test_set = d.masks.test.as_deref().map(ex).transpose()?;
    let (plan, gamma) = a.drop.plan(&d.graph)?;
    let cfg = TrainConfig {
        epochs: a.epochs,
        learning_rate: a.lr,
        optimizer: a.optimizer,
        weight_decay: a.weight_decay,
        seed: rng::derive_seed(seed, 3),
        select_best: a.select_best,
    };
    let out = train(
        model,
        &d.graph,
        &train_set,
        val_set.as_ref(),
        &cfg,
        plan.as_ref(),
    )
    .context("training")?;
    let s = normalized_shift(&d.graph);
    let score = |e: &Option<Examples>| -> Result<Option<f64>> {
        e.as_ref()
            .map(|e| evaluate(&out.model, &s, e).map(|(_, acc)| acc))
            .transpose()
            .map_err(Into::into)
    };
    #[derive(Serialize)]
    struct Report<'a> {
        schema: &'static str,
        strategy: Method,
        p: f64,
        gamma: Option<f64>,
        train: &'a TrainConfig,
        parameters: usize,
        selected_epoch: usize,
        train_accuracy: f64,
        val_accuracy: Option<f64>,
        test_accuracy: Option<f64>,
        train_loss: Vec<f64>,
    }
    let r = Report {
        schema: "tadrop.train/1",
        strategy: a.drop.strategy,
        p: if a.drop.strategy.uses_p() {
            a.drop.p
        } else {
            1.0
        },
        gamma,
        train: &cfg,
        parameters: out.model.parameter_count(),
        selected_epoch: out.selected_epoch,
        train_accuracy: evaluate(&out.model, &s, &train_set)?.1,
        val_accuracy: score(&val_set)?,
        test_accuracy: score(&test_set)?,
        train_loss: out.trace.iter().map(|t| t.train_loss).collect(),
    };
    emit(a.common.report.as_deref(), &r)
}

fn variance(a: &VarianceArgs) -> Result<()> {
    let cfg = VarianceConfig {
        task: a.task.apply(TaskConfig::default()),
        widths: a.widths.clone(),
        order: a.order,
        activation: a.activation,
        strategies: a.strategies.clone(),
        ps: a.ps.clone(),
        gamma_quantile: a.gamma_quantile,
        samples: a.mc_samples,
        seed: a.common.seed,
        window: a.window,
    };
    let r = run_variance_sweep(&cfg)?;
    if let Some(out) = &a.common.out {
        let rows: Vec<Vec<String>> = r
            .rows
            .iter()
            .map(|v| vec![v.strategy.name().to_string(), num(v.p), num(v.variance)])
            .collect();
        write_csv(
            &out.join("variance.csv"),
            r.schema,
            &["strategy", "p", "variance"],
            &rows,
        )?;
    }
    if a.common.out.is_none() || a.common.report.is_some() {
        emit(a.common.report.as_deref(), &r)?;
    }
    Ok(())
}

fn check(a: &CheckArgs) -> Result<()> {
    let mut opts = CheckOptions::new(a.suite, a.common.seed);
    if let Some(t) = a.trials {
        opts.trials = t;
    }
    opts.mc_samples = a.mc_samples;
    opts.graph = a.graph.as_deref().map(fio::read_graph).transpose()?;
    opts.variance.task = a.task.apply(TaskConfig::default());
    let r = checks::run(a.suite, &opts)?;
    emit(a.common.report.as_deref(), &r)?;
    if !r.passed {
        return Err(checks::CheckFailed {
            suite: a.suite,
            detail: r.failures.first().cloned().unwrap_or_default(),
        }
        .into());
    }
    Ok(())
}

fn bench_source_loc(a: &BenchSourceLocArgs) -> Result<()> {
    let cfg = SourceLocConfig {
        task: a.task.apply(TaskConfig::default()),
        model: a.model.config(),
        methods: a.methods.clone(),
        seeds: a.common.seeds_or(default_seeds()),
        grid: SearchGrid {
            lr: a.lrs.clone(),
            weight_decay: a.weight_decays.clone(),
            p: a.ps.clone(),
            gamma_quantile: a.gamma_quantiles.clone(),
        },
        window: a.window,
    };
    let r = run_source_localization(&cfg)?;
    if let Some(out) = &a.common.out {
        let rows: Vec<Vec<String>> = r
            .summary
            .iter()
            .map(|s| {
                vec![
                    s.method.to_string(),
                    num(s.mean),
                    num(s.std),
                    s.runs.to_string(),
                ]
            })
            .collect();
        write_csv(
            &out.join("summary.csv"),
            r.schema,
            &["method", "mean_accuracy", "std_accuracy", "runs"],
            &rows,
        )?;
        let trial_rows: Vec<Vec<String>> = r
            .trials
            .iter()
            .map(|t| {
                vec![
                    t.method.to_string(),
                    t.seed.to_string(),
                    num(t.params.lr),
                    num(t.params.weight_decay),
                    num(t.params.p),
                    num(t.params.gamma_quantile),
                    t.selected_epoch.to_string(),
                    num(t.val_accuracy),
                    num(t.test_accuracy),
                ]
            })
            .collect();
        let header = [
            "method",
            "seed",
            "lr",
            "weight_decay",
            "p",
            "gamma_quantile",
            "epoch",
            "val_accuracy",
            "test_accuracy",
        ];
        write_csv(&out.join("trials.csv"), r.schema, &header, &trial_rows)?;
    }
    if a.common.out.is_none() || a.common.report.is_some() {
        emit(a.common.report.as_deref(), &r)?;
    }
    Ok(())
}

fn bench_inverse(a: &BenchInverseArgs) -> Result<()> {
    let cfg = InverseConfig {
        task: a.task.apply(TaskConfig::default()),
        model: a.model.config(),
        methods: a.methods.clone(),
        ps: a.ps.clone(),
        seeds: a.common.seeds_or(default_seeds()),
        lr: a.lr,
        weight_decay: a.weight_decay,
        gamma_quantile: a.gamma_quantile,
        window: a.window,
    };
    let r = run_inverse_comparison(&cfg)?;
    if let Some(out) = &a.common.out {
        let curves: Vec<Vec<String>> = r
            .curves
            .iter()
            .map(|c| {
                vec![
                    c.method.to_string(),
                    num(c.p),
                    num(c.mean),
                    num(c.std),
                    c.runs.to_string(),
                ]
            })
            .collect();
        write_csv(
            &out.join("curves.csv"),
            r.schema,
            &["method", "p", "mean_accuracy", "std_accuracy", "runs"],
            &curves,
        )?;
        let rows: Vec<Vec<String>> = r
            .rows
            .iter()
            .map(|t| {
                vec![
                    t.method.to_string(),
                    num(t.params.p),
                    t.seed.to_string(),
                    num(t.test_accuracy),
                ]
            })
            .collect();
        write_csv(
            &out.join("rows.csv"),
            r.schema,
            &["method", "p", "seed", "test_accuracy"],
            &rows,
        )?;
    }
    if a.common.out.is_none() || a.common.report.is_some() {
        emit(a.common.report.as_deref(), &r)?;
    }
    Ok(())
}

fn configure_threads() -> Result<()> {
    let Ok(v) = std::env::var("TADROP_THREADS") else {
        return Ok(());
    };
    let Some(n) = v.trim().parse::<usize>().ok().filter(|&n| n > 0) else {
        let msg = format!("{v:?} is not a positive integer");
        return Err(config::ConfigError::BadValue {
            key: "TADROP_THREADS".into(),
            msg,
        }
        .into());
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .context("configuring the thread pool")?;
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    configure_threads()?;
    match &cli.command {
        Command::GenSbm(a) => gen_sbm(a),
        Command::Components(a) => components(a),
        Command::Weights(a) => weights(a),
        Command::Sample(a) => sample(a),
        Command::Train(a) => train_cmd(a),
        Command::Variance(a) => variance(a),
        Command::Check(a) => check(a),
        Command::BenchSourceLoc(a) => bench_source_loc(a),
        Command::BenchInverse(a) => bench_inverse(a),
    }
}

fn usage_error(e: &clap::Error, config_keys: &[(String, String)]) -> String {
    if e.kind() == ErrorKind::UnknownArgument {
        if let Some(ContextValue::String(arg)) = e.get(ContextKind::InvalidArg) {
            let name = arg
                .trim_start_matches('-')
                .split('=')
                .next()
                .unwrap_or_default();
            if let Some((_, raw)) = config_keys.iter().find(|(k, _)| k == name) {
                return format!("error[E_CONFIG]: unknown config key {raw:?}");
            }
        }
    }
    let code = match std::error::Error::source(e) {
        Some(src) if src.is::<std::io::Error>() => "E_IO",
        _ => "E_USAGE",
    };
    let text = e.to_string();
    let first = text
        .lines()
        .next()
        .unwrap_or_default()
        .trim_start_matches("error: ");
    format!("error[{code}]: {first}")
}

fn main() -> ExitCode {
    let argv: Vec<OsString> = std::env::args_os().collect();
    let expanded = match config::expand(argv) {
        Ok(e) => e,
        Err(e) => {
            eprintln!("{}", format_error(&e.into()));
            return ExitCode::from(2);
        }
    };
    let cli = match Cli::try_parse_from(&expanded.args) {
        Ok(c) => c,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) if e.kind() == ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => {
            let _ = e.print();
            return ExitCode::from(2);
        }
        Err(e) => {
            eprintln!("{}", usage_error(&e, &expanded.config_keys));
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", format_error(&e));
            ExitCode::FAILURE
        }
    }
}
