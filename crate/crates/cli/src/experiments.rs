//! Multi-seed experiment drivers behind the `bench-*` and `variance`
//! subcommands.

use std::fmt;
use std::str::FromStr;

use anyhow::{Context, Result};
use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use tadropedge::analysis::output_variance;
use tadropedge::gnn::{
    evaluate, train, Activation, Architecture, Examples, GnnModel, Optimizer, ReadoutKind,
    TrainConfig,
};
use tadropedge::sampler::{
    build_plan, gamma_from_distribution, SamplingPlan, SamplingStrategy, StrategyKind,
};
use tadropedge::synth::{
    designated_sources, diffusion_signal, generate_sbm, make_diffusion_dataset, split, to_examples,
    SbmConfig,
};
use tadropedge::weights::{aggregate_resistance_weights, EdgeWeightTable, DEFAULT_WINDOW};
use tadropedge::{normalized_shift, rng, Graph};

/// Training without edge dropping, or with one of the sampling strategies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    None,
    Drop(StrategyKind),
}

impl Method {
    pub fn uses_p(self) -> bool {
        matches!(self, Method::Drop(_))
    }

    pub fn uses_gamma(self) -> bool {
        matches!(self, Method::Drop(k) if k.uses_gamma())
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::None => f.write_str("none"),
            Method::Drop(k) => f.write_str(k.name()),
        }
    }
}

impl FromStr for Method {
    type Err = tadropedge::Error;

    fn from_str(s: &str) -> tadropedge::Result<Self> {
        if s == "none" {
            Ok(Method::None)
        } else {
            s.parse().map(Method::Drop)
        }
    }
}

impl Serialize for Method {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Method {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// The synthetic source-localization task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskConfig {
    pub nodes: usize,
    pub communities: usize,
    pub p_intra: f64,
    pub p_inter: f64,
    pub samples: usize,
    pub train: usize,
    pub val: usize,
    pub test: usize,
    pub t_max: usize,
    pub noise_variance: f64,
}

impl Default for TaskConfig {
    fn default() -> Self {
        Self {
            nodes: 50,
            communities: 5,
            p_intra: 0.6,
            p_inter: 0.2,
            samples: 1600,
            train: 100,
            val: 500,
            test: 1000,
            t_max: 50,
            noise_variance: 2.5e-2,
        }
    }
}

/// Graph, weights and splits for one seed.
pub struct TaskData {
    pub graph: Graph,
    pub labels: Vec<usize>,
    pub weights: EdgeWeightTable,
    pub train: Examples,
    pub val: Examples,
    pub test: Examples,
}

impl TaskConfig {
    pub fn build(&self, seed: u64, window: usize) -> Result<TaskData> {
        let sbm = SbmConfig {
            n: self.nodes,
            c: self.communities,
            p_intra: self.p_intra,
            p_inter: self.p_inter,
            seed,
        };
        let (graph, labels) = generate_sbm(&sbm).context("generating the SBM graph")?;
        let data = make_diffusion_dataset(
            &graph,
            &labels,
            self.samples,
            self.t_max,
            self.noise_variance.sqrt(),
            rng::derive_seed(seed, 1),
        )
        .context("generating diffusion samples")?;
        let parts =
            split(&data, self.train, self.val, self.test).context("splitting the dataset")?;
        let weights = aggregate_resistance_weights(&graph, self.communities, window)
            .context("computing edge weights")?;
        Ok(TaskData {
            graph,
            labels,
            weights,
            train: to_examples(&parts.train)?,
            val: to_examples(&parts.val)?,
            test: to_examples(&parts.test)?,
        })
    }
}

/// One point of the hyperparameter search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HyperParams {
    pub lr: f64,
    pub weight_decay: f64,
    pub p: f64,
    pub gamma_quantile: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchGrid {
    pub lr: Vec<f64>,
    pub weight_decay: Vec<f64>,
    pub p: Vec<f64>,
    pub gamma_quantile: Vec<f64>,
}

impl SearchGrid {
    /// Grid points relevant to `method`; unused axes collapse to their
    /// first value.
    pub fn points(&self, method: Method) -> Vec<HyperParams> {
        let ps: &[f64] = if method.uses_p() {
            &self.p
        } else {
            &self.p[..1]
        };
        let gs: &[f64] = if method.uses_gamma() {
            &self.gamma_quantile
        } else {
            &self.gamma_quantile[..1]
        };
        let mut out = Vec::new();
        for &lr in &self.lr {
            for &weight_decay in &self.weight_decay {
                for &p in ps {
                    for &gamma_quantile in gs {
                        out.push(HyperParams {
                            lr,
                            weight_decay,
                            p: if method.uses_p() { p } else { 1.0 },
                            gamma_quantile,
                        });
                    }
                }
            }
        }
        out
    }

    fn validate(&self) -> Result<()> {
        anyhow::ensure!(
            !self.lr.is_empty()
                && !self.weight_decay.is_empty()
                && !self.p.is_empty()
                && !self.gamma_quantile.is_empty(),
            "every search axis needs at least one value"
        );
        Ok(())
    }
}

/// Accuracy on `examples` of the exact posterior classifier that knows the
/// graph, the sources, the time distribution and the noise level. No
/// trained model can beat it in expectation.
pub fn oracle_accuracy(data: &TaskData, task: &TaskConfig, examples: &Examples) -> f64 {
    let s = normalized_shift(&data.graph);
    let n = data.graph.node_count();
    let times: Vec<usize> = if task.t_max == 0 {
        vec![0]
    } else {
        (1..=task.t_max).collect()
    };
    let means: Vec<Vec<_>> = designated_sources(&data.labels)
        .into_iter()
        .map(|src| {
            times
                .iter()
                .map(|&t| diffusion_signal(&s, src, t))
                .collect()
        })
        .collect();
    let var = task.noise_variance;
    let mut correct = 0;
    for (r, &label) in examples.labels.iter().enumerate() {
        let x = examples.x.view((r * n, 0), (n, 1));
        let scores: Vec<f64> = means
            .iter()
            .map(|ms| {
                let d: Vec<f64> = ms.iter().map(|m| (x - m).norm_squared()).collect();
                if var == 0.0 {
                    return -d.iter().copied().fold(f64::INFINITY, f64::min);
                }
                let ll: Vec<f64> = d.iter().map(|d| -d / (2.0 * var)).collect();
                let top = ll.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                top + ll.iter().map(|l| (l - top).exp()).sum::<f64>().ln()
            })
            .collect();
        let best = (0..scores.len()).fold(0, |b, c| if scores[c] > scores[b] { c } else { b });
        correct += usize::from(best == label);
    }
    correct as f64 / examples.labels.len().max(1) as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub hidden: usize,
    pub order: usize,
    pub activation: Activation,
    pub epochs: usize,
    pub select_best: bool,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            hidden: 32,
            order: 5,
            activation: Activation::Relu,
            epochs: 400,
            select_best: true,
        }
    }
}

impl ModelConfig {
    fn architecture(&self, task: &TaskConfig) -> Architecture {
        Architecture {
            widths: vec![1, self.hidden],
            order: self.order,
            activation: self.activation,
            readout: Some(ReadoutKind::Flatten),
            classes: task.communities,
            nodes: task.nodes,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceLocConfig {
    pub task: TaskConfig,
    pub model: ModelConfig,
    pub methods: Vec<Method>,
    pub seeds: Vec<u64>,
    pub grid: SearchGrid,
    pub window: usize,
}

impl Default for SourceLocConfig {
    fn default() -> Self {
        Self {
            task: TaskConfig::default(),
            model: ModelConfig::default(),
            methods: vec![
                Method::None,
                Method::Drop(StrategyKind::Iid),
                Method::Drop(StrategyKind::Cutoff),
                Method::Drop(StrategyKind::Division),
                Method::Drop(StrategyKind::Cdf),
            ],
            seeds: (0..7).collect(),
            grid: SearchGrid {
                lr: vec![1e-2],
                weight_decay: vec![1e-3],
                p: vec![0.5],
                gamma_quantile: vec![0.9],
            },
            window: DEFAULT_WINDOW,
        }
    }
}

/// Keep probabilities for `method` on the task graph, or `None` for
/// training on the full graph.
pub fn plan_for(
    method: Method,
    data: &TaskData,
    p: f64,
    gamma_quantile: f64,
) -> Result<Option<SamplingPlan>> {
    let Method::Drop(kind) = method else {
        return Ok(None);
    };
    if data.weights.is_empty() {
        return Ok(Some(SamplingPlan::full(0)));
    }
    let gamma = if kind.uses_gamma() {
        gamma_from_distribution(&data.weights, gamma_quantile)?
    } else {
        1.0
    };
    // quantiles can land on a zero weight; the strategy needs gamma > 0
    let gamma = gamma.max(f64::MIN_POSITIVE);
    let strategy = SamplingStrategy::new(kind, p, gamma)?;
    Ok(Some(build_plan(&data.weights, strategy)?))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialResult {
    pub method: Method,
    pub seed: u64,
    pub params: HyperParams,
    pub selected_epoch: usize,
    pub val_accuracy: f64,
    pub val_loss: f64,
    pub test_accuracy: f64,
}

/// Trains one model on `data` and scores it on the validation and test splits.
pub fn run_trial(
    data: &TaskData,
    task: &TaskConfig,
    model_cfg: &ModelConfig,
    method: Method,
    params: HyperParams,
    seed: u64,
) -> Result<TrialResult> {
    let plan = plan_for(method, data, params.p, params.gamma_quantile)?;
    let model = GnnModel::init(&model_cfg.architecture(task), rng::derive_seed(seed, 2))?;
    let cfg = TrainConfig {
        epochs: model_cfg.epochs,
        learning_rate: params.lr,
        optimizer: Optimizer::Adam,
        weight_decay: params.weight_decay,
        seed: rng::derive_seed(seed, 3),
        select_best: model_cfg.select_best,
    };
    let out = train(
        model,
        &data.graph,
        &data.train,
        Some(&data.val),
        &cfg,
        plan.as_ref(),
    )
    .with_context(|| format!("training {method} (seed {seed})"))?;
    let s = normalized_shift(&data.graph);
    let (val_loss, val_accuracy) = evaluate(&out.model, &s, &data.val)?;
    let (_, test_accuracy) = evaluate(&out.model, &s, &data.test)?;
    Ok(TrialResult {
        method,
        seed,
        params,
        selected_epoch: out.selected_epoch,
        val_accuracy,
        val_loss,
        test_accuracy,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodSummary {
    pub method: Method,
    pub mean: f64,
    pub std: f64,
    pub runs: usize,
}

fn summarize(method: Method, values: &[f64]) -> MethodSummary {
    let k = values.len();
    let mean = values.iter().sum::<f64>() / k.max(1) as f64;
    let std = if k > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1) as f64).sqrt()
    } else {
        0.0
    };
    MethodSummary {
        method,
        mean,
        std,
        runs: k,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SourceLocReport {
    pub schema: &'static str,
    pub config: SourceLocConfig,
    /// Selected trial per `(method, seed)`, ordered by method then seed.
    pub selected: Vec<TrialResult>,
    pub summary: Vec<MethodSummary>,
    /// Test accuracy of [`oracle_accuracy`], one value per seed.
    pub oracle_accuracy: Vec<f64>,
    /// Every trial of the search, ordered by method, seed, grid position.
    pub trials: Vec<TrialResult>,
}

pub const SOURCE_LOC_SCHEMA: &str = "tadrop.source-localization/1";

/// Each `(method, seed)` pair searches the grid, keeps the point with the
/// best validation accuracy (ties to lower validation loss, then grid
/// order), and reports its test accuracy.
pub fn run_source_localization(cfg: &SourceLocConfig) -> Result<SourceLocReport> {
    cfg.grid.validate()?;
    anyhow::ensure!(!cfg.seeds.is_empty(), "at least one seed is required");
    anyhow::ensure!(!cfg.methods.is_empty(), "at least one method is required");
    let tasks: Vec<TaskData> = cfg
        .seeds
        .par_iter()
        .map(|&seed| {
            cfg.task
                .build(seed, cfg.window)
                .with_context(|| format!("building data for seed {seed}"))
        })
        .collect::<Result<_>>()?;

    let mut jobs = Vec::new();
    for &method in &cfg.methods {
        for (si, &seed) in cfg.seeds.iter().enumerate() {
            for (gi, params) in cfg.grid.points(method).into_iter().enumerate() {
                jobs.push((method, si, seed, gi, params));
            }
        }
    }
    let trials: Vec<TrialResult> = jobs
        .par_iter()
        .map(|&(method, si, seed, _, params)| {
            run_trial(&tasks[si], &cfg.task, &cfg.model, method, params, seed)
        })
        .collect::<Result<_>>()?;

    let mut selected: Vec<TrialResult> = Vec::new();
    for (job, trial) in jobs.iter().zip(&trials) {
        let replace = match selected.last() {
            Some(last) if last.method == job.0 && last.seed == job.2 => {
                trial.val_accuracy > last.val_accuracy
                    || (trial.val_accuracy == last.val_accuracy && trial.val_loss < last.val_loss)
            }
            _ => {
                selected.push(trial.clone());
                false
            }
        };
        if replace {
            *selected.last_mut().unwrap() = trial.clone();
        }
    }
    let summary = cfg
        .methods
        .iter()
        .map(|&m| {
            let acc: Vec<f64> = selected
                .iter()
                .filter(|t| t.method == m)
                .map(|t| t.test_accuracy)
                .collect();
            summarize(m, &acc)
        })
        .collect();
    let oracle_accuracy = tasks
        .iter()
        .map(|t| oracle_accuracy(t, &cfg.task, &t.test))
        .collect();
    Ok(SourceLocReport {
        schema: SOURCE_LOC_SCHEMA,
        config: cfg.clone(),
        selected,
        summary,
        oracle_accuracy,
        trials,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InverseConfig {
    pub task: TaskConfig,
    pub model: ModelConfig,
    pub methods: Vec<Method>,
    pub ps: Vec<f64>,
    pub seeds: Vec<u64>,
    pub lr: f64,
    pub weight_decay: f64,
    pub gamma_quantile: f64,
    pub window: usize,
}

impl Default for InverseConfig {
    fn default() -> Self {
        Self {
            task: TaskConfig::default(),
            model: ModelConfig::default(),
            methods: vec![
                Method::Drop(StrategyKind::Cdf),
                Method::Drop(StrategyKind::Iid),
                Method::Drop(StrategyKind::InvCdf),
            ],
            ps: vec![0.3, 0.5, 0.7, 1.0],
            seeds: (0..7).collect(),
            lr: 1e-2,
            weight_decay: 1e-3,
            gamma_quantile: 0.9,
            window: DEFAULT_WINDOW,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurvePoint {
    pub method: Method,
    pub p: f64,
    pub mean: f64,
    pub std: f64,
    pub runs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InverseReport {
    pub schema: &'static str,
    pub config: InverseConfig,
    /// One row per `(method, p, seed)`.
    pub rows: Vec<TrialResult>,
    pub curves: Vec<CurvePoint>,
}

pub const INVERSE_SCHEMA: &str = "tadrop.inverse-comparison/1";

pub fn run_inverse_comparison(cfg: &InverseConfig) -> Result<InverseReport> {
    anyhow::ensure!(
        !cfg.seeds.is_empty() && !cfg.ps.is_empty(),
        "seeds and p grid must be nonempty"
    );
    let tasks: Vec<TaskData> = cfg
        .seeds
        .par_iter()
        .map(|&seed| cfg.task.build(seed, cfg.window))
        .collect::<Result<_>>()?;
    let mut jobs = Vec::new();
    for &method in &cfg.methods {
        for &p in &cfg.ps {
            for (si, &seed) in cfg.seeds.iter().enumerate() {
                jobs.push((method, p, si, seed));
            }
        }
    }
    let rows: Vec<TrialResult> = jobs
        .par_iter()
        .map(|&(method, p, si, seed)| {
            let params = HyperParams {
                lr: cfg.lr,
                weight_decay: cfg.weight_decay,
                p,
                gamma_quantile: cfg.gamma_quantile,
            };
            run_trial(&tasks[si], &cfg.task, &cfg.model, method, params, seed)
        })
        .collect::<Result<_>>()?;
    let mut curves = Vec::new();
    for &method in &cfg.methods {
        for &p in &cfg.ps {
            let acc: Vec<f64> = rows
                .iter()
                .filter(|r| r.method == method && r.params.p == p)
                .map(|r| r.test_accuracy)
                .collect();
            let s = summarize(method, &acc);
            curves.push(CurvePoint {
                method,
                p,
                mean: s.mean,
                std: s.std,
                runs: s.runs,
            });
        }
    }
    Ok(InverseReport {
        schema: INVERSE_SCHEMA,
        config: cfg.clone(),
        rows,
        curves,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceConfig {
    pub task: TaskConfig,
    /// Hidden widths of the untrained model.
    pub widths: Vec<usize>,
    pub order: usize,
    pub activation: Activation,
    pub strategies: Vec<StrategyKind>,
    pub ps: Vec<f64>,
    pub gamma_quantile: f64,
    pub samples: usize,
    pub seed: u64,
    pub window: usize,
}

impl Default for VarianceConfig {
    fn default() -> Self {
        Self {
            task: TaskConfig::default(),
            widths: vec![32, 32, 32],
            order: 1,
            activation: Activation::Relu,
            strategies: vec![StrategyKind::Iid, StrategyKind::Cdf],
            ps: vec![0.3, 0.5, 0.7, 1.0],
            gamma_quantile: 0.9,
            samples: 500,
            seed: 0,
            window: DEFAULT_WINDOW,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VarianceRow {
    pub strategy: StrategyKind,
    pub p: f64,
    pub variance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VarianceReport {
    pub schema: &'static str,
    pub config: VarianceConfig,
    pub rows: Vec<VarianceRow>,
}

pub const VARIANCE_SCHEMA: &str = "tadrop.variance-sweep/1";

/// Output variance of a randomly initialized model fed one diffusion
/// signal, per `(strategy, p)`.
pub fn run_variance_sweep(cfg: &VarianceConfig) -> Result<VarianceReport> {
    anyhow::ensure!(!cfg.widths.is_empty(), "the model needs at least one layer");
    let data = cfg.task.build(cfg.seed, cfg.window)?;
    let mut widths = vec![1];
    widths.extend(&cfg.widths);
    let arch = Architecture {
        widths,
        order: cfg.order,
        activation: cfg.activation,
        readout: None,
        classes: cfg.task.communities,
        nodes: cfg.task.nodes,
    };
    let model = GnnModel::init(&arch, rng::derive_seed(cfg.seed, 2))?;
    let n = cfg.task.nodes;
    let x: DMatrix<f64> = data.train.x.rows(0, n).into_owned();
    let mut rows = Vec::new();
    for &strategy in &cfg.strategies {
        for &p in &cfg.ps {
            let plan = plan_for(Method::Drop(strategy), &data, p, cfg.gamma_quantile)?
                .expect("dropping method");
            let variance = output_variance(
                &model,
                &data.graph,
                &plan,
                &x,
                cfg.samples,
                rng::derive_seed(cfg.seed, 4),
            )?;
            rows.push(VarianceRow {
                strategy,
                p,
                variance,
            });
        }
    }
    Ok(VarianceReport {
        schema: VARIANCE_SCHEMA,
        config: cfg.clone(),
        rows,
    })
}
