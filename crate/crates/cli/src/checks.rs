//! Numerical self-checks behind `tadrop check --suite ...`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use anyhow::{ensure, Result};
use nalgebra::DMatrix;
use rand::seq::index::sample;
use rand::Rng;
use serde::Serialize;
use tadropedge::analysis::{
    connectivity_entry_expansion, enumerate_objective, monte_carlo_objective, relative_error,
    subspace_perturbation, theorem1_check,
};
use tadropedge::gnn::{filter_apply, frequency_response, Activation, Architecture, ReadoutKind};
use tadropedge::sampler::StrategyKind;
use tadropedge::spectral::gft;
use tadropedge::synth::{generate_sbm, SbmConfig};
use tadropedge::{
    adjacency, eigendecompose, normalized_shift, rng, Examples, FilterSpec, GnnModel, Graph,
    SamplingPlan,
};

use crate::experiments::{run_variance_sweep, VarianceConfig};

pub const CHECK_SCHEMA: &str = "tadrop.check/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    /// Filtering commutes with the graph Fourier transform.
    Gft,
    /// Output change under edge drops stays within the filter stability bound.
    Theorem1,
    /// Leading-subspace distance stays within the partition bound.
    Prop1,
    /// Connectivity entries of the relative error match their expansion.
    Eq11,
    /// Weighted dropping lowers output variance.
    Variance,
    /// Monte Carlo objective agrees with exact enumeration.
    Enumerate,
}

impl Suite {
    pub const ALL: [Suite; 6] = [
        Suite::Gft,
        Suite::Theorem1,
        Suite::Prop1,
        Suite::Eq11,
        Suite::Variance,
        Suite::Enumerate,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Gft => "gft",
            Suite::Theorem1 => "theorem1",
            Suite::Prop1 => "prop1",
            Suite::Eq11 => "eq11",
            Suite::Variance => "variance",
            Suite::Enumerate => "enumerate",
        }
    }

    pub fn default_trials(self) -> usize {
        match self {
            Suite::Gft | Suite::Prop1 | Suite::Eq11 => 100,
            Suite::Theorem1 => 50,
            Suite::Variance => 1,
            Suite::Enumerate => 10,
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Suite::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = Suite::ALL.iter().map(|k| k.name()).collect();
                format!("unknown suite {s:?} (expected one of {})", names.join(", "))
            })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub schema: &'static str,
    pub suite: Suite,
    pub passed: bool,
    pub trials: usize,
    pub metrics: BTreeMap<String, f64>,
    /// Human-readable description of each failing case.
    pub failures: Vec<String>,
}

impl CheckReport {
    fn new(suite: Suite, trials: usize) -> Self {
        Self {
            schema: CHECK_SCHEMA,
            suite,
            passed: true,
            trials,
            metrics: BTreeMap::new(),
            failures: Vec::new(),
        }
    }

    fn metric(&mut self, key: &str, v: f64) {
        self.metrics.insert(key.to_string(), v);
    }

    fn fail(&mut self, msg: String) {
        self.passed = false;
        if self.failures.len() < 20 {
            self.failures.push(msg);
        }
    }
}

#[derive(Debug, thiserror::Error)]
#[error("check suite {suite} failed: {detail}")]
pub struct CheckFailed {
    pub suite: Suite,
    pub detail: String,
}

#[derive(Debug, Clone)]
pub struct CheckOptions {
    pub trials: usize,
    pub seed: u64,
    /// Fixed graph for the graph-generic suites; random graphs otherwise.
    pub graph: Option<Graph>,
    pub variance: VarianceConfig,
    pub mc_samples: usize,
}

impl CheckOptions {
    pub fn new(suite: Suite, seed: u64) -> Self {
        Self {
            trials: suite.default_trials(),
            seed,
            graph: None,
            variance: VarianceConfig::default(),
            mc_samples: 10_000,
        }
    }
}

pub fn run(suite: Suite, opts: &CheckOptions) -> Result<CheckReport> {
    ensure!(opts.trials > 0, "at least one trial is required");
    match suite {
        Suite::Gft => gft_suite(opts),
        Suite::Theorem1 => theorem1_suite(opts),
        Suite::Prop1 => {
            ensure!(
                opts.graph.is_none(),
                "the prop1 suite generates its own planted graphs"
            );
            prop1_suite(opts)
        }
        Suite::Eq11 => eq11_suite(opts),
        Suite::Variance => {
            ensure!(
                opts.graph.is_none(),
                "the variance suite uses the synthetic task; set task flags instead"
            );
            variance_suite(opts)
        }
        Suite::Enumerate => enumerate_suite(opts),
    }
}

pub fn erdos_renyi(n: usize, p: f64, seed: u64) -> Graph {
    let mut r = rng::stream(seed, 0);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if r.random::<f64>() < p {
                edges.push((i, j));
            }
        }
    }
    Graph::new(n, edges).expect("pairs are distinct")
}

fn trial_graph(opts: &CheckOptions, trial: usize, make: impl Fn(u64) -> Graph) -> Graph {
    match &opts.graph {
        Some(g) => g.clone(),
        None => make(rng::derive_seed(opts.seed, trial as u64)),
    }
}

fn random_signal(n: usize, cols: usize, seed: u64) -> DMatrix<f64> {
    let mut r = rng::stream(seed, 1);
    DMatrix::from_fn(n, cols, |_, _| r.random_range(-1.0..1.0))
}

fn gft_suite(opts: &CheckOptions) -> Result<CheckReport> {
    let mut rep = CheckReport::new(Suite::Gft, opts.trials);
    let mut worst = 0.0f64;
    for trial in 0..opts.trials {
        let seed = rng::derive_seed(opts.seed, trial as u64);
        let mut r = rng::stream(seed, 2);
        let g = trial_graph(opts, trial, |s| {
            let mut r = rng::stream(s, 3);
            erdos_renyi(r.random_range(5..=30), r.random_range(0.1..0.5), s)
        });
        let n = g.node_count();
        let coeffs: Vec<f64> = (0..r.random_range(2..=6))
            .map(|_| r.random_range(-1.0..1.0))
            .collect();
        let s = normalized_shift(&g);
        let spec = eigendecompose(&s)?;
        let x = random_signal(n, 1, seed);
        let y = filter_apply(&FilterSpec::scalar(&coeffs)?, &s, &x)?;
        let h = frequency_response(&coeffs, spec.values.as_slice());
        let (xh, yh) = (gft(&spec, &x)?, gft(&spec, &y)?);
        let err = (0..n)
            .map(|i| (yh[(i, 0)] - h[i] * xh[(i, 0)]).abs())
            .fold(0.0, f64::max);
        worst = worst.max(err);
        if err > 1e-8 {
            rep.fail(format!("trial {trial}: error {err:e} on {n} nodes"));
        }
    }
    rep.metric("max_error", worst);
    rep.metric("tolerance", 1e-8);
    Ok(rep)
}

/// One-layer model with every scalar filter bounded by `|h| <= 1` on
/// `[-1, 1]`, which contains the spectrum of every normalized shift.
pub fn bounded_filter_model(
    out_width: usize,
    order: usize,
    activation: Activation,
    seed: u64,
) -> Result<GnnModel> {
    let mut r = rng::stream(seed, 4);
    let taps: Vec<DMatrix<f64>> = (0..=order)
        .map(|_| DMatrix::from_fn(1, out_width, |_, _| r.random_range(-1.0..1.0)))
        .collect();
    let grid: Vec<f64> = (0..=2000).map(|i| -1.0 + i as f64 / 1000.0).collect();
    let peak = (0..out_width)
        .map(|f| {
            let b: Vec<f64> = taps.iter().map(|t| t[(0, f)]).collect();
            frequency_response(&b, &grid)
                .into_iter()
                .fold(0.0f64, |a, v| a.max(v.abs()))
        })
        .fold(0.0f64, f64::max);
    // the grid spacing of 1e-3 leaves this much room for the true maximum
    let scale = 0.99 / peak.max(f64::MIN_POSITIVE);
    let taps = taps.into_iter().map(|t| t * scale).collect();
    Ok(GnnModel::new(
        vec![FilterSpec::new(taps)?],
        activation,
        None,
    )?)
}

fn theorem1_suite(opts: &CheckOptions) -> Result<CheckReport> {
    let mut rep = CheckReport::new(Suite::Theorem1, opts.trials);
    let (mut worst, mut checked, mut mean) = (0.0f64, 0usize, 0.0);
    for trial in 0..opts.trials {
        let seed = rng::derive_seed(opts.seed, trial as u64);
        let g = trial_graph(opts, trial, |s| {
            generate_sbm(&SbmConfig {
                n: 20,
                c: 2,
                p_intra: 0.5,
                p_inter: 0.1,
                seed: s,
            })
            .expect("valid config")
            .0
        });
        let m = g.edge_count();
        if m < 2 {
            continue;
        }
        let model = bounded_filter_model(4, 3, Activation::Tanh, seed)?;
        let x = random_signal(g.node_count(), 1, seed);
        let s = normalized_shift(&g);
        let mut drops: Vec<Vec<usize>> = (0..m).map(|e| vec![e]).collect();
        let mut r = rng::stream(seed, 5);
        drops.extend((0..20).map(|_| sample(&mut r, m, 2).into_vec()));
        for drop in drops {
            let mut keep = vec![true; m];
            for &e in &drop {
                keep[e] = false;
            }
            let sp = normalized_shift(&g.drop_edges(&keep)?);
            let b = theorem1_check(&model, &s, &sp, &x)?;
            checked += 1;
            mean += b.slack_ratio;
            worst = worst.max(b.slack_ratio);
            if !(b.slack_ratio <= 1.0) {
                rep.fail(format!(
                    "trial {trial}, dropped {drop:?}: slack ratio {}",
                    b.slack_ratio
                ));
            }
        }
    }
    rep.metric("checked_drops", checked as f64);
    rep.metric("max_slack_ratio", worst);
    rep.metric("mean_slack_ratio", mean / checked.max(1) as f64);
    if checked == 0 {
        rep.fail("no graph had two edges to drop".into());
    }
    Ok(rep)
}

fn prop1_suite(opts: &CheckOptions) -> Result<CheckReport> {
    let mut rep = CheckReport::new(Suite::Prop1, opts.trials);
    let (mut held, mut max_ratio) = (0usize, 0.0f64);
    for trial in 0..opts.trials {
        let seed = rng::derive_seed(opts.seed, trial as u64);
        let cfg = SbmConfig {
            n: 45,
            c: 3,
            p_intra: 0.7,
            p_inter: 0.02,
            seed,
        };
        let (g, labels) = generate_sbm(&cfg)?;
        let rate = 0.1 * (1 + trial % 3) as f64;
        let keep: Vec<bool> = g
            .edges()
            .iter()
            .enumerate()
            .map(|(e, &(i, j))| {
                labels[i] != labels[j] || rng::uniform(rng::derive_seed(seed, 7), e as u64) >= rate
            })
            .collect();
        let gp = g.drop_edges(&keep)?;
        let clusters: Vec<Vec<usize>> = (0..cfg.c)
            .map(|c| (0..cfg.n).filter(|&v| labels[v] == c).collect())
            .collect();
        let r = subspace_perturbation(&g, &gp, &clusters)?;
        let ratio = r.distance / (r.alpha + r.alpha_prime);
        max_ratio = max_ratio.max(if ratio.is_nan() { 0.0 } else { ratio });
        if r.holds {
            held += 1;
        } else {
            rep.fail(format!(
                "trial {trial} (rate {rate}): distance {} > {} + {}",
                r.distance, r.alpha, r.alpha_prime
            ));
        }
    }
    rep.metric("held", held as f64);
    rep.metric("max_distance_over_bound", max_ratio);
    Ok(rep)
}

fn eq11_suite(opts: &CheckOptions) -> Result<CheckReport> {
    let mut rep = CheckReport::new(Suite::Eq11, opts.trials);
    let (mut worst, mut evaluated, mut skipped) = (0.0f64, 0usize, 0usize);
    for trial in 0..opts.trials {
        let seed = rng::derive_seed(opts.seed, trial as u64);
        let g = trial_graph(opts, trial, |s| {
            let mut r = rng::stream(s, 3);
            erdos_renyi(r.random_range(6..=20), 0.3, s)
        });
        if g.edge_count() == 0 {
            skipped += 1;
            continue;
        }
        let e = rng::stream(seed, 6).random_range(0..g.edge_count());
        let mut keep = vec![true; g.edge_count()];
        keep[e] = false;
        let s = adjacency(&g);
        let rel = relative_error(&s, &adjacency(&g.drop_edges(&keep)?))?;
        if rel.singular_pairs > 0 {
            skipped += 1;
            continue;
        }
        let (lhs, rhs) = connectivity_entry_expansion(&s, &rel, g.edges()[e])?;
        let err = (lhs - rhs).abs();
        evaluated += 1;
        worst = worst.max(err);
        if err > 1e-8 {
            rep.fail(format!(
                "trial {trial}: edge {:?} gives {lhs} vs {rhs}",
                g.edges()[e]
            ));
        }
    }
    rep.metric("evaluated", evaluated as f64);
    rep.metric("skipped_singular", skipped as f64);
    rep.metric("max_error", worst);
    if evaluated == 0 {
        rep.fail("every trial was singular".into());
    }
    Ok(rep)
}

fn variance_suite(opts: &CheckOptions) -> Result<CheckReport> {
    let mut rep = CheckReport::new(Suite::Variance, 1);
    let mut cfg = opts.variance.clone();
    cfg.seed = opts.seed;
    for k in [StrategyKind::Iid, StrategyKind::Cdf] {
        if !cfg.strategies.contains(&k) {
            cfg.strategies.push(k);
        }
    }
    let sweep = run_variance_sweep(&cfg)?;
    let at = |k: StrategyKind, p: f64| {
        sweep
            .rows
            .iter()
            .find(|r| r.strategy == k && r.p == p)
            .map(|r| r.variance)
    };
    for &p in &cfg.ps {
        let (Some(iid), Some(cdf)) = (at(StrategyKind::Iid, p), at(StrategyKind::Cdf, p)) else {
            continue;
        };
        rep.metric(&format!("iid@{p}"), iid);
        rep.metric(&format!("cdf@{p}"), cdf);
        if p < 1.0 {
            rep.metric(&format!("reduction@{p}"), 1.0 - cdf / iid);
            if !(cdf < iid) {
                rep.fail(format!(
                    "p = {p}: cdf variance {cdf} is not below iid {iid}"
                ));
            }
        } else if iid != 0.0 || cdf != 0.0 {
            rep.fail(format!("p = 1: variances {iid}, {cdf} are not zero"));
        }
    }
    Ok(rep)
}

fn enumerate_suite(opts: &CheckOptions) -> Result<CheckReport> {
    let mut rep = CheckReport::new(Suite::Enumerate, opts.trials);
    let mut worst = 0.0f64;
    for trial in 0..opts.trials {
        let seed = rng::derive_seed(opts.seed, trial as u64);
        let mut r = rng::stream(seed, 8);
        let g = trial_graph(opts, trial, |s| {
            let pairs: Vec<(usize, usize)> = (0..6)
                .flat_map(|i| (i + 1..6).map(move |j| (i, j)))
                .collect();
            let mut pick = sample(&mut rng::stream(s, 11), pairs.len(), 8).into_vec();
            pick.sort_unstable();
            Graph::new(6, pick.into_iter().map(|k| pairs[k]).collect()).expect("pairs are distinct")
        });
        let n = g.node_count();
        let probs: Vec<f64> = (0..g.edge_count())
            .map(|_| r.random_range(0.1..0.9))
            .collect();
        let plan = SamplingPlan::from_probs(probs)?;
        let arch = Architecture {
            widths: vec![1, 3],
            order: 2,
            activation: Activation::Tanh,
            readout: Some(ReadoutKind::MeanPool),
            classes: 2,
            nodes: n,
        };
        let model = GnnModel::init(&arch, seed)?;
        let signals: Vec<DMatrix<f64>> = (0..4)
            .map(|k| random_signal(n, 1, rng::derive_seed(seed, 10 + k)))
            .collect();
        let data = Examples::graph_level(&signals, vec![0, 1, 1, 0])?;
        let exact = enumerate_objective(&model, &g, &plan, &data)?;
        let mc = monte_carlo_objective(
            &model,
            &g,
            &plan,
            &data,
            opts.mc_samples,
            rng::derive_seed(seed, 9),
        )?;
        let z = (mc.mean - exact).abs() / mc.std_error;
        worst = worst.max(z);
        if !(z <= 3.0) {
            rep.fail(format!(
                "trial {trial}: exact {exact}, estimate {} (z = {z:.2})",
                mc.mean
            ));
        }
    }
    rep.metric("max_z", worst);
    rep.metric("mc_samples", opts.mc_samples as f64);
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names_round_trip() {
        for s in Suite::ALL {
            assert_eq!(s.name().parse::<Suite>().unwrap(), s);
        }
        assert!("nope".parse::<Suite>().is_err());
    }

    #[test]
    fn small_runs_pass() {
        for suite in [Suite::Gft, Suite::Theorem1, Suite::Prop1, Suite::Eq11] {
            let opts = CheckOptions {
                trials: 3,
                ..CheckOptions::new(suite, 1)
            };
            let r = run(suite, &opts).unwrap();
            assert!(r.passed, "{suite}: {:?}", r.failures);
        }
        let opts = CheckOptions {
            trials: 2,
            mc_samples: 2000,
            ..CheckOptions::new(Suite::Enumerate, 1)
        };
        assert!(run(Suite::Enumerate, &opts).unwrap().passed);
    }

    #[test]
    fn bounded_model_respects_the_bound() {
        let m = bounded_filter_model(5, 4, Activation::Tanh, 3).unwrap();
        let grid: Vec<f64> = (0..=100_000).map(|i| -1.0 + i as f64 / 50_000.0).collect();
        for f in 0..5 {
            let h = frequency_response(&m.layers[0].coefficients(0, f), &grid);
            assert!(h.iter().all(|v| v.abs() <= 1.0));
        }
    }
}
