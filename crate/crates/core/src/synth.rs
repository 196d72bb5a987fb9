//! Stochastic block model graphs and diffusion source-localization data.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gnn::Examples;
use crate::graph::Graph;
use crate::matrix::{normalized_shift, GraphMatrix};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SbmConfig {
    pub n: usize,
    pub c: usize,
    pub p_intra: f64,
    pub p_inter: f64,
    pub seed: u64,
}

impl SbmConfig {
    pub fn validate(&self) -> Result<()> {
        if self.c == 0 || !self.n.is_multiple_of(self.c) {
            return Err(Error::InvalidArgument(format!(
                "{} nodes cannot be split into {} equal communities",
                self.n, self.c
            )));
        }
        for (name, p) in [("p_intra", self.p_intra), ("p_inter", self.p_inter)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidArgument(format!(
                    "{name} = {p} is not a probability"
                )));
            }
        }
        Ok(())
    }

    pub fn community_size(&self) -> usize {
        self.n / self.c
    }
}

/// Node `i` belongs to community `i / (n / c)`. Pair `(i, j)` is linked iff
/// the uniform draw for its lexicographic pair index falls below the block
/// probability.
pub fn generate_sbm(cfg: &SbmConfig) -> Result<(Graph, Vec<usize>)> {
    cfg.validate()?;
    let size = cfg.community_size();
    let labels: Vec<usize> = (0..cfg.n).map(|i| i / size).collect();
    let mut edges = Vec::new();
    let mut pair = 0u64;
    for i in 0..cfg.n {
        for j in i + 1..cfg.n {
            let p = if labels[i] == labels[j] {
                cfg.p_intra
            } else {
                cfg.p_inter
            };
            if rng::uniform(cfg.seed, pair) < p {
                edges.push((i, j));
            }
            pair += 1;
        }
    }
    Ok((Graph::new(cfg.n, edges)?, labels))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffusionSample {
    pub signal: Vec<f64>,
    pub label: usize,
    pub t: usize,
    pub source: usize,
}

/// Lowest-indexed node of each community, by community id.
pub fn designated_sources(labels: &[usize]) -> Vec<usize> {
    let c = labels.iter().copied().max().map_or(0, |m| m + 1);
    let mut sources = vec![usize::MAX; c];
    for (v, &l) in labels.iter().enumerate() {
        if sources[l] == usize::MAX {
            sources[l] = v;
        }
    }
    sources
}

/// `S^t delta_s` by repeated multiplication.
pub fn diffusion_signal(s: &GraphMatrix, source: usize, t: usize) -> DVector<f64> {
    let mut x = DMatrix::zeros(s.nrows(), 1);
    x[(source, 0)] = 1.0;
    for _ in 0..t {
        x = s.mul(&x);
    }
    x.column(0).into_owned()
}

/// Each sample picks a designated source and a time in `[1, t_max]`
/// uniformly (time 0 when `t_max = 0`), diffuses over the normalized shift
/// and adds i.i.d. Gaussian noise of the given standard deviation.
pub fn make_diffusion_dataset(
    g: &Graph,
    labels: &[usize],
    count: usize,
    t_max: usize,
    noise_std: f64,
    seed: u64,
) -> Result<Vec<DiffusionSample>> {
    if labels.len() != g.node_count() {
        return Err(Error::LengthMismatch {
            expected: g.node_count(),
            got: labels.len(),
        });
    }
    if !(noise_std >= 0.0 && noise_std.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "invalid noise level {noise_std}"
        )));
    }
    let sources = designated_sources(labels);
    if sources.is_empty() || sources.contains(&usize::MAX) {
        return Err(Error::InvalidArgument(
            "community labels must be contiguous and nonempty".into(),
        ));
    }
    let s = normalized_shift(g);
    let samples = (0..count)
        .into_par_iter()
        .map(|r| {
            let mut stream = rng::stream(seed, r as u64);
            let label = stream.random_range(0..sources.len());
            let t = if t_max == 0 {
                0
            } else {
                stream.random_range(1..=t_max)
            };
            let source = sources[label];
            let clean = diffusion_signal(&s, source, t);
            let signal = clean
                .iter()
                .map(|&v| {
                    let z: f64 = StandardNormal.sample(&mut stream);
                    v + noise_std * z
                })
                .collect();
            DiffusionSample {
                signal,
                label,
                t,
                source,
            }
        })
        .collect();
    Ok(samples)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSplit {
    pub train: Vec<DiffusionSample>,
    pub val: Vec<DiffusionSample>,
    pub test: Vec<DiffusionSample>,
}

/// Consecutive train/val/test blocks in sample order.
pub fn split(
    samples: &[DiffusionSample],
    train: usize,
    val: usize,
    test: usize,
) -> Result<DatasetSplit> {
    let need = train + val + test;
    if need > samples.len() {
        return Err(Error::InvalidArgument(format!(
            "split needs {need} samples, have {}",
            samples.len()
        )));
    }
    Ok(DatasetSplit {
        train: samples[..train].to_vec(),
        val: samples[train..train + val].to_vec(),
        test: samples[train + val..need].to_vec(),
    })
}

/// Graph-level examples with one input feature per node.
pub fn to_examples(samples: &[DiffusionSample]) -> Result<Examples> {
    let signals: Vec<DMatrix<f64>> = samples
        .iter()
        .map(|s| DMatrix::from_column_slice(s.signal.len(), 1, &s.signal))
        .collect();
    Examples::graph_level(&signals, samples.iter().map(|s| s.label).collect())
}
