use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gnn::{forward, loss, Examples, GnnModel};
use crate::graph::Graph;
use crate::matrix::normalized_shift;
use crate::rng;
use crate::sampler::{epoch_shift, SamplingPlan};

/// Largest edge count accepted by [`enumerate_objective`].
pub const MAX_ENUMERATED_EDGES: usize = 16;

fn check_plan(g: &Graph, plan: &SamplingPlan) -> Result<()> {
    if plan.len() != g.edge_count() {
        return Err(Error::LengthMismatch {
            expected: g.edge_count(),
            got: plan.len(),
        });
    }
    Ok(())
}

/// Exact expected loss over all `2^M` subgraphs under the product measure
/// of the plan's keep probabilities.
pub fn enumerate_objective(
    model: &GnnModel,
    g: &Graph,
    plan: &SamplingPlan,
    data: &Examples,
) -> Result<f64> {
    check_plan(g, plan)?;
    let m = g.edge_count();
    if m > MAX_ENUMERATED_EDGES {
        return Err(Error::TooManyEdges {
            got: m,
            limit: MAX_ENUMERATED_EDGES,
        });
    }
    let mut total = 0.0;
    for code in 0u32..(1u32 << m) {
        let keep: Vec<bool> = (0..m).map(|e| code >> e & 1 == 1).collect();
        let weight: f64 = keep
            .iter()
            .zip(&plan.probs)
            .map(|(&k, &p)| if k { p } else { 1.0 - p })
            .product();
        if weight == 0.0 {
            continue;
        }
        let s = normalized_shift(&g.drop_edges(&keep)?);
        total += weight * loss(model, &s, data)?;
    }
    Ok(total)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MonteCarloEstimate {
    pub mean: f64,
    /// Standard error of the mean.
    pub std_error: f64,
    pub samples: usize,
}

/// Sample mean of the loss over subgraphs drawn with per-index seeds.
pub fn monte_carlo_objective(
    model: &GnnModel,
    g: &Graph,
    plan: &SamplingPlan,
    data: &Examples,
    samples: usize,
    seed: u64,
) -> Result<MonteCarloEstimate> {
    check_plan(g, plan)?;
    if samples < 2 {
        return Err(Error::InvalidArgument("need at least two samples".into()));
    }
    let losses = (0..samples)
        .into_par_iter()
        .map(|i| {
            loss(
                model,
                &epoch_shift(g, plan, rng::derive_seed(seed, i as u64))?,
                data,
            )
        })
        .collect::<Result<Vec<f64>>>()?;
    let mean = losses.iter().sum::<f64>() / samples as f64;
    let var = losses.iter().map(|l| (l - mean).powi(2)).sum::<f64>() / (samples - 1) as f64;
    Ok(MonteCarloEstimate {
        mean,
        std_error: (var / samples as f64).sqrt(),
        samples,
    })
}

/// `sum_i (1/F_L) sum_j var[Phi_ij]`, the sample variance of each output
/// entry across sampled (and renormalized) subgraphs.
pub fn output_variance(
    model: &GnnModel,
    g: &Graph,
    plan: &SamplingPlan,
    x: &DMatrix<f64>,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    check_plan(g, plan)?;
    if samples < 2 {
        return Err(Error::InvalidArgument("need at least two samples".into()));
    }
    let outputs = (0..samples)
        .into_par_iter()
        .map(|i| {
            forward(
                model,
                &epoch_shift(g, plan, rng::derive_seed(seed, i as u64))?,
                x,
            )
        })
        .collect::<Result<Vec<DMatrix<f64>>>>()?;
    // Shifted by the first sample so identical outputs give exactly zero.
    let (rows, cols) = outputs[0].shape();
    let origin = &outputs[0];
    let mut sum = DMatrix::zeros(rows, cols);
    let mut sum_sq = DMatrix::zeros(rows, cols);
    for o in &outputs {
        let d = o - origin;
        sum_sq += d.component_mul(&d);
        sum += d;
    }
    let k = samples as f64;
    let var = (sum_sq - sum.component_mul(&sum) / k).map(|v| v.max(0.0)) / (k - 1.0);
    Ok(var.sum() / cols as f64)
}
