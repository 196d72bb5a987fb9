//! Keep-probability plans and per-epoch subgraph sampling.
//!
//! All probabilities here are KEEP probabilities: edge `m` survives a draw
//! with probability `plan.probs[m]`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::matrix::{normalized_shift, GraphMatrix};
use crate::rng;
use crate::weights::EdgeWeightTable;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StrategyKind {
    Iid,
    Cutoff,
    Division,
    Cdf,
    InvCutoff,
    InvDivision,
    InvCdf,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 7] = [
        StrategyKind::Iid,
        StrategyKind::Cutoff,
        StrategyKind::Division,
        StrategyKind::Cdf,
        StrategyKind::InvCutoff,
        StrategyKind::InvDivision,
        StrategyKind::InvCdf,
    ];

    pub fn uses_gamma(self) -> bool {
        matches!(
            self,
            StrategyKind::Cutoff
                | StrategyKind::Division
                | StrategyKind::InvCutoff
                | StrategyKind::InvDivision
        )
    }

    pub fn is_inverse(self) -> bool {
        matches!(
            self,
            StrategyKind::InvCutoff | StrategyKind::InvDivision | StrategyKind::InvCdf
        )
    }

    pub fn name(self) -> &'static str {
        match self {
            StrategyKind::Iid => "iid",
            StrategyKind::Cutoff => "cutoff",
            StrategyKind::Division => "division",
            StrategyKind::Cdf => "cdf",
            StrategyKind::InvCutoff => "inv-cutoff",
            StrategyKind::InvDivision => "inv-division",
            StrategyKind::InvCdf => "inv-cdf",
        }
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StrategyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        StrategyKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown strategy {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplingStrategy {
    pub kind: StrategyKind,
    /// Default keep probability in `(0, 1]`.
    pub p: f64,
    /// Threshold / division parameter; ignored by `iid`, `cdf`, `inv-cdf`.
    pub gamma: f64,
}

impl SamplingStrategy {
    pub fn new(kind: StrategyKind, p: f64, gamma: f64) -> Result<Self> {
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "p must lie in (0, 1], got {p}"
            )));
        }
        if kind.uses_gamma() && !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "gamma must be positive for {kind}, got {gamma}"
            )));
        }
        Ok(Self { kind, p, gamma })
    }

    pub fn iid(p: f64) -> Result<Self> {
        Self::new(StrategyKind::Iid, p, 1.0)
    }

    /// Keep probability for a weight `w` with empirical CDF value `cdf`.
    pub fn keep_probability(&self, w: f64, cdf: f64) -> f64 {
        let (p, g) = (self.p, self.gamma);
        match self.kind {
            StrategyKind::Iid => p,
            StrategyKind::Cutoff => {
                if w < g {
                    p
                } else {
                    1.0
                }
            }
            StrategyKind::Division => 1.0 - (1.0 - p) * g / (g + w),
            StrategyKind::Cdf => p + (1.0 - p) * cdf,
            StrategyKind::InvCutoff => {
                if w > g {
                    p
                } else {
                    1.0
                }
            }
            StrategyKind::InvDivision => p + (1.0 - p) * g / (g + w),
            StrategyKind::InvCdf => 1.0 - (1.0 - p) * cdf,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SamplingPlan {
    pub probs: Vec<f64>,
    pub strategy: Option<SamplingStrategy>,
    /// Empirical CDF value per edge for the CDF strategies.
    pub cdf: Option<Vec<f64>>,
}

impl SamplingPlan {
    /// Keeps every edge.
    pub fn full(m: usize) -> Self {
        Self {
            probs: vec![1.0; m],
            strategy: None,
            cdf: None,
        }
    }

    /// Plain DropEdge at keep probability `p`, independent of any weights.
    pub fn iid(m: usize, p: f64) -> Result<Self> {
        let strategy = SamplingStrategy::iid(p)?;
        Ok(Self {
            probs: vec![p; m],
            strategy: Some(strategy),
            cdf: None,
        })
    }

    pub fn from_probs(probs: Vec<f64>) -> Result<Self> {
        if let Some(bad) = probs.iter().find(|p| !(**p >= 0.0 && **p <= 1.0)) {
            return Err(Error::InvalidArgument(format!(
                "keep probability {bad} outside [0, 1]"
            )));
        }
        Ok(Self {
            probs,
            strategy: None,
            cdf: None,
        })
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn expected_kept(&self) -> f64 {
        self.probs.iter().sum()
    }

    /// Bernoulli draws: edge `m` is kept iff `uniform(seed, m) < probs[m]`.
    pub fn draw_mask(&self, seed: u64) -> Vec<bool> {
        self.probs
            .iter()
            .enumerate()
            .map(|(m, &p)| p >= 1.0 || rng::uniform(seed, m as u64) < p)
            .collect()
    }
}

/// Right-continuous empirical CDF `#{w_k <= w} / M` for every entry.
pub fn empirical_cdf(weights: &[f64]) -> Vec<f64> {
    let m = weights.len();
    let mut sorted: Vec<f64> = weights.to_vec();
    sorted.sort_by(f64::total_cmp);
    weights
        .iter()
        .map(|w| sorted.partition_point(|x| x <= w) as f64 / m as f64)
        .collect()
}

pub fn build_plan(table: &EdgeWeightTable, strategy: SamplingStrategy) -> Result<SamplingPlan> {
    let needs_cdf = matches!(strategy.kind, StrategyKind::Cdf | StrategyKind::InvCdf);
    let cdf = needs_cdf.then(|| empirical_cdf(&table.weights));
    let probs: Vec<f64> = table
        .weights
        .iter()
        .enumerate()
        .map(|(m, &w)| strategy.keep_probability(w, cdf.as_ref().map_or(0.0, |c| c[m])))
        .collect();
    if let Some((m, p)) = probs
        .iter()
        .enumerate()
        .find(|(_, p)| !(**p >= 0.0 && **p <= 1.0 && **p >= strategy.p - 1e-12))
    {
        return Err(Error::Internal(format!(
            "edge {m} got keep probability {p}"
        )));
    }
    Ok(SamplingPlan {
        probs,
        strategy: Some(strategy),
        cdf,
    })
}

fn check_plan(g: &Graph, plan: &SamplingPlan) -> Result<()> {
    if plan.len() != g.edge_count() {
        return Err(Error::LengthMismatch {
            expected: g.edge_count(),
            got: plan.len(),
        });
    }
    Ok(())
}

pub fn sample_subgraph(g: &Graph, plan: &SamplingPlan, seed: u64) -> Result<Graph> {
    check_plan(g, plan)?;
    g.drop_edges(&plan.draw_mask(seed))
}

/// Normalized shift operator of a sampled subgraph.
pub fn epoch_shift(g: &Graph, plan: &SamplingPlan, seed: u64) -> Result<GraphMatrix> {
    Ok(normalized_shift(&sample_subgraph(g, plan, seed)?))
}

/// Weight at empirical quantile `q` with linear interpolation between order
/// statistics (position `q * (M - 1)`).
pub fn gamma_from_distribution(table: &EdgeWeightTable, q: f64) -> Result<f64> {
    quantile(&table.weights, q)
}

pub fn quantile(values: &[f64], q: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::InvalidArgument(
            "quantile of an empty weight table".into(),
        ));
    }
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::InvalidArgument(format!(
            "quantile must lie in [0, 1], got {q}"
        )));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    Ok(sorted[lo] + (sorted[hi] - sorted[lo]) * frac)
}
