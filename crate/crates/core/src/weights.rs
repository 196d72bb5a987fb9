//! Aggregate resistance edge weights.
//!
//! For each disjoint component with at least `alpha_desired` nodes, the
//! weight of edge `m = (i, j)` is `sum_{l<q} (u_l[i] - u_l[j])^2` over the
//! first `q` eigenvectors of the component's own (unit-weight) Laplacian.
//! Edges of smaller components receive the smallest weight seen among the
//! large components.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::components::find_components;
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::matrix::{incidence, laplacian};
use crate::spectral::{eigendecompose, select_q, SpectralDecomposition};

/// Eigenvalue gaps below this are treated as a degenerate block.
pub const DEGENERACY_TOL: f64 = 1e-9;

/// Default eigengap search radius around the desired cluster count.
pub const DEFAULT_WINDOW: usize = 2;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EdgeWeightTable {
    /// Weight per edge index.
    pub weights: Vec<f64>,
    /// `q` used per component (by component id); `None` for components
    /// below the desired cluster count.
    pub q_per_component: Vec<Option<usize>>,
    pub default_weight: f64,
    pub node_count: usize,
}

impl EdgeWeightTable {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn min(&self) -> Option<f64> {
        self.weights.iter().copied().reduce(f64::min)
    }

    pub fn max(&self) -> Option<f64> {
        self.weights.iter().copied().reduce(f64::max)
    }

    /// Counts over `bins` equal-width bins spanning `[min, max]`.
    pub fn histogram(&self, bins: usize) -> Vec<usize> {
        let mut counts = vec![0; bins];
        let (Some(lo), Some(hi)) = (self.min(), self.max()) else {
            return counts;
        };
        let width = hi - lo;
        for &w in &self.weights {
            let b = if width > 0.0 {
                (((w - lo) / width) * bins as f64) as usize
            } else {
                0
            };
            counts[b.min(bins - 1)] += 1;
        }
        counts
    }
}

/// Moves `q` down to the start of a numerically degenerate eigenvalue block
/// straddling the cut, so the leading subspace is invariant.
fn respect_degenerate_block(spec: &SpectralDecomposition, mut q: usize) -> usize {
    while q > 1 && spec.values[q] - spec.values[q - 1] < DEGENERACY_TOL {
        q -= 1;
    }
    q
}

/// `sum_{l<q} (u_l[i] - u_l[j])^2` per edge.
pub fn expansion_weights(g: &Graph, leading: &DMatrix<f64>) -> Vec<f64> {
    g.edges()
        .iter()
        .map(|&(i, j)| {
            (0..leading.ncols())
                .map(|l| {
                    let d = leading[(i, l)] - leading[(j, l)];
                    d * d
                })
                .sum()
        })
        .collect()
}

/// `diag(D^T (V V^T) D)` computed with explicit matrices.
pub fn diag_form_weights(g: &Graph, leading: &DMatrix<f64>) -> Vec<f64> {
    let d = incidence(g).to_dense();
    let projector = leading * leading.transpose();
    let full = d.transpose() * projector * &d;
    full.diagonal().iter().copied().collect()
}

struct ComponentResult {
    q: Option<usize>,
    origin: Vec<usize>,
    weights: Vec<f64>,
}

pub fn aggregate_resistance_weights(
    g: &Graph,
    alpha_desired: usize,
    window: usize,
) -> Result<EdgeWeightTable> {
    if alpha_desired == 0 {
        return Err(Error::InvalidArgument(
            "desired cluster count must be at least 1".into(),
        ));
    }
    let labeling = find_components(g);
    let members = labeling.members();
    let unit = Graph::new(g.node_count(), g.edges().to_vec())?;

    let results: Vec<Result<ComponentResult>> = members
        .par_iter()
        .map(|nodes| {
            let (sub, origin) = unit.induced(nodes);
            if nodes.len() < alpha_desired || nodes.len() < 2 {
                return Ok(ComponentResult {
                    q: None,
                    origin,
                    weights: Vec::new(),
                });
            }
            let spec = eigendecompose(&laplacian(&sub))?;
            let q = select_q(&spec, alpha_desired, window)?.min(nodes.len() - 1);
            let q = respect_degenerate_block(&spec, q);
            let weights = expansion_weights(&sub, &spec.leading(q));
            Ok(ComponentResult {
                q: Some(q),
                origin,
                weights,
            })
        })
        .collect();

    let mut weights = vec![f64::NAN; g.edge_count()];
    let mut q_per_component = Vec::with_capacity(results.len());
    let mut default_weight = f64::INFINITY;
    let mut pending = Vec::new();
    for r in results {
        let r = r?;
        q_per_component.push(r.q);
        if r.q.is_some() {
            for (&m, &w) in r.origin.iter().zip(&r.weights) {
                weights[m] = w;
                default_weight = default_weight.min(w);
            }
        } else {
            pending.extend(r.origin);
        }
    }
    if !default_weight.is_finite() {
        default_weight = 0.0;
    }
    for m in pending {
        weights[m] = default_weight;
    }
    debug_assert!(weights.iter().all(|w| w.is_finite() && *w >= 0.0));
    Ok(EdgeWeightTable {
        weights,
        q_per_component,
        default_weight,
        node_count: g.node_count(),
    })
}

/// `(edge index, weight)` ascending by weight, stable by edge index.
pub fn weight_distribution(table: &EdgeWeightTable) -> Vec<(usize, f64)> {
    let mut out: Vec<(usize, f64)> = table.weights.iter().copied().enumerate().collect();
    out.sort_by(|a, b| a.1.total_cmp(&b.1));
    out
}
