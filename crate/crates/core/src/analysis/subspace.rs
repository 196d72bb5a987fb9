use serde::Serialize;

use crate::components::partition_metrics;
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::matrix::laplacian;
use crate::spectral::{eigendecompose, subspace_distance};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubspaceReport {
    pub q: usize,
    /// Distance between the leading `q` Laplacian eigenspaces of both graphs.
    pub distance: f64,
    pub alpha: f64,
    pub alpha_prime: f64,
    pub holds: bool,
}

/// Compares the leading Laplacian eigenspaces of `g` and an edge-dropped
/// `g_prime` against `alpha + alpha'`, using the same `q = clusters.len()`
/// clusters for both graphs.
pub fn subspace_perturbation(
    g: &Graph,
    g_prime: &Graph,
    clusters: &[Vec<usize>],
) -> Result<SubspaceReport> {
    if g.node_count() != g_prime.node_count() {
        return Err(Error::DimensionMismatch(format!(
            "{} vs {} nodes",
            g.node_count(),
            g_prime.node_count()
        )));
    }
    let q = clusters.len();
    let n = g.node_count();
    if q == 0 || q >= n {
        return Err(Error::InvalidArgument(format!(
            "need 0 < q < N, got q = {q}, N = {n}"
        )));
    }
    let spec = eigendecompose(&laplacian(g))?;
    let spec_prime = eigendecompose(&laplacian(g_prime))?;
    let alpha = partition_metrics(g, clusters, spec.values[q])?.alpha;
    let alpha_prime = partition_metrics(g_prime, clusters, spec_prime.values[q])?.alpha;
    let distance = subspace_distance(&spec.leading(q), &spec_prime, q)?;
    Ok(SubspaceReport {
        q,
        distance,
        alpha,
        alpha_prime,
        holds: distance <= alpha + alpha_prime,
    })
}
