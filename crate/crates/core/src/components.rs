//! Disjoint-component identification and cluster partition metrics.

use crate::error::{Error, Result};
use crate::graph::Graph;

/// Disjoint-set forest with union by rank and path compression.
#[derive(Debug, Clone)]
pub struct UnionFind {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            rank: vec![0; n],
        }
    }

    pub fn find(&mut self, x: usize) -> usize {
        let mut root = x;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        let mut cur = x;
        while self.parent[cur] != root {
            let next = self.parent[cur];
            self.parent[cur] = root;
            cur = next;
        }
        root
    }

    /// Returns false if `a` and `b` were already joined.
    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        match self.rank[ra].cmp(&self.rank[rb]) {
            std::cmp::Ordering::Less => self.parent[ra] = rb,
            std::cmp::Ordering::Greater => self.parent[rb] = ra,
            std::cmp::Ordering::Equal => {
                self.parent[rb] = ra;
                self.rank[ra] += 1;
            }
        }
        true
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComponentLabeling {
    /// Component id per node; ids are ordered by smallest member node.
    pub label: Vec<usize>,
    pub count: usize,
    pub sizes: Vec<usize>,
}

impl ComponentLabeling {
    /// Node ids of each component, ascending.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out: Vec<Vec<usize>> = self.sizes.iter().map(|&s| Vec::with_capacity(s)).collect();
        for (v, &c) in self.label.iter().enumerate() {
            out[c].push(v);
        }
        out
    }
}

pub fn find_components(g: &Graph) -> ComponentLabeling {
    let n = g.node_count();
    let mut uf = UnionFind::new(n);
    for &(i, j) in g.edges() {
        uf.union(i, j);
    }
    let mut root_label = vec![usize::MAX; n];
    let mut label = vec![0; n];
    let mut sizes = Vec::new();
    for v in 0..n {
        let r = uf.find(v);
        if root_label[r] == usize::MAX {
            root_label[r] = sizes.len();
            sizes.push(0);
        }
        label[v] = root_label[r];
        sizes[label[v]] += 1;
    }
    ComponentLabeling {
        label,
        count: sizes.len(),
        sizes,
    }
}

fn membership(n: usize, cluster: &[usize]) -> Result<Vec<bool>> {
    if cluster.is_empty() {
        return Err(Error::EmptyCluster);
    }
    let mut inside = vec![false; n];
    for &v in cluster {
        if v >= n {
            return Err(Error::NodeOutOfRange { node: v, n });
        }
        inside[v] = true;
    }
    Ok(inside)
}

/// Number of edges with exactly one endpoint in `cluster`.
///
/// Edge values are ignored; the count is of edges.
pub fn boundary_edge_count(g: &Graph, cluster: &[usize]) -> Result<usize> {
    let inside = membership(g.node_count(), cluster)?;
    Ok(g.edges()
        .iter()
        .filter(|&&(i, j)| inside[i] != inside[j])
        .count())
}

/// Boundary edge count divided by the square root of the cluster size.
pub fn relative_subgraph_degree(g: &Graph, cluster: &[usize]) -> Result<f64> {
    let inside = membership(g.node_count(), cluster)?;
    let size = inside.iter().filter(|&&b| b).count();
    let boundary = g
        .edges()
        .iter()
        .filter(|&&(i, j)| inside[i] != inside[j])
        .count();
    Ok(boundary as f64 / (size as f64).sqrt())
}

#[derive(Debug, Clone, PartialEq)]
pub struct PartitionMetrics {
    pub subgraph_degrees: Vec<f64>,
    /// Root mean square of `subgraph_degrees`.
    pub average: f64,
    /// Smallest `alpha` with `average <= alpha * lambda_q / sqrt(2 q)`.
    pub alpha: f64,
}

/// Metrics of a `q`-cluster partition, `q = clusters.len()`. `lambda_q` is
/// the Laplacian eigenvalue at 0-based index `q`.
pub fn partition_metrics(
    g: &Graph,
    clusters: &[Vec<usize>],
    lambda_q: f64,
) -> Result<PartitionMetrics> {
    if !(lambda_q > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "lambda_q must be positive, got {lambda_q}"
        )));
    }
    let n = g.node_count();
    let mut owner = vec![usize::MAX; n];
    for (c, cluster) in clusters.iter().enumerate() {
        if cluster.is_empty() {
            return Err(Error::EmptyCluster);
        }
        for &v in cluster {
            if v >= n {
                return Err(Error::NodeOutOfRange { node: v, n });
            }
            if owner[v] != usize::MAX {
                return Err(Error::NotAPartition(format!(
                    "node {v} is in more than one cluster"
                )));
            }
            owner[v] = c;
        }
    }
    if let Some(v) = owner.iter().position(|&o| o == usize::MAX) {
        return Err(Error::NotAPartition(format!("node {v} is not covered")));
    }
    let q = clusters.len();
    let mut boundary = vec![0usize; q];
    for &(i, j) in g.edges() {
        if owner[i] != owner[j] {
            boundary[owner[i]] += 1;
            boundary[owner[j]] += 1;
        }
    }
    let subgraph_degrees: Vec<f64> = boundary
        .iter()
        .zip(clusters)
        .map(|(&b, c)| b as f64 / (c.len() as f64).sqrt())
        .collect();
    let average = (subgraph_degrees.iter().map(|b| b * b).sum::<f64>() / q as f64).sqrt();
    let alpha = average * (2.0 * q as f64).sqrt() / lambda_q;
    Ok(PartitionMetrics {
        subgraph_degrees,
        average,
        alpha,
    })
}
