//! Undirected graphs and the edge-list text format.
//!
//! Edges are positional: edge `m` keeps its index through weight tables,
//! sampling plans and keep masks.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};

/// Undirected simple graph over nodes `0..n`.
///
/// Each edge is stored once as `(i, j)` with `i < j`.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize)>,
    values: Option<Vec<f64>>,
}

impl Graph {
    /// Builds a graph with unit edge values. Endpoints are reordered so
    /// that `i < j`; edge order is preserved.
    pub fn new(n: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        Self::build(n, edges, None)
    }

    pub fn with_values(n: usize, edges: Vec<(usize, usize)>, values: Vec<f64>) -> Result<Self> {
        if values.len() != edges.len() {
            return Err(Error::LengthMismatch {
                expected: edges.len(),
                got: values.len(),
            });
        }
        for (index, &value) in values.iter().enumerate() {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::InvalidEdgeValue { index, value });
            }
        }
        Self::build(n, edges, Some(values))
    }

    fn build(n: usize, edges: Vec<(usize, usize)>, values: Option<Vec<f64>>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(edges.len());
        let mut canonical = Vec::with_capacity(edges.len());
        for (a, b) in edges {
            for node in [a, b] {
                if node >= n {
                    return Err(Error::NodeOutOfRange { node, n });
                }
            }
            if a == b {
                return Err(Error::SelfLoop(a));
            }
            let e = (a.min(b), a.max(b));
            if !seen.insert(e) {
                return Err(Error::DuplicateEdge(e.0, e.1));
            }
            canonical.push(e);
        }
        Ok(Self {
            n,
            edges: canonical,
            values,
        })
    }

    pub fn empty(n: usize) -> Self {
        Self {
            n,
            edges: Vec::new(),
            values: None,
        }
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge_value(&self, m: usize) -> f64 {
        self.values.as_ref().map_or(1.0, |v| v[m])
    }

    pub fn has_unit_values(&self) -> bool {
        self.values
            .as_ref()
            .is_none_or(|v| v.iter().all(|&x| x == 1.0))
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.n];
        for &(i, j) in &self.edges {
            deg[i] += 1;
            deg[j] += 1;
        }
        deg
    }

    /// Adjacency lists; neighbour order follows edge order.
    pub fn neighbors(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n];
        for &(i, j) in &self.edges {
            adj[i].push(j);
            adj[j].push(i);
        }
        adj
    }

    /// Subgraph on the same node set containing exactly the edges whose
    /// mask entry is `true`, in their original relative order.
    pub fn drop_edges(&self, keep: &[bool]) -> Result<Graph> {
        if keep.len() != self.edges.len() {
            return Err(Error::LengthMismatch {
                expected: self.edges.len(),
                got: keep.len(),
            });
        }
        let edges = self
            .edges
            .iter()
            .zip(keep)
            .filter(|(_, &k)| k)
            .map(|(&e, _)| e)
            .collect();
        let values = self.values.as_ref().map(|v| {
            v.iter()
                .zip(keep)
                .filter(|(_, &k)| k)
                .map(|(&x, _)| x)
                .collect()
        });
        Ok(Graph {
            n: self.n,
            edges,
            values,
        })
    }

    /// Induced subgraph on `nodes`, relabelled `0..nodes.len()` in the given
    /// order. Returns the subgraph and, for each of its edges, the index of
    /// the corresponding edge in `self`.
    pub fn induced(&self, nodes: &[usize]) -> (Graph, Vec<usize>) {
        let mut local = vec![usize::MAX; self.n];
        for (k, &v) in nodes.iter().enumerate() {
            local[v] = k;
        }
        let mut edges = Vec::new();
        let mut origin = Vec::new();
        let mut values = self.values.as_ref().map(|_| Vec::new());
        for (m, &(i, j)) in self.edges.iter().enumerate() {
            let (a, b) = (local[i], local[j]);
            if a != usize::MAX && b != usize::MAX {
                edges.push((a.min(b), a.max(b)));
                origin.push(m);
                if let Some(vals) = values.as_mut() {
                    vals.push(self.edge_value(m));
                }
            }
        }
        (
            Graph {
                n: nodes.len(),
                edges,
                values,
            },
            origin,
        )
    }

    /// Relabels node `v` as `perm[v]`. Edge order is kept.
    pub fn permute(&self, perm: &[usize]) -> Result<Graph> {
        if perm.len() != self.n {
            return Err(Error::LengthMismatch {
                expected: self.n,
                got: perm.len(),
            });
        }
        let edges = self
            .edges
            .iter()
            .map(|&(i, j)| (perm[i], perm[j]))
            .collect();
        Self::build(self.n, edges, self.values.clone())
    }

    /// Reads the edge-list format: `i<TAB>j[<TAB>value]` per line, `#`
    /// comments, and an optional `#nodes=N` header fixing the node count.
    pub fn read_edge_list<R: BufRead>(reader: R) -> Result<Graph> {
        let mut declared_n = None;
        let mut edges = Vec::new();
        let mut values = Vec::new();
        let mut any_value = false;
        for (idx, line) in reader.lines().enumerate() {
            let line_no = idx + 1;
            let line = line?;
            let trimmed = line.trim();
            if trimmed.is_empty() {
                continue;
            }
            if let Some(comment) = trimmed.strip_prefix('#') {
                if let Some(n) = comment.trim().strip_prefix("nodes=") {
                    let n = n.trim().parse::<usize>().map_err(|e| Error::Parse {
                        line: line_no,
                        msg: format!("bad node count: {e}"),
                    })?;
                    declared_n = Some(n);
                }
                continue;
            }
            let fields: Vec<&str> = trimmed.split('\t').collect();
            if fields.len() < 2 || fields.len() > 3 {
                return Err(Error::Parse {
                    line: line_no,
                    msg: format!("expected 2 or 3 tab-separated fields, got {}", fields.len()),
                });
            }
            let parse_id = |s: &str| {
                s.trim().parse::<usize>().map_err(|e| Error::Parse {
                    line: line_no,
                    msg: format!("bad node id {s:?}: {e}"),
                })
            };
            let i = parse_id(fields[0])?;
            let j = parse_id(fields[1])?;
            let value = match fields.get(2) {
                Some(s) => {
                    any_value = true;
                    s.trim().parse::<f64>().map_err(|e| Error::Parse {
                        line: line_no,
                        msg: format!("bad edge value {s:?}: {e}"),
                    })?
                }
                None => 1.0,
            };
            edges.push((i, j));
            values.push(value);
        }
        let inferred = edges.iter().map(|&(i, j)| i.max(j) + 1).max().unwrap_or(0);
        let n = declared_n.unwrap_or(inferred);
        if any_value {
            Graph::with_values(n, edges, values)
        } else {
            Graph::new(n, edges)
        }
    }

    /// Writes the edge-list format, always including the `#nodes=` header.
    /// Values are written only for graphs with non-unit values.
    pub fn write_edge_list<W: Write>(&self, mut writer: W) -> Result<()> {
        let mut out = String::new();
        let _ = writeln!(out, "#nodes={}", self.n);
        let with_values = !self.has_unit_values();
        for (m, &(i, j)) in self.edges.iter().enumerate() {
            if with_values {
                let _ = writeln!(out, "{i}\t{j}\t{}", self.edge_value(m));
            } else {
                let _ = writeln!(out, "{i}\t{j}");
            }
        }
        writer.write_all(out.as_bytes())?;
        Ok(())
    }
}
