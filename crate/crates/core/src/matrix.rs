//! Matrix views of a [`Graph`].
//!
//! Graphs with at most [`DENSE_LIMIT`] nodes get dense storage; larger ones
//! use CSR. Every consumer goes through [`GraphMatrix::mul`] or
//! [`GraphMatrix::to_dense`], so the storage choice is invisible.

use nalgebra::DMatrix;

use crate::graph::Graph;

/// Largest node count stored densely.
pub const DENSE_LIMIT: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixKind {
    Adjacency,
    Laplacian,
    /// `D^-1/2 (A + I) D^-1/2` with `D` the degree matrix of `A + I`.
    NormalizedShift,
    /// `N x M`, column `m` is `+1` at `i_m` and `-1` at `j_m`.
    Incidence,
    /// Any symmetric matrix not derived from a graph.
    General,
}

impl MatrixKind {
    pub fn is_symmetric(self) -> bool {
        !matches!(self, MatrixKind::Incidence)
    }
}

/// Compressed sparse rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Csr {
    pub rows: usize,
    pub cols: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub values: Vec<f64>,
}

impl Csr {
    /// Builds from `(row, col, value)` triplets; duplicates are summed.
    pub fn from_triplets(rows: usize, cols: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        triplets.sort_by_key(|a| (a.0, a.1));
        let mut row_ptr = vec![0; rows + 1];
        let mut col_idx: Vec<usize> = Vec::with_capacity(triplets.len());
        let mut values: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
                continue;
            }
            last = Some((r, c));
            row_ptr[r + 1] += 1;
            col_idx.push(c);
            values.push(v);
        }
        for r in 0..rows {
            row_ptr[r + 1] += row_ptr[r];
        }
        Self {
            rows,
            cols,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn mul(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        assert_eq!(self.cols, x.nrows(), "csr product dimension mismatch");
        let mut out = DMatrix::zeros(self.rows, x.ncols());
        for c in 0..x.ncols() {
            let xc = x.column(c);
            for r in 0..self.rows {
                let mut acc = 0.0;
                for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                    acc += self.values[k] * xc[self.col_idx[k]];
                }
                out[(r, c)] = acc;
            }
        }
        out
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.rows, self.cols);
        for r in 0..self.rows {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                out[(r, self.col_idx[k])] += self.values[k];
            }
        }
        out
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let row = &self.col_idx[self.row_ptr[r]..self.row_ptr[r + 1]];
        match row.binary_search(&c) {
            Ok(k) => self.values[self.row_ptr[r] + k],
            Err(_) => 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Storage {
    Dense(DMatrix<f64>),
    Sparse(Csr),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraphMatrix {
    kind: MatrixKind,
    storage: Storage,
}

impl GraphMatrix {
    pub fn from_dense(kind: MatrixKind, m: DMatrix<f64>) -> Self {
        Self {
            kind,
            storage: Storage::Dense(m),
        }
    }

    pub fn from_csr(kind: MatrixKind, m: Csr) -> Self {
        Self {
            kind,
            storage: Storage::Sparse(m),
        }
    }

    fn from_triplets(
        kind: MatrixKind,
        rows: usize,
        cols: usize,
        t: Vec<(usize, usize, f64)>,
    ) -> Self {
        if rows <= DENSE_LIMIT && cols <= DENSE_LIMIT {
            let mut m = DMatrix::zeros(rows, cols);
            for (r, c, v) in t {
                m[(r, c)] += v;
            }
            Self::from_dense(kind, m)
        } else {
            Self::from_csr(kind, Csr::from_triplets(rows, cols, t))
        }
    }

    pub fn kind(&self) -> MatrixKind {
        self.kind
    }

    pub fn storage(&self) -> &Storage {
        &self.storage
    }

    pub fn nrows(&self) -> usize {
        match &self.storage {
            Storage::Dense(m) => m.nrows(),
            Storage::Sparse(m) => m.rows,
        }
    }

    pub fn ncols(&self) -> usize {
        match &self.storage {
            Storage::Dense(m) => m.ncols(),
            Storage::Sparse(m) => m.cols,
        }
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        match &self.storage {
            Storage::Dense(m) => m[(r, c)],
            Storage::Sparse(m) => m.get(r, c),
        }
    }

    /// `self * x`.
    pub fn mul(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        match &self.storage {
            Storage::Dense(m) => m * x,
            Storage::Sparse(m) => m.mul(x),
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        match &self.storage {
            Storage::Dense(m) => m.clone(),
            Storage::Sparse(m) => m.to_dense(),
        }
    }

    /// Dense view without copying when already dense.
    pub fn dense(&self) -> std::borrow::Cow<'_, DMatrix<f64>> {
        match &self.storage {
            Storage::Dense(m) => std::borrow::Cow::Borrowed(m),
            Storage::Sparse(m) => std::borrow::Cow::Owned(m.to_dense()),
        }
    }
}

pub fn adjacency(g: &Graph) -> GraphMatrix {
    let n = g.node_count();
    let mut t = Vec::with_capacity(2 * g.edge_count());
    for (m, &(i, j)) in g.edges().iter().enumerate() {
        let v = g.edge_value(m);
        t.push((i, j, v));
        t.push((j, i, v));
    }
    GraphMatrix::from_triplets(MatrixKind::Adjacency, n, n, t)
}

/// Combinatorial Laplacian `Deg - A`.
pub fn laplacian(g: &Graph) -> GraphMatrix {
    let n = g.node_count();
    let mut t = Vec::with_capacity(4 * g.edge_count());
    for (m, &(i, j)) in g.edges().iter().enumerate() {
        let v = g.edge_value(m);
        t.push((i, j, -v));
        t.push((j, i, -v));
        t.push((i, i, v));
        t.push((j, j, v));
    }
    GraphMatrix::from_triplets(MatrixKind::Laplacian, n, n, t)
}

/// Self-loop renormalized adjacency `D^-1/2 (A + I) D^-1/2`.
pub fn normalized_shift(g: &Graph) -> GraphMatrix {
    let n = g.node_count();
    let mut deg = vec![1.0; n];
    for (m, &(i, j)) in g.edges().iter().enumerate() {
        let v = g.edge_value(m);
        deg[i] += v;
        deg[j] += v;
    }
    let inv_sqrt: Vec<f64> = deg.iter().map(|d| 1.0 / d.sqrt()).collect();
    let mut t = Vec::with_capacity(2 * g.edge_count() + n);
    for (i, &s) in inv_sqrt.iter().enumerate() {
        t.push((i, i, s * s));
    }
    for (m, &(i, j)) in g.edges().iter().enumerate() {
        let v = g.edge_value(m) * inv_sqrt[i] * inv_sqrt[j];
        t.push((i, j, v));
        t.push((j, i, v));
    }
    GraphMatrix::from_triplets(MatrixKind::NormalizedShift, n, n, t)
}

pub fn incidence(g: &Graph) -> GraphMatrix {
    let mut t = Vec::with_capacity(2 * g.edge_count());
    for (m, &(i, j)) in g.edges().iter().enumerate() {
        t.push((i, m, 1.0));
        t.push((j, m, -1.0));
    }
    GraphMatrix::from_triplets(MatrixKind::Incidence, g.node_count(), g.edge_count(), t)
}

/// Largest absolute entry.
pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}

/// Largest `|m_ij - m_ji|`.
pub fn asymmetry(m: &DMatrix<f64>) -> f64 {
    if m.nrows() != m.ncols() {
        return f64::INFINITY;
    }
    let n = m.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}
