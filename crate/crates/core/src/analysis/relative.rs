use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::matrix::{GraphMatrix, MatrixKind};
use crate::spectral::{eigendecompose, eigendecompose_dense, spectral_norm, SpectralDecomposition};

/// Eigenvalue pairs with `|lambda_i + lambda_j|` below this are left out of
/// the solve.
pub const SINGULAR_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RelativeError {
    #[serde(skip)]
    pub e: DMatrix<f64>,
    /// `S - S'`.
    #[serde(skip)]
    pub delta: DMatrix<f64>,
    pub norm: f64,
    /// `max |E S + S E - (S - S')|`.
    pub residual: f64,
    /// `(||U - V||_2 + 1)^2 - 1`, `U` the eigenvectors of `E` aligned to
    /// those of `S`.
    pub misalignment: f64,
    /// Number of `(i, j)` eigenvalue pairs treated as singular.
    pub singular_pairs: usize,
}

/// Solves `S - S' = E S + S E` for symmetric `E` in the eigenbasis of `S`.
pub fn relative_error(s: &GraphMatrix, s_prime: &GraphMatrix) -> Result<RelativeError> {
    if s.nrows() != s_prime.nrows() || s.ncols() != s_prime.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "{} x {} vs {} x {}",
            s.nrows(),
            s.ncols(),
            s_prime.nrows(),
            s_prime.ncols()
        )));
    }
    if !s_prime.kind().is_symmetric() {
        return Err(Error::NotSymmetric(f64::INFINITY));
    }
    let spec = eigendecompose(s)?;
    let sd = s.dense();
    let delta = sd.as_ref() - s_prime.dense().as_ref();
    Ok(solve(&spec, sd.as_ref(), delta))
}

fn solve(spec: &SpectralDecomposition, s: &DMatrix<f64>, delta: DMatrix<f64>) -> RelativeError {
    let v = &spec.vectors;
    let lam = &spec.values;
    let n = spec.dim();
    let mut t = v.tr_mul(&delta) * v;
    let mut singular_pairs = 0;
    for j in 0..n {
        for i in 0..n {
            let d = lam[i] + lam[j];
            if d.abs() < SINGULAR_TOL {
                t[(i, j)] = 0.0;
                singular_pairs += 1;
            } else {
                t[(i, j)] /= d;
            }
        }
    }
    let e = v * t * v.transpose();
    let e = (&e + e.transpose()) * 0.5;
    let res = &e * s + s * &e - &delta;
    let residual = res.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
    let norm = spectral_norm(&e);
    let misalignment = misalignment(&e, v);
    RelativeError {
        e,
        delta,
        norm,
        residual,
        misalignment,
        singular_pairs,
    }
}

/// `(||U - V||_2 + 1)^2 - 1` with the eigenvectors `U` of `e` permuted and
/// sign-flipped to best match the columns of `v` (greedy on `|v_i^T u_j|`).
pub fn misalignment(e: &DMatrix<f64>, v: &DMatrix<f64>) -> f64 {
    let n = v.ncols();
    if n == 0 {
        return 0.0;
    }
    let Ok(eig) = eigendecompose_dense(e) else {
        return f64::INFINITY;
    };
    let u = aligned_to(&eig.vectors, v);
    let d = spectral_norm(&(u - v));
    (d + 1.0).powi(2) - 1.0
}

fn aligned_to(u: &DMatrix<f64>, v: &DMatrix<f64>) -> DMatrix<f64> {
    let n = v.ncols();
    let overlap = v.tr_mul(u);
    let mut pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).collect();
    pairs.sort_by(|a, b| {
        overlap[*b]
            .abs()
            .total_cmp(&overlap[*a].abs())
            .then(a.cmp(b))
    });
    let mut used_v = vec![false; n];
    let mut used_u = vec![false; n];
    let mut out = DMatrix::zeros(n, n);
    for (i, j) in pairs {
        if used_v[i] || used_u[j] {
            continue;
        }
        used_v[i] = true;
        used_u[j] = true;
        let sign = if overlap[(i, j)] < 0.0 { -1.0 } else { 1.0 };
        out.set_column(i, &(u.column(j) * sign));
    }
    out
}

/// Both sides of the entrywise connectivity expansion for edge `(i, j)` of
/// a unit-weight adjacency shift: `Delta_ij` and
/// `sum_{tau in N_j} E_{i tau} + sum_{tau in N_i} E_{tau j}`.
pub fn connectivity_entry_expansion(
    s: &GraphMatrix,
    rel: &RelativeError,
    edge: (usize, usize),
) -> Result<(f64, f64)> {
    if s.kind() != MatrixKind::Adjacency {
        return Err(Error::InvalidArgument(
            "the expansion needs an adjacency shift".into(),
        ));
    }
    let n = s.nrows();
    let (i, j) = edge;
    for v in [i, j] {
        if v >= n {
            return Err(Error::NodeOutOfRange { node: v, n });
        }
    }
    if rel.e.nrows() != n {
        return Err(Error::DimensionMismatch(format!(
            "E has dimension {}, S has {n}",
            rel.e.nrows()
        )));
    }
    let sd = s.dense();
    if sd.iter().any(|&x| x != 0.0 && x != 1.0) {
        return Err(Error::InvalidArgument(
            "the expansion needs unit edge values".into(),
        ));
    }
    let mut rhs = 0.0;
    for tau in 0..n {
        if sd[(tau, j)] != 0.0 {
            rhs += rel.e[(i, tau)];
        }
        if sd[(i, tau)] != 0.0 {
            rhs += rel.e[(tau, j)];
        }
    }
    Ok((rel.delta[(i, j)], rhs))
}
