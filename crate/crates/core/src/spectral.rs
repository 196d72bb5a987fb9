//! Symmetric eigendecomposition and the spectral quantities built on it.
//!
//! The solver is nalgebra's Householder tridiagonalization followed by
//! implicit symmetric QR. On top of it this module fixes an ordering
//! (ascending eigenvalues, stable on ties) and a sign convention (the
//! largest-magnitude entry of each eigenvector is positive, lowest index
//! first on ties) so that decompositions are reproducible.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::matrix::{asymmetry, max_abs, GraphMatrix};

/// Relative tolerance for accepting a matrix as symmetric.
const SYMMETRY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDecomposition {
    /// Ascending.
    pub values: DVector<f64>,
    /// Orthonormal, column `i` paired with `values[i]`.
    pub vectors: DMatrix<f64>,
}

impl SpectralDecomposition {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// First `q` eigenvectors as an `N x q` matrix.
    pub fn leading(&self, q: usize) -> DMatrix<f64> {
        self.vectors.columns(0, q).into_owned()
    }

    /// `V diag(f(lambda)) V^T`.
    pub fn apply_function(&self, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
        let scaled = DMatrix::from_fn(self.dim(), self.dim(), |i, j| {
            self.vectors[(i, j)] * f(self.values[j])
        });
        scaled * self.vectors.transpose()
    }

    pub fn reconstruct(&self) -> DMatrix<f64> {
        self.apply_function(|x| x)
    }
}

pub fn eigendecompose(m: &GraphMatrix) -> Result<SpectralDecomposition> {
    if !m.kind().is_symmetric() {
        return Err(Error::NotSymmetric(f64::INFINITY));
    }
    eigendecompose_dense(&m.dense())
}

/// Decomposes any dense symmetric matrix.
pub fn eigendecompose_dense(m: &DMatrix<f64>) -> Result<SpectralDecomposition> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "{} x {} is not square",
            m.nrows(),
            m.ncols()
        )));
    }
    let asym = asymmetry(m);
    if asym > SYMMETRY_TOL * max_abs(m).max(1.0) {
        return Err(Error::NotSymmetric(asym));
    }
    let n = m.nrows();
    if n == 0 {
        return Ok(SpectralDecomposition {
            values: DVector::zeros(0),
            vectors: DMatrix::zeros(0, 0),
        });
    }
    let eig = SymmetricEigen::new(m.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[a]
            .total_cmp(&eig.eigenvalues[b])
            .then(a.cmp(&b))
    });
    let values = DVector::from_iterator(n, order.iter().map(|&k| eig.eigenvalues[k]));
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let mut col = eig.eigenvectors.column(src).into_owned();
        canonical_sign(&mut col);
        vectors.set_column(dst, &col);
    }
    Ok(SpectralDecomposition { values, vectors })
}

fn canonical_sign(v: &mut DVector<f64>) {
    let peak = v.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
    if let Some(k) = v.iter().position(|x| x.abs() >= peak - 1e-12) {
        if v[k] < 0.0 {
            v.neg_mut();
        }
    }
}

/// Picks the number of leading eigenpairs that precede the largest eigengap
/// near the desired cluster count.
///
/// The gap after the first `k` eigenvalues is `lambda_k - lambda_{k-1}`.
/// Candidates are `k` in `[max(1, alpha - window), min(N - 1, alpha + window)]`;
/// ties go to the `k` closest to `alpha`, then to the smaller `k`.
pub fn select_q(
    spec: &SpectralDecomposition,
    alpha_desired: usize,
    window: usize,
) -> Result<usize> {
    if alpha_desired == 0 {
        return Err(Error::InvalidArgument(
            "desired cluster count must be at least 1".into(),
        ));
    }
    let n = spec.dim();
    let lo = alpha_desired.saturating_sub(window).max(1);
    let hi = (alpha_desired + window).min(n.saturating_sub(1));
    if lo > hi {
        return Err(Error::EmptyWindow { lo, hi });
    }
    let lam = &spec.values;
    let mut best = lo;
    let mut best_gap = f64::NEG_INFINITY;
    for k in lo..=hi {
        let gap = lam[k] - lam[k - 1];
        let better = gap > best_gap
            || (gap == best_gap && k.abs_diff(alpha_desired) < best.abs_diff(alpha_desired));
        if better {
            best = k;
            best_gap = gap;
        }
    }
    Ok(best)
}

/// Graph Fourier transform `V^T x`.
pub fn gft(spec: &SpectralDecomposition, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    check_rows(spec, x)?;
    Ok(spec.vectors.tr_mul(x))
}

/// Inverse transform `V x_hat`.
pub fn inverse_gft(spec: &SpectralDecomposition, x_hat: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    check_rows(spec, x_hat)?;
    Ok(&spec.vectors * x_hat)
}

fn check_rows(spec: &SpectralDecomposition, x: &DMatrix<f64>) -> Result<()> {
    if x.nrows() != spec.dim() {
        return Err(Error::DimensionMismatch(format!(
            "signal has {} rows, basis has dimension {}",
            x.nrows(),
            spec.dim()
        )));
    }
    Ok(())
}

/// `sqrt(sum_{k<q} sum_{i>=q} (u_k^T u'_i)^2)` between the span of the
/// columns of `u` (`N x q`, orthonormal) and the leading `q` eigenvectors
/// of `other`.
pub fn subspace_distance(u: &DMatrix<f64>, other: &SpectralDecomposition, q: usize) -> Result<f64> {
    let n = other.dim();
    if q >= n {
        return Err(Error::InvalidArgument(format!(
            "q = {q} must be smaller than N = {n}"
        )));
    }
    if u.nrows() != n || u.ncols() != q {
        return Err(Error::DimensionMismatch(format!(
            "expected an {n} x {q} basis, got {} x {}",
            u.nrows(),
            u.ncols()
        )));
    }
    let trailing = other.vectors.columns(q, n - q);
    let cross = u.tr_mul(&trailing);
    Ok(cross.norm())
}

/// Largest singular value.
pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.singular_values()
        .iter()
        .fold(0.0f64, |acc, &s| acc.max(s))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Graph;
    use crate::matrix::{laplacian, MatrixKind};
    use nalgebra::dmatrix;

    #[test]
    fn single_edge_laplacian() {
        let g = Graph::new(2, vec![(0, 1)]).unwrap();
        let spec = eigendecompose(&laplacian(&g)).unwrap();
        assert!(spec.values[0].abs() < 1e-14);
        assert!((spec.values[1] - 2.0).abs() < 1e-14);
        let h = 1.0 / 2f64.sqrt();
        assert!((spec.vectors[(0, 0)] - h).abs() < 1e-14);
        assert!((spec.vectors[(1, 0)] - h).abs() < 1e-14);
    }

    #[test]
    fn zero_matrix() {
        let spec = eigendecompose_dense(&DMatrix::zeros(3, 3)).unwrap();
        assert_eq!(spec.values.as_slice(), &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn sign_convention_and_determinism() {
        let m = dmatrix![2.0, -1.0, 0.0; -1.0, 2.0, -1.0; 0.0, -1.0, 2.0];
        let a = eigendecompose_dense(&m).unwrap();
        let b = eigendecompose_dense(&m).unwrap();
        assert_eq!(a, b);
        for c in 0..3 {
            let col = a.vectors.column(c);
            let peak = col.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
            let k = col.iter().position(|x| x.abs() >= peak - 1e-12).unwrap();
            assert!(col[k] > 0.0);
        }
    }

    #[test]
    fn rejects_asymmetric_input() {
        let m = dmatrix![1.0, 2.0; 0.0, 1.0];
        assert!(matches!(
            eigendecompose_dense(&m),
            Err(Error::NotSymmetric(_))
        ));
        let g = Graph::new(2, vec![(0, 1)]).unwrap();
        assert!(eigendecompose(&crate::matrix::incidence(&g)).is_err());
        let ok = GraphMatrix::from_dense(MatrixKind::General, DMatrix::identity(2, 2));
        assert!(eigendecompose(&ok).is_ok());
    }

    #[test]
    fn select_q_on_disconnected_graph() {
        // three disjoint triangles
        let mut edges = Vec::new();
        for c in 0..3 {
            let b = 3 * c;
            edges.extend([(b, b + 1), (b + 1, b + 2), (b, b + 2)]);
        }
        let g = Graph::new(9, edges).unwrap();
        let spec = eigendecompose(&laplacian(&g)).unwrap();
        assert_eq!(select_q(&spec, 3, 0).unwrap(), 3);
        assert_eq!(select_q(&spec, 3, 2).unwrap(), 3);
        assert!(matches!(
            select_q(&spec, 9, 0),
            Err(Error::EmptyWindow { .. })
        ));
        assert!(select_q(&spec, 0, 1).is_err());
    }

    #[test]
    fn select_q_ties_prefer_desired_count() {
        let spec = SpectralDecomposition {
            values: DVector::from_vec(vec![0.0, 1.0, 2.0, 3.0, 4.0]),
            vectors: DMatrix::identity(5, 5),
        };
        assert_eq!(select_q(&spec, 3, 1).unwrap(), 3);
        assert_eq!(select_q(&spec, 1, 3).unwrap(), 1);
    }

    #[test]
    fn gft_of_eigenvector_is_unit_impulse() {
        let g = Graph::new(4, vec![(0, 1), (1, 2), (2, 3)]).unwrap();
        let spec = eigendecompose(&laplacian(&g)).unwrap();
        let x = spec.vectors.columns(0, 1).into_owned();
        let x_hat = gft(&spec, &x).unwrap();
        let mut e0 = DMatrix::zeros(4, 1);
        e0[(0, 0)] = 1.0;
        assert!((x_hat - e0).abs().max() < 1e-12);
        assert!(gft(&spec, &DMatrix::zeros(3, 1)).is_err());
    }

    #[test]
    fn subspace_distance_examples() {
        let g = Graph::new(4, vec![(0, 1), (1, 2), (2, 3), (0, 3)]).unwrap();
        let spec = eigendecompose(&laplacian(&g)).unwrap();
        assert!(subspace_distance(&spec.leading(2), &spec, 2).unwrap() < 1e-12);

        // U = span{e_1}, U' = (e_2, e_1)
        let u = dmatrix![1.0; 0.0];
        let other = SpectralDecomposition {
            values: DVector::from_vec(vec![0.0, 1.0]),
            vectors: dmatrix![0.0, 1.0; 1.0, 0.0],
        };
        assert!((subspace_distance(&u, &other, 1).unwrap() - 1.0).abs() < 1e-15);
        assert!(subspace_distance(&u, &other, 2).is_err());
    }
}
