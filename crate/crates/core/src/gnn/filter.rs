use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::GraphMatrix;

/// Pointwise nonlinearity. All variants satisfy `f(0) = 0` and are
/// 1-Lipschitz.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Tanh,
    Abs,
    Identity,
}

impl Activation {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
            Activation::Tanh => x.tanh(),
            Activation::Abs => x.abs(),
            Activation::Identity => x,
        }
    }

    /// Derivative at `x` (sub-gradient 0 at the kinks).
    pub fn derivative(self, x: f64) -> f64 {
        match self {
            Activation::Relu => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => {
                let t = x.tanh();
                1.0 - t * t
            }
            Activation::Abs => {
                if x == 0.0 {
                    0.0
                } else {
                    x.signum()
                }
            }
            Activation::Identity => 1.0,
        }
    }

    pub fn lipschitz(self) -> f64 {
        1.0
    }
}

impl std::str::FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "relu" => Ok(Activation::Relu),
            "tanh" => Ok(Activation::Tanh),
            "abs" => Ok(Activation::Abs),
            "identity" => Ok(Activation::Identity),
            _ => Err(Error::InvalidArgument(format!(
                "unknown nonlinearity {s:?}"
            ))),
        }
    }
}

/// Polynomial graph filter `X -> sum_k S^k X B_k`, `B_k` of shape
/// `F_in x F_out`.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterSpec {
    pub taps: Vec<DMatrix<f64>>,
}

impl FilterSpec {
    pub fn new(taps: Vec<DMatrix<f64>>) -> Result<Self> {
        let Some(first) = taps.first() else {
            return Err(Error::InvalidArgument(
                "a filter needs at least one tap".into(),
            ));
        };
        let shape = first.shape();
        if let Some(bad) = taps.iter().find(|t| t.shape() != shape) {
            return Err(Error::DimensionMismatch(format!(
                "filter taps must share a shape: {:?} vs {:?}",
                shape,
                bad.shape()
            )));
        }
        Ok(Self { taps })
    }

    /// Single-input single-output filter with coefficients `b_0..b_K`.
    pub fn scalar(coefficients: &[f64]) -> Result<Self> {
        Self::new(
            coefficients
                .iter()
                .map(|&b| DMatrix::from_element(1, 1, b))
                .collect(),
        )
    }

    pub fn order(&self) -> usize {
        self.taps.len() - 1
    }

    pub fn in_width(&self) -> usize {
        self.taps[0].nrows()
    }

    pub fn out_width(&self) -> usize {
        self.taps[0].ncols()
    }

    /// Coefficients of the scalar filter from input feature `g` to output
    /// feature `f`.
    pub fn coefficients(&self, g: usize, f: usize) -> Vec<f64> {
        self.taps.iter().map(|t| t[(g, f)]).collect()
    }

    pub fn is_scalar(&self) -> bool {
        self.in_width() == 1 && self.out_width() == 1
    }
}

/// Applies `s` to every `N`-row block of a vertically stacked batch.
pub fn shift_stacked(s: &GraphMatrix, x: &DMatrix<f64>) -> DMatrix<f64> {
    let n = s.nrows();
    let rows = x.nrows();
    let batch = rows / n;
    if batch == 1 {
        return s.mul(x);
    }
    let mut out = DMatrix::zeros(rows, x.ncols());
    let data = x.as_slice();
    for c in 0..x.ncols() {
        let col = DMatrix::from_column_slice(n, batch, &data[c * rows..(c + 1) * rows]);
        let shifted = s.mul(&col);
        out.as_mut_slice()[c * rows..(c + 1) * rows].copy_from_slice(shifted.as_slice());
    }
    out
}

pub(crate) fn check_stack(s: &GraphMatrix, x: &DMatrix<f64>) -> Result<()> {
    let n = s.nrows();
    if s.ncols() != n {
        return Err(Error::DimensionMismatch(
            "shift operator must be square".into(),
        ));
    }
    if n == 0 || !x.nrows().is_multiple_of(n) || x.nrows() == 0 {
        return Err(Error::DimensionMismatch(format!(
            "signal with {} rows does not stack over {n} nodes",
            x.nrows()
        )));
    }
    Ok(())
}

/// Powers `S^k X` for `k = 0..=order`, by repeated shifting.
pub fn shifted_powers(s: &GraphMatrix, x: &DMatrix<f64>, order: usize) -> Vec<DMatrix<f64>> {
    let mut powers = Vec::with_capacity(order + 1);
    powers.push(x.clone());
    for k in 1..=order {
        let next = shift_stacked(s, &powers[k - 1]);
        powers.push(next);
    }
    powers
}

/// `sum_k S^k X B_k`, never forming `S^k`. `x` may be a vertical stack of
/// several `N x F_in` signals.
pub fn filter_apply(spec: &FilterSpec, s: &GraphMatrix, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    check_stack(s, x)?;
    if x.ncols() != spec.in_width() {
        return Err(Error::DimensionMismatch(format!(
            "filter expects {} input features, got {}",
            spec.in_width(),
            x.ncols()
        )));
    }
    let powers = shifted_powers(s, x, spec.order());
    Ok(combine(&powers, spec))
}

pub(crate) fn combine(powers: &[DMatrix<f64>], spec: &FilterSpec) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(powers[0].nrows(), spec.out_width());
    for (p, b) in powers.iter().zip(&spec.taps) {
        out.gemm(1.0, p, b, 1.0);
    }
    out
}

/// `h(lambda) = sum_k b_k lambda^k` on each grid point.
pub fn frequency_response(coefficients: &[f64], grid: &[f64]) -> Vec<f64> {
    grid.iter()
        .map(|&l| coefficients.iter().rev().fold(0.0, |acc, &b| acc * l + b))
        .collect()
}

/// `max |lambda h'(lambda)|` over the grid.
pub fn integral_lipschitz_constant(coefficients: &[f64], grid: &[f64]) -> f64 {
    grid.iter()
        .map(|&l| {
            let deriv = coefficients
                .iter()
                .enumerate()
                .skip(1)
                .rev()
                .fold(0.0, |acc, (k, &b)| acc * l + k as f64 * b);
            (l * deriv).abs()
        })
        .fold(0.0, f64::max)
}

/// Eigenvalues plus `extra` evenly spaced points spanning them.
pub fn lambda_grid(eigenvalues: &[f64], extra: usize) -> Vec<f64> {
    let lo = eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = eigenvalues
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    let mut grid = eigenvalues.to_vec();
    if lo.is_finite() && extra > 0 {
        let steps = (extra - 1).max(1) as f64;
        grid.extend((0..extra).map(|i| lo + (hi - lo) * i as f64 / steps));
    }
    grid
}

/// Default lambda grid: spectrum plus 64 uniform points.
pub const DEFAULT_GRID_POINTS: usize = 64;
