use nalgebra::DMatrix;
use serde::Serialize;

use super::relative::relative_error;
use crate::error::{Error, Result};
use crate::gnn::{
    forward, frequency_response, integral_lipschitz_constant, lambda_grid, GnnModel,
    DEFAULT_GRID_POINTS,
};
use crate::matrix::GraphMatrix;
use crate::spectral::eigendecompose;

/// Slack allowed on `|h(lambda)| <= 1` for rounding.
const RESPONSE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    /// `sum_f ||Phi_f(X; S') - Phi_f(X; S)||_2` over output columns.
    pub lhs: f64,
    /// `C ||E||_2 ||X||`.
    pub bound: f64,
    /// `lhs / bound`; 0 when both vanish.
    pub slack_ratio: f64,
    /// `2 C_L (1 + delta sqrt(N)) L C_sigma^L prod F_l`.
    pub constant: f64,
    pub lipschitz_filter: f64,
    pub lipschitz_sigma: f64,
    pub misalignment: f64,
    pub relative_error_norm: f64,
    /// `sum_g ||x_g||_2` over input columns.
    pub input_norm: f64,
    pub residual: f64,
}

fn column_norm_sum(m: &DMatrix<f64>) -> f64 {
    m.column_iter().map(|c| c.norm()).sum()
}

/// Evaluates both sides of the first-order stability bound for one pair of
/// shifts. Every scalar filter of the model must satisfy `|h| <= 1` on the
/// combined spectrum grid.
pub fn theorem1_check(
    model: &GnnModel,
    s: &GraphMatrix,
    s_prime: &GraphMatrix,
    x: &DMatrix<f64>,
) -> Result<BoundReport> {
    if x.nrows() != s.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "signal has {} rows, graph has {}",
            x.nrows(),
            s.nrows()
        )));
    }
    let mut eigs: Vec<f64> = eigendecompose(s)?.values.iter().copied().collect();
    eigs.extend(eigendecompose(s_prime)?.values.iter());
    let grid = lambda_grid(&eigs, DEFAULT_GRID_POINTS);

    let mut c_l: f64 = 0.0;
    for layer in &model.layers {
        for g in 0..layer.in_width() {
            for f in 0..layer.out_width() {
                let b = layer.coefficients(g, f);
                for (&lambda, &value) in grid.iter().zip(&frequency_response(&b, &grid)) {
                    if value.abs() > 1.0 + RESPONSE_TOL {
                        return Err(Error::FilterNotBounded { lambda, value });
                    }
                }
                c_l = c_l.max(integral_lipschitz_constant(&b, &grid));
            }
        }
    }

    let rel = relative_error(s, s_prime)?;
    let y = forward(model, s, x)?;
    let y_prime = forward(model, s_prime, x)?;
    let lhs = column_norm_sum(&(y_prime - y));
    let input_norm = column_norm_sum(x);

    let depth = model.depth() as f64;
    let c_sigma = model.activation.lipschitz();
    let widths: f64 = model.hidden_widths().iter().map(|&w| w as f64).product();
    let n = s.nrows() as f64;
    let constant = 2.0
        * c_l
        * (1.0 + rel.misalignment * n.sqrt())
        * depth
        * c_sigma.powi(model.depth() as i32)
        * widths;
    let bound = constant * rel.norm * input_norm;
    let slack_ratio = if bound > 0.0 {
        lhs / bound
    } else if lhs == 0.0 {
        0.0
    } else {
        f64::INFINITY
    };
    Ok(BoundReport {
        lhs,
        bound,
        slack_ratio,
        constant,
        lipschitz_filter: c_l,
        lipschitz_sigma: c_sigma,
        misalignment: rel.misalignment,
        relative_error_norm: rel.norm,
        input_norm,
        residual: rel.residual,
    })
}
