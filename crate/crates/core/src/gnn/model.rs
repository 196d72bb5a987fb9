use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::filter::{check_stack, combine, shift_stacked, shifted_powers, Activation, FilterSpec};
use crate::error::{Error, Result};
use crate::matrix::GraphMatrix;
use crate::rng;

/// Maps the backbone output to class logits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReadoutKind {
    /// One logit row per node: `X_L W + b`.
    Node,
    /// One logit row per signal: `mean_i(X_L) W + b`.
    MeanPool,
    /// One logit row per signal: `vec(X_L) W + b`, `vec` stacking columns.
    Flatten,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Readout {
    pub kind: ReadoutKind,
    pub weight: DMatrix<f64>,
    /// `1 x C`.
    pub bias: DMatrix<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GnnModel {
    pub layers: Vec<FilterSpec>,
    pub activation: Activation,
    pub readout: Option<Readout>,
}

/// Architecture of a model to be initialized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Architecture {
    /// `F_0, F_1, ..., F_L`.
    pub widths: Vec<usize>,
    pub order: usize,
    pub activation: Activation,
    pub readout: Option<ReadoutKind>,
    pub classes: usize,
    /// Node count, needed by the flatten readout.
    pub nodes: usize,
}

impl GnnModel {
    pub fn new(
        layers: Vec<FilterSpec>,
        activation: Activation,
        readout: Option<Readout>,
    ) -> Result<Self> {
        for w in layers.windows(2) {
            if w[0].out_width() != w[1].in_width() {
                return Err(Error::DimensionMismatch(format!(
                    "layer widths do not chain: {} -> {}",
                    w[0].out_width(),
                    w[1].in_width()
                )));
            }
        }
        if layers.is_empty() {
            return Err(Error::InvalidArgument(
                "a model needs at least one layer".into(),
            ));
        }
        Ok(Self {
            layers,
            activation,
            readout,
        })
    }

    /// Glorot-style uniform initialization, split across filter taps.
    pub fn init(arch: &Architecture, seed: u64) -> Result<Self> {
        if arch.widths.len() < 2 {
            return Err(Error::InvalidArgument(
                "need at least input and output widths".into(),
            ));
        }
        let mut r = rng::stream(seed, 0);
        let mut uniform = |rows: usize, cols: usize, scale: f64| {
            DMatrix::from_fn(rows, cols, |_, _| r.random_range(-scale..scale))
        };
        let taps = arch.order + 1;
        let layers = arch
            .widths
            .windows(2)
            .map(|w| {
                let scale = (6.0 / (w[0] + w[1]) as f64).sqrt() / (taps as f64).sqrt();
                FilterSpec::new((0..taps).map(|_| uniform(w[0], w[1], scale)).collect())
            })
            .collect::<Result<Vec<_>>>()?;
        let last = *arch.widths.last().unwrap();
        let readout = arch.readout.map(|kind| {
            let fan_in = match kind {
                ReadoutKind::Flatten => last * arch.nodes,
                _ => last,
            };
            let scale = (6.0 / (fan_in + arch.classes) as f64).sqrt();
            Readout {
                kind,
                weight: uniform(fan_in, arch.classes, scale),
                bias: DMatrix::zeros(1, arch.classes),
            }
        });
        Self::new(layers, arch.activation, readout)
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn input_width(&self) -> usize {
        self.layers[0].in_width()
    }

    pub fn output_width(&self) -> usize {
        self.layers.last().unwrap().out_width()
    }

    /// Widths `F_1..F_L`.
    pub fn hidden_widths(&self) -> Vec<usize> {
        self.layers.iter().map(|l| l.out_width()).collect()
    }

    pub fn parameters(&self) -> Vec<&DMatrix<f64>> {
        let mut out: Vec<&DMatrix<f64>> = self.layers.iter().flat_map(|l| l.taps.iter()).collect();
        if let Some(r) = &self.readout {
            out.push(&r.weight);
            out.push(&r.bias);
        }
        out
    }

    pub fn parameters_mut(&mut self) -> Vec<&mut DMatrix<f64>> {
        let mut out: Vec<&mut DMatrix<f64>> = self
            .layers
            .iter_mut()
            .flat_map(|l| l.taps.iter_mut())
            .collect();
        if let Some(r) = &mut self.readout {
            out.push(&mut r.weight);
            out.push(&mut r.bias);
        }
        out
    }

    pub fn parameter_count(&self) -> usize {
        self.parameters().iter().map(|p| p.len()).sum()
    }
}

/// Intermediate values kept for backpropagation.
pub struct ForwardCache {
    /// Per layer: `S^k X_{l-1}` for `k = 0..=K`.
    powers: Vec<Vec<DMatrix<f64>>>,
    /// Per layer pre-activation.
    pre: Vec<DMatrix<f64>>,
    pub output: DMatrix<f64>,
}

/// Backbone output `X_L` for a (possibly stacked) input.
pub fn forward(model: &GnnModel, s: &GraphMatrix, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    Ok(forward_cached(model, s, x)?.output)
}

pub fn forward_cached(model: &GnnModel, s: &GraphMatrix, x: &DMatrix<f64>) -> Result<ForwardCache> {
    check_stack(s, x)?;
    if x.ncols() != model.input_width() {
        return Err(Error::DimensionMismatch(format!(
            "model expects {} input features, got {}",
            model.input_width(),
            x.ncols()
        )));
    }
    let mut powers = Vec::with_capacity(model.depth());
    let mut pre = Vec::with_capacity(model.depth());
    let mut current = x.clone();
    for layer in &model.layers {
        let p = shifted_powers(s, &current, layer.order());
        let z = combine(&p, layer);
        current = z.map(|v| model.activation.apply(v));
        powers.push(p);
        pre.push(z);
    }
    Ok(ForwardCache {
        powers,
        pre,
        output: current,
    })
}

fn readout_features(readout: &Readout, xl: &DMatrix<f64>, n: usize) -> DMatrix<f64> {
    let batch = xl.nrows() / n;
    let f = xl.ncols();
    match readout.kind {
        ReadoutKind::Node => xl.clone(),
        ReadoutKind::MeanPool => DMatrix::from_fn(batch, f, |r, c| {
            (0..n).map(|i| xl[(r * n + i, c)]).sum::<f64>() / n as f64
        }),
        ReadoutKind::Flatten => DMatrix::from_fn(batch, f * n, |r, k| xl[(r * n + k % n, k / n)]),
    }
}

fn readout_backward(
    readout: &Readout,
    d_features: &DMatrix<f64>,
    n: usize,
    rows: usize,
) -> DMatrix<f64> {
    match readout.kind {
        ReadoutKind::Node => d_features.clone(),
        ReadoutKind::MeanPool => DMatrix::from_fn(rows, d_features.ncols(), |row, c| {
            d_features[(row / n, c)] / n as f64
        }),
        ReadoutKind::Flatten => {
            let f = d_features.ncols() / n;
            DMatrix::from_fn(rows, f, |row, c| d_features[(row / n, c * n + row % n)])
        }
    }
}

/// Labelled examples for one loss evaluation.
///
/// `x` stacks `R` signals of `N` rows each. For graph readouts there is one
/// label per signal. For the node readout `rows` selects the logit rows
/// (indices into the `N R` stacked rows) and `labels` aligns with it.
#[derive(Debug, Clone, PartialEq)]
pub struct Examples {
    pub x: DMatrix<f64>,
    pub labels: Vec<usize>,
    pub rows: Option<Vec<usize>>,
}

impl Examples {
    pub fn graph_level(signals: &[DMatrix<f64>], labels: Vec<usize>) -> Result<Self> {
        if signals.len() != labels.len() {
            return Err(Error::LengthMismatch {
                expected: signals.len(),
                got: labels.len(),
            });
        }
        let Some(first) = signals.first() else {
            return Err(Error::InvalidArgument("no examples".into()));
        };
        let (n, f) = first.shape();
        if signals.iter().any(|s| s.shape() != (n, f)) {
            return Err(Error::DimensionMismatch(
                "signals must share a shape".into(),
            ));
        }
        let mut x = DMatrix::zeros(n * signals.len(), f);
        for (r, s) in signals.iter().enumerate() {
            x.view_mut((r * n, 0), (n, f)).copy_from(s);
        }
        Ok(Self {
            x,
            labels,
            rows: None,
        })
    }

    pub fn node_level(features: DMatrix<f64>, labels: &[usize], nodes: &[usize]) -> Result<Self> {
        if labels.len() != features.nrows() {
            return Err(Error::LengthMismatch {
                expected: features.nrows(),
                got: labels.len(),
            });
        }
        if let Some(&bad) = nodes.iter().find(|&&v| v >= features.nrows()) {
            return Err(Error::NodeOutOfRange {
                node: bad,
                n: features.nrows(),
            });
        }
        Ok(Self {
            x: features,
            labels: nodes.iter().map(|&v| labels[v]).collect(),
            rows: Some(nodes.to_vec()),
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Subset of graph-level examples by signal index.
    pub fn select(&self, n: usize, which: &[usize]) -> Examples {
        let f = self.x.ncols();
        let mut x = DMatrix::zeros(n * which.len(), f);
        for (dst, &src) in which.iter().enumerate() {
            x.view_mut((dst * n, 0), (n, f))
                .copy_from(&self.x.view((src * n, 0), (n, f)));
        }
        Examples {
            x,
            labels: which.iter().map(|&i| self.labels[i]).collect(),
            rows: None,
        }
    }
}

/// Class logits, one row per example.
pub fn logits(model: &GnnModel, s: &GraphMatrix, ex: &Examples) -> Result<DMatrix<f64>> {
    let cache = forward_cached(model, s, &ex.x)?;
    logits_from_output(model, &cache.output, s.nrows(), ex)
}

fn logits_from_output(
    model: &GnnModel,
    xl: &DMatrix<f64>,
    n: usize,
    ex: &Examples,
) -> Result<DMatrix<f64>> {
    let readout = model.readout.as_ref().ok_or_else(|| {
        Error::InvalidArgument("model has no readout; cannot compute a loss".into())
    })?;
    let feats = readout_features(readout, xl, n);
    let feats = match (&ex.rows, readout.kind) {
        (Some(rows), ReadoutKind::Node) => feats.select_rows(rows.iter()),
        (None, ReadoutKind::Node) => feats,
        (Some(_), _) => {
            return Err(Error::InvalidArgument(
                "row selection needs the node readout".into(),
            ))
        }
        (None, _) => feats,
    };
    if feats.ncols() != readout.weight.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "readout expects {} features, got {}",
            readout.weight.nrows(),
            feats.ncols()
        )));
    }
    if feats.nrows() != ex.labels.len() {
        return Err(Error::LengthMismatch {
            expected: feats.nrows(),
            got: ex.labels.len(),
        });
    }
    let mut out = feats * &readout.weight;
    for mut row in out.row_iter_mut() {
        row += &readout.bias;
    }
    Ok(out)
}

/// Row-wise softmax cross-entropy averaged over rows, and its gradient
/// with respect to the logits.
pub fn softmax_cross_entropy(logits: &DMatrix<f64>, labels: &[usize]) -> (f64, DMatrix<f64>) {
    let rows = logits.nrows();
    let mut grad = DMatrix::zeros(rows, logits.ncols());
    let mut loss = 0.0;
    for r in 0..rows {
        let row = logits.row(r);
        let peak = row.max();
        let denom: f64 = row.iter().map(|v| (v - peak).exp()).sum();
        let log_denom = denom.ln() + peak;
        loss += log_denom - row[labels[r]];
        for c in 0..logits.ncols() {
            grad[(r, c)] = (row[c] - log_denom).exp() / rows as f64;
        }
        grad[(r, labels[r])] -= 1.0 / rows as f64;
    }
    (loss / rows as f64, grad)
}

/// Index of the largest entry per row; ties go to the lowest index.
pub fn argmax_rows(m: &DMatrix<f64>) -> Vec<usize> {
    m.row_iter()
        .map(|row| {
            let mut best = 0;
            for c in 1..row.len() {
                if row[c] > row[best] {
                    best = c;
                }
            }
            best
        })
        .collect()
}

pub fn loss(model: &GnnModel, s: &GraphMatrix, ex: &Examples) -> Result<f64> {
    Ok(softmax_cross_entropy(&logits(model, s, ex)?, &ex.labels).0)
}

/// `(loss, top-1 accuracy)`.
pub fn evaluate(model: &GnnModel, s: &GraphMatrix, ex: &Examples) -> Result<(f64, f64)> {
    let z = logits(model, s, ex)?;
    let (l, _) = softmax_cross_entropy(&z, &ex.labels);
    let pred = argmax_rows(&z);
    let hits = pred.iter().zip(&ex.labels).filter(|(p, y)| p == y).count();
    Ok((l, hits as f64 / ex.len().max(1) as f64))
}

/// Loss and its gradient for every entry of [`GnnModel::parameters`], in
/// the same order.
pub fn loss_and_gradient(
    model: &GnnModel,
    s: &GraphMatrix,
    ex: &Examples,
) -> Result<(f64, Vec<DMatrix<f64>>)> {
    let n = s.nrows();
    let cache = forward_cached(model, s, &ex.x)?;
    let z = logits_from_output(model, &cache.output, n, ex)?;
    let (l, dz) = softmax_cross_entropy(&z, &ex.labels);
    let readout = model
        .readout
        .as_ref()
        .expect("checked by logits_from_output");

    let feats_all = readout_features(readout, &cache.output, n);
    let feats = match &ex.rows {
        Some(rows) => feats_all.select_rows(rows.iter()),
        None => feats_all.clone(),
    };
    let d_weight = feats.tr_mul(&dz);
    let d_bias = DMatrix::from_fn(1, dz.ncols(), |_, c| dz.column(c).sum());
    let d_feats_sel = &dz * readout.weight.transpose();
    let d_feats = match &ex.rows {
        Some(rows) => {
            let mut full = DMatrix::zeros(feats_all.nrows(), feats_all.ncols());
            for (k, &r) in rows.iter().enumerate() {
                let updated = full.row(r) + d_feats_sel.row(k);
                full.set_row(r, &updated);
            }
            full
        }
        None => d_feats_sel,
    };
    let mut d_out = readout_backward(readout, &d_feats, n, cache.output.nrows());

    let mut layer_grads: Vec<Vec<DMatrix<f64>>> = Vec::with_capacity(model.depth());
    for (l_idx, layer) in model.layers.iter().enumerate().rev() {
        let pre = &cache.pre[l_idx];
        let dzl = d_out.zip_map(pre, |g, v| g * model.activation.derivative(v));
        let grads: Vec<DMatrix<f64>> = cache.powers[l_idx].iter().map(|p| p.tr_mul(&dzl)).collect();
        if l_idx > 0 {
            // sum_k S^k (dZ B_k^T), Horner form; S is symmetric.
            let mut acc = &dzl * layer.taps[layer.order()].transpose();
            for k in (0..layer.order()).rev() {
                acc = shift_stacked(s, &acc);
                acc.gemm(1.0, &dzl, &layer.taps[k].transpose(), 1.0);
            }
            d_out = acc;
        }
        layer_grads.push(grads);
    }
    layer_grads.reverse();
    let mut out: Vec<DMatrix<f64>> = layer_grads.into_iter().flatten().collect();
    out.push(d_weight);
    out.push(d_bias);
    Ok((l, out))
}
