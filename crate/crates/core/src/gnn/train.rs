use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::model::{evaluate, loss_and_gradient, Examples, GnnModel};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::matrix::{normalized_shift, GraphMatrix};
use crate::rng;
use crate::sampler::{epoch_shift, SamplingPlan};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Optimizer {
    Sgd,
    Adam,
}

impl std::str::FromStr for Optimizer {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sgd" => Ok(Optimizer::Sgd),
            "adam" => Ok(Optimizer::Adam),
            _ => Err(Error::InvalidArgument(format!("unknown optimizer {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub optimizer: Optimizer,
    pub weight_decay: f64,
    pub seed: u64,
    /// Keep the parameters with the best validation accuracy (ties to the
    /// lower validation loss, then the earlier epoch).
    pub select_best: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 100,
            learning_rate: 1e-2,
            optimizer: Optimizer::Adam,
            weight_decay: 0.0,
            seed: 0,
            select_best: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::InvalidArgument("epochs must be at least 1".into()));
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "invalid learning rate {}",
                self.learning_rate
            )));
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "invalid weight decay {}",
                self.weight_decay
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Loss on the sampled shift, before the parameter step.
    pub train_loss: f64,
    pub val_loss: Option<f64>,
    pub val_accuracy: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: GnnModel,
    pub trace: Vec<EpochRecord>,
    /// Epoch whose parameters were returned.
    pub selected_epoch: usize,
}

struct Adam {
    m: Vec<DMatrix<f64>>,
    v: Vec<DMatrix<f64>>,
    t: i32,
}

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const EPS: f64 = 1e-8;

impl Adam {
    fn new(model: &GnnModel) -> Self {
        let zeros: Vec<DMatrix<f64>> = model
            .parameters()
            .iter()
            .map(|p| DMatrix::zeros(p.nrows(), p.ncols()))
            .collect();
        Self {
            m: zeros.clone(),
            v: zeros,
            t: 0,
        }
    }

    fn step(&mut self, params: Vec<&mut DMatrix<f64>>, grads: &[DMatrix<f64>], lr: f64) {
        self.t += 1;
        let c1 = 1.0 - BETA1.powi(self.t);
        let c2 = 1.0 - BETA2.powi(self.t);
        for (((p, g), m), v) in params
            .into_iter()
            .zip(grads)
            .zip(&mut self.m)
            .zip(&mut self.v)
        {
            for k in 0..p.len() {
                m[k] = BETA1 * m[k] + (1.0 - BETA1) * g[k];
                v[k] = BETA2 * v[k] + (1.0 - BETA2) * g[k] * g[k];
                p[k] -= lr * (m[k] / c1) / ((v[k] / c2).sqrt() + EPS);
            }
        }
    }
}

/// Trains on `data`, drawing a fresh edge-dropped shift per epoch when a
/// plan is given. Validation always uses the full graph.
pub fn train(
    model: GnnModel,
    g: &Graph,
    data: &Examples,
    val: Option<&Examples>,
    cfg: &TrainConfig,
    plan: Option<&SamplingPlan>,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    if let Some(plan) = plan {
        if plan.len() != g.edge_count() {
            return Err(Error::LengthMismatch {
                expected: g.edge_count(),
                got: plan.len(),
            });
        }
    }
    let full = normalized_shift(g);
    let mut model = model;
    let mut adam = Adam::new(&model);
    let mut trace = Vec::with_capacity(cfg.epochs);
    let mut best: Option<(f64, f64, usize, GnnModel)> = None;

    for epoch in 0..cfg.epochs {
        let sampled;
        let s: &GraphMatrix = match plan {
            Some(plan) => {
                sampled = epoch_shift(g, plan, rng::derive_seed(cfg.seed, epoch as u64))?;
                &sampled
            }
            None => &full,
        };
        let (loss, mut grads) = loss_and_gradient(&model, s, data)?;
        if !loss.is_finite() {
            return Err(Error::NonFiniteLoss { epoch });
        }
        if cfg.weight_decay > 0.0 {
            for (gr, p) in grads.iter_mut().zip(model.parameters()) {
                *gr += p * cfg.weight_decay;
            }
        }
        if cfg.learning_rate > 0.0 {
            match cfg.optimizer {
                Optimizer::Sgd => {
                    for (p, gr) in model.parameters_mut().into_iter().zip(&grads) {
                        *p -= gr * cfg.learning_rate;
                    }
                }
                Optimizer::Adam => adam.step(model.parameters_mut(), &grads, cfg.learning_rate),
            }
        }
        let (val_loss, val_accuracy) = match val {
            Some(v) => {
                let (l, a) = evaluate(&model, &full, v)?;
                (Some(l), Some(a))
            }
            None => (None, None),
        };
        if cfg.select_best {
            if let (Some(l), Some(a)) = (val_loss, val_accuracy) {
                let better = match &best {
                    None => true,
                    Some((ba, bl, _, _)) => a > *ba || (a == *ba && l < *bl),
                };
                if better {
                    best = Some((a, l, epoch, model.clone()));
                }
            }
        }
        trace.push(EpochRecord {
            epoch,
            train_loss: loss,
            val_loss,
            val_accuracy,
        });
    }
    let (model, selected_epoch) = match best {
        Some((_, _, epoch, m)) => (m, epoch),
        None => (model, cfg.epochs - 1),
    };
    Ok(TrainOutcome {
        model,
        trace,
        selected_epoch,
    })
}
