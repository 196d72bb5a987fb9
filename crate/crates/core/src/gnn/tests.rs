use nalgebra::DMatrix;
use rand::Rng;

use super::*;
use crate::graph::Graph;
use crate::matrix::{normalized_shift, GraphMatrix, MatrixKind};
use crate::rng;
use crate::spectral::{eigendecompose, gft};

fn ring(n: usize) -> Graph {
    Graph::new(n, (0..n).map(|i| (i, (i + 1) % n)).collect()).unwrap()
}

fn random_matrix(rows: usize, cols: usize, seed: u64) -> DMatrix<f64> {
    let mut r = rng::stream(seed, 7);
    DMatrix::from_fn(rows, cols, |_, _| r.random_range(-1.0..1.0))
}

#[test]
fn identity_filters() {
    let s = normalized_shift(&ring(5));
    let x = random_matrix(5, 3, 1);
    let id = FilterSpec::new(vec![DMatrix::identity(3, 3)]).unwrap();
    assert_eq!(filter_apply(&id, &s, &x).unwrap(), x);
    let shift = FilterSpec::new(vec![DMatrix::zeros(3, 3), DMatrix::identity(3, 3)]).unwrap();
    let y = filter_apply(&shift, &s, &x).unwrap();
    assert!((y - s.mul(&x)).abs().max() < 1e-15);
    assert!(filter_apply(&id, &s, &random_matrix(5, 2, 1)).is_err());
    assert!(filter_apply(&id, &s, &random_matrix(4, 3, 1)).is_err());
}

#[test]
fn spectral_domain_matches_vertex_domain() {
    let g = Graph::new(
        6,
        vec![(0, 1), (1, 2), (2, 0), (2, 3), (3, 4), (4, 5), (5, 3)],
    )
    .unwrap();
    let s = normalized_shift(&g);
    let spec = eigendecompose(&s).unwrap();
    let b = [0.3, -0.7, 0.2, 0.5];
    let filter = FilterSpec::scalar(&b).unwrap();
    let x = random_matrix(6, 1, 3);
    let y = filter_apply(&filter, &s, &x).unwrap();
    let h = frequency_response(&b, spec.values.as_slice());
    let x_hat = gft(&spec, &x).unwrap();
    let y_hat = gft(&spec, &y).unwrap();
    for i in 0..6 {
        assert!((y_hat[(i, 0)] - h[i] * x_hat[(i, 0)]).abs() < 1e-8);
    }
}

#[test]
fn frequency_response_examples() {
    assert_eq!(frequency_response(&[1.0], &[-1.0, 0.0, 3.0]), vec![1.0; 3]);
    assert_eq!(frequency_response(&[0.0, 1.0], &[2.0]), vec![2.0]);
}

#[test]
fn integral_lipschitz_examples() {
    let grid: Vec<f64> = (0..41).map(|i| -2.0 + 0.1 * i as f64).collect();
    assert_eq!(integral_lipschitz_constant(&[0.7], &grid), 0.0);
    assert!((integral_lipschitz_constant(&[0.0, 1.0], &grid) - 2.0).abs() < 1e-12);
}

#[test]
fn integral_lipschitz_dominates_pairwise_ratio() {
    let b = [0.1, -0.4, 0.3, 0.25];
    let grid: Vec<f64> = (0..201).map(|i| -1.0 + 0.01 * i as f64).collect();
    let c = integral_lipschitz_constant(&b, &grid);
    let h = frequency_response(&b, &grid);
    for i in 0..grid.len() {
        for j in 0..grid.len() {
            let (l1, l2) = (grid[i], grid[j]);
            if l1 * l2 <= 0.0 || i == j {
                continue;
            }
            let lhs = (h[i] - h[j]).abs();
            let rhs = c * (l2 - l1).abs() / ((l1 + l2).abs() / 2.0);
            assert!(lhs <= rhs * 1.05 + 1e-12, "{l1} {l2}: {lhs} > {rhs}");
        }
    }
}

#[test]
fn lambda_grid_covers_spectrum() {
    let grid = lambda_grid(&[-0.5, 0.25, 1.0], 5);
    assert_eq!(grid.len(), 8);
    assert_eq!(grid[3], -0.5);
    assert_eq!(grid[7], 1.0);
}

fn arch(
    widths: Vec<usize>,
    order: usize,
    activation: Activation,
    readout: Option<ReadoutKind>,
    n: usize,
) -> Architecture {
    Architecture {
        widths,
        order,
        activation,
        readout,
        classes: 3,
        nodes: n,
    }
}

#[test]
fn forward_trivial_cases() {
    let s = normalized_shift(&ring(4));
    let x = random_matrix(4, 2, 5);
    let id = GnnModel::new(
        vec![FilterSpec::new(vec![DMatrix::identity(2, 2)]).unwrap()],
        Activation::Identity,
        None,
    )
    .unwrap();
    assert_eq!(forward(&id, &s, &x).unwrap(), x);
    let m = GnnModel::init(&arch(vec![2, 4, 3], 2, Activation::Tanh, None, 4), 9).unwrap();
    assert_eq!(
        forward(&m, &s, &DMatrix::zeros(4, 2)).unwrap(),
        DMatrix::zeros(4, 3)
    );
    assert!(forward(&m, &s, &DMatrix::zeros(4, 3)).is_err());
}

#[test]
fn forward_is_permutation_equivariant() {
    let g = Graph::new(
        7,
        vec![
            (0, 1),
            (1, 2),
            (2, 3),
            (3, 4),
            (4, 5),
            (5, 6),
            (0, 3),
            (2, 6),
        ],
    )
    .unwrap();
    let perm = [3, 6, 0, 5, 1, 4, 2];
    let gp = g.permute(&perm).unwrap();
    let x = random_matrix(7, 2, 11);
    let mut xp = DMatrix::zeros(7, 2);
    for (i, &pi) in perm.iter().enumerate() {
        xp.set_row(pi, &x.row(i));
    }
    let m = GnnModel::init(&arch(vec![2, 5, 3], 3, Activation::Relu, None, 7), 4).unwrap();
    let y = forward(&m, &normalized_shift(&g), &x).unwrap();
    let yp = forward(&m, &normalized_shift(&gp), &xp).unwrap();
    for (i, &pi) in perm.iter().enumerate() {
        assert!((yp.row(pi) - y.row(i)).abs().max() < 1e-12);
    }
}

#[test]
fn stacked_batches_match_individual_signals() {
    let s = normalized_shift(&ring(5));
    let m = GnnModel::init(&arch(vec![2, 3], 2, Activation::Tanh, None, 5), 1).unwrap();
    let a = random_matrix(5, 2, 1);
    let b = random_matrix(5, 2, 2);
    let ex = Examples::graph_level(&[a.clone(), b.clone()], vec![0, 1]).unwrap();
    let y = forward(&m, &s, &ex.x).unwrap();
    assert!((y.rows(0, 5) - forward(&m, &s, &a).unwrap()).abs().max() < 1e-14);
    assert!((y.rows(5, 5) - forward(&m, &s, &b).unwrap()).abs().max() < 1e-14);
}

#[test]
fn argmax_ties_go_low() {
    let m = DMatrix::from_row_slice(2, 3, &[1.0, 1.0, 0.0, 0.0, 2.0, 2.0]);
    assert_eq!(argmax_rows(&m), vec![0, 1]);
}

#[allow(clippy::needless_range_loop)]
fn finite_difference_check(model: &GnnModel, s: &GraphMatrix, ex: &Examples) -> f64 {
    let (_, grads) = loss_and_gradient(model, s, ex).unwrap();
    let eps = 1e-5;
    let mut worst: f64 = 0.0;
    let count = model.parameters().len();
    for p in 0..count {
        let len = model.parameters()[p].len();
        for k in 0..len {
            let mut plus = model.clone();
            plus.parameters_mut()[p][k] += eps;
            let mut minus = model.clone();
            minus.parameters_mut()[p][k] -= eps;
            let numeric =
                (loss(&plus, s, ex).unwrap() - loss(&minus, s, ex).unwrap()) / (2.0 * eps);
            let analytic = grads[p][k];
            let rel = (numeric - analytic).abs() / numeric.abs().max(analytic.abs()).max(1e-6);
            worst = worst.max(rel);
        }
    }
    worst
}

#[test]
fn gradients_match_finite_differences() {
    let g = Graph::new(5, vec![(0, 1), (1, 2), (2, 3), (3, 4), (0, 4), (1, 3)]).unwrap();
    let s = normalized_shift(&g);
    let signals: Vec<DMatrix<f64>> = (0..3).map(|r| random_matrix(5, 2, 40 + r)).collect();
    for layers in 1..=3 {
        for order in [1, 5] {
            for (kind, act) in [
                (ReadoutKind::Flatten, Activation::Tanh),
                (ReadoutKind::MeanPool, Activation::Tanh),
            ] {
                let mut widths = vec![2];
                widths.extend(std::iter::repeat_n(3, layers));
                let m = GnnModel::init(
                    &arch(widths, order, act, Some(kind), 5),
                    layers as u64 * 10 + order as u64,
                )
                .unwrap();
                let ex = Examples::graph_level(&signals, vec![0, 2, 1]).unwrap();
                let err = finite_difference_check(&m, &s, &ex);
                assert!(err <= 1e-5, "L={layers} K={order} {kind:?}: {err}");
            }
            let mut widths = vec![2];
            widths.extend(std::iter::repeat_n(3, layers));
            let m = GnnModel::init(
                &arch(widths, order, Activation::Tanh, Some(ReadoutKind::Node), 5),
                3,
            )
            .unwrap();
            let ex = Examples::node_level(random_matrix(5, 2, 99), &[0, 1, 2, 1, 0], &[0, 2, 3])
                .unwrap();
            let err = finite_difference_check(&m, &s, &ex);
            assert!(err <= 1e-5, "node readout L={layers} K={order}: {err}");
        }
    }
}

#[test]
fn zero_learning_rate_keeps_parameters() {
    let g = ring(6);
    let m = GnnModel::init(
        &arch(
            vec![1, 4],
            2,
            Activation::Relu,
            Some(ReadoutKind::MeanPool),
            6,
        ),
        2,
    )
    .unwrap();
    let ex = Examples::graph_level(
        &[random_matrix(6, 1, 1), random_matrix(6, 1, 2)],
        vec![0, 1],
    )
    .unwrap();
    let plan = crate::sampler::SamplingPlan::iid(6, 0.5).unwrap();
    let cfg = TrainConfig {
        epochs: 5,
        learning_rate: 0.0,
        ..TrainConfig::default()
    };
    let out = train(m.clone(), &g, &ex, None, &cfg, Some(&plan)).unwrap();
    assert_eq!(out.model, m);
    assert_eq!(out.trace.len(), 5);
}

#[test]
fn overfits_a_single_sample() {
    let g = ring(6);
    let m = GnnModel::init(
        &arch(
            vec![1, 8],
            2,
            Activation::Tanh,
            Some(ReadoutKind::Flatten),
            6,
        ),
        5,
    )
    .unwrap();
    let ex = Examples::graph_level(&[random_matrix(6, 1, 8)], vec![2]).unwrap();
    let cfg = TrainConfig {
        epochs: 200,
        learning_rate: 1e-2,
        ..TrainConfig::default()
    };
    let out = train(m, &g, &ex, None, &cfg, None).unwrap();
    let first = out.trace[0].train_loss;
    let last = out.trace.last().unwrap().train_loss;
    assert!(last < 0.1 && last < first, "{first} -> {last}");
}

#[test]
fn select_best_uses_validation() {
    let g = ring(6);
    let m = GnnModel::init(
        &arch(
            vec![1, 4],
            1,
            Activation::Tanh,
            Some(ReadoutKind::Flatten),
            6,
        ),
        5,
    )
    .unwrap();
    let ex = Examples::graph_level(
        &[random_matrix(6, 1, 8), random_matrix(6, 1, 9)],
        vec![0, 1],
    )
    .unwrap();
    let cfg = TrainConfig {
        epochs: 20,
        select_best: true,
        ..TrainConfig::default()
    };
    let out = train(m, &g, &ex, Some(&ex), &cfg, None).unwrap();
    assert!(out.selected_epoch < 20);
    assert!(out.trace.iter().all(|r| r.val_accuracy.is_some()));
}

#[test]
fn readout_requires_matching_shapes() {
    let s = GraphMatrix::from_dense(MatrixKind::General, DMatrix::identity(4, 4));
    let m = GnnModel::init(&arch(vec![1, 2], 0, Activation::Identity, None, 4), 0).unwrap();
    let ex = Examples::graph_level(&[DMatrix::zeros(4, 1)], vec![0]).unwrap();
    assert!(loss(&m, &s, &ex).is_err());
    assert!(Examples::graph_level(&[DMatrix::zeros(4, 1)], vec![0, 1]).is_err());
}
