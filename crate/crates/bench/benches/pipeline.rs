use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use nalgebra::DMatrix;
use tadropedge::analysis::relative_error;
use tadropedge::gnn::{forward, loss_and_gradient};
use tadropedge::weights::DEFAULT_WINDOW;
use tadropedge::{
    aggregate_resistance_weights, build_plan, epoch_shift, normalized_shift, sample_subgraph,
    Activation, Architecture, Examples, GnnModel, ReadoutKind, SamplingPlan, SamplingStrategy,
    StrategyKind,
};
use tadropedge_bench::sbm;

fn weights(c: &mut Criterion) {
    let (g, _) = sbm(200, 4, 0.2, 0.01, 1);
    c.bench_function("weights/sbm200", |b| {
        b.iter(|| aggregate_resistance_weights(&g, 4, DEFAULT_WINDOW).unwrap())
    });
}

fn sampling(c: &mut Criterion) {
    let (g, _) = sbm(200, 4, 0.2, 0.01, 1);
    let table = aggregate_resistance_weights(&g, 4, DEFAULT_WINDOW).unwrap();
    let plan = build_plan(
        &table,
        SamplingStrategy::new(StrategyKind::Cdf, 0.5, 0.0).unwrap(),
    )
    .unwrap();
    let mut seed = 0u64;
    c.bench_function("epoch_shift/sbm200", |b| {
        b.iter(|| {
            seed += 1;
            epoch_shift(&g, &plan, seed).unwrap()
        })
    });
}

fn model(c: &mut Criterion) {
    let n = 100;
    let (g, labels) = sbm(n, 4, 0.2, 0.02, 2);
    let s = normalized_shift(&g);
    let arch = Architecture {
        widths: vec![1, 16, 16],
        order: 5,
        activation: Activation::Relu,
        readout: Some(ReadoutKind::Flatten),
        classes: 4,
        nodes: n,
    };
    let m = GnnModel::init(&arch, 3).unwrap();
    let signals: Vec<DMatrix<f64>> = (0..32)
        .map(|k| DMatrix::from_fn(n, 1, |i, _| ((i * 7 + k) % 11) as f64 / 11.0))
        .collect();
    let ex = Examples::graph_level(&signals, (0..32).map(|k| labels[k]).collect()).unwrap();
    c.bench_function("forward/n100_k5", |b| {
        b.iter(|| forward(&m, &s, &signals[0]).unwrap())
    });
    c.bench_function("loss_and_gradient/n100_batch32", |b| {
        b.iter(|| loss_and_gradient(&m, &s, &ex).unwrap())
    });
}

fn relative(c: &mut Criterion) {
    let (g, _) = sbm(60, 3, 0.5, 0.05, 4);
    let s = normalized_shift(&g);
    let plan = SamplingPlan::iid(g.edge_count(), 0.97).unwrap();
    let mut seed = 0u64;
    c.bench_function("relative_error/n60", |b| {
        b.iter_batched(
            || {
                seed += 1;
                normalized_shift(&sample_subgraph(&g, &plan, seed).unwrap())
            },
            |sp| relative_error(&s, &sp),
            BatchSize::SmallInput,
        )
    });
}

criterion_group!(benches, weights, sampling, model, relative);
criterion_main!(benches);
