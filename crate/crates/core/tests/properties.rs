use nalgebra::DMatrix;
use proptest::prelude::*;
use tadropedge::analysis::{output_variance, relative_error};
use tadropedge::components::boundary_edge_count;
use tadropedge::gnn::{filter_apply, frequency_response, Activation, Architecture};
use tadropedge::sampler::empirical_cdf;
use tadropedge::spectral::{gft, spectral_norm};
use tadropedge::*;

fn graph_strategy(max_n: usize) -> impl Strategy<Value = Graph> {
    (2..=max_n).prop_flat_map(|n| {
        let pairs: Vec<(usize, usize)> = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .collect();
        let m = pairs.len();
        proptest::collection::vec(any::<bool>(), m).prop_map(move |mask| {
            let edges = pairs
                .iter()
                .zip(&mask)
                .filter(|(_, &k)| k)
                .map(|(e, _)| *e)
                .collect();
            Graph::new(n, edges).unwrap()
        })
    })
}

fn graph_and_mask(max_n: usize) -> impl Strategy<Value = (Graph, Vec<bool>)> {
    graph_strategy(max_n).prop_flat_map(|g| {
        let m = g.edge_count();
        (Just(g), proptest::collection::vec(any::<bool>(), m))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn drop_edges_only_removes((g, mask) in graph_and_mask(12)) {
        let h = g.drop_edges(&mask).unwrap();
        prop_assert_eq!(h.node_count(), g.node_count());
        prop_assert_eq!(h.edge_count(), mask.iter().filter(|&&k| k).count());
        prop_assert!(h.edges().iter().all(|e| g.edges().contains(e)));
    }

    #[test]
    fn normalized_shift_is_contractive(g in graph_strategy(14)) {
        let spec = eigendecompose(&normalized_shift(&g)).unwrap();
        prop_assert!(spec.values.iter().all(|v| v.abs() <= 1.0 + 1e-10));
    }

    #[test]
    fn laplacian_rows_sum_to_zero(g in graph_strategy(14)) {
        let l = laplacian(&g).to_dense();
        for r in l.row_iter() {
            prop_assert!(r.sum().abs() < 1e-10);
        }
    }

    #[test]
    fn keep_probabilities_are_monotone(
        mut weights in proptest::collection::vec(0.0f64..5.0, 1..40),
        p in 0.05f64..=1.0,
        gamma in 0.01f64..3.0,
    ) {
        weights.sort_by(f64::total_cmp);
        let cdf = empirical_cdf(&weights);
        for kind in StrategyKind::ALL {
            let s = SamplingStrategy::new(kind, p, gamma).unwrap();
            let probs: Vec<f64> = weights.iter().zip(&cdf).map(|(&w, &f)| s.keep_probability(w, f)).collect();
            for w in probs.windows(2) {
                if kind.is_inverse() {
                    prop_assert!(w[1] <= w[0] + 1e-15);
                } else {
                    prop_assert!(w[1] + 1e-15 >= w[0]);
                }
            }
            prop_assert!(probs.iter().all(|&q| q >= p - 1e-15 && q <= 1.0));
            if p == 1.0 {
                prop_assert!(probs.iter().all(|&q| q == 1.0));
            }
        }
    }

    #[test]
    fn edge_draws_are_independent(probs in proptest::collection::vec(0.0f64..=1.0, 2..30), seed in any::<u64>(), other in 0.0f64..=1.0) {
        let a = SamplingPlan::from_probs(probs.clone()).unwrap().draw_mask(seed);
        let mut changed = probs.clone();
        changed[0] = other;
        let b = SamplingPlan::from_probs(changed).unwrap().draw_mask(seed);
        prop_assert_eq!(&a[1..], &b[1..]);
        prop_assert_eq!(a, SamplingPlan::from_probs(probs).unwrap().draw_mask(seed));
    }

    #[test]
    fn subspace_distance_is_a_bounded_symmetric_quantity((g, mask) in graph_and_mask(10), q in 1usize..4) {
        let n = g.node_count();
        prop_assume!(q < n);
        let h = g.drop_edges(&mask).unwrap();
        let a = eigendecompose(&laplacian(&g)).unwrap();
        let b = eigendecompose(&laplacian(&h)).unwrap();
        let ab = subspace_distance(&a.leading(q), &b, q).unwrap();
        let ba = subspace_distance(&b.leading(q), &a, q).unwrap();
        prop_assert!((ab - ba).abs() < 1e-9);
        prop_assert!(ab >= 0.0 && ab <= (q as f64).sqrt() + 1e-12);
    }

    #[test]
    fn filters_are_diagonal_in_the_eigenbasis(g in graph_strategy(10), b in proptest::collection::vec(-1.0f64..1.0, 1..6), seed in any::<u64>()) {
        let s = normalized_shift(&g);
        let spec = eigendecompose(&s).unwrap();
        let n = g.node_count();
        let x = DMatrix::from_fn(n, 1, |i, _| tadropedge::rng::uniform(seed, i as u64) - 0.5);
        let y = filter_apply(&FilterSpec::scalar(&b).unwrap(), &s, &x).unwrap();
        let h = frequency_response(&b, spec.values.as_slice());
        let xh = gft(&spec, &x).unwrap();
        let yh = gft(&spec, &y).unwrap();
        for i in 0..n {
            prop_assert!((yh[(i, 0)] - h[i] * xh[(i, 0)]).abs() < 1e-8);
        }
        let peak = h.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if peak <= 1.0 {
            prop_assert!(y.norm() <= (1.0 + 1e-6) * x.norm());
        }
    }

    #[test]
    fn rms_identity_and_merging(g in graph_strategy(12), cut in 1usize..11, cut2 in 1usize..11) {
        let n = g.node_count();
        let (a, b) = (cut.min(n - 1).min(cut2), cut.min(n - 1).max(cut2).min(n - 1));
        prop_assume!(a < b && b < n);
        let clusters = vec![(0..a).collect::<Vec<_>>(), (a..b).collect(), (b..n).collect()];
        let pm = partition_metrics(&g, &clusters, 1.0).unwrap();
        let mean_sq = pm.subgraph_degrees.iter().map(|x| x * x).sum::<f64>() / 3.0;
        prop_assert!((pm.average.powi(2) - mean_sq).abs() < 1e-12);
        let total: usize = clusters.iter().map(|c| boundary_edge_count(&g, c).unwrap()).sum();
        let merged = [(0..b).collect::<Vec<_>>(), (b..n).collect()];
        let total_merged: usize = merged.iter().map(|c| boundary_edge_count(&g, c).unwrap()).sum();
        prop_assert!(total_merged <= total);
    }

    #[test]
    fn alpha_vanishes_exactly_on_component_unions(g in graph_strategy(12), cut in 1usize..11) {
        let n = g.node_count();
        let cut = cut.min(n - 1);
        let clusters = vec![(0..cut).collect::<Vec<_>>(), (cut..n).collect()];
        let pm = partition_metrics(&g, &clusters, 1.0).unwrap();
        let lab = find_components(&g);
        let respects = g.edges().iter().all(|&(i, j)| (i < cut) == (j < cut));
        let unions = (0..lab.count).all(|c| {
            let side: Vec<bool> = lab.members()[c].iter().map(|&v| v < cut).collect();
            side.iter().all(|&s| s == side[0])
        });
        prop_assert_eq!(respects, unions);
        prop_assert_eq!(pm.alpha == 0.0, unions);
    }

    #[test]
    fn relative_error_residual_in_nonsingular_regime((g, mask) in graph_and_mask(10)) {
        let s = normalized_shift(&g);
        let spec = eigendecompose(&s).unwrap();
        let n = g.node_count();
        let mut gap = f64::INFINITY;
        for i in 0..n {
            for j in 0..n {
                gap = gap.min((spec.values[i] + spec.values[j]).abs());
            }
        }
        let r = relative_error(&s, &normalized_shift(&g.drop_edges(&mask).unwrap())).unwrap();
        prop_assert!((&r.e - r.e.transpose()).abs().max() <= 1e-10);
        if gap > 1e-6 {
            prop_assert!(r.residual <= 1e-8 * spectral_norm(&s.to_dense()).max(1.0), "{}", r.residual);
        }
    }
}

#[test]
fn variance_is_independent_of_thread_count() {
    let (g, _) = synth::generate_sbm(&synth::SbmConfig {
        n: 20,
        c: 2,
        p_intra: 0.6,
        p_inter: 0.1,
        seed: 2,
    })
    .unwrap();
    let arch = Architecture {
        widths: vec![1, 4, 4],
        order: 1,
        activation: Activation::Relu,
        readout: None,
        classes: 2,
        nodes: 20,
    };
    let model = GnnModel::init(&arch, 0).unwrap();
    let x = DMatrix::from_fn(20, 1, |i, _| (i as f64).sin());
    let plan = SamplingPlan::iid(g.edge_count(), 0.5).unwrap();
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| output_variance(&model, &g, &plan, &x, 64, 9).unwrap())
    };
    assert_eq!(run(1), run(4));
}

#[test]
fn kept_fraction_concentrates() {
    let plan = SamplingPlan::iid(10_000, 0.5).unwrap();
    let kept = plan.draw_mask(42).iter().filter(|&&k| k).count() as f64 / 10_000.0;
    assert!((kept - 0.5).abs() <= 0.015, "{kept}");
}

#[test]
fn expected_kept_count_matches_monte_carlo() {
    let probs: Vec<f64> = (0..50).map(|i| 0.2 + 0.015 * i as f64).collect();
    let plan = SamplingPlan::from_probs(probs.clone()).unwrap();
    let draws = 10_000;
    let total: usize = (0..draws)
        .map(|s| plan.draw_mask(s).iter().filter(|&&k| k).count())
        .sum();
    let mean = total as f64 / draws as f64;
    let var: f64 = probs.iter().map(|p| p * (1.0 - p)).sum();
    assert!((mean - plan.expected_kept()).abs() <= 3.0 * (var / draws as f64).sqrt());
}

#[test]
fn epoch_shift_entries_track_keep_probability() {
    let g = Graph::new(4, vec![(0, 1), (1, 2), (2, 3), (0, 3)]).unwrap();
    let mut means = Vec::new();
    for &p in &[0.2, 0.5, 0.8] {
        let plan = SamplingPlan::iid(4, p).unwrap();
        let m: f64 = (0..1000)
            .map(|s| epoch_shift(&g, &plan, s).unwrap().get(0, 1))
            .sum::<f64>()
            / 1000.0;
        means.push(m);
    }
    assert!(means[0] < means[1] && means[1] < means[2], "{means:?}");
}
