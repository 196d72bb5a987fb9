//! Independent reference implementations checked against the library.

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tadropedge::components::boundary_edge_count;
use tadropedge::sampler::{build_plan, gamma_from_distribution, SamplingStrategy, StrategyKind};
use tadropedge::spectral::eigendecompose_dense;
use tadropedge::synth::{generate_sbm, SbmConfig};
use tadropedge::weights::{diag_form_weights, expansion_weights};
use tadropedge::*;

fn erdos_renyi(n: usize, p: f64, rng: &mut ChaCha8Rng) -> Graph {
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.random::<f64>() < p {
                edges.push((i, j));
            }
        }
    }
    Graph::new(n, edges).unwrap()
}

fn bfs_labels(g: &Graph) -> Vec<usize> {
    let adj = g.neighbors();
    let mut label = vec![usize::MAX; g.node_count()];
    let mut next = 0;
    for start in 0..g.node_count() {
        if label[start] != usize::MAX {
            continue;
        }
        let mut queue = VecDeque::from([start]);
        label[start] = next;
        while let Some(v) = queue.pop_front() {
            for &w in &adj[v] {
                if label[w] == usize::MAX {
                    label[w] = next;
                    queue.push_back(w);
                }
            }
        }
        next += 1;
    }
    label
}

#[test]
fn union_find_matches_bfs_on_random_graphs() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for trial in 0..1000 {
        let n = rng.random_range(1..=64);
        let p = rng.random::<f64>().powi(3);
        let g = erdos_renyi(n, p, &mut rng);
        let lab = find_components(&g);
        assert_eq!(lab.label, bfs_labels(&g), "trial {trial}");
        assert_eq!(lab.sizes.iter().sum::<usize>(), n);
    }
}

/// Cyclic Jacobi rotations; slow but independent of the library solver.
fn jacobi_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let n = m.nrows();
    let mut a = m.clone();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .filter(|(i, j)| i != j)
            .map(|(i, j)| a[(i, j)].powi(2))
            .sum();
        if off < 1e-24 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[(p, q)].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * a[(p, q)]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut vals: Vec<f64> = (0..n).map(|i| a[(i, i)]).collect();
    vals.sort_by(f64::total_cmp);
    vals
}

#[test]
fn eigensolver_matches_jacobi() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..20 {
        let n = rng.random_range(2..=12);
        let r = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        let m = &r + r.transpose();
        let spec = eigendecompose_dense(&m).unwrap();
        let oracle = jacobi_eigenvalues(&m);
        for (a, b) in spec.values.iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
        let v = &spec.vectors;
        assert!((v.tr_mul(v) - DMatrix::identity(n, n)).abs().max() < 1e-8);
        let recon = spec.reconstruct();
        assert!((recon - &m).abs().max() < 1e-8);
    }
}

#[test]
fn laplacian_zero_eigenvalues_count_components() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..50 {
        let g = erdos_renyi(rng.random_range(2..30), 0.08, &mut rng);
        let spec = eigendecompose(&laplacian(&g)).unwrap();
        assert!(spec.values[0] >= -1e-10);
        let zeros = spec.values.iter().filter(|&&v| v < 1e-8).count();
        assert_eq!(zeros, find_components(&g).count);
    }
}

#[test]
fn incidence_factors_laplacian() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..20 {
        let g = erdos_renyi(8, 0.4, &mut rng);
        let d = incidence(&g).to_dense();
        let l = laplacian(&g).to_dense();
        assert!((&d * d.transpose() - l).abs().max() <= 1e-12);
    }
}

#[test]
fn normalized_shift_of_triangle() {
    let g = Graph::new(3, vec![(0, 1), (1, 2), (0, 2)]).unwrap();
    let s = normalized_shift(&g).to_dense();
    assert!(s.iter().all(|&v| (v - 1.0 / 3.0).abs() < 1e-15));
}

#[test]
fn boundary_degree_matches_enumeration() {
    let (g, labels) = generate_sbm(&SbmConfig {
        n: 40,
        c: 4,
        p_intra: 0.5,
        p_inter: 0.1,
        seed: 4,
    })
    .unwrap();
    for c in 0..4 {
        let cluster: Vec<usize> = (0..40).filter(|&v| labels[v] == c).collect();
        let brute = g
            .edges()
            .iter()
            .filter(|&&(i, j)| (labels[i] == c) != (labels[j] == c))
            .count();
        assert_eq!(boundary_edge_count(&g, &cluster).unwrap(), brute);
        let beta = relative_subgraph_degree(&g, &cluster).unwrap();
        assert!((beta - brute as f64 / 10f64.sqrt()).abs() < 1e-12);
    }
}

#[test]
fn barbell_alpha_by_hand() {
    let mut edges = Vec::new();
    for b in [0, 5] {
        for i in 0..5 {
            for j in i + 1..5 {
                edges.push((b + i, b + j));
            }
        }
    }
    edges.push((4, 5));
    let g = Graph::new(10, edges).unwrap();
    let spec = eigendecompose(&laplacian(&g)).unwrap();
    let lambda2 = spec.values[2];
    let clusters = vec![(0..5).collect::<Vec<_>>(), (5..10).collect()];
    let pm = partition_metrics(&g, &clusters, lambda2).unwrap();
    // each side has one boundary edge: beta = 1/sqrt(5), rms = 1/sqrt(5)
    let beta_bar = 1.0 / 5f64.sqrt();
    assert!((pm.average - beta_bar).abs() < 1e-12);
    assert!((pm.alpha - beta_bar * 2.0 / lambda2).abs() < 1e-12);
}

#[test]
fn sbm_eigengap_recovers_planted_count() {
    let (g, _) = generate_sbm(&SbmConfig {
        n: 60,
        c: 4,
        p_intra: 0.7,
        p_inter: 0.02,
        seed: 1,
    })
    .unwrap();
    let spec = eigendecompose(&laplacian(&g)).unwrap();
    assert_eq!(select_q(&spec, 4, 2).unwrap(), 4);
}

#[test]
fn weight_forms_agree_on_random_graphs() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..30 {
        let g = erdos_renyi(rng.random_range(4..20), 0.3, &mut rng);
        let spec = eigendecompose(&laplacian(&g)).unwrap();
        let q = rng.random_range(1..g.node_count());
        let v = spec.leading(q);
        for (a, b) in expansion_weights(&g, &v)
            .iter()
            .zip(diag_form_weights(&g, &v))
        {
            assert!((a - b).abs() < 1e-8);
        }
    }
}

#[test]
fn cutoff_at_decile_keeps_top_edges() {
    let (g, _) = generate_sbm(&SbmConfig {
        n: 50,
        c: 5,
        p_intra: 0.6,
        p_inter: 0.2,
        seed: 0,
    })
    .unwrap();
    let table = aggregate_resistance_weights(&g, 5, 2).unwrap();
    let gamma = gamma_from_distribution(&table, 0.9).unwrap();
    let plan = build_plan(
        &table,
        SamplingStrategy::new(StrategyKind::Cutoff, 0.3, gamma).unwrap(),
    )
    .unwrap();
    let mut sorted = table.weights.clone();
    sorted.sort_by(f64::total_cmp);
    for (w, p) in table.weights.iter().zip(&plan.probs) {
        let expected = if *w < gamma { 0.3 } else { 1.0 };
        assert_eq!(*p, expected);
    }
    let kept_full = plan.probs.iter().filter(|&&p| p == 1.0).count();
    let above = sorted.iter().filter(|&&w| w >= gamma).count();
    assert_eq!(kept_full, above);
    assert!(above as f64 <= 0.1 * sorted.len() as f64 + 1.0);
}

#[test]
fn gft_preserves_norm() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let g = erdos_renyi(15, 0.3, &mut rng);
    let spec = eigendecompose(&normalized_shift(&g)).unwrap();
    let x = DMatrix::from_fn(15, 2, |_, _| rng.random_range(-1.0..1.0));
    let x_hat = spectral::gft(&spec, &x).unwrap();
    assert!((x_hat.norm() - x.norm()).abs() <= 1e-10 * x.norm());
    let back = spectral::inverse_gft(&spec, &x_hat).unwrap();
    assert!((back - &x).norm() <= 1e-10 * x.norm());
}

#[test]
fn random_symmetric_reconstruction() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let r = DMatrix::from_fn(10, 10, |_, _| rng.random_range(-1.0..1.0));
    let m = &r + r.transpose();
    let spec = eigendecompose_dense(&m).unwrap();
    let lam = DMatrix::from_diagonal(&DVector::from_iterator(10, spec.values.iter().copied()));
    let recon = &spec.vectors * lam * spec.vectors.transpose();
    assert!((recon - m).abs().max() <= 1e-8);
}
