mod common;

use common::*;
use graphxq::explain::{GnnExplainerConfig, MaskObjective};
use graphxq::graph::{EntityGraph, NodeRecord};
use graphxq::nn::loss::cross_entropy;
use graphxq::nn::{
    backward, gin_forward, gin_forward_masked, grad_logit_wrt_layer, grad_loss_wrt_mask,
    graph_loss_and_grad, logits_from_layer, train, GinModel, TrainConfig,
};
use proptest::prelude::*;
use rand::Rng;

const EPS: f64 = 1e-5;

fn ce(graph: &EntityGraph, model: &GinModel, target: usize) -> f64 {
    cross_entropy(&gin_forward(graph, model).unwrap().logits, target)
        .unwrap()
        .0
}

#[test]
fn parameter_gradients_match_central_differences() {
    for seed in 0..5 {
        let mut r = rng(seed);
        let g = random_graph(&mut r, 6, 4, 2.0);
        let m = model(4, 8, 3, 3, seed);
        let (_, grad) = graph_loss_and_grad(&g, &m, 1).unwrap();
        for (t, analytic) in grad.param_slices().iter().enumerate() {
            let mut numeric = vec![0.0; analytic.len()];
            for i in 0..analytic.len() {
                let mut plus = m.clone();
                plus.param_slices_mut()[t][i] += EPS;
                let mut minus = m.clone();
                minus.param_slices_mut()[t][i] -= EPS;
                numeric[i] = (ce(&g, &plus, 1) - ce(&g, &minus, 1)) / (2.0 * EPS);
            }
            let err = relative_error(analytic, &numeric);
            assert!(err < 1e-5, "seed {seed} tensor {t}: {err}");
        }
    }
}

#[test]
fn layer_gradients_match_central_differences() {
    for seed in 0..5 {
        let mut r = rng(100 + seed);
        let g = random_graph(&mut r, 5, 3, 2.0);
        let m = model(3, 6, 3, 2, seed);
        let trace = gin_forward(&g, &m).unwrap();
        let target = trace.predicted_class();
        for l in 1..=3 {
            let analytic = grad_logit_wrt_layer(&g, &m, &trace, target, l).unwrap();
            let h = &trace.node_states[l];
            let mut numeric = h.clone();
            for ((n, k), out) in numeric.indexed_iter_mut() {
                let mut hp = h.clone();
                hp[[n, k]] += EPS;
                let mut hm = h.clone();
                hm[[n, k]] -= EPS;
                *out = (logits_from_layer(&g, &m, l, &hp).unwrap()[target]
                    - logits_from_layer(&g, &m, l, &hm).unwrap()[target])
                    / (2.0 * EPS);
            }
            let err = relative_error(analytic.as_slice().unwrap(), numeric.as_slice().unwrap());
            assert!(err < 1e-5, "seed {seed} layer {l}: {err}");
        }
    }
}

#[test]
fn mask_gradients_match_central_differences() {
    for seed in 0..5 {
        let mut r = rng(200 + seed);
        let g = random_graph(&mut r, 6, 3, 2.0);
        let m = model(3, 8, 3, 3, seed);
        let mask: Vec<f64> = (0..6).map(|_| r.random_range(0.1..1.0)).collect();
        let loss = |y: &ndarray::Array1<f64>| cross_entropy(y, 2).unwrap();
        let (_, analytic, _) = grad_loss_wrt_mask(&g, &m, &mask, loss).unwrap();
        let numeric: Vec<f64> = (0..6)
            .map(|i| {
                let mut p = mask.clone();
                p[i] += EPS;
                let mut q = mask.clone();
                q[i] -= EPS;
                let f = |mk: &[f64]| loss(&gin_forward_masked(&g, &m, Some(mk)).unwrap().logits).0;
                (f(&p) - f(&q)) / (2.0 * EPS)
            })
            .collect();
        assert!(relative_error(&analytic, &numeric) < 1e-5);

        let obj = MaskObjective::new(&g, &m, GnnExplainerConfig::default()).unwrap();
        let raw: Vec<f64> = (0..6).map(|_| r.random_range(-2.0..2.0)).collect();
        let (_, analytic, _) = obj.evaluate(&raw).unwrap();
        let numeric: Vec<f64> = (0..6)
            .map(|i| {
                let mut p = raw.clone();
                p[i] += EPS;
                let mut q = raw.clone();
                q[i] -= EPS;
                (obj.evaluate(&p).unwrap().0.total - obj.evaluate(&q).unwrap().0.total)
                    / (2.0 * EPS)
            })
            .collect();
        let err = relative_error(&analytic, &numeric);
        assert!(err < 1e-5, "seed {seed}: {err}");
    }
}

#[test]
fn forward_is_deterministic() {
    let mut r = rng(1);
    let g = random_graph(&mut r, 12, 5, 3.0);
    let m = model(5, 64, 3, 3, 4);
    assert_eq!(gin_forward(&g, &m).unwrap(), gin_forward(&g, &m).unwrap());
}

#[test]
fn isolating_a_node_keeps_its_first_layer_self_term() {
    let mut r = rng(2);
    let g = random_graph(&mut r, 8, 3, 4.0);
    let m = model(3, 16, 3, 2, 0);
    let v = (0..8).find(|&v| !g.neighbors(v).is_empty()).unwrap();
    let iso = g.isolate(v);
    let a = gin_forward(&iso, &m).unwrap();
    assert_eq!(
        a.layers[0].aggregated.row(v),
        g.feature_matrix().unwrap().row(v)
    );
    let untouched: Vec<usize> = (0..8)
        .filter(|&u| u != v && !g.neighbors(v).contains(&u))
        .collect();
    let b = gin_forward(&g, &m).unwrap();
    for u in untouched {
        assert_eq!(a.layers[0].aggregated.row(u), b.layers[0].aggregated.row(u));
    }
}

#[test]
fn backward_without_params_skips_them() {
    let mut r = rng(3);
    let g = random_graph(&mut r, 4, 2, 2.0);
    let m = model(2, 4, 2, 2, 0);
    let t = gin_forward(&g, &m).unwrap();
    let d = ndarray::Array1::from(vec![1.0, 0.0]);
    assert!(backward(&g, &m, &t, &d, false).unwrap().params.is_none());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]
    #[test]
    fn logits_invariant_under_relabeling(seed in 0u64..10_000, n in 1usize..15) {
        let mut r = rng(seed);
        let g = random_graph(&mut r, n, 4, 3.0);
        let m = model(4, 64, 3, 3, seed);
        let perm = permutation(&mut r, n);
        let a = gin_forward(&g, &m).unwrap().logits;
        let b = gin_forward(&g.permuted(&perm).unwrap(), &m).unwrap().logits;
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() <= 1e-9);
        }
    }
}

fn repeated_graph_dataset() -> Vec<EntityGraph> {
    let mut r = rng(9);
    let mut g = random_graph(&mut r, 10, 4, 3.0);
    g.label = Some(1);
    vec![g; 8]
}

#[test]
fn training_on_a_repeated_graph_reduces_loss() {
    let data = repeated_graph_dataset();
    let init = model(4, 16, 3, 2, 5);
    let cfg = TrainConfig {
        epochs: 10,
        learning_rate: 1e-3,
        batch_size: 4,
        seed: 0,
    };
    let out = train(&data, &data, init, &cfg).unwrap();
    let losses: Vec<f64> = out.history.iter().map(|h| h.train_loss).collect();
    assert!(losses.windows(2).all(|w| w[1] < w[0]), "{losses:?}");
}

#[test]
fn training_is_bitwise_reproducible() {
    let data = repeated_graph_dataset();
    let cfg = TrainConfig {
        epochs: 3,
        batch_size: 3,
        ..TrainConfig::default()
    };
    let a = train(&data, &data, model(4, 8, 3, 2, 1), &cfg)
        .unwrap()
        .model;
    let b = train(&data, &data, model(4, 8, 3, 2, 1), &cfg)
        .unwrap()
        .model;
    assert_eq!(a.to_checkpoint(), b.to_checkpoint());
}

/// Two classes of random graphs; class 1 adds 0.5 to feature 0 of every node.
fn offset_dataset(n: usize, seed: u64) -> Vec<EntityGraph> {
    let mut r = rng(seed);
    (0..n)
        .map(|i| {
            let label = i % 2;
            let size = r.random_range(6..14);
            let g = random_graph(&mut r, size, 3, 3.0);
            let nodes: Vec<NodeRecord> = g
                .nodes()
                .iter()
                .map(|nd| {
                    let mut nd = nd.clone();
                    nd.features[0] += 0.5 * label as f64;
                    nd
                })
                .collect();
            EntityGraph::new(nodes, g.edges().iter().copied(), Some(label)).unwrap()
        })
        .collect()
}

#[test]
fn planted_offset_is_learned_within_fifty_epochs() {
    let train_set = offset_dataset(120, 21);
    let val = offset_dataset(60, 22);
    let cfg = TrainConfig {
        epochs: 50,
        seed: 3,
        ..TrainConfig::default()
    };
    let out = train(&train_set, &val, model(3, 64, 3, 2, 8), &cfg).unwrap();
    let best = out.history[out.best_epoch].val_accuracy;
    assert!(best >= 0.95, "best val accuracy {best}");
}
