#![allow(dead_code)]

use graphxq::graph::{EntityGraph, NodeRecord};
use graphxq::nn::{GinArchitecture, GinModel};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random graph with features in `[0, 1)` and roughly `degree` edges per node.
pub fn random_graph(rng: &mut ChaCha8Rng, n: usize, dim: usize, degree: f64) -> EntityGraph {
    let nodes = (0..n)
        .map(|_| {
            NodeRecord::new(
                [rng.random_range(0.0..200.0), rng.random_range(0.0..200.0)],
                (0..dim).map(|_| rng.random_range(0.0..1.0)).collect(),
            )
        })
        .collect();
    let p = (degree / n.max(2) as f64).min(1.0);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.random_bool(p) {
                edges.push((u, v));
            }
        }
    }
    EntityGraph::new(nodes, edges, Some(0)).unwrap()
}

pub fn model(input: usize, hidden: usize, layers: usize, classes: usize, seed: u64) -> GinModel {
    let mut arch = GinArchitecture::new(input, classes);
    arch.hidden_dim = hidden;
    arch.num_layers = layers;
    GinModel::init(arch, seed).unwrap()
}

pub fn bias_free(mut m: GinModel) -> GinModel {
    for d in m.dense_layers_mut() {
        d.bias.fill(0.0);
    }
    m
}

pub fn permutation(rng: &mut ChaCha8Rng, n: usize) -> Vec<usize> {
    let mut p: Vec<usize> = (0..n).collect();
    p.shuffle(rng);
    p
}

/// `||a - b|| / max(||a||, ||b||)`, or the absolute norm when both are tiny.
pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let scale = norm(a).max(norm(b));
    if scale < 1e-12 {
        norm(&diff)
    } else {
        norm(&diff) / scale
    }
}
