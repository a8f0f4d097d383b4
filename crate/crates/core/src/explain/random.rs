use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Uniform `[0, 1)` importance per node, a pure function of
/// `(seed, graph_id, num_nodes)`.
pub fn random_explainer(num_nodes: usize, seed: u64, graph_id: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(graph_id);
    (0..num_nodes).map(|_| rng.random::<f64>()).collect()
}
