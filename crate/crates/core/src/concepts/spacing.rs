use crate::graph::{nearest_neighbors, EntityGraph};

use super::{MEAN_SPACING, STD_SPACING};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SpacingStats {
    pub mean: f64,
    pub std: f64,
}

/// Mean and population standard deviation of the distances from each point
/// to its `k_nn` nearest other points. `k_nn` is clamped to `n - 1`; a lone
/// point gets zeros and a warning.
pub fn spacing_attributes(positions: &[[f64; 2]], k_nn: usize) -> (Vec<SpacingStats>, Vec<String>) {
    let n = positions.len();
    if n < 2 || k_nn == 0 {
        let warn = format!("spacing undefined for {n} node(s) with k_nn = {k_nn}; set to 0");
        return (vec![SpacingStats::default(); n], vec![warn]);
    }
    let k = k_nn.min(n - 1);
    let stats = (0..n)
        .map(|i| {
            let d: Vec<f64> = nearest_neighbors(positions, i, k)
                .into_iter()
                .map(|(_, d)| d)
                .collect();
            let mean = d.iter().sum::<f64>() / k as f64;
            let var = d.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / k as f64;
            SpacingStats {
                mean,
                std: var.sqrt(),
            }
        })
        .collect();
    (stats, Vec::new())
}

/// Writes `mean_spacing` / `std_spacing` into every node, using pixel
/// positions.
pub fn assign_spacing(graph: &mut EntityGraph, k_nn: usize) -> Vec<String> {
    let (stats, warnings) = spacing_attributes(&graph.positions(), k_nn);
    for (node, s) in graph.nodes_mut().iter_mut().zip(stats) {
        node.attributes.insert(MEAN_SPACING.into(), s.mean);
        node.attributes.insert(STD_SPACING.into(), s.std);
    }
    warnings
}
