//! Gradient-weighted class activation maps over GIN layers.

use ndarray::{Array1, Array2, Axis};

use crate::error::Result;
use crate::graph::EntityGraph;
use crate::nn::{backward, ActivationTrace, GinModel};

/// Grad-CAM++ weights whose denominator falls below this are zeroed.
pub const ALPHA_EPSILON: f64 = 1e-12;

/// Channel weights `w_k = mean_n grad[n, k]`.
pub fn gradcam_weights(grad: &Array2<f64>) -> Array1<f64> {
    grad.mean_axis(Axis(0)).expect("non-empty graph")
}

/// Grad-CAM++ pixel weights with the exponential-output approximation of the
/// higher derivatives (second ~ g^2, third ~ g^3):
/// `alpha[n, k] = g^2 / (2 g^2 + sum_m H[m, k] g^3)`.
pub fn gradcam_pp_alpha(activations: &Array2<f64>, grad: &Array2<f64>) -> Array2<f64> {
    let col_sums = activations.sum_axis(Axis(0));
    Array2::from_shape_fn(grad.raw_dim(), |(n, k)| {
        let g = grad[[n, k]];
        let g2 = g * g;
        let denom = 2.0 * g2 + col_sums[k] * g2 * g;
        if denom.abs() < ALPHA_EPSILON {
            0.0
        } else {
            g2 / denom
        }
    })
}

/// Channel weights `w_k = (1/|V|) sum_n alpha[n, k] relu(grad[n, k])`.
pub fn gradcam_pp_weights(activations: &Array2<f64>, grad: &Array2<f64>) -> Array1<f64> {
    let alpha = gradcam_pp_alpha(activations, grad);
    let mut weighted = grad.mapv(|g| g.max(0.0));
    weighted *= &alpha;
    weighted.mean_axis(Axis(0)).expect("non-empty graph")
}

/// Node scores `relu(sum_k w_k H[n, k])` for one layer.
pub fn layer_map(activations: &Array2<f64>, weights: &Array1<f64>) -> Array1<f64> {
    activations.dot(weights).mapv(|v| v.max(0.0))
}

fn averaged_map(
    graph: &EntityGraph,
    model: &GinModel,
    trace: &ActivationTrace,
    weights: impl Fn(&Array2<f64>, &Array2<f64>) -> Array1<f64>,
) -> Result<Vec<f64>> {
    let target = trace.predicted_class();
    let mut seed = Array1::zeros(trace.logits.len());
    seed[target] = 1.0;
    let grads = backward(graph, model, trace, &seed, false)?;
    let layers = model.num_layers();
    let mut total = Array1::zeros(graph.num_nodes());
    for l in 1..=layers {
        let h = &trace.node_states[l];
        let w = weights(h, &grads.node_states[l]);
        total += &layer_map(h, &w);
    }
    Ok((total / layers as f64).to_vec())
}

/// GraphGrad-CAM: mean over layers of the per-layer activation maps for the
/// predicted class.
pub fn graph_gradcam(
    graph: &EntityGraph,
    model: &GinModel,
    trace: &ActivationTrace,
) -> Result<Vec<f64>> {
    averaged_map(graph, model, trace, |_, g| gradcam_weights(g))
}

/// GraphGrad-CAM++: as [`graph_gradcam`] with alpha-weighted channel weights.
pub fn graph_gradcam_pp(
    graph: &EntityGraph,
    model: &GinModel,
    trace: &ActivationTrace,
) -> Result<Vec<f64>> {
    averaged_map(graph, model, trace, gradcam_pp_weights)
}
