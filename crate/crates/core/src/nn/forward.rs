use ndarray::{Array1, Array2, Axis};

use super::model::{Activation, Dense, GinModel, Mlp};
use crate::error::{Error, Result};
use crate::graph::EntityGraph;

/// Intermediate values of one GIN layer.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerTrace {
    /// Own state plus neighbour mean, the MLP input.
    pub aggregated: Array2<f64>,
    pub hidden_pre: Array2<f64>,
    pub hidden: Array2<f64>,
    pub output_pre: Array2<f64>,
}

/// Every activation of a forward pass, enough to run any backward rule.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivationTrace {
    /// `H^(0) ..= H^(L)`; `H^(0)` is the (possibly masked) input.
    pub node_states: Vec<Array2<f64>>,
    pub layers: Vec<LayerTrace>,
    pub readout: Array1<f64>,
    pub classifier_hidden_pre: Array1<f64>,
    pub classifier_hidden: Array1<f64>,
    pub logits: Array1<f64>,
}

impl ActivationTrace {
    /// Index of the largest logit; ties go to the lower class index.
    pub fn predicted_class(&self) -> usize {
        argmax(self.logits.as_slice().expect("contiguous"))
    }

    pub fn max_logit(&self) -> f64 {
        self.logits[self.predicted_class()]
    }
}

pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// `a_v = h_v + mean_{u in N(v)} h_u`, with an empty mean taken as zero.
pub(crate) fn aggregate(graph: &EntityGraph, h: &Array2<f64>) -> Array2<f64> {
    let mut out = h.clone();
    for v in 0..graph.num_nodes() {
        let nbrs = graph.neighbors(v);
        if nbrs.is_empty() {
            continue;
        }
        let scale = 1.0 / nbrs.len() as f64;
        let mut row = out.row_mut(v);
        for &u in nbrs {
            row.scaled_add(scale, &h.row(u));
        }
    }
    out
}

/// Transpose of [`aggregate`]: routes gradients from aggregated rows back to
/// the node states that fed them.
pub(crate) fn aggregate_transpose(graph: &EntityGraph, da: &Array2<f64>) -> Array2<f64> {
    let mut out = da.clone();
    for v in 0..graph.num_nodes() {
        let nbrs = graph.neighbors(v);
        if nbrs.is_empty() {
            continue;
        }
        let scale = 1.0 / nbrs.len() as f64;
        for &u in nbrs {
            out.row_mut(u).scaled_add(scale, &da.row(v));
        }
    }
    out
}

fn dense_rows(d: &Dense, x: &Array2<f64>) -> Array2<f64> {
    x.dot(&d.weight) + &d.bias
}

fn activate(a: Activation, x: &Array2<f64>) -> Array2<f64> {
    x.mapv(|v| a.apply(v))
}

fn mlp_vector(m: &Mlp, x: &Array1<f64>) -> (Array1<f64>, Array1<f64>, Array1<f64>) {
    let hidden_pre = x.dot(&m.first.weight) + &m.first.bias;
    let hidden = hidden_pre.mapv(|v| m.hidden_activation.apply(v));
    let out =
        (hidden.dot(&m.second.weight) + &m.second.bias).mapv(|v| m.output_activation.apply(v));
    (hidden_pre, hidden, out)
}

/// Forward pass of `model` on `graph`.
pub fn gin_forward(graph: &EntityGraph, model: &GinModel) -> Result<ActivationTrace> {
    gin_forward_masked(graph, model, None)
}

/// Forward pass where node feature row `n` is multiplied by `mask[n]` before
/// the first layer.
pub fn gin_forward_masked(
    graph: &EntityGraph,
    model: &GinModel,
    mask: Option<&[f64]>,
) -> Result<ActivationTrace> {
    let mut h0 = graph.feature_matrix()?;
    if h0.ncols() != model.architecture.input_dim {
        return Err(Error::Architecture(format!(
            "graph has {} features per node, model expects {}",
            h0.ncols(),
            model.architecture.input_dim
        )));
    }
    if let Some(mask) = mask {
        if mask.len() != graph.num_nodes() {
            return Err(Error::shape(
                format!("mask of length {}", graph.num_nodes()),
                mask.len(),
            ));
        }
        for (mut row, &m) in h0.axis_iter_mut(Axis(0)).zip(mask) {
            row *= m;
        }
    }
    Ok(forward_from_input(graph, model, h0))
}

/// Logits obtained by resuming the forward pass from node states `h` at
/// layer `layer` (`0` is the input, `L` the last GIN output).
pub fn logits_from_layer(
    graph: &EntityGraph,
    model: &GinModel,
    layer: usize,
    h: &Array2<f64>,
) -> Result<Array1<f64>> {
    if layer > model.num_layers() {
        return Err(Error::InvalidInput(format!(
            "layer {layer} outside 0..={}",
            model.num_layers()
        )));
    }
    let expected = (graph.num_nodes(), model.state_dim(layer));
    if h.dim() != expected {
        return Err(Error::shape(
            format!("{expected:?}"),
            format!("{:?}", h.dim()),
        ));
    }
    let mut h = h.clone();
    for mlp in &model.layers[layer..] {
        let a = aggregate(graph, &h);
        let hidden = activate(mlp.hidden_activation, &dense_rows(&mlp.first, &a));
        h = activate(mlp.output_activation, &dense_rows(&mlp.second, &hidden));
    }
    let readout = h.mean_axis(Axis(0)).expect("at least one node");
    Ok(mlp_vector(&model.classifier, &readout).2)
}

pub(crate) fn forward_from_input(
    graph: &EntityGraph,
    model: &GinModel,
    h0: Array2<f64>,
) -> ActivationTrace {
    let mut node_states = Vec::with_capacity(model.num_layers() + 1);
    let mut layers = Vec::with_capacity(model.num_layers());
    node_states.push(h0);
    for mlp in &model.layers {
        let h = node_states.last().expect("input state");
        let aggregated = aggregate(graph, h);
        let hidden_pre = dense_rows(&mlp.first, &aggregated);
        let hidden = activate(mlp.hidden_activation, &hidden_pre);
        let output_pre = dense_rows(&mlp.second, &hidden);
        node_states.push(activate(mlp.output_activation, &output_pre));
        layers.push(LayerTrace {
            aggregated,
            hidden_pre,
            hidden,
            output_pre,
        });
    }
    let last = node_states.last().expect("final state");
    let readout = last.mean_axis(Axis(0)).expect("at least one node");
    let (classifier_hidden_pre, classifier_hidden, logits) =
        mlp_vector(&model.classifier, &readout);
    ActivationTrace {
        node_states,
        layers,
        readout,
        classifier_hidden_pre,
        classifier_hidden,
        logits,
    }
}
