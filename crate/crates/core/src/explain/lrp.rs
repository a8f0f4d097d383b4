//! Layer-wise relevance propagation through the GIN model.
//!
//! Every dense sub-layer uses `R_i = sum_j f_i |w_ij| / (sum_k f_k |w_kj|) R_j`.
//! The readout and the aggregation steps are linear maps with non-negative
//! weights (`1/|V|` for the mean readout; `1` on the diagonal and `1/|N(i)|`
//! on edges for the aggregation) and go through the same rule. Biases take
//! no relevance.

use ndarray::{Array1, Array2, Axis};

use crate::error::{Error, Result};
use crate::graph::EntityGraph;
use crate::nn::{aggregate_transpose, ActivationTrace, Dense, GinModel};

/// Denominators with magnitude below this pass no relevance.
pub const LRP_EPSILON: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct LrpResult {
    /// Summed relevance per input node.
    pub node_relevance: Vec<f64>,
    /// Total relevance after each propagation step, starting with the
    /// output logit and ending at the input features.
    pub layer_totals: Vec<f64>,
}

fn ratio(r: f64, z: f64) -> f64 {
    if z.abs() < LRP_EPSILON {
        0.0
    } else {
        r / z
    }
}

/// Relevance of a dense layer's inputs given the relevance of its outputs.
/// `input` and `r_out` hold one row per sample.
fn dense_rule(input: &Array2<f64>, dense: &Dense, r_out: &Array2<f64>) -> Array2<f64> {
    let w = dense.weight.mapv(f64::abs);
    let z = input.dot(&w);
    let mut s = r_out.clone();
    s.zip_mut_with(&z, |r, &z| *r = ratio(*r, z));
    input * &s.dot(&w.t())
}

fn aggregation_rule(
    graph: &EntityGraph,
    h: &Array2<f64>,
    aggregated: &Array2<f64>,
    r_out: &Array2<f64>,
) -> Array2<f64> {
    let mut s = r_out.clone();
    s.zip_mut_with(aggregated, |r, &z| *r = ratio(*r, z));
    // sum_i w_ij s_i is the transpose of the aggregation operator applied to s
    h * &aggregate_transpose(graph, &s)
}

fn readout_rule(h: &Array2<f64>, r_readout: &Array1<f64>) -> Array2<f64> {
    let col_sums = h.sum_axis(Axis(0));
    let s = Array1::from_shape_fn(col_sums.len(), |k| ratio(r_readout[k], col_sums[k]));
    h * &s
}

fn row(v: &Array1<f64>) -> Array2<f64> {
    v.view().insert_axis(Axis(0)).to_owned()
}

/// Propagates the relevance of `logit[target]` back to the input nodes.
pub fn lrp_relevance(
    graph: &EntityGraph,
    model: &GinModel,
    trace: &ActivationTrace,
    target: usize,
) -> Result<LrpResult> {
    if target >= trace.logits.len() {
        return Err(Error::InvalidInput(format!("class {target} out of range")));
    }
    if trace.node_states[0].nrows() != graph.num_nodes() {
        return Err(Error::Architecture(
            "trace does not belong to this graph".into(),
        ));
    }
    let mut totals = Vec::new();
    let mut r_logits = Array2::zeros((1, trace.logits.len()));
    r_logits[[0, target]] = trace.logits[target];
    totals.push(r_logits.sum());

    let r_hidden = dense_rule(
        &row(&trace.classifier_hidden),
        &model.classifier.second,
        &r_logits,
    );
    totals.push(r_hidden.sum());
    let r_readout = dense_rule(&row(&trace.readout), &model.classifier.first, &r_hidden);
    totals.push(r_readout.sum());

    let last = trace.node_states.len() - 1;
    let mut r_state = readout_rule(&trace.node_states[last], &r_readout.row(0).to_owned());
    totals.push(r_state.sum());

    for (l, (mlp, lt)) in model.layers.iter().zip(&trace.layers).enumerate().rev() {
        let r_hid = dense_rule(&lt.hidden, &mlp.second, &r_state);
        totals.push(r_hid.sum());
        let r_agg = dense_rule(&lt.aggregated, &mlp.first, &r_hid);
        totals.push(r_agg.sum());
        r_state = aggregation_rule(graph, &trace.node_states[l], &lt.aggregated, &r_agg);
        totals.push(r_state.sum());
    }
    Ok(LrpResult {
        node_relevance: r_state.sum_axis(Axis(1)).to_vec(),
        layer_totals: totals,
    })
}

/// GraphLRP importance: relevance of the predicted-class logit.
pub fn graph_lrp(
    graph: &EntityGraph,
    model: &GinModel,
    trace: &ActivationTrace,
) -> Result<Vec<f64>> {
    Ok(lrp_relevance(graph, model, trace, trace.predicted_class())?.node_relevance)
}
