//! Reverse-mode gradients of a scalar function of the logits.

use ndarray::{Array1, Array2, Axis};

use super::forward::{aggregate_transpose, gin_forward_masked, ActivationTrace};
use super::model::{Activation, Dense, GinModel, Mlp};
use crate::error::{Error, Result};
use crate::graph::EntityGraph;

/// Output of [`backward`].
#[derive(Debug, Clone)]
pub struct Gradients {
    /// `d/dH^(l)` for `l = 0..=L`, each counting only the paths through
    /// layers above `l`.
    pub node_states: Vec<Array2<f64>>,
    /// Parameter gradients laid out like the model; `None` when not requested.
    pub params: Option<GinModel>,
}

fn act_grad(a: Activation, pre: &Array2<f64>, upstream: &Array2<f64>) -> Array2<f64> {
    let mut out = upstream.clone();
    out.zip_mut_with(pre, |g, &z| *g *= a.derivative(z));
    out
}

fn accumulate(d: &mut Dense, input: &Array2<f64>, dout: &Array2<f64>) {
    d.weight += &input.t().dot(dout);
    d.bias += &dout.sum_axis(Axis(0));
}

/// Back-propagates `d_logits` (the gradient of some scalar w.r.t. the logits)
/// through the classifier, readout and every GIN layer.
pub fn backward(
    graph: &EntityGraph,
    model: &GinModel,
    trace: &ActivationTrace,
    d_logits: &Array1<f64>,
    with_params: bool,
) -> Result<Gradients> {
    let n = graph.num_nodes();
    if d_logits.len() != model.architecture.num_classes {
        return Err(Error::shape(model.architecture.num_classes, d_logits.len()));
    }
    if trace.node_states.len() != model.num_layers() + 1 || trace.node_states[0].nrows() != n {
        return Err(Error::Architecture(
            "trace does not belong to this graph/model".into(),
        ));
    }
    let mut grads = with_params.then(|| model.zeros_like());

    // classifier head on the readout vector, treated as a 1-row matrix
    let Mlp {
        first,
        second,
        hidden_activation,
        ..
    } = &model.classifier;
    let row = |v: &Array1<f64>| v.view().insert_axis(Axis(0)).to_owned();
    let dz2 = row(d_logits);
    let dh = dz2.dot(&second.weight.t());
    let dz1 = act_grad(*hidden_activation, &row(&trace.classifier_hidden_pre), &dh);
    let dr = dz1.dot(&first.weight.t());
    if let Some(g) = grads.as_mut() {
        accumulate(
            &mut g.classifier.second,
            &row(&trace.classifier_hidden),
            &dz2,
        );
        accumulate(&mut g.classifier.first, &row(&trace.readout), &dz1);
    }

    // mean readout
    let dr = dr.row(0).to_owned() / n as f64;
    let mut d_state = Array2::from_shape_fn((n, dr.len()), |(_, k)| dr[k]);

    let mut node_states = vec![Array2::zeros((0, 0)); model.num_layers() + 1];
    for (l, (mlp, lt)) in model.layers.iter().zip(&trace.layers).enumerate().rev() {
        let dz2 = act_grad(mlp.output_activation, &lt.output_pre, &d_state);
        let dhid = dz2.dot(&mlp.second.weight.t());
        let dz1 = act_grad(mlp.hidden_activation, &lt.hidden_pre, &dhid);
        let dagg = dz1.dot(&mlp.first.weight.t());
        if let Some(g) = grads.as_mut() {
            accumulate(&mut g.layers[l].second, &lt.hidden, &dz2);
            accumulate(&mut g.layers[l].first, &lt.aggregated, &dz1);
        }
        let below = aggregate_transpose(graph, &dagg);
        node_states[l + 1] = std::mem::replace(&mut d_state, below);
    }
    node_states[0] = d_state;
    Ok(Gradients {
        node_states,
        params: grads,
    })
}

/// `d logit[target] / d H^(l)` for `l` in `1..=L`.
pub fn grad_logit_wrt_layer(
    graph: &EntityGraph,
    model: &GinModel,
    trace: &ActivationTrace,
    target_class: usize,
    layer: usize,
) -> Result<Array2<f64>> {
    if layer == 0 || layer > model.num_layers() {
        return Err(Error::InvalidInput(format!(
            "layer {layer} outside 1..={}",
            model.num_layers()
        )));
    }
    if target_class >= model.architecture.num_classes {
        return Err(Error::InvalidInput(format!(
            "class {target_class} out of range"
        )));
    }
    let mut seed = Array1::zeros(model.architecture.num_classes);
    seed[target_class] = 1.0;
    let mut g = backward(graph, model, trace, &seed, false)?;
    Ok(std::mem::take(&mut g.node_states[layer]))
}

/// Value and mask gradient of `loss(logits)` under a node mask applied to
/// the input feature rows.
///
/// `loss` returns the scalar loss and its gradient w.r.t. the logits.
pub fn grad_loss_wrt_mask<F>(
    graph: &EntityGraph,
    model: &GinModel,
    mask: &[f64],
    loss: F,
) -> Result<(f64, Vec<f64>, ActivationTrace)>
where
    F: FnOnce(&Array1<f64>) -> (f64, Array1<f64>),
{
    let trace = gin_forward_masked(graph, model, Some(mask))?;
    let (value, d_logits) = loss(&trace.logits);
    let g = backward(graph, model, &trace, &d_logits, false)?;
    let h0 = graph.feature_matrix()?;
    // masked input row n is mask[n] * h0[n], so d/dmask[n] = <dH0[n], h0[n]>
    let d_mask = g.node_states[0]
        .axis_iter(Axis(0))
        .zip(h0.axis_iter(Axis(0)))
        .map(|(d, x)| d.dot(&x))
        .collect();
    Ok((value, d_mask, trace))
}
