//! Post-hoc node-importance explainers and per-graph importance scaling.

mod gnn_explainer;
mod gradcam;
mod importance;
mod lrp;
mod random;

use serde::{Deserialize, Serialize};

pub use gnn_explainer::{
    gnn_explainer, GnnExplainerConfig, GnnExplanation, MaskLoss, MaskObjective,
};
pub use gradcam::{
    gradcam_pp_alpha, gradcam_pp_weights, gradcam_weights, graph_gradcam, graph_gradcam_pp,
    layer_map,
};
pub use importance::{normalize_importance, ExplainerKind, ImportanceMap};
pub use lrp::{graph_lrp, lrp_relevance, LrpResult, LRP_EPSILON};
pub use random::random_explainer;

use crate::error::Result;
use crate::graph::EntityGraph;
use crate::nn::{gin_forward, GinModel};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct ExplainOptions {
    pub gnn_explainer: GnnExplainerConfig,
    /// Seed of the random baseline.
    pub seed: u64,
}

/// One explanation record, as persisted in explanation files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Explanation {
    pub graph_id: usize,
    pub explainer: ExplainerKind,
    /// Per-graph min-max normalised importance.
    pub importance: Vec<f64>,
    pub raw: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
}

/// Raw importance map of `kind` for one graph.
pub fn raw_importance(
    kind: ExplainerKind,
    graph: &EntityGraph,
    model: &GinModel,
    graph_id: usize,
    options: &ExplainOptions,
) -> Result<(ImportanceMap, Option<usize>)> {
    let mut steps = None;
    let values = match kind {
        ExplainerKind::Random => random_explainer(graph.num_nodes(), options.seed, graph_id as u64),
        ExplainerKind::GnnExplainer => {
            let e = gnn_explainer(graph, model, &options.gnn_explainer)?;
            steps = Some(e.steps);
            e.mask
        }
        _ => {
            let trace = gin_forward(graph, model)?;
            match kind {
                ExplainerKind::GraphLrp => graph_lrp(graph, model, &trace)?,
                ExplainerKind::GraphGradCam => graph_gradcam(graph, model, &trace)?,
                ExplainerKind::GraphGradCamPp => graph_gradcam_pp(graph, model, &trace)?,
                ExplainerKind::Random | ExplainerKind::GnnExplainer => unreachable!(),
            }
        }
    };
    Ok((ImportanceMap::raw(kind, values), steps))
}

/// Runs `kind` on one graph and normalises the result.
pub fn explain(
    kind: ExplainerKind,
    graph: &EntityGraph,
    model: &GinModel,
    graph_id: usize,
    options: &ExplainOptions,
) -> Result<Explanation> {
    let (raw, steps) = raw_importance(kind, graph, model, graph_id, options)?;
    let (normalized, _) = normalize_importance(&raw)?;
    Ok(Explanation {
        graph_id,
        explainer: kind,
        importance: normalized.values,
        raw: raw.values,
        steps,
    })
}
