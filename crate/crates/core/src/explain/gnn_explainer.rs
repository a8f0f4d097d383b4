//! Node-mask GNNExplainer.
//!
//! Learns one logit per node; the sigmoid of it gates that node's input
//! features. The loss trades a distillation term against mask size and mask
//! entropy, and optimisation stops as soon as the masked graph would change
//! the predicted class.

use ndarray::Array1;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::EntityGraph;
use crate::nn::loss::{
    bernoulli_entropy, bernoulli_entropy_grad, cross_entropy, kl_divergence, sigmoid,
    softmax_entropy,
};
use crate::nn::{adam_step, gin_forward, grad_loss_wrt_mask, AdamConfig, AdamState, GinModel};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GnnExplainerConfig {
    /// Weight of the mask-size term `sum_i sigma(M_i)`.
    pub alpha_size: f64,
    /// Weight of the mean element-wise mask entropy.
    pub alpha_entropy: f64,
    pub learning_rate: f64,
    pub max_steps: usize,
    /// Initial mask logit shared by every node.
    pub mask_init: f64,
}

impl Default for GnnExplainerConfig {
    fn default() -> Self {
        Self {
            alpha_size: 0.005,
            alpha_entropy: 0.1,
            learning_rate: 0.01,
            max_steps: 1000,
            mask_init: 0.0,
        }
    }
}

impl GnnExplainerConfig {
    fn validate(&self) -> Result<()> {
        let positive =
            self.alpha_size > 0.0 && self.alpha_entropy > 0.0 && self.learning_rate > 0.0;
        if !positive || self.max_steps == 0 || !self.mask_init.is_finite() {
            return Err(Error::InvalidInput(format!(
                "invalid GNNExplainer config {self:?}"
            )));
        }
        Ok(())
    }
}

/// Breakdown of the explainer objective at one mask.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaskLoss {
    pub total: f64,
    pub distillation: f64,
    pub size: f64,
    pub entropy: f64,
    pub lambda: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GnnExplanation {
    /// `sigma(M_V)` of the returned mask (all ones if no optimised mask kept
    /// the prediction).
    pub mask: Vec<f64>,
    /// Optimisation steps applied to the returned mask.
    pub steps: usize,
    /// True when the loop ended because the prediction flipped.
    pub early_stopped: bool,
    /// Nodes with mask value at least 0.5.
    pub subgraph: Vec<usize>,
}

/// Objective state shared across optimisation steps.
pub struct MaskObjective<'a> {
    graph: &'a EntityGraph,
    model: &'a GinModel,
    config: GnnExplainerConfig,
    teacher: Array1<f64>,
    target: usize,
    teacher_entropy: f64,
}

impl<'a> MaskObjective<'a> {
    pub fn new(
        graph: &'a EntityGraph,
        model: &'a GinModel,
        config: GnnExplainerConfig,
    ) -> Result<Self> {
        let trace = gin_forward(graph, model)?;
        let target = trace.predicted_class();
        let (teacher_entropy, _) = softmax_entropy(&trace.logits);
        Ok(Self {
            graph,
            model,
            config,
            teacher: trace.logits,
            target,
            teacher_entropy,
        })
    }

    pub fn target(&self) -> usize {
        self.target
    }

    /// Distillation loss `lambda CE + (1 - lambda) KL` on the masked logits,
    /// with `lambda = H(student) / H(teacher)` clipped to `[0, 1]`, and its
    /// gradient w.r.t. the student logits (including the path through
    /// lambda).
    fn distillation(&self, student: &Array1<f64>) -> (f64, f64, Array1<f64>) {
        let (ce, d_ce) = cross_entropy(student, self.target).expect("target in range");
        let (kl, d_kl) = kl_divergence(&self.teacher, student);
        let (h, d_h) = softmax_entropy(student);
        let (lambda, d_lambda) = if self.teacher_entropy <= f64::MIN_POSITIVE {
            (1.0, None)
        } else {
            let raw = h / self.teacher_entropy;
            if raw >= 1.0 {
                (1.0, None)
            } else {
                (raw, Some(d_h / self.teacher_entropy))
            }
        };
        let value = lambda * ce + (1.0 - lambda) * kl;
        let mut grad = d_ce * lambda + d_kl * (1.0 - lambda);
        if let Some(dl) = d_lambda {
            grad = grad + dl * (ce - kl);
        }
        (value, lambda, grad)
    }

    /// Loss at raw mask logits `m`, its gradient w.r.t. `m`, and the class
    /// predicted by the masked graph.
    pub fn evaluate(&self, logits_mask: &[f64]) -> Result<(MaskLoss, Vec<f64>, usize)> {
        let n = self.graph.num_nodes();
        if logits_mask.len() != n {
            return Err(Error::shape(
                format!("mask of length {n}"),
                logits_mask.len(),
            ));
        }
        let gate: Vec<f64> = logits_mask.iter().map(|&m| sigmoid(m)).collect();
        let mut parts = (0.0, 0.0);
        let (distillation, d_gate, trace) =
            grad_loss_wrt_mask(self.graph, self.model, &gate, |y| {
                let (v, lambda, g) = self.distillation(y);
                parts = (v, lambda);
                (v, g)
            })?;
        let size: f64 = gate.iter().sum();
        let entropy = gate.iter().map(|&p| bernoulli_entropy(p)).sum::<f64>() / n as f64;
        let total =
            distillation + self.config.alpha_size * size + self.config.alpha_entropy * entropy;
        let grad = gate
            .iter()
            .zip(&d_gate)
            .map(|(&p, &dg)| {
                let d = dg
                    + self.config.alpha_size
                    + self.config.alpha_entropy * bernoulli_entropy_grad(p) / n as f64;
                d * p * (1.0 - p)
            })
            .collect();
        Ok((
            MaskLoss {
                total,
                distillation,
                size,
                entropy,
                lambda: parts.1,
            },
            grad,
            trace.predicted_class(),
        ))
    }
}

/// Optimises a node mask with Adam and returns the last mask whose masked
/// graph still predicts the original class.
pub fn gnn_explainer(
    graph: &EntityGraph,
    model: &GinModel,
    config: &GnnExplainerConfig,
) -> Result<GnnExplanation> {
    config.validate()?;
    let objective = MaskObjective::new(graph, model, *config)?;
    let n = graph.num_nodes();
    let mut raw = vec![config.mask_init; n];
    let mut adam = AdamState::new([n], AdamConfig::default());
    let mut kept: Option<(Vec<f64>, usize)> = None;
    let mut early_stopped = false;

    for step in 0..=config.max_steps {
        let (loss, grad, predicted) = objective.evaluate(&raw)?;
        if !loss.total.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::Explainer {
                explainer: "gnn_explainer".into(),
                reason: format!("non-finite loss at step {step}"),
            });
        }
        if predicted != objective.target() {
            early_stopped = true;
            break;
        }
        kept = Some((raw.iter().map(|&m| sigmoid(m)).collect(), step));
        if step == config.max_steps {
            break;
        }
        adam_step(&mut [&mut raw], &[&grad], &mut adam, config.learning_rate)?;
    }

    let (mask, steps) = kept.unwrap_or_else(|| (vec![1.0; n], 0));
    let subgraph = mask
        .iter()
        .enumerate()
        .filter(|(_, &v)| v >= 0.5)
        .map(|(i, _)| i)
        .collect();
    Ok(GnnExplanation {
        mask,
        steps,
        early_stopped,
        subgraph,
    })
}
