use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::adam::{adam_step, AdamConfig, AdamState};
use super::backward::backward;
use super::forward::gin_forward;
use super::loss::cross_entropy;
use super::model::GinModel;
use crate::error::{Error, Result};
use crate::graph::EntityGraph;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 100,
            learning_rate: 1e-3,
            batch_size: 16,
            seed: 0,
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 || !(self.learning_rate > 0.0) {
            return Err(Error::InvalidInput(format!(
                "invalid training config {self:?}"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_accuracy: f64,
    pub val_weighted_f1: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Parameters from the epoch with the best validation weighted F1.
    pub model: GinModel,
    pub best_epoch: usize,
    pub history: Vec<EpochMetrics>,
}

fn label_of(g: &EntityGraph, num_classes: usize) -> Result<usize> {
    match g.label {
        Some(t) if t < num_classes => Ok(t),
        Some(t) => Err(Error::InvalidInput(format!(
            "label {t} outside {num_classes} classes"
        ))),
        None => Err(Error::InvalidInput(
            "unlabeled graph in training data".into(),
        )),
    }
}

/// Cross-entropy loss and parameter gradient for one labelled graph.
pub fn graph_loss_and_grad(
    graph: &EntityGraph,
    model: &GinModel,
    target: usize,
) -> Result<(f64, GinModel)> {
    let trace = gin_forward(graph, model)?;
    let (loss, d_logits) = cross_entropy(&trace.logits, target)?;
    let grads = backward(graph, model, &trace, &d_logits, true)?;
    Ok((loss, grads.params.expect("requested")))
}

pub fn predict(graph: &EntityGraph, model: &GinModel) -> Result<usize> {
    Ok(gin_forward(graph, model)?.predicted_class())
}

/// Support-weighted F1 over the classes present in `truth`.
pub fn weighted_f1(truth: &[usize], predicted: &[usize], num_classes: usize) -> f64 {
    let mut tp = vec![0usize; num_classes];
    let mut fp = vec![0usize; num_classes];
    let mut fn_ = vec![0usize; num_classes];
    for (&t, &p) in truth.iter().zip(predicted) {
        if t == p {
            tp[t] += 1;
        } else {
            fp[p] += 1;
            fn_[t] += 1;
        }
    }
    let total = truth.len() as f64;
    (0..num_classes)
        .filter(|&c| tp[c] + fn_[c] > 0)
        .map(|c| {
            let support = (tp[c] + fn_[c]) as f64;
            let f1 = 2.0 * tp[c] as f64 / (2 * tp[c] + fp[c] + fn_[c]) as f64;
            support / total * f1
        })
        .sum()
}

fn evaluate(graphs: &[EntityGraph], model: &GinModel) -> Result<(f64, f64)> {
    let k = model.architecture.num_classes;
    let truth = graphs
        .iter()
        .map(|g| label_of(g, k))
        .collect::<Result<Vec<_>>>()?;
    let preds = graphs
        .par_iter()
        .map(|g| predict(g, model))
        .collect::<Result<Vec<_>>>()?;
    let acc = truth.iter().zip(&preds).filter(|(a, b)| a == b).count() as f64 / truth.len() as f64;
    Ok((acc, weighted_f1(&truth, &preds, k)))
}

/// Mini-batch Adam training on cross-entropy.
///
/// A batch gradient is the mean of exact per-graph gradients. Per-graph work
/// runs in parallel but is reduced in batch order, so results depend only on
/// the inputs and `config.seed`.
pub fn train(
    train_set: &[EntityGraph],
    val_set: &[EntityGraph],
    init: GinModel,
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    config.validate()?;
    if train_set.is_empty() || val_set.is_empty() {
        return Err(Error::InvalidInput(
            "training and validation splits must be non-empty".into(),
        ));
    }
    let k = init.architecture.num_classes;
    let labels = train_set
        .iter()
        .map(|g| label_of(g, k))
        .collect::<Result<Vec<_>>>()?;

    let mut model = init;
    let mut adam = AdamState::new(
        model.param_slices().iter().map(|s| s.len()),
        AdamConfig::default(),
    );
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut history = Vec::with_capacity(config.epochs);
    let mut best: Option<(f64, usize, GinModel)> = None;

    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(config.batch_size) {
            let results = batch
                .par_iter()
                .map(|&i| graph_loss_and_grad(&train_set[i], &model, labels[i]))
                .collect::<Result<Vec<_>>>()?;
            let mut total = model.zeros_like();
            let scale = 1.0 / batch.len() as f64;
            for (loss, g) in &results {
                epoch_loss += loss;
                total.add_scaled(g, scale);
            }
            let grads = total.param_slices();
            adam_step(
                &mut model.param_slices_mut(),
                &grads,
                &mut adam,
                config.learning_rate,
            )?;
        }
        if !model.is_finite() {
            return Err(Error::Numeric(format!(
                "parameters diverged in epoch {epoch}"
            )));
        }
        let (val_accuracy, val_weighted_f1) = evaluate(val_set, &model)?;
        let metrics = EpochMetrics {
            epoch,
            train_loss: epoch_loss / train_set.len() as f64,
            val_accuracy,
            val_weighted_f1,
        };
        log::debug!("{metrics:?}");
        if best.as_ref().is_none_or(|(f1, _, _)| val_weighted_f1 > *f1) {
            best = Some((val_weighted_f1, epoch, model.clone()));
        }
        history.push(metrics);
    }
    let (_, best_epoch, model) = best.expect("at least one epoch");
    Ok(TrainOutcome {
        model,
        best_epoch,
        history,
    })
}
