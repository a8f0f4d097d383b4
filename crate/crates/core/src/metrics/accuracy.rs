use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::EntityGraph;
use crate::nn::{predict, GinModel};

/// Accuracy over the graphs labelled `pair.0` or `pair.1`, given the full
/// argmax predictions.
pub fn pairwise_accuracy_from_predictions(
    labels: &[usize],
    predictions: &[usize],
    pair: (usize, usize),
) -> Result<f64> {
    if labels.len() != predictions.len() {
        return Err(Error::shape(
            format!("{} predictions", labels.len()),
            predictions.len(),
        ));
    }
    let mut hits = [0usize; 2];
    let mut totals = [0usize; 2];
    for (&t, &p) in labels.iter().zip(predictions) {
        let slot = if t == pair.0 {
            0
        } else if t == pair.1 {
            1
        } else {
            continue;
        };
        totals[slot] += 1;
        hits[slot] += usize::from(t == p);
    }
    if totals.contains(&0) {
        return Err(Error::InvalidInput(format!(
            "class pair {pair:?} has an empty class"
        )));
    }
    Ok((hits[0] + hits[1]) as f64 / (totals[0] + totals[1]) as f64)
}

/// Predicts every graph of the two classes and scores the argmax over all
/// classes against the label.
pub fn pairwise_accuracy(
    graphs: &[EntityGraph],
    model: &GinModel,
    pair: (usize, usize),
) -> Result<f64> {
    let subset: Vec<&EntityGraph> = graphs
        .iter()
        .filter(|g| g.label == Some(pair.0) || g.label == Some(pair.1))
        .collect();
    let labels: Vec<usize> = subset.iter().map(|g| g.label.expect("filtered")).collect();
    let preds = subset
        .par_iter()
        .map(|g| predict(g, model))
        .collect::<Result<Vec<_>>>()?;
    pairwise_accuracy_from_predictions(&labels, &preds, pair)
}
