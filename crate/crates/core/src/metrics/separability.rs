use ndarray::{Array2, Array3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dataset::ExplanationDataset;
use super::histogram::{bin_count, wasserstein_1d, AttributeHistogram};
use crate::error::{Error, Result};

/// Top-k thresholds and histogram grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MetricParams {
    pub thresholds: Vec<usize>,
    pub bin_step: f64,
}

impl Default for MetricParams {
    fn default() -> Self {
        Self {
            thresholds: (1..=10).map(|i| 5 * i).collect(),
            bin_step: 0.05,
        }
    }
}

impl MetricParams {
    pub fn validate(&self) -> Result<()> {
        bin_count(self.bin_step)?;
        if self.thresholds.is_empty() || self.thresholds[0] == 0 {
            return Err(Error::InvalidInput(
                "thresholds must be a non-empty list of positive counts".into(),
            ));
        }
        if self.thresholds.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidInput(
                "thresholds must be strictly increasing".into(),
            ));
        }
        Ok(())
    }
}

/// Class-pair x concept separability, plus the per-threshold curves it was
/// integrated from.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparabilityMatrix {
    pub pairs: Vec<(usize, usize)>,
    pub pair_keys: Vec<String>,
    pub concepts: Vec<String>,
    pub thresholds: Vec<usize>,
    /// `S`, shape (pairs, concepts).
    pub values: Array2<f64>,
    /// Concept scores at each threshold, shape (pairs, concepts, thresholds).
    pub curves: Array3<f64>,
}

/// Trapezoidal area under `values` over `thresholds`, divided by the
/// threshold range. A single threshold returns its value.
pub fn normalized_auc(thresholds: &[usize], values: &[f64]) -> f64 {
    if thresholds.len() == 1 {
        return values[0];
    }
    let area: f64 = thresholds
        .windows(2)
        .zip(values.windows(2))
        .map(|(k, s)| (k[1] - k[0]) as f64 * 0.5 * (s[0] + s[1]))
        .sum();
    area / (thresholds[thresholds.len() - 1] - thresholds[0]) as f64
}

/// Wasserstein separability of every concept for every class pair.
pub fn separability(
    dataset: &ExplanationDataset,
    params: &MetricParams,
) -> Result<SeparabilityMatrix> {
    params.validate()?;
    let classes = dataset.classes();
    if classes.len() < 2 {
        return Err(Error::InvalidInput(
            "separability needs at least two classes".into(),
        ));
    }
    let schema = dataset.schema();
    let attributes = schema.attributes();
    let ks = &params.thresholds;
    let (nc, na, nk) = (classes.len(), attributes.len(), ks.len());

    let histograms: Vec<AttributeHistogram> = (0..nc * na * nk)
        .into_par_iter()
        .map(|i| {
            let (t, a, k) = (i / (na * nk), (i / nk) % na, i % nk);
            let values = dataset.selected_values(t, a, ks[k]);
            AttributeHistogram::from_values(&values, params.bin_step).map_err(|e| {
                Error::InvalidInput(format!(
                    "class `{}`, attribute `{}`: {e}",
                    classes.name(t),
                    attributes[a]
                ))
            })
        })
        .collect::<Result<_>>()?;
    let hist = |t: usize, a: usize, k: usize| &histograms[(t * na + a) * nk + k];

    let pairs = classes.pairs();
    let concepts = schema.concepts();
    let mut curves = Array3::zeros((pairs.len(), concepts.len(), nk));
    let mut values = Array2::zeros((pairs.len(), concepts.len()));
    let mut col = 0;
    for (c, concept) in concepts.iter().enumerate() {
        let cols = col..col + concept.attributes.len();
        col = cols.end;
        for (p, &(x, y)) in pairs.iter().enumerate() {
            for k in 0..nk {
                let mut sum = 0.0;
                for a in cols.clone() {
                    sum += wasserstein_1d(hist(x, a, k), hist(y, a, k))?;
                }
                curves[[p, c, k]] = sum / concept.attributes.len() as f64;
            }
            let row: Vec<f64> = (0..nk).map(|k| curves[[p, c, k]]).collect();
            values[[p, c]] = normalized_auc(ks, &row);
        }
    }
    Ok(SeparabilityMatrix {
        pair_keys: pairs.iter().map(|&p| classes.pair_key(p)).collect(),
        pairs,
        concepts: schema.names().into_iter().map(String::from).collect(),
        thresholds: ks.clone(),
        values,
        curves,
    })
}
