use ndarray::Array2;

use super::histogram::AttributeHistogram;
use crate::concepts::ConceptSchema;
use crate::error::{Error, Result};
use crate::graph::{ClassSet, EntityGraph};

/// Node indices by decreasing importance; equal scores keep the lower index
/// first.
pub fn rank_nodes(importance: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..importance.len()).collect();
    order.sort_by(|&a, &b| importance[b].total_cmp(&importance[a]).then(a.cmp(&b)));
    order
}

/// One explained graph: its normalized attribute matrix `D` (nodes x
/// attributes), the normalized importance `I` and the class label.
#[derive(Debug, Clone, PartialEq)]
pub struct ExplanationRecord {
    pub label: usize,
    pub attributes: Array2<f64>,
    pub importance: Vec<f64>,
    ranking: Vec<usize>,
}

impl ExplanationRecord {
    pub fn new(label: usize, attributes: Array2<f64>, importance: Vec<f64>) -> Result<Self> {
        if attributes.nrows() != importance.len() {
            return Err(Error::shape(
                format!("{} importance values", attributes.nrows()),
                importance.len(),
            ));
        }
        if importance.is_empty() {
            return Err(Error::InvalidInput("explanation of an empty graph".into()));
        }
        if let Some(v) = importance.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite importance {v}")));
        }
        if let Some(v) = attributes.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidInput(format!(
                "attribute value {v} is not normalized to [0, 1]"
            )));
        }
        let ranking = rank_nodes(&importance);
        Ok(Self {
            label,
            attributes,
            importance,
            ranking,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.importance.len()
    }

    /// All nodes, most important first.
    pub fn ranking(&self) -> &[usize] {
        &self.ranking
    }

    /// The `k` most important nodes (all of them when the graph is smaller).
    pub fn top_k(&self, k: usize) -> &[usize] {
        &self.ranking[..k.min(self.ranking.len())]
    }
}

/// Explanations of one explainer over a labelled dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct ExplanationDataset {
    classes: ClassSet,
    schema: ConceptSchema,
    records: Vec<ExplanationRecord>,
}

impl ExplanationDataset {
    pub fn new(
        classes: ClassSet,
        schema: ConceptSchema,
        records: Vec<ExplanationRecord>,
    ) -> Result<Self> {
        let width = schema.attributes().len();
        let mut per_class = vec![0usize; classes.len()];
        for (i, r) in records.iter().enumerate() {
            if r.label >= classes.len() {
                return Err(Error::InvalidInput(format!(
                    "record {i} has label {} outside {} classes",
                    r.label,
                    classes.len()
                )));
            }
            if r.attributes.ncols() != width {
                return Err(Error::shape(
                    format!("{width} attributes"),
                    format!("{} in record {i}", r.attributes.ncols()),
                ));
            }
            per_class[r.label] += 1;
        }
        if let Some(c) = per_class.iter().position(|&n| n == 0) {
            return Err(Error::InvalidInput(format!(
                "class `{}` has no explained graphs",
                classes.name(c)
            )));
        }
        Ok(Self {
            classes,
            schema,
            records,
        })
    }

    /// Pairs each labelled graph with an importance vector. Attributes are
    /// read from the nodes in schema order and must already be normalized.
    pub fn from_graphs(
        classes: ClassSet,
        schema: ConceptSchema,
        graphs: &[EntityGraph],
        importances: &[Vec<f64>],
    ) -> Result<Self> {
        if graphs.len() != importances.len() {
            return Err(Error::shape(
                format!("{} importance maps", graphs.len()),
                importances.len(),
            ));
        }
        let names = schema.attributes();
        let records = graphs
            .iter()
            .zip(importances)
            .enumerate()
            .map(|(gi, (g, imp))| {
                let label = g
                    .label
                    .ok_or_else(|| Error::InvalidInput(format!("graph {gi} has no label")))?;
                let mut d = Array2::zeros((g.num_nodes(), names.len()));
                for (v, node) in g.nodes().iter().enumerate() {
                    for (a, name) in names.iter().enumerate() {
                        d[[v, a]] = *node.attributes.get(*name).ok_or_else(|| {
                            Error::Schema(format!("graph {gi} node {v} lacks attribute `{name}`"))
                        })?;
                    }
                }
                ExplanationRecord::new(label, d, imp.clone())
                    .map_err(|e| Error::InvalidInput(format!("graph {gi}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(classes, schema, records)
    }

    pub fn classes(&self) -> &ClassSet {
        &self.classes
    }

    pub fn schema(&self) -> &ConceptSchema {
        &self.schema
    }

    pub fn records(&self) -> &[ExplanationRecord] {
        &self.records
    }

    /// Applies `f` to every importance value, keeping everything else.
    pub fn map_importance(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        let records = self
            .records
            .iter()
            .map(|r| {
                ExplanationRecord::new(
                    r.label,
                    r.attributes.clone(),
                    r.importance.iter().map(|&v| f(v)).collect(),
                )
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(self.classes.clone(), self.schema.clone(), records)
    }

    /// Values of attribute column `attribute` over the top-`k` nodes of every
    /// graph of class `class`.
    pub fn selected_values(&self, class: usize, attribute: usize, k: usize) -> Vec<f64> {
        self.records
            .iter()
            .filter(|r| r.label == class)
            .flat_map(|r| {
                r.top_k(k)
                    .iter()
                    .map(move |&v| r.attributes[[v, attribute]])
            })
            .collect()
    }
}

/// Histogram of one attribute over the `k` most important nodes of every
/// graph of a class.
pub fn build_histogram(
    dataset: &ExplanationDataset,
    class: usize,
    attribute: &str,
    k: usize,
    bin_step: f64,
) -> Result<AttributeHistogram> {
    if k == 0 {
        return Err(Error::InvalidInput("top-k threshold must be >= 1".into()));
    }
    let a = dataset
        .schema
        .attributes()
        .iter()
        .position(|n| *n == attribute)
        .ok_or_else(|| Error::Schema(format!("unknown attribute `{attribute}`")))?;
    if class >= dataset.classes.len() {
        return Err(Error::InvalidInput(format!("unknown class index {class}")));
    }
    let values = dataset.selected_values(class, a, k);
    if values.is_empty() {
        return Err(Error::InvalidInput(format!(
            "class `{}` selects no nodes for attribute `{attribute}`",
            dataset.classes.name(class)
        )));
    }
    AttributeHistogram::from_values(&values, bin_step)
}
