//! Concept-based class separability of explanations: per-class attribute
//! histograms over the most important nodes, pairwise Wasserstein distances
//! integrated over top-k thresholds, and risk-weighted summaries.

mod accuracy;
mod dataset;
mod histogram;
mod prior;
mod report;
mod separability;
mod statistics;

pub use accuracy::{pairwise_accuracy, pairwise_accuracy_from_predictions};
pub use dataset::{build_histogram, rank_nodes, ExplanationDataset, ExplanationRecord};
pub use histogram::{bin_count, wasserstein_1d, AttributeHistogram};
pub use prior::{class_hop_risk, load_prior, load_risk, parse_prior, parse_risk, write_prior};
pub use report::{explainer_report, write_curves, ExplainerReport, PairReport, Report};
pub use separability::{normalized_auc, separability, MetricParams, SeparabilityMatrix};
pub use statistics::{aggregate, pearson, row_statistics, statistics, Aggregates, PairStatistics};
