//! The pipeline stages. Each reads the files of the stage before it and
//! writes its own; nothing is kept in memory between stages.

use std::collections::BTreeMap;
use std::path::Path;

use graphxq::concepts::assign_spacing;
use graphxq::explain::{explain, ExplainerKind, Explanation};
use graphxq::graph::{
    build_knn_graph, normalize_attributes_dataset, normalize_positions, EntityGraph,
};
use graphxq::io::{
    read_graphs, read_json, read_jsonl, write_bytes, write_graphs, write_json, write_jsonl,
};
use graphxq::metrics::{
    class_hop_risk, explainer_report, load_prior, load_risk, pairwise_accuracy, rank_nodes,
    separability, write_curves, ExplanationDataset, Report, SeparabilityMatrix,
};
use graphxq::nn::{train, EpochMetrics, GinArchitecture, GinModel};
use graphxq::Error;
use ndarray::{Array2, Array3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{RunConfig, SPLITS};
use crate::error::{CliError, CliResult};
use crate::synth::synthesize;

fn log_warnings(stage: &str, warnings: &[String]) {
    const SHOWN: usize = 5;
    for w in warnings.iter().take(SHOWN) {
        log::warn!("{stage}: {w}");
    }
    if warnings.len() > SHOWN {
        log::warn!("{stage}: {} more warnings", warnings.len() - SHOWN);
    }
}

pub fn run_synth(cfg: &RunConfig) -> CliResult<()> {
    let seed = cfg.require_seed("synth")?;
    let spec = cfg
        .synth
        .as_ref()
        .ok_or_else(|| CliError::usage("`synth` needs a [synth] section"))?;
    let out = synthesize(spec, &cfg.glcm, seed)?;
    for (split, graphs) in &out.splits {
        write_graphs(&cfg.raw_split(split), graphs)?;
        log::info!("synth: {} {split} graphs", graphs.len());
    }
    write_json(&cfg.planted_path(), &out.planted)?;
    log_warnings("synth", &out.warnings);
    Ok(())
}

fn build_one(cfg: &RunConfig, g: &EntityGraph) -> graphxq::Result<(EntityGraph, Vec<String>)> {
    let mut g = build_knn_graph(g, cfg.knn())?;
    let warnings = assign_spacing(&mut g, cfg.graph.spacing_k);
    if let Some([w, h]) = cfg.graph.roi {
        g = normalize_positions(&g, w, h)?;
        if cfg.graph.append_positions {
            for node in g.nodes_mut() {
                let p = node.normalized_position.expect("just normalized");
                node.features.extend(p);
            }
        }
    }
    Ok((g, warnings))
}

/// kNN topology, spacing attributes, then attribute min-max scaling over the
/// union of all splits.
pub fn run_build_graph(cfg: &RunConfig) -> CliResult<()> {
    let mut all = Vec::new();
    let mut sizes = Vec::new();
    let mut warnings = Vec::new();
    for split in SPLITS {
        let path = cfg.raw_split(split);
        let raw = read_graphs(&path)?;
        let built = raw
            .par_iter()
            .enumerate()
            .map(|(i, g)| {
                build_one(cfg, g).map_err(|e| Error::Record {
                    path: path.display().to_string(),
                    record: i + 1,
                    reason: e.to_string(),
                })
            })
            .collect::<graphxq::Result<Vec<_>>>()?;
        sizes.push(built.len());
        for (i, (g, w)) in built.into_iter().enumerate() {
            warnings.extend(w.into_iter().map(|w| format!("{split} graph {i}: {w}")));
            all.push(g);
        }
    }
    let norm = normalize_attributes_dataset(&mut all)?;
    warnings.extend(norm.warnings);
    let mut rest = all.as_slice();
    for (split, n) in SPLITS.iter().zip(sizes) {
        let (head, tail) = rest.split_at(n);
        write_graphs(&cfg.graph_split(split), head)?;
        log::info!("build-graph: {n} {split} graphs");
        rest = tail;
    }
    let ranges: BTreeMap<&String, [f64; 2]> = norm
        .ranges
        .iter()
        .map(|(k, &(lo, hi))| (k, [lo, hi]))
        .collect();
    write_json(&cfg.normalization_path(), &ranges)?;
    log_warnings("build-graph", &warnings);
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingHistory {
    pub best_epoch: usize,
    pub epochs: Vec<EpochMetrics>,
}

pub fn run_train(cfg: &RunConfig) -> CliResult<()> {
    let seed = cfg.require_seed("train")?;
    let classes = cfg.class_set()?;
    let train_set = read_graphs(&cfg.graph_split("train"))?;
    let val_set = read_graphs(&cfg.graph_split("val"))?;
    let first = train_set
        .first()
        .ok_or_else(|| Error::InvalidInput("training split is empty".into()))?;
    let mut arch = GinArchitecture::new(first.feature_dim(), classes.len());
    arch.hidden_dim = cfg.model.hidden_dim;
    arch.num_layers = cfg.model.num_layers;
    let init = GinModel::init(arch, seed)?;
    let outcome = train(&train_set, &val_set, init, &cfg.train_config(seed))?;
    outcome.model.save(&cfg.paths.model)?;
    let best = &outcome.history[outcome.best_epoch];
    log::info!(
        "train: best epoch {} val accuracy {:.3} weighted F1 {:.3}",
        best.epoch,
        best.val_accuracy,
        best.val_weighted_f1
    );
    write_json(
        &cfg.history_path(),
        &TrainingHistory {
            best_epoch: outcome.best_epoch,
            epochs: outcome.history,
        },
    )?;
    Ok(())
}

pub fn run_explain(cfg: &RunConfig) -> CliResult<()> {
    let seed = cfg.require_seed("explain")?;
    let options = cfg.explain_options(seed);
    let model = GinModel::load(&cfg.paths.model)?;
    let graphs = read_graphs(&cfg.graph_split(&cfg.explain.split))?;
    for kind in cfg.explainer_kinds()? {
        let explanations = graphs
            .par_iter()
            .enumerate()
            .map(|(i, g)| explain(kind, g, &model, i, &options))
            .collect::<graphxq::Result<Vec<_>>>()?;
        write_jsonl(&cfg.explanation_path(kind), &explanations)?;
        log::info!("explain: {kind} on {} graphs", graphs.len());
    }
    Ok(())
}

/// A [`SeparabilityMatrix`] in a form that reads back without the class set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparabilityFile {
    pub explainer: ExplainerKind,
    pub pairs: Vec<String>,
    pub concepts: Vec<String>,
    pub thresholds: Vec<usize>,
    pub values: Vec<Vec<f64>>,
    pub curves: Vec<Vec<Vec<f64>>>,
}

impl SeparabilityFile {
    pub fn new(explainer: ExplainerKind, s: &SeparabilityMatrix) -> Self {
        Self {
            explainer,
            pairs: s.pair_keys.clone(),
            concepts: s.concepts.clone(),
            thresholds: s.thresholds.clone(),
            values: s.values.rows().into_iter().map(|r| r.to_vec()).collect(),
            curves: s
                .curves
                .outer_iter()
                .map(|m| m.rows().into_iter().map(|r| r.to_vec()).collect())
                .collect(),
        }
    }

    /// Rebuilds the matrix; pair keys must match the configured classes.
    pub fn to_matrix(
        &self,
        pairs: Vec<(usize, usize)>,
        path: &Path,
    ) -> graphxq::Result<SeparabilityMatrix> {
        let (np, nc, nk) = (self.pairs.len(), self.concepts.len(), self.thresholds.len());
        let bad = |reason: &str| Error::InvalidInput(format!("{}: {reason}", path.display()));
        if pairs.len() != np {
            return Err(bad("class pairs differ from the configuration"));
        }
        let values = Array2::from_shape_vec((np, nc), self.values.concat())
            .map_err(|_| bad("values are not a pairs x concepts table"))?;
        let flat: Vec<f64> = self.curves.iter().flat_map(|m| m.concat()).collect();
        let curves = Array3::from_shape_vec((np, nc, nk), flat)
            .map_err(|_| bad("curves are not pairs x concepts x thresholds"))?;
        Ok(SeparabilityMatrix {
            pairs,
            pair_keys: self.pairs.clone(),
            concepts: self.concepts.clone(),
            thresholds: self.thresholds.clone(),
            values,
            curves,
        })
    }
}

fn read_explanations(
    path: &Path,
    kind: ExplainerKind,
    graphs: &[EntityGraph],
) -> graphxq::Result<Vec<Vec<f64>>> {
    let records: Vec<Explanation> = read_jsonl(path)?;
    if records.len() != graphs.len() {
        return Err(Error::InvalidInput(format!(
            "{}: {} explanations for {} graphs",
            path.display(),
            records.len(),
            graphs.len()
        )));
    }
    records
        .into_iter()
        .enumerate()
        .map(|(i, e)| {
            let fail = |reason: String| Error::Record {
                path: path.display().to_string(),
                record: i + 1,
                reason,
            };
            if e.graph_id != i || e.explainer != kind {
                return Err(fail(format!(
                    "expected graph {i} from {kind}, found graph {} from {}",
                    e.graph_id, e.explainer
                )));
            }
            if e.importance.len() != graphs[i].num_nodes() {
                return Err(fail(format!(
                    "{} importances for {} nodes",
                    e.importance.len(),
                    graphs[i].num_nodes()
                )));
            }
            Ok(e.importance)
        })
        .collect()
}

/// Separability matrices per explainer and pairwise classifier accuracy.
pub fn run_evaluate(cfg: &RunConfig) -> CliResult<()> {
    let classes = cfg.class_set()?;
    let schema = cfg.schema()?;
    let graphs = read_graphs(&cfg.graph_split(&cfg.explain.split))?;
    for kind in cfg.explainer_kinds()? {
        let importances = read_explanations(&cfg.explanation_path(kind), kind, &graphs)?;
        let ds = ExplanationDataset::from_graphs(
            classes.clone(),
            schema.clone(),
            &graphs,
            &importances,
        )?;
        let sep = separability(&ds, &cfg.metrics)?;
        write_json(
            &cfg.separability_path(kind),
            &SeparabilityFile::new(kind, &sep),
        )?;
        log::info!("evaluate: {kind}");
    }
    let model = GinModel::load(&cfg.paths.model)?;
    let accuracy = classes
        .pairs()
        .into_iter()
        .map(|p| Ok((classes.pair_key(p), pairwise_accuracy(&graphs, &model, p)?)))
        .collect::<graphxq::Result<BTreeMap<String, f64>>>()?;
    for (k, a) in &accuracy {
        log::info!("evaluate: pairwise accuracy {k} {a:.3}");
    }
    write_json(&cfg.accuracy_path(), &accuracy)?;
    Ok(())
}

/// Mean share of each graph's top-|planted| nodes that are planted.
pub fn planted_overlap(importances: &[Vec<f64>], planted: &[Vec<usize>]) -> f64 {
    let per_graph: Vec<f64> = importances
        .iter()
        .zip(planted)
        .filter(|(_, p)| !p.is_empty())
        .map(|(imp, p)| {
            let k = p.len().min(imp.len());
            let hits = rank_nodes(imp)[..k]
                .iter()
                .filter(|v| p.contains(v))
                .count();
            hits as f64 / k as f64
        })
        .collect();
    per_graph.iter().sum::<f64>() / per_graph.len().max(1) as f64
}

/// Statistics, aggregates, curves, and the planted-node sanity check.
pub fn run_report(cfg: &RunConfig) -> CliResult<()> {
    let classes = cfg.class_set()?;
    let schema = cfg.schema()?;
    let prior_path = cfg
        .paths
        .prior
        .as_ref()
        .ok_or_else(|| CliError::usage("`report` needs paths.prior"))?;
    let prior = load_prior(prior_path, &classes, &schema)?;
    let risk = match &cfg.paths.risk {
        Some(p) => load_risk(p, &classes)?,
        None => class_hop_risk(&classes),
    };
    let accuracy_path = cfg.accuracy_path();
    let accuracy: Option<Vec<f64>> = if accuracy_path.exists() {
        let map: BTreeMap<String, f64> = read_json(&accuracy_path)?;
        let acc = classes
            .pairs()
            .into_iter()
            .map(|p| {
                let key = classes.pair_key(p);
                map.get(&key).copied().ok_or_else(|| {
                    Error::InvalidInput(format!(
                        "{}: no entry for `{key}`",
                        accuracy_path.display()
                    ))
                })
            })
            .collect::<graphxq::Result<Vec<_>>>()?;
        Some(acc)
    } else {
        None
    };

    let kinds = cfg.explainer_kinds()?;
    let mut matrices = Vec::new();
    for &kind in &kinds {
        let path = cfg.separability_path(kind);
        let file: SeparabilityFile = read_json(&path)?;
        let expected: Vec<&str> = schema.names();
        if file.explainer != kind || file.concepts != expected {
            return Err(Error::InvalidInput(format!(
                "{}: stale file, re-run evaluate",
                path.display()
            ))
            .into());
        }
        matrices.push((kind, file.to_matrix(classes.pairs(), &path)?));
    }

    let mut report = Report::new();
    for (kind, sep) in &matrices {
        let (r, warnings) = explainer_report(sep, &prior, &risk, accuracy.as_deref())?;
        log_warnings(&format!("report {kind}"), &warnings);
        let a = &r.aggregates;
        log::info!(
            "report: {kind:<18} S_max {:.3} S_avg {:.3} S_corr {:.3}",
            a.s_max,
            a.s_avg,
            a.s_corr
        );
        report.insert(kind.name().to_string(), r);
    }
    let dir = &cfg.paths.report;
    write_json(&dir.join("report.json"), &report)?;
    let mut csv = Vec::new();
    write_curves(&mut csv, matrices.iter().map(|(k, s)| (k.name(), s)))?;
    write_bytes(&dir.join("curves.csv"), &csv)?;

    let planted_path = cfg.planted_path();
    if planted_path.exists() {
        let planted: BTreeMap<String, Vec<Vec<usize>>> = read_json(&planted_path)?;
        let graphs = read_graphs(&cfg.graph_split(&cfg.explain.split))?;
        if let Some(p) = planted
            .get(&cfg.explain.split)
            .filter(|p| p.len() == graphs.len())
        {
            let mut overlap = BTreeMap::new();
            for &kind in &kinds {
                let imp = read_explanations(&cfg.explanation_path(kind), kind, &graphs)?;
                overlap.insert(kind.name(), planted_overlap(&imp, p));
            }
            write_json(&dir.join("planted_overlap.json"), &overlap)?;
        }
    }
    Ok(())
}
