//! Run configuration: one TOML file, with a few command-line overrides.

use std::path::{Path, PathBuf};

use graphxq::concepts::{Concept, ConceptSchema, GlcmParams};
use graphxq::explain::{ExplainOptions, ExplainerKind, GnnExplainerConfig};
use graphxq::graph::{ClassSet, KnnParams};
use graphxq::metrics::MetricParams;
use graphxq::nn::TrainConfig;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::synth::SynthSpec;

pub const SPLITS: [&str; 3] = ["train", "val", "test"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    /// Class names in label order. Taken from `synth` when empty.
    #[serde(default)]
    pub classes: Vec<String>,
    #[serde(default)]
    pub paths: Paths,
    pub synth: Option<SynthSpec>,
    #[serde(default)]
    pub graph: GraphConfig,
    #[serde(default)]
    pub glcm: GlcmParams,
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub train: TrainSection,
    #[serde(default)]
    pub explain: ExplainSection,
    #[serde(default)]
    pub metrics: MetricParams,
    /// Concept grouping; the five standard concepts when absent.
    pub concepts: Option<Vec<Concept>>,
}

/// Artifact locations. Relative paths are resolved against the directory of
/// the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    /// Holds `raw/<split>.jsonl` and the built `<split>.jsonl` graphs.
    pub dataset: PathBuf,
    pub model: PathBuf,
    pub explanations: PathBuf,
    pub report: PathBuf,
    pub prior: Option<PathBuf>,
    /// Class-pair risk; class hops when absent.
    pub risk: Option<PathBuf>,
}

impl Default for Paths {
    fn default() -> Self {
        Self {
            dataset: "data".into(),
            model: "model.json".into(),
            explanations: "explanations".into(),
            report: "report".into(),
            prior: None,
            risk: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GraphConfig {
    pub k: usize,
    pub max_dist: f64,
    /// Neighbours used for the spacing attributes.
    pub spacing_k: usize,
    /// RoI size in pixels, used to scale positions.
    pub roi: Option<[f64; 2]>,
    /// Append the scaled centroid to every feature row.
    pub append_positions: bool,
}

impl Default for GraphConfig {
    fn default() -> Self {
        Self {
            k: 5,
            max_dist: 50.0,
            spacing_k: 5,
            roi: None,
            append_positions: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub hidden_dim: usize,
    pub num_layers: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            hidden_dim: 64,
            num_layers: 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
}

impl Default for TrainSection {
    fn default() -> Self {
        let d = TrainConfig::default();
        Self {
            epochs: d.epochs,
            learning_rate: d.learning_rate,
            batch_size: d.batch_size,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExplainSection {
    pub explainers: Vec<String>,
    /// Split that is explained and evaluated.
    pub split: String,
    pub gnn_explainer: GnnExplainerConfig,
}

impl Default for ExplainSection {
    fn default() -> Self {
        Self {
            explainers: ExplainerKind::ALL.iter().map(|k| k.name().into()).collect(),
            split: "test".into(),
            gnn_explainer: GnnExplainerConfig::default(),
        }
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub explainers: Vec<String>,
}

impl RunConfig {
    pub fn parse(text: &str) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| CliError::usage(format!("invalid config: {e}")))
    }

    /// Reads `path`, applies `overrides` and resolves relative paths.
    pub fn load(path: &Path, overrides: &Overrides) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg =
            Self::parse(&text).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
        cfg.apply(overrides);
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resolve(base);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if o.seed.is_some() {
            self.seed = o.seed;
        }
        if !o.explainers.is_empty() {
            self.explain.explainers = o.explainers.clone();
        }
    }

    pub fn resolve(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        let p = &mut self.paths;
        fix(&mut p.dataset);
        fix(&mut p.model);
        fix(&mut p.explanations);
        fix(&mut p.report);
        p.prior.as_mut().map(fix);
        p.risk.as_mut().map(fix);
    }

    pub fn validate(&self) -> CliResult<()> {
        if let Some(s) = &self.synth {
            s.validate()?;
        }
        self.class_set()?;
        self.schema()?;
        self.explainer_kinds()?;
        self.metrics
            .validate()
            .map_err(|e| CliError::usage(format!("[metrics]: {e}")))?;
        if !SPLITS.contains(&self.explain.split.as_str()) {
            return Err(CliError::usage(format!(
                "[explain] split must be one of {SPLITS:?}, got `{}`",
                self.explain.split
            )));
        }
        let g = &self.graph;
        if g.k == 0 || g.spacing_k == 0 || !(g.max_dist > 0.0) {
            return Err(CliError::usage(format!("invalid [graph] section {g:?}")));
        }
        if g.append_positions && g.roi.is_none() {
            return Err(CliError::usage("[graph] append_positions needs roi"));
        }
        Ok(())
    }

    /// Seed for stochastic stages; an error when none was given.
    pub fn require_seed(&self, stage: &str) -> CliResult<u64> {
        self.seed.ok_or_else(|| {
            CliError::usage(format!("`{stage}` needs a seed (config `seed` or --seed)"))
        })
    }

    pub fn class_set(&self) -> CliResult<ClassSet> {
        let names = if !self.classes.is_empty() {
            self.classes.clone()
        } else if let Some(s) = &self.synth {
            s.classes.iter().map(|c| c.name.clone()).collect()
        } else {
            return Err(CliError::usage("no class names: set `classes` or [synth]"));
        };
        if let Some(s) = &self.synth {
            if s.classes.len() != names.len()
                || s.classes.iter().zip(&names).any(|(c, n)| &c.name != n)
            {
                return Err(CliError::usage("`classes` disagrees with [synth] classes"));
            }
        }
        ClassSet::new(names).map_err(|e| CliError::usage(e.to_string()))
    }

    pub fn schema(&self) -> CliResult<ConceptSchema> {
        match &self.concepts {
            None => Ok(ConceptSchema::standard()),
            Some(c) => ConceptSchema::new(c.clone()).map_err(|e| CliError::usage(e.to_string())),
        }
    }

    pub fn explainer_kinds(&self) -> CliResult<Vec<ExplainerKind>> {
        let mut kinds = Vec::new();
        for name in &self.explain.explainers {
            let k: ExplainerKind = name
                .parse()
                .map_err(|e: graphxq::Error| CliError::usage(e.to_string()))?;
            if !kinds.contains(&k) {
                kinds.push(k);
            }
        }
        if kinds.is_empty() {
            return Err(CliError::usage("no explainers selected"));
        }
        Ok(kinds)
    }

    pub fn knn(&self) -> KnnParams {
        KnnParams {
            k: self.graph.k,
            max_dist: self.graph.max_dist,
        }
    }

    pub fn train_config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            epochs: self.train.epochs,
            learning_rate: self.train.learning_rate,
            batch_size: self.train.batch_size,
            seed,
        }
    }

    pub fn explain_options(&self, seed: u64) -> ExplainOptions {
        ExplainOptions {
            gnn_explainer: self.explain.gnn_explainer,
            seed,
        }
    }

    pub fn raw_split(&self, split: &str) -> PathBuf {
        self.paths
            .dataset
            .join("raw")
            .join(format!("{split}.jsonl"))
    }

    pub fn planted_path(&self) -> PathBuf {
        self.paths.dataset.join("raw").join("planted.json")
    }

    pub fn graph_split(&self, split: &str) -> PathBuf {
        self.paths.dataset.join(format!("{split}.jsonl"))
    }

    pub fn normalization_path(&self) -> PathBuf {
        self.paths.dataset.join("normalization.json")
    }

    pub fn history_path(&self) -> PathBuf {
        self.paths.model.with_extension("history.json")
    }

    pub fn explanation_path(&self, kind: ExplainerKind) -> PathBuf {
        self.paths
            .explanations
            .join(format!("{}.jsonl", kind.name()))
    }

    pub fn separability_path(&self, kind: ExplainerKind) -> PathBuf {
        self.paths
            .report
            .join("separability")
            .join(format!("{}.json", kind.name()))
    }

    pub fn accuracy_path(&self) -> PathBuf {
        self.paths.report.join("accuracy.json")
    }
}
