#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use graphxq::graph::{EntityGraph, NodeRecord};
use graphxq::nn::{GinArchitecture, GinModel};
use graphxq_cli::config::RunConfig;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tempfile::TempDir;

pub const STAGES: [&str; 6] = [
    "synth",
    "build-graph",
    "train",
    "explain",
    "evaluate",
    "report",
];

pub fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

pub fn bundled(name: &str) -> RunConfig {
    let text = std::fs::read_to_string(configs_dir().join(name)).unwrap();
    RunConfig::parse(&text).unwrap()
}

/// A pipeline run rooted in a temporary directory.
pub struct Workspace {
    pub dir: TempDir,
    pub config: PathBuf,
}

impl Workspace {
    /// Writes `cfg` with every artifact path moved under a fresh directory.
    pub fn new(mut cfg: RunConfig) -> Self {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path();
        cfg.paths.dataset = root.join("data");
        cfg.paths.model = root.join("model.json");
        cfg.paths.explanations = root.join("explanations");
        cfg.paths.report = root.join("report");
        let configs = configs_dir().canonicalize().unwrap();
        if let Some(p) = &mut cfg.paths.prior {
            *p = configs.join(p.file_name().unwrap());
        }
        let config = root.join("run.toml");
        std::fs::write(&config, toml::to_string(&cfg).unwrap()).unwrap();
        Self { dir, config }
    }

    pub fn path(&self, rel: &str) -> PathBuf {
        self.dir.path().join(rel)
    }

    pub fn run(&self, stage: &str, extra: &[&str], threads: Option<usize>) -> Output {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_graphxq"));
        cmd.arg(stage).arg("--config").arg(&self.config).args(extra);
        cmd.env("RUST_LOG", "warn");
        match threads {
            Some(n) => cmd.env("GRAPHXQ_THREADS", n.to_string()),
            None => cmd.env_remove("GRAPHXQ_THREADS"),
        };
        cmd.output().unwrap()
    }

    /// Runs every stage in order; panics with stderr on the first failure.
    pub fn run_all(&self, threads: Option<usize>) {
        for stage in STAGES {
            let out = self.run(stage, &[], threads);
            assert!(
                out.status.success(),
                "{stage} failed: {}",
                String::from_utf8_lossy(&out.stderr)
            );
        }
    }

    pub fn read(&self, rel: &str) -> Vec<u8> {
        std::fs::read(self.path(rel)).unwrap_or_else(|e| panic!("{rel}: {e}"))
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random graph with features in `[0, 1)` and roughly `degree` edges per node.
pub fn random_graph(rng: &mut ChaCha8Rng, n: usize, dim: usize, degree: f64) -> EntityGraph {
    let nodes = (0..n)
        .map(|_| {
            NodeRecord::new(
                [rng.random_range(0.0..200.0), rng.random_range(0.0..200.0)],
                (0..dim).map(|_| rng.random_range(0.0..1.0)).collect(),
            )
        })
        .collect();
    let p = (degree / n.max(2) as f64).min(1.0);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.random_bool(p) {
                edges.push((u, v));
            }
        }
    }
    EntityGraph::new(nodes, edges, Some(0)).unwrap()
}

pub fn model(input: usize, hidden: usize, classes: usize, seed: u64) -> GinModel {
    let mut arch = GinArchitecture::new(input, classes);
    arch.hidden_dim = hidden;
    GinModel::init(arch, seed).unwrap()
}

pub fn bias_free(mut m: GinModel) -> GinModel {
    for d in m.dense_layers_mut() {
        d.bias.fill(0.0);
    }
    m
}

pub fn permutation(rng: &mut ChaCha8Rng, n: usize) -> Vec<usize> {
    let mut p: Vec<usize> = (0..n).collect();
    p.shuffle(rng);
    p
}

/// `||a - b|| / max(||a||, ||b||)`, or the absolute norm when both are tiny.
pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let scale = norm(a).max(norm(b));
    if scale < 1e-12 {
        norm(&diff)
    } else {
        norm(&diff) / scale
    }
}
