mod common;

use std::collections::BTreeMap;
use std::process::Command;
use std::time::Instant;

use common::*;
use graphxq::explain::Explanation;
use graphxq::graph::{EntityGraph, NodeRecord};
use graphxq::io::{read_graphs, read_jsonl, write_graphs};
use graphxq::metrics::Report;
use graphxq::nn::GinModel;
use graphxq_cli::pipeline::SeparabilityFile;

fn smoke() -> Workspace {
    Workspace::new(bundled("smoke.toml"))
}

fn stderr(out: &std::process::Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn usage_errors_exit_with_one() {
    let bin = env!("CARGO_BIN_EXE_graphxq");
    let none = Command::new(bin).output().unwrap();
    assert_eq!(none.status.code(), Some(1));
    let unknown = Command::new(bin).arg("bake").output().unwrap();
    assert_eq!(unknown.status.code(), Some(1));
    let missing = Command::new(bin)
        .args(["train", "--config", "/nonexistent/run.toml"])
        .output()
        .unwrap();
    assert_eq!(missing.status.code(), Some(1));
    assert!(stderr(&missing).contains("/nonexistent/run.toml"));

    let ws = smoke();
    let bad = ws.run("explain", &["--explainer", "saliency"], None);
    assert_eq!(bad.status.code(), Some(1));
    assert!(stderr(&bad).contains("saliency"));
}

#[test]
fn missing_seed_is_a_usage_error() {
    let mut cfg = bundled("smoke.toml");
    cfg.seed = None;
    let ws = Workspace::new(cfg);
    assert_eq!(ws.run("synth", &[], None).status.code(), Some(1));
    assert!(ws.run("synth", &["--seed", "3"], None).status.success());
}

#[test]
fn data_errors_name_the_file_and_record() {
    let ws = smoke();
    let out = ws.run("build-graph", &[], None);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("train.jsonl"), "{}", stderr(&out));

    assert!(ws.run("synth", &[], None).status.success());
    let raw = ws.path("data/raw/val.jsonl");
    let mut lines: Vec<String> = std::fs::read_to_string(&raw)
        .unwrap()
        .lines()
        .map(String::from)
        .collect();
    lines[2] = lines[2].replacen("\"features\":[", "\"features\":[\"x\",", 1);
    std::fs::write(&raw, lines.join("\n")).unwrap();
    let out = ws.run("build-graph", &[], None);
    assert_eq!(out.status.code(), Some(2));
    let msg = stderr(&out);
    assert!(
        msg.contains("val.jsonl") && msg.contains("record 3"),
        "{msg}"
    );
}

#[test]
fn overflowing_features_are_numeric_failures() {
    let ws = smoke();
    let node = |x: f64| NodeRecord::new([x, 0.0], vec![f64::MAX; 8]);
    let graph = |label| {
        EntityGraph::new(
            vec![node(0.0), node(1.0), node(2.0)],
            [(0, 1), (1, 2)],
            Some(label),
        )
        .unwrap()
    };
    let graphs: Vec<EntityGraph> = (0..6).map(|i| graph(i % 3)).collect();
    for split in ["train", "val"] {
        write_graphs(&ws.path(&format!("data/{split}.jsonl")), &graphs).unwrap();
    }
    let out = ws.run("train", &[], None);
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
}

#[test]
fn outputs_are_reproducible_and_stages_isolated() {
    let ws = smoke();
    ws.run_all(None);
    let snapshot = |files: &[&str]| -> Vec<Vec<u8>> { files.iter().map(|f| ws.read(f)).collect() };

    let random = "explanations/random.jsonl";
    let explain = |seed: &str| {
        let out = ws.run("explain", &["--explainer", "random", "--seed", seed], None);
        assert!(out.status.success());
        ws.read(random)
    };
    let first = explain("7");
    assert_eq!(first, explain("7"));
    assert_ne!(first, explain("8"));
    assert_eq!(first, explain("7"));

    let report_files = [
        "report/separability/gnn_explainer.json",
        "report/accuracy.json",
        "report/report.json",
        "report/curves.csv",
        "report/planted_overlap.json",
    ];
    let reports = snapshot(&report_files);
    assert!(ws.run("evaluate", &[], None).status.success());
    assert!(ws.run("report", &[], None).status.success());
    assert_eq!(reports, snapshot(&report_files));

    let downstream = [
        "model.json",
        "explanations/gnn_explainer.jsonl",
        "explanations/graph_lrp.jsonl",
    ];
    let mut all: Vec<&str> = downstream.to_vec();
    all.extend(report_files);
    let kept = snapshot(&all);
    std::fs::remove_dir_all(ws.path("report")).unwrap();
    std::fs::remove_dir_all(ws.path("explanations")).unwrap();
    std::fs::remove_file(ws.path("model.json")).unwrap();
    for stage in ["train", "explain", "evaluate", "report"] {
        assert!(ws.run(stage, &[], Some(1)).status.success(), "{stage}");
    }
    assert_eq!(kept, snapshot(&all));
}

#[test]
fn synth_is_byte_identical_for_a_seed() {
    let a = smoke();
    let b = smoke();
    assert!(a.run("synth", &[], None).status.success());
    assert!(b.run("synth", &[], Some(1)).status.success());
    for f in [
        "data/raw/train.jsonl",
        "data/raw/val.jsonl",
        "data/raw/test.jsonl",
        "data/raw/planted.json",
    ] {
        assert_eq!(a.read(f), b.read(f), "{f}");
    }
    assert!(b.run("synth", &["--seed", "8"], None).status.success());
    assert_ne!(
        a.read("data/raw/train.jsonl"),
        b.read("data/raw/train.jsonl")
    );
}

#[test]
fn every_written_file_reads_back() {
    let ws = smoke();
    ws.run_all(None);
    for split in ["train", "val", "test"] {
        let raw = read_graphs(&ws.path(&format!("data/raw/{split}.jsonl"))).unwrap();
        let built = read_graphs(&ws.path(&format!("data/{split}.jsonl"))).unwrap();
        assert_eq!(raw.len(), built.len());
        assert!(built.iter().all(|g| !g.edges().is_empty()));
        for g in &built {
            for n in g.nodes() {
                assert_eq!(n.attributes.len(), 14);
                assert!(n.attributes.values().all(|v| (0.0..=1.0).contains(v)));
            }
        }
    }
    GinModel::load(&ws.path("model.json")).unwrap();
    let ex: Vec<Explanation> = read_jsonl(&ws.path("explanations/graph_grad_cam.jsonl")).unwrap();
    assert_eq!(ex.len(), 12);
    let sep: SeparabilityFile =
        serde_json::from_slice(&ws.read("report/separability/random.json")).unwrap();
    assert_eq!(sep.pairs.len(), 3);
    let report: Report = serde_json::from_slice(&ws.read("report/report.json")).unwrap();
    assert_eq!(report.len(), 5);
    assert!(report["gnn_explainer"].per_pair["benign-malignant"]
        .accuracy
        .is_some());
    let overlap: BTreeMap<String, f64> =
        serde_json::from_slice(&ws.read("report/planted_overlap.json")).unwrap();
    assert!(overlap.values().all(|v| (0.0..=1.0).contains(v)));
    let curves = String::from_utf8(ws.read("report/curves.csv")).unwrap();
    assert_eq!(curves.lines().count(), 1 + 5 * 3 * 5 * 10);
}

#[test]
fn smoke_pipeline_is_fast_on_one_thread() {
    let ws = smoke();
    let start = Instant::now();
    ws.run_all(Some(1));
    let secs = start.elapsed().as_secs_f64();
    assert!(secs < 120.0, "{secs:.1} s");
}

#[test]
fn without_a_planted_shift_accuracy_is_chance() {
    let mut cfg = bundled("planted.toml");
    let spec = cfg.synth.as_mut().unwrap();
    spec.per_class.train = 100;
    spec.per_class.val = 25;
    spec.per_class.test = 100;
    for c in &mut spec.classes {
        c.nodes = [20, 40];
        c.planted.size_shift = 0.0;
        c.planted.feature_offset = 0.0;
    }
    cfg.train.epochs = 10;
    cfg.explain.explainers = vec!["random".into()];
    let ws = Workspace::new(cfg);
    for stage in ["synth", "build-graph", "train", "explain", "evaluate"] {
        assert!(ws.run(stage, &[], None).status.success(), "{stage}");
    }
    let acc: BTreeMap<String, f64> =
        serde_json::from_slice(&ws.read("report/accuracy.json")).unwrap();
    let a = acc["normal-enlarged"];
    assert!((0.4..=0.6).contains(&a), "accuracy {a}");
}
