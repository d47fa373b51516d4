//! End-to-end runs of the `poserefer` binary on tiny synthetic data.

use std::ffi::OsStr;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use poserefer::cli::RunConfig;
use poserefer::synth::SynthConfig;

fn bin<S: AsRef<OsStr>>(args: &[S]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_poserefer"))
        .args(args)
        .env("POSEREFER_LOG", "warn")
        .env_remove("POSEREFER_CONFIG")
        .env_remove("POSEREFER_OUT")
        .env_remove("POSEREFER_SEED")
        .output()
        .expect("binary runs")
}

fn ok<S: AsRef<OsStr> + std::fmt::Debug>(args: &[S]) {
    let out = bin(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
}

fn error_json(out: &Output) -> serde_json::Value {
    let stderr = String::from_utf8_lossy(&out.stderr);
    let line = stderr.lines().rev().find(|l| l.starts_with('{')).expect("json error line");
    serde_json::from_str(line).unwrap()
}

struct Workspace {
    _dir: tempfile::TempDir,
    root: PathBuf,
}

impl Workspace {
    fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path().to_path_buf();
        let synth = SynthConfig { n_rooms: 3, n_refs: 90, ..SynthConfig::default() };
        std::fs::write(root.join("synth.json"), serde_json::to_string(&synth).unwrap()).unwrap();
        let mut run = RunConfig { configs: vec!["P".into(), "PT".into()], seeds: vec![0], folds: Some(vec![0]), ..RunConfig::default() };
        run.overrides.hidden = Some(8);
        run.train.schedule.total_epochs = 1;
        std::fs::write(root.join("run.json"), serde_json::to_string(&run).unwrap()).unwrap();
        Self { _dir: dir, root }
    }

    fn p(&self, rel: &str) -> String {
        self.root.join(rel).display().to_string()
    }

    fn gen_and_embed(&self) {
        ok(&["gen", "--config", &self.p("synth.json"), "--out", &self.p("data")]);
        ok(&["embed", "--data", &self.p("data"), "--pseudo", "--out", &self.p("emb")]);
    }
}

fn read(path: impl AsRef<Path>) -> Vec<u8> {
    std::fs::read(path.as_ref()).unwrap_or_else(|e| panic!("{}: {e}", path.as_ref().display()))
}

#[test]
fn staged_pipeline_matches_matrix() {
    let ws = Workspace::new();
    ws.gen_and_embed();
    let emb = ws.p("emb/embeddings.jsonl");
    ok(&["features", "--data", &ws.p("data"), "--embeddings", &emb, "--out", &ws.p("feat")]);
    let stage = |cmd: &str, out: &str| {
        vec![cmd.to_string(), "--data".into(), ws.p("data"), "--embeddings".into(), emb.clone(), "--features".into(), ws.p("feat"), "--config".into(), ws.p("run.json"), "--out".into(), ws.p(out)]
    };
    ok(&stage("train", "train"));
    let mut eval = stage("eval", "eval");
    eval.extend(["--checkpoints".into(), ws.p("train")]);
    ok(&eval);
    ok(&stage("matrix", "matrix"));

    assert!(Path::new(&ws.p("train/checkpoints/PT__seed0__fold0.jsonl")).exists());
    for f in ["report.md", "report.csv", "ttests.csv", "alphatrace.csv", "alphatrace.svg", "tiers.svg", "run_manifest.json"] {
        assert!(Path::new(&ws.p("matrix")).join(f).exists(), "{f}");
    }
    assert_eq!(read(ws.p("eval/results.jsonl")), read(ws.p("matrix/results.jsonl")));
    assert_eq!(read(ws.p("eval/report.csv")), read(ws.p("matrix/report.csv")));
}

#[test]
fn gen_is_deterministic() {
    let ws = Workspace::new();
    for out in ["a", "b"] {
        ok(&["gen", "--config", &ws.p("synth.json"), "--out", &ws.p(out)]);
    }
    for f in ["scenes.jsonl", "tracks.jsonl", "events.jsonl", "manifest.json"] {
        assert_eq!(read(ws.root.join("a").join(f)), read(ws.root.join("b").join(f)), "{f}");
    }
}

#[test]
fn missing_embeddings_names_the_path() {
    let ws = Workspace::new();
    ok(&["gen", "--config", &ws.p("synth.json"), "--out", &ws.p("data")]);
    let missing = ws.p("nowhere/embeddings.jsonl");
    let out = bin(&["matrix", "--data", &ws.p("data"), "--embeddings", &missing, "--out", &ws.p("m")]);
    assert_eq!(out.status.code(), Some(1));
    let err = error_json(&out);
    assert_eq!(err["error"], "io");
    assert!(err["message"].as_str().unwrap().contains(&missing), "{err}");
}

#[test]
fn stale_embeddings_are_refused() {
    let ws = Workspace::new();
    ws.gen_and_embed();
    ok(&["--seed", "99", "gen", "--config", &ws.p("synth.json"), "--out", &ws.p("data")]);
    let out = bin(&["matrix", "--data", &ws.p("data"), "--embeddings", &ws.p("emb/embeddings.jsonl"), "--config", &ws.p("run.json"), "--out", &ws.p("m")]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(error_json(&out)["error"], "config_hash_mismatch");
}

#[test]
fn embed_requires_a_source() {
    let ws = Workspace::new();
    ok(&["gen", "--config", &ws.p("synth.json"), "--out", &ws.p("data")]);
    let out = bin(&["embed", "--data", &ws.p("data"), "--out", &ws.p("emb")]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(error_json(&out)["error"], "config");
}
