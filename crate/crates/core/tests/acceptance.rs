//! Acceptance suite. Each test prints one `criterion N ... PASS|FAIL` line
//! and then asserts. The line is written to the stdout handle directly so it
//! shows up even when the harness captures output.
//!
//! Criteria 4 to 6 share one trained matrix (5 configs x 3 seeds x 5 folds),
//! computed once per process.

use std::f64::consts::PI;
use std::io::Write;
use std::sync::{Arc, OnceLock};
use std::time::{Duration, Instant};

use clap::Parser;
use proptest::prelude::*;
use proptest::test_runner::{Config as PropConfig, TestCaseError, TestRunner};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use poserefer::affordance::{channel_angle, gaussian_score, pose_features, KernelConfig};
use poserefer::cli::{run, Cli, RunConfig};
use poserefer::domain::{Channel, PoseTrack, RefType, ReferenceEvent, Tier, Vec3};
use poserefer::embedding::pseudo_store;
use poserefer::eval::{
    aggregate, loro_folds, recombine, run_matrix, singleton_oracle, stratify, topk, Axis, MatrixInputs, MatrixOutput,
    MatrixSpec, ResultRecord, NON_POINTING, POINTING,
};
use poserefer::fusion::{
    build_samples, rank_of, CategoryIndex, CategoryInputs, FusionModel, GradProbe, ModelConfig, Sample, TrainConfig,
};
use poserefer::neural::{grad_check, znorm, Parameterized};
use poserefer::synth::{gen_dataset, SynthConfig};

fn report(n: u32, name: &str, pass: bool, detail: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let line = format!("criterion {n:>2} {name:<28} {verdict}  {detail}\n");
    let mut out = std::io::stdout().lock();
    out.write_all(line.as_bytes()).and_then(|()| out.flush()).expect("stdout");
}

fn v(x: f64, y: f64, z: f64) -> Vec3 {
    Vec3 { x, y, z }
}

fn random_sample(rng: &mut ChaCha8Rng, n: usize, dim: usize, cats: usize) -> Sample {
    Sample {
        ref_id: "r".into(),
        room_id: "room".into(),
        pose_features: (0..n * 6).map(|_| rng.gen_range(0.0..1.0)).collect(),
        utterance: Arc::from((0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect::<Vec<_>>()),
        category_ids: (0..n).map(|_| rng.gen_range(0..cats)).collect(),
        target: rng.gen_range(0..n),
        tier: Tier::T1,
        ref_type: RefType::ExactNp,
    }
}

fn small_model(name: &str, hidden: usize, dim: usize, cats: usize, rng: &mut ChaCha8Rng) -> FusionModel {
    let mut config = ModelConfig::preset(name, dim).unwrap();
    config.hidden = hidden;
    FusionModel::new(config, CategoryInputs { num_categories: cats, frozen: None }, rng).unwrap()
}

fn param<'a>(model: &'a FusionModel, name: &str) -> &'a [f64] {
    &model.params().into_iter().find(|p| p.name == name).unwrap_or_else(|| panic!("no param {name}")).value
}

/// `W x + b` with `W` stored row-major as `out x in`.
fn affine(w: &[f64], b: Option<&[f64]>, x: &[f64]) -> Vec<f64> {
    let n_in = x.len();
    (0..w.len() / n_in)
        .map(|o| {
            let dot: f64 = (0..n_in).map(|i| w[o * n_in + i] * x[i]).sum();
            dot + b.map_or(0.0, |b| b[o])
        })
        .collect()
}

fn relu(x: Vec<f64>) -> Vec<f64> {
    x.into_iter().map(|a| a.max(0.0)).collect()
}

fn add(a: Vec<f64>, b: &[f64]) -> Vec<f64> {
    a.into_iter().zip(b).map(|(x, y)| x + y).collect()
}

fn table_row(table: &[f64], dim: usize, c: usize) -> &[f64] {
    &table[c * dim..(c + 1) * dim]
}

#[test]
fn criterion_01_analytic_kernels() {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for sigma_deg in [15.0, 30.0, 45.0, 7.5] {
        let s = sigma_deg * PI / 180.0;
        for (theta, want) in [(0.0, 1.0), (s, (-0.5f64).exp()), (2.0 * s, (-2.0f64).exp())] {
            worst = worst.max((gaussian_score(theta, sigma_deg) - want).abs());
        }
    }
    let kernel_ok = worst <= 1e-12;

    let o = v(1.0, -2.0, 0.5);
    let angle_cases = [
        (v(1.0, 0.0, 0.0), o + v(3.0, 0.0, 0.0), 0.0),
        (v(1.0, 0.0, 0.0), o + v(-2.0, 0.0, 0.0), PI),
        (v(0.0, 0.0, 2.0), o + v(0.0, 5.0, 0.0), PI / 2.0),
        (v(1.0, 1.0, 0.0), o + v(4.0, 0.0, 0.0), PI / 4.0),
        (v(0.0, 1.0, 0.0), o, PI),
    ];
    let angle_err = angle_cases
        .iter()
        .map(|&(d, c, want)| (channel_angle(d, o, c) - want).abs())
        .fold(0.0, f64::max);
    let angle_ok = angle_err <= 1e-9;
    let elapsed = start.elapsed();
    let pass = kernel_ok && angle_ok && elapsed < Duration::from_secs(1);
    report(1, "analytic kernel suite", pass, &format!("kernel err {worst:.1e}, angle err {angle_err:.1e}, {elapsed:?}"));
    assert!(pass);
}

#[test]
fn criterion_02_gradient_integrity() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let mut model = small_model("PT", 12, 10, 6, &mut rng);
    model.gate.value[0] = 0.4;
    let samples: Vec<Sample> = (0..4).map(|i| random_sample(&mut rng, 3 + i, 10, 6)).collect();
    let refs: Vec<&Sample> = samples.iter().collect();
    let mut probe = GradProbe { model: &mut model, samples: &refs };
    let always = ["gate.w", "pose.cat_table", "text.cat_table"];
    let report_ = grad_check(&mut probe, 1e-5, 200, &always, &mut rng);
    let checked = report_.checked_params();
    let covers = always.iter().all(|name| checked.contains(name));
    let elapsed = start.elapsed();
    let pass = report_.max_rel_error < 1e-4 && report_.coords.len() >= 200 && covers && elapsed < Duration::from_secs(30);
    report(
        2,
        "gradient integrity",
        pass,
        &format!("{} coords, max rel err {:.2e}, {elapsed:?}", report_.coords.len(), report_.max_rel_error),
    );
    assert!(pass, "{:?}", report_.worst());
}

/// Per-frame pooled kernel scores computed directly from the frame data.
fn brute_force_features(event: &ReferenceEvent, track: &PoseTrack, centroid: Vec3) -> [f64; 6] {
    let last = track.frames.len() as i64 - 1;
    let clamp = |a: i64, b: i64| (a.max(0) as usize)..=(b.min(last) as usize);
    let arm = clamp(event.hold_frame - 10, event.hold_frame + 10);
    let hb = clamp(
        ((event.phrase_start_s - 0.5) * track.fps).floor() as i64,
        ((event.phrase_end_s + 0.5) * track.fps).ceil() as i64,
    );
    let score = |f: usize, ch: Channel, sigma_deg: f64| {
        let ray = track.frames[f].channel(ch);
        let to = centroid - ray.origin;
        let d = ray.direction;
        let theta = d.cross(to).norm().atan2(d.dot(to));
        let s = sigma_deg * PI / 180.0;
        (-theta * theta / (2.0 * s * s)).exp()
    };
    let pool = |range: std::ops::RangeInclusive<usize>, ch: Channel, sigma: f64| {
        let vals: Vec<f64> = range.map(|f| score(f, ch, sigma)).collect();
        let max = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        (max, vals.iter().sum::<f64>() / vals.len() as f64)
    };
    let (ra_max, ra_mean) = pool(arm.clone(), Channel::RArm, 15.0);
    let (la_max, la_mean) = pool(arm, Channel::LArm, 15.0);
    let (head_max, _) = pool(hb.clone(), Channel::Head, 30.0);
    let (_, body_mean) = pool(hb, Channel::Body, 45.0);
    [ra_max, ra_mean, la_max, la_mean, head_max, body_mean]
}

#[test]
fn criterion_03_oracle_equivalence() {
    let cfg = SynthConfig { n_refs: 120, ..SynthConfig::default() };
    let (ds, _) = gen_dataset(&cfg).unwrap();
    let kernel = KernelConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(30);
    let mut feat_err: f64 = 0.0;
    for _ in 0..100 {
        let event = &ds.events[rng.gen_range(0..ds.events.len())];
        let scene = &ds.scenes[&event.room_id];
        let object = &scene.objects[rng.gen_range(0..scene.objects.len())];
        let track = &ds.tracks[&event.ref_id];
        let got = pose_features(event, track, object.centroid, &kernel).unwrap().to_array();
        let want = brute_force_features(event, track, object.centroid);
        for (a, b) in got.iter().zip(&want) {
            feat_err = feat_err.max((a - b).abs());
        }
    }

    let (hidden, dim, cats, cat_dim) = (4, 5, 4, 16);
    let mut model = small_model("PT", hidden, dim, cats, &mut rng);
    for p in model.params_mut() {
        for x in &mut p.value {
            *x = rng.gen_range(-1.0..1.0);
        }
    }
    let sample = random_sample(&mut rng, 3, dim, cats);
    let got = model.score(&model.projections(), &sample).unwrap();

    let pose: Vec<f64> = (0..3)
        .map(|n| {
            let c = sample.category_ids[n];
            let cat = affine(param(&model, "pose.enc1_cat.weight"), None, table_row(param(&model, "pose.cat_table"), cat_dim, c));
            let h1 = relu(add(affine(param(&model, "pose.enc1.weight"), Some(param(&model, "pose.enc1.bias")), sample.feature_row(n)), &cat));
            let h2 = relu(affine(param(&model, "pose.enc2.weight"), Some(param(&model, "pose.enc2.bias")), &h1));
            let h3 = relu(affine(param(&model, "pose.sc1.weight"), Some(param(&model, "pose.sc1.bias")), &h2));
            affine(param(&model, "pose.sc2.weight"), Some(param(&model, "pose.sc2.bias")), &h3)[0]
        })
        .collect();
    let u = affine(param(&model, "text.proj.weight"), Some(param(&model, "text.proj.bias")), &sample.utterance);
    let b = affine(param(&model, "text.sc1.weight"), Some(param(&model, "text.sc1.bias")), &u);
    let text: Vec<f64> = (0..3)
        .map(|n| {
            let c = sample.category_ids[n];
            let cat = affine(param(&model, "text.sc1_cat.weight"), None, table_row(param(&model, "text.cat_table"), cat_dim, c));
            let h = relu(add(b.clone(), &cat));
            affine(param(&model, "text.sc2.weight"), Some(param(&model, "text.sc2.bias")), &h)[0]
        })
        .collect();
    let z = |s: &[f64]| {
        let m = s.iter().sum::<f64>() / 3.0;
        let sd = (s.iter().map(|x| (x - m).powi(2)).sum::<f64>() / 3.0).sqrt();
        s.iter().map(|x| (x - m) / (sd + 1e-8)).collect::<Vec<f64>>()
    };
    let alpha = 1.0 / (1.0 + (-param(&model, "gate.w")[0]).exp());
    let want: Vec<f64> = z(&pose).iter().zip(z(&text)).map(|(p, t)| alpha * p + (1.0 - alpha) * t).collect();
    let fwd_err = got.iter().zip(&want).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);

    let pass = feat_err <= 1e-12 && fwd_err <= 1e-12;
    report(3, "oracle equivalence", pass, &format!("features err {feat_err:.1e}, forward err {fwd_err:.1e}"));
    assert!(pass);
}

struct Matrix {
    out: MatrixOutput,
    elapsed: Duration,
}

/// Configs P, T_minilm, PT_nocat, PT and PT_minilm on the default synthetic
/// dataset, seeds 0..3, all five folds, single worker.
fn matrix() -> &'static Matrix {
    static CELL: OnceLock<Matrix> = OnceLock::new();
    CELL.get_or_init(|| {
        let start = Instant::now();
        let (ds, manifest) = gen_dataset(&SynthConfig::default()).unwrap();
        let store = pseudo_store(&manifest.embedder, manifest.all_keys()).unwrap();
        let cats = CategoryIndex::from_dataset(&ds);
        let frozen = cats.frozen_vectors(&store).unwrap();
        let run = RunConfig::default();
        let (samples, _) = build_samples(&ds, &store, &run.kernel, &cats, None).unwrap();
        let configs = ["P", "T_minilm", "PT_nocat", "PT", "PT_minilm"]
            .iter()
            .map(|n| ModelConfig::preset(n, store.dim()).unwrap())
            .collect();
        let spec = MatrixSpec {
            configs,
            seeds: run.seeds.clone(),
            master_seed: run.master_seed,
            train: TrainConfig::default(),
            folds: None,
        };
        let inputs = MatrixInputs { samples: &samples, num_categories: cats.len(), frozen: Some(&frozen) };
        let out = run_matrix(inputs, &spec, 1).unwrap();
        println!("{}", poserefer::eval::report::report_md(&out));
        Matrix { out, elapsed: start.elapsed() }
    })
}

#[test]
fn criterion_04_gate_flip() {
    let m = matrix();
    let finals = |name: &str| -> Vec<f64> {
        m.out.alphas.iter().filter(|a| a.config_name == name).map(|a| a.alpha_final()).collect()
    };
    let spread = |v: &[f64]| {
        v.iter().cloned().fold(f64::MIN, f64::max) - v.iter().cloned().fold(f64::MAX, f64::min)
    };
    let (nocat, pt) = (finals("PT_nocat"), finals("PT"));
    let nocat_ok = nocat.len() == 15 && nocat.iter().all(|&a| a > 0.7);
    let pt_ok = pt.len() == 15 && pt.iter().all(|&a| a < 0.35);
    let spread_ok = spread(&nocat) < 0.1 && spread(&pt) < 0.1;
    let pass = nocat_ok && pt_ok && spread_ok;
    let range = |v: &[f64]| format!("[{:.3}, {:.3}]", v.iter().cloned().fold(f64::MAX, f64::min), v.iter().cloned().fold(f64::MIN, f64::max));
    report(
        4,
        "gate flip",
        pass,
        &format!(
            "PT_nocat alpha {} PT alpha {} (matrix wall time {:.0?})",
            range(&nocat),
            range(&pt),
            m.elapsed
        ),
    );
    assert!(pass);
}

fn regime_top1(m: &Matrix, config: &str, regime: &str) -> f64 {
    let row = m.out.table.row(config).unwrap();
    row.stratum(Axis::Regime, regime).and_then(|c| c.top1).unwrap().mean
}

#[test]
fn criterion_05_complementarity() {
    let m = matrix();
    let pose_ptg = regime_top1(m, "P", POINTING);
    let text_ptg = regime_top1(m, "T_minilm", POINTING);
    let pose_non = regime_top1(m, "P", NON_POINTING);
    let text_non = regime_top1(m, "T_minilm", NON_POINTING);
    let pass = pose_ptg - text_ptg >= 5.0 && text_non - pose_non >= 10.0;
    report(
        5,
        "complementarity",
        pass,
        &format!(
            "pointing P {pose_ptg:.1} vs T_minilm {text_ptg:.1}; non-pointing T_minilm {text_non:.1} vs P {pose_non:.1}"
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_06_fusion_wins() {
    let m = matrix();
    let t = &m.out.table;
    let top1 = |name: &str| t.row(name).unwrap().overall.top1.unwrap().mean;
    let (fused, pose, text) = (top1("PT_minilm"), top1("P"), top1("T_minilm"));
    let oracle = t.singleton_oracle.unwrap();
    let p_vs = |b: &str| {
        t.ttests
            .iter()
            .find(|r| r.a == "PT_minilm" && r.b == b)
            .and_then(|r| r.result.as_ref())
            .map_or(1.0, |r| if r.mean_diff > 0.0 { r.p } else { 1.0 })
    };
    let (p_pose, p_text) = (p_vs("P"), p_vs("T_minilm"));
    let margin_ok = fused - pose >= 2.0 && fused - text >= 2.0 && fused - oracle >= 2.0;
    let pass = margin_ok && p_pose < 0.05 && p_text < 0.05;
    report(
        6,
        "fusion wins",
        pass,
        &format!(
            "PT_minilm {fused:.1} vs P {pose:.1} (p={p_pose:.2e}), T_minilm {text:.1} (p={p_text:.2e}), oracle {oracle:.2}"
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_07_oracle_formula() {
    let got = singleton_oracle(27.9, 2068, 27.2, 1696);
    let pass = (got - 27.58).abs() <= 0.05;
    report(7, "singleton oracle formula", pass, &format!("{got:.4}"));
    assert!(pass);
}

#[test]
fn criterion_08_random_baseline() {
    let mut rng = ChaCha8Rng::seed_from_u64(80);
    let trials = 50_000;
    let (mut h1, mut h5) = (0usize, 0usize);
    for _ in 0..trials {
        let scores: Vec<f64> = (0..50).map(|_| rng.gen::<f64>()).collect();
        let rank = rank_of(&scores, rng.gen_range(0..50));
        h1 += topk(rank, 1) as usize;
        h5 += topk(rank, 5) as usize;
    }
    let (top1, top5) = (100.0 * h1 as f64 / trials as f64, 100.0 * h5 as f64 / trials as f64);
    let pass = (top1 - 2.0).abs() <= 0.5 && (top5 - 10.0).abs() <= 1.0;
    report(8, "random baseline", pass, &format!("top-1 {top1:.2}%, top-5 {top5:.2}% over {trials} trials"));
    assert!(pass);
}

fn cli(args: &[&str]) {
    let mut argv = vec!["poserefer", "--workers", "1"];
    argv.extend_from_slice(args);
    run(Cli::try_parse_from(argv).unwrap()).unwrap();
}

#[test]
fn criterion_09_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let p = |s: &str| dir.path().join(s).display().to_string();
    let synth = SynthConfig { n_rooms: 3, n_refs: 150, ..SynthConfig::default() };
    std::fs::write(p("synth.json"), serde_json::to_string(&synth).unwrap()).unwrap();
    let mut run_cfg = RunConfig {
        configs: vec!["P".into(), "T_minilm".into(), "PT".into()],
        seeds: vec![0, 1],
        ..RunConfig::default()
    };
    run_cfg.overrides.hidden = Some(16);
    run_cfg.train.schedule.total_epochs = 2;
    std::fs::write(p("run.json"), serde_json::to_string(&run_cfg).unwrap()).unwrap();

    cli(&["gen", "--config", &p("synth.json"), "--out", &p("data")]);
    cli(&["embed", "--data", &p("data"), "--pseudo", "--out", &p("emb")]);
    let emb = p("emb/embeddings.jsonl");
    for out in ["a", "b"] {
        cli(&["matrix", "--data", &p("data"), "--embeddings", &emb, "--config", &p("run.json"), "--out", &p(out)]);
    }
    let same = |f: &str| std::fs::read(dir.path().join("a").join(f)).unwrap() == std::fs::read(dir.path().join("b").join(f)).unwrap();
    let (csv, jsonl) = (same("report.csv"), same("results.jsonl"));
    let pass = csv && jsonl;
    report(9, "determinism", pass, &format!("report.csv identical: {csv}, results.jsonl identical: {jsonl}"));
    assert!(pass);
}

const CASES: u32 = 1000;

fn check(name: &str, outcome: Result<(), String>, failures: &mut Vec<String>) {
    match outcome {
        Ok(()) => println!("    {name}: {CASES} cases ok"),
        Err(e) => {
            println!("    {name}: {e}");
            failures.push(name.to_string());
        }
    }
}

fn runner() -> TestRunner {
    TestRunner::new(PropConfig { cases: CASES, failure_persistence: None, ..PropConfig::default() })
}

fn bits(v: &[f64]) -> Vec<u64> {
    v.iter().map(|x| x.to_bits()).collect()
}

fn perturb(model: &mut FusionModel, prefix: &str, rng: &mut ChaCha8Rng) {
    for p in model.params_mut() {
        if p.name.starts_with(prefix) {
            for x in &mut p.value {
                *x += rng.gen_range(-0.5..0.5);
            }
        }
    }
}

fn decoupling() -> Result<(), String> {
    runner()
        .run(&(any::<u64>(), 2usize..10), |(seed, n)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut model = small_model("PT", 6, 4, 5, &mut rng);
            let s = random_sample(&mut rng, n, 4, 5);
            let pose = model.pose_scores(&model.projections(), &s).unwrap();
            let text = model.text_scores(&model.projections(), &s).unwrap();
            perturb(&mut model, "text.", &mut rng);
            perturb(&mut model, "gate.", &mut rng);
            prop_assert_eq!(bits(&model.pose_scores(&model.projections(), &s).unwrap()), bits(&pose));
            let text_after = model.text_scores(&model.projections(), &s).unwrap();
            perturb(&mut model, "pose.", &mut rng);
            prop_assert_eq!(bits(&model.text_scores(&model.projections(), &s).unwrap()), bits(&text_after));
            prop_assert_eq!(text.len(), n);
            Ok(())
        })
        .map_err(|e| e.to_string())
}

fn permutation_equivariance() -> Result<(), String> {
    runner()
        .run(&(any::<u64>(), 2usize..12, prop::sample::select(vec!["P", "T_minilm", "PT", "PT_nocat"])), |(seed, n, name)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut config = ModelConfig::preset(name, 4).unwrap();
            config.hidden = 6;
            let frozen: Vec<Vec<f64>> = (0..5).map(|_| (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
            let model = FusionModel::new(config, CategoryInputs { num_categories: 5, frozen: Some(&frozen) }, &mut rng).unwrap();
            let s = random_sample(&mut rng, n, 4, 5);
            let mut perm: Vec<usize> = (0..n).collect();
            perm.shuffle(&mut rng);
            let proj = model.projections();
            let base = model.score(&proj, &s).unwrap();
            let moved = model.score(&proj, &s.permuted(&perm)).unwrap();
            for (i, &p) in perm.iter().enumerate() {
                prop_assert!((moved[i] - base[p]).abs() <= 1e-12 * (1.0 + base[p].abs()), "{} vs {}", moved[i], base[p]);
            }
            Ok(())
        })
        .map_err(|e| e.to_string())
}

fn znorm_statistics() -> Result<(), String> {
    let spread = prop::collection::vec(-1e3f64..1e3, 1..60);
    runner()
        .run(&(spread, -50.0f64..50.0, 1usize..40), |(xs, c, len)| {
            let z = znorm(&xs);
            let n = xs.len() as f64;
            let mean = xs.iter().sum::<f64>() / n;
            let sd = (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt();
            let out_mean = z.output.iter().sum::<f64>() / n;
            let out_sd = (z.output.iter().map(|x| (x - out_mean).powi(2)).sum::<f64>() / n).sqrt();
            prop_assert!(out_mean.abs() < 1e-10, "mean {}", out_mean);
            if sd > 1e-6 {
                prop_assert!((out_sd - sd / (sd + 1e-8)).abs() < 1e-10, "std {} for input std {}", out_sd, sd);
            }
            let flat = znorm(&vec![c; len]);
            prop_assert!(flat.output.iter().all(|&x| x == 0.0));
            Ok(())
        })
        .map_err(|e| e.to_string())
}

fn record(rank: usize, tier: usize, ref_type: usize) -> ResultRecord {
    ResultRecord {
        ref_id: String::new(),
        config_name: "X".into(),
        seed: 0,
        fold: 0,
        room_id: "r".into(),
        rank_of_target: rank,
        num_candidates: 60,
        tier: Tier::ALL[tier],
        ref_type: RefType::ALL[ref_type],
    }
}

fn stratified_identity() -> Result<(), String> {
    let recs = prop::collection::vec((1usize..60, 0usize..5, 0usize..3), 1..200);
    runner()
        .run(&recs, |raw| {
            let records: Vec<ResultRecord> = raw.iter().map(|&(r, t, k)| record(r, t, k)).collect();
            let refs: Vec<&ResultRecord> = records.iter().collect();
            for axis in Axis::ALL {
                let strata = stratify(&refs, axis);
                prop_assert_eq!(strata.iter().map(|s| s.n).sum::<usize>(), refs.len());
                for k in [1, 5] {
                    let overall = aggregate(&refs, k).unwrap();
                    prop_assert_eq!(recombine(&strata, k).unwrap(), overall);
                    let weighted: f64 = strata
                        .iter()
                        .filter_map(|s| {
                            let acc = if k == 1 { s.top1() } else { s.top5() };
                            acc.map(|a| a * s.n as f64)
                        })
                        .sum::<f64>()
                        / refs.len() as f64;
                    prop_assert!((weighted - overall).abs() < 1e-9);
                }
            }
            Ok(())
        })
        .map_err(|e| e.to_string())
}

fn fold_partition() -> Result<(), String> {
    let input = (2usize..8).prop_flat_map(|rooms| (Just(rooms), prop::collection::vec(0..rooms, 0..120)));
    runner()
        .run(&input, |(n_rooms, items)| {
            let rooms: Vec<String> = (0..n_rooms).map(|r| format!("room_{r}")).collect();
            let items: Vec<(usize, String)> = items.into_iter().enumerate().map(|(i, r)| (i, rooms[r].clone())).collect();
            let plan = loro_folds(&rooms).map_err(|e| TestCaseError::fail(e.to_string()))?;
            prop_assert_eq!(plan.len(), n_rooms);
            let mut tested: Vec<&str> = plan.folds.iter().map(|f| f.test_room.as_str()).collect();
            tested.sort_unstable();
            tested.dedup();
            prop_assert_eq!(tested.len(), n_rooms);
            for (f, fold) in plan.folds.iter().enumerate() {
                prop_assert!(!fold.train_rooms.contains(&fold.test_room));
                prop_assert_eq!(fold.train_rooms.len() + 1, n_rooms);
                let (train, test) = plan.split(f, &items, |it| it.1.as_str());
                prop_assert_eq!(train.len() + test.len(), items.len());
                prop_assert!(test.iter().all(|it| it.1 == fold.test_room));
                prop_assert!(train.iter().all(|it| it.1 != fold.test_room && fold.train_rooms.contains(&it.1)));
                let mut ids: Vec<usize> = train.iter().chain(&test).map(|it| it.0).collect();
                ids.sort_unstable();
                prop_assert_eq!(ids, (0..items.len()).collect::<Vec<_>>());
            }
            Ok(())
        })
        .map_err(|e| e.to_string())
}

#[test]
fn criterion_10_invariant_suites() {
    let mut failures = Vec::new();
    check("decoupling", decoupling(), &mut failures);
    check("permutation equivariance", permutation_equivariance(), &mut failures);
    check("znorm statistics", znorm_statistics(), &mut failures);
    check("stratified weighted mean", stratified_identity(), &mut failures);
    check("fold partition", fold_partition(), &mut failures);
    let pass = failures.is_empty();
    let detail = if pass { format!("5 suites x {CASES} cases") } else { format!("failed: {}", failures.join(", ")) };
    report(10, "invariant suites", pass, &detail);
    assert!(pass);
}
