//! The (config x seed x fold) experiment matrix and its summary table.

use std::collections::BTreeMap;

use rand::rngs::mock::StepRng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::folds::{loro_folds, FoldPlan};
use super::metrics::{aggregate, singleton_oracle, Axis, NON_POINTING, POINTING};
use super::records::{AlphaRecord, ResultRecord};
use super::stats::{paired_t, TTest};
use crate::error::{Error, Result};
use crate::fusion::{rank_of, train_model, CategoryInputs, FusionModel, ModelConfig, RunSeeds, Sample, StackedBatch, TrainConfig};
use crate::neural::Mode;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixSpec {
    pub configs: Vec<ModelConfig>,
    pub seeds: Vec<u64>,
    pub master_seed: u64,
    pub train: TrainConfig,
    /// Only these fold indices; all folds when absent.
    #[serde(default)]
    pub folds: Option<Vec<usize>>,
}

#[derive(Debug, Clone, Copy)]
pub struct MatrixInputs<'a> {
    pub samples: &'a [Sample],
    pub num_categories: usize,
    pub frozen: Option<&'a [Vec<f64>]>,
}

impl<'a> MatrixInputs<'a> {
    pub fn categories(&self) -> CategoryInputs<'a> {
        CategoryInputs {
            num_categories: self.num_categories,
            frozen: self.frozen,
        }
    }
}

/// Comparisons reported whenever both configs are present.
pub const TTEST_PAIRS: [(&str, &str); 4] =
    [("PT_minilm", "P"), ("PT_minilm", "T_minilm"), ("PT_minilm", "PT"), ("T_minilm", "T")];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    /// Sample standard deviation; 0 for a single value.
    pub std: f64,
}

impl MeanStd {
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() < 2 {
            0.0
        } else {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        };
        Some(Self { mean, std })
    }
}

/// Accuracy of one stratum, mean and std over seed-level aggregates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub key: String,
    /// Stratum size per seed.
    pub n: usize,
    pub top1: Option<MeanStd>,
    pub top5: Option<MeanStd>,
    /// Top-1 per seed, in seed order.
    pub top1_by_seed: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigRow {
    pub config_name: String,
    pub overall: Cell,
    /// Fused configs only: fold-mean final gate per seed, summarized.
    pub alpha: Option<MeanStd>,
    pub strata: BTreeMap<Axis, Vec<Cell>>,
}

impl ConfigRow {
    pub fn stratum(&self, axis: Axis, key: &str) -> Option<&Cell> {
        self.strata.get(&axis)?.iter().find(|c| c.key == key)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TTestRow {
    pub a: String,
    pub b: String,
    pub result: Option<TTest>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportTable {
    pub seeds: Vec<u64>,
    pub test_rooms: Vec<String>,
    pub rows: Vec<ConfigRow>,
    /// Per-subset best of P and T_minilm, when both ran.
    pub singleton_oracle: Option<f64>,
    pub ttests: Vec<TTestRow>,
}

impl ReportTable {
    pub fn row(&self, config_name: &str) -> Option<&ConfigRow> {
        self.rows.iter().find(|r| r.config_name == config_name)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatrixOutput {
    pub records: Vec<ResultRecord>,
    pub alphas: Vec<AlphaRecord>,
    pub table: ReportTable,
}

/// 1-based target rank of every sample under `model`, dropout off.
pub fn evaluate_ranks(model: &FusionModel, samples: &[&Sample]) -> Result<Vec<usize>> {
    let proj = model.projections();
    let mut ranks = Vec::with_capacity(samples.len());
    for chunk in samples.chunks(256) {
        let batch = StackedBatch::new(chunk);
        let tape = model.forward(&proj, &batch, Mode::Eval, &mut StepRng::new(0, 0))?;
        for (i, s) in chunk.iter().enumerate() {
            ranks.push(rank_of(&tape.scores[batch.range(i)], s.target));
        }
    }
    Ok(ranks)
}

struct CellOutput {
    records: Vec<ResultRecord>,
    alpha: AlphaRecord,
}

fn run_cell(
    inputs: MatrixInputs<'_>,
    plan: &FoldPlan,
    spec: &MatrixSpec,
    config: &ModelConfig,
    seed: u64,
    fold: usize,
) -> Result<CellOutput> {
    let (train, test) = plan.split(fold, inputs.samples, |s| s.room_id.as_str());
    let test_room = plan.folds[fold].test_room.clone();
    if test.is_empty() {
        return Err(Error::Config(format!("fold {fold}: no test samples in {test_room}")));
    }
    let seeds = RunSeeds {
        master: spec.master_seed,
        run: seed,
        fold,
    };
    let started = std::time::Instant::now();
    let outcome = train_model(config, &spec.train, &train, inputs.categories(), seeds)?;
    let ranks = evaluate_ranks(&outcome.model, &test)?;
    let records: Vec<ResultRecord> = test
        .iter()
        .zip(ranks)
        .map(|(s, rank)| ResultRecord {
            ref_id: s.ref_id.clone(),
            config_name: config.name.clone(),
            seed,
            fold,
            room_id: s.room_id.clone(),
            rank_of_target: rank,
            num_candidates: s.num_candidates(),
            tier: s.tier,
            ref_type: s.ref_type,
        })
        .collect();
    let refs: Vec<&ResultRecord> = records.iter().collect();
    log::info!(
        "{} seed {seed} fold {fold} ({test_room}): top-1 {:.1} alpha {:.3} in {:.1}s",
        config.name,
        aggregate(&refs, 1).unwrap_or(f64::NAN),
        outcome.alpha_final(),
        started.elapsed().as_secs_f64()
    );
    Ok(CellOutput {
        records,
        alpha: AlphaRecord {
            config_name: config.name.clone(),
            seed,
            fold,
            test_room,
            alpha_trace: outcome.alpha_trace,
            epoch_loss: outcome.epoch_loss,
        },
    })
}

/// Trains and evaluates every (config, seed, fold) cell on `workers` threads.
/// Results are merged in (config, seed, fold) order, so the output does not
/// depend on the worker count.
pub fn run_matrix(inputs: MatrixInputs<'_>, spec: &MatrixSpec, workers: usize) -> Result<MatrixOutput> {
    if spec.configs.is_empty() || spec.seeds.is_empty() {
        return Err(Error::Config("matrix needs at least one config and one seed".into()));
    }
    let mut rooms: Vec<&str> = inputs.samples.iter().map(|s| s.room_id.as_str()).collect();
    rooms.sort_unstable();
    rooms.dedup();
    let plan = loro_folds(&rooms)?;
    let folds: Vec<usize> = match &spec.folds {
        Some(f) => {
            if let Some(bad) = f.iter().find(|&&i| i >= plan.len()) {
                return Err(Error::Config(format!("fold {bad} out of range ({} folds)", plan.len())));
            }
            f.clone()
        }
        None => (0..plan.len()).collect(),
    };
    for c in &spec.configs {
        c.validate()?;
    }
    let mut cells: Vec<(usize, u64, usize)> = Vec::new();
    for c in 0..spec.configs.len() {
        for &s in &spec.seeds {
            cells.extend(folds.iter().map(|&f| (c, s, f)));
        }
    }
    let run = |&(c, s, f): &(usize, u64, usize)| run_cell(inputs, &plan, spec, &spec.configs[c], s, f);
    let outputs: Vec<CellOutput> = if workers <= 1 {
        cells.iter().map(run).collect::<Result<_>>()?
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
        pool.install(|| cells.par_iter().map(run).collect::<Result<_>>())?
    };
    let mut records = Vec::new();
    let mut alphas = Vec::new();
    for o in outputs {
        records.extend(o.records);
        alphas.push(o.alpha);
    }
    let test_rooms = folds.iter().map(|&f| plan.folds[f].test_room.clone()).collect();
    let table = summarize(&records, &alphas, &spec.configs, &spec.seeds, test_rooms)?;
    Ok(MatrixOutput { records, alphas, table })
}

fn cell_for(key: &str, per_seed: &[Vec<&ResultRecord>]) -> Cell {
    let top1: Vec<f64> = per_seed.iter().filter_map(|rs| aggregate(rs, 1)).collect();
    let top5: Vec<f64> = per_seed.iter().filter_map(|rs| aggregate(rs, 5)).collect();
    Cell {
        key: key.to_string(),
        n: per_seed.first().map_or(0, Vec::len),
        top1: MeanStd::of(&top1),
        top5: MeanStd::of(&top5),
        top1_by_seed: top1,
    }
}

/// Seed-level aggregates pool every fold's test records of that seed.
pub fn summarize(
    records: &[ResultRecord],
    alphas: &[AlphaRecord],
    configs: &[ModelConfig],
    seeds: &[u64],
    test_rooms: Vec<String>,
) -> Result<ReportTable> {
    let mut rows = Vec::new();
    for config in configs {
        let per_seed: Vec<Vec<&ResultRecord>> = seeds
            .iter()
            .map(|&s| records.iter().filter(|r| r.config_name == config.name && r.seed == s).collect())
            .collect();
        let mut strata = BTreeMap::new();
        for axis in Axis::ALL {
            let cells = axis
                .strata()
                .into_iter()
                .map(|key| {
                    let inside: Vec<Vec<&ResultRecord>> =
                        per_seed.iter().map(|rs| rs.iter().copied().filter(|r| axis.key(r) == key).collect()).collect();
                    cell_for(key, &inside)
                })
                .collect::<Vec<_>>();
            strata.insert(axis, cells);
        }
        let alpha = config.is_fused().then(|| {
            let per_seed_alpha: Vec<f64> = seeds
                .iter()
                .filter_map(|&s| {
                    let fa: Vec<f64> = alphas
                        .iter()
                        .filter(|a| a.config_name == config.name && a.seed == s)
                        .map(AlphaRecord::alpha_final)
                        .collect();
                    MeanStd::of(&fa).map(|m| m.mean)
                })
                .collect();
            MeanStd::of(&per_seed_alpha)
        });
        rows.push(ConfigRow {
            config_name: config.name.clone(),
            overall: cell_for("all", &per_seed),
            alpha: alpha.flatten(),
            strata,
        });
    }
    let find = |name: &str| rows.iter().find(|r: &&ConfigRow| r.config_name == name);
    let singleton_oracle = match (find("P"), find("T_minilm")) {
        (Some(p), Some(t)) => oracle_of(p, t),
        _ => None,
    };
    let ttests = TTEST_PAIRS
        .iter()
        .filter_map(|&(a, b)| {
            let (ra, rb) = (find(a)?, find(b)?);
            Some(TTestRow {
                a: a.to_string(),
                b: b.to_string(),
                result: paired_t(&ra.overall.top1_by_seed, &rb.overall.top1_by_seed).ok(),
            })
        })
        .collect();
    Ok(ReportTable {
        seeds: seeds.to_vec(),
        test_rooms,
        rows,
        singleton_oracle,
        ttests,
    })
}

/// Weighted accuracy of the better singleton on each regime subset.
pub fn oracle_of(pose: &ConfigRow, text: &ConfigRow) -> Option<f64> {
    let best = |key: &str| -> Option<(f64, usize)> {
        let p = pose.stratum(Axis::Regime, key)?;
        let t = text.stratum(Axis::Regime, key)?;
        Some((p.top1?.mean.max(t.top1?.mean), p.n))
    };
    let (a, na) = best(POINTING)?;
    let (b, nb) = best(NON_POINTING)?;
    (na > 0 && nb > 0).then(|| singleton_oracle(a, na, b, nb))
}
