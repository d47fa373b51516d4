//! The `poserefer` command line. Stages communicate only through files in
//! their output directories; each directory also gets a [`RunManifest`].

mod manifest;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use manifest::{dataset_digest, file_digest, RunManifest, RUN_MANIFEST};

use crate::affordance::{scene_features, FeatureRecord, KernelConfig};
use crate::dataset::{filter_references, load_dataset, read_jsonl, write_jsonl};
use crate::domain::Dataset;
use crate::embedding::{pseudo_store, EmbeddingStore};
use crate::error::{Error, Result};
use crate::eval::report::write_report;
use crate::eval::{evaluate_ranks, loro_folds, run_matrix, summarize, AlphaRecord, MatrixInputs, MatrixOutput, MatrixSpec, ResultRecord};
use crate::fusion::{
    build_samples, config_hash, load_checkpoint, save_checkpoint, train_model, CategoryIndex, FeatureCache, ModelConfig,
    RunSeeds, Sample, TrainConfig, MATRIX_CONFIGS,
};
use crate::synth::{gen_dataset, write_generated, SynthConfig};

pub const EMBEDDINGS_FILE: &str = "embeddings.jsonl";
pub const FEATURES_FILE: &str = "features.jsonl";
pub const CHECKPOINT_DIR: &str = "checkpoints";

#[derive(Debug, Parser)]
#[command(name = "poserefer", version, about = "Pose and text late fusion for 3D reference resolution")]
pub struct Cli {
    /// Parallel workers for training cells; 1 is the deterministic reference mode.
    #[arg(long, global = true, env = "POSEREFER_WORKERS", default_value_t = 1)]
    pub workers: usize,
    /// Overrides the master seed of the stage's config.
    #[arg(long, global = true, env = "POSEREFER_SEED")]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic dataset and its embedding manifest.
    Gen(GenArgs),
    /// Materialize the utterance and category embedding store.
    Embed(EmbedArgs),
    /// Precompute pose features for every accepted reference.
    Features(FeaturesArgs),
    /// Train every (config, seed, fold) cell and save checkpoints.
    Train(StageArgs),
    /// Evaluate saved checkpoints and write reports.
    Eval(EvalArgs),
    /// Train and evaluate the full matrix and write reports.
    Matrix(StageArgs),
}

#[derive(Debug, Args)]
pub struct GenArgs {
    /// SynthConfig JSON; defaults apply to missing fields.
    #[arg(long, env = "POSEREFER_CONFIG")]
    pub config: Option<PathBuf>,
    #[arg(long, env = "POSEREFER_OUT")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EmbedArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Pseudo-embed the keys listed in the dataset's manifest.json.
    #[arg(long, conflicts_with = "from")]
    pub pseudo: bool,
    /// Validate and copy an existing embeddings file.
    #[arg(long)]
    pub from: Option<PathBuf>,
    #[arg(long, env = "POSEREFER_OUT")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct FeaturesArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// KernelConfig JSON; defaults when absent.
    #[arg(long, env = "POSEREFER_CONFIG")]
    pub config: Option<PathBuf>,
    /// Embeddings file, used only to apply the reference filter.
    #[arg(long)]
    pub embeddings: PathBuf,
    #[arg(long, env = "POSEREFER_OUT")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct StageArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub embeddings: PathBuf,
    /// Directory written by `features`.
    #[arg(long)]
    pub features: Option<PathBuf>,
    /// RunConfig JSON; defaults when absent.
    #[arg(long, env = "POSEREFER_CONFIG")]
    pub config: Option<PathBuf>,
    #[arg(long, env = "POSEREFER_OUT")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub stage: StageArgs,
    /// Output directory of `train`.
    #[arg(long)]
    pub checkpoints: PathBuf,
}

/// Field overrides applied on top of the named presets.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelOverrides {
    pub hidden: Option<usize>,
    pub dropout: Option<f64>,
    pub znorm_stop_gradient: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub configs: Vec<String>,
    pub overrides: ModelOverrides,
    pub train: TrainConfig,
    pub kernel: KernelConfig,
    pub seeds: Vec<u64>,
    pub master_seed: u64,
    pub folds: Option<Vec<usize>>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            configs: MATRIX_CONFIGS.iter().map(|s| s.to_string()).collect(),
            overrides: ModelOverrides::default(),
            train: TrainConfig::default(),
            kernel: KernelConfig::default(),
            seeds: vec![0, 1, 2],
            master_seed: 0,
            folds: None,
        }
    }
}

impl RunConfig {
    pub fn model_configs(&self, text_emb_dim: usize) -> Result<Vec<ModelConfig>> {
        self.configs
            .iter()
            .map(|name| {
                let mut c = ModelConfig::preset(name, text_emb_dim)?;
                let o = &self.overrides;
                c.hidden = o.hidden.unwrap_or(c.hidden);
                c.dropout = o.dropout.unwrap_or(c.dropout);
                c.znorm_stop_gradient = o.znorm_stop_gradient.unwrap_or(c.znorm_stop_gradient);
                c.validate()?;
                Ok(c)
            })
            .collect()
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        file: path.display().to_string(),
        line: e.line(),
        message: e.to_string(),
    })
}

fn read_or_default<T: serde::de::DeserializeOwned + Default>(path: Option<&Path>) -> Result<T> {
    path.map_or_else(|| Ok(T::default()), read_json)
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

pub fn run(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::Gen(a) => cmd_gen(&cli, a),
        Command::Embed(a) => cmd_embed(a),
        Command::Features(a) => cmd_features(a),
        Command::Train(a) => cmd_train(&cli, a),
        Command::Eval(a) => cmd_eval(&cli, a),
        Command::Matrix(a) => cmd_matrix(&cli, a),
    }
}

pub fn cmd_gen(cli: &Cli, args: &GenArgs) -> Result<()> {
    let mut cfg: SynthConfig = read_or_default(args.config.as_deref())?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    let (dataset, manifest) = gen_dataset(&cfg)?;
    create_dir(&args.out)?;
    write_generated(&dataset, &manifest, &args.out)?;
    let mut m = RunManifest::new("gen", &args.out)
        .hash("synth_config", config_hash(&cfg))
        .hash("dataset", dataset_digest(&args.out)?);
    if let Some(c) = &args.config {
        m = m.input("config", c);
    }
    m.master_seed = Some(cfg.seed);
    m.write(&args.out)?;
    log::info!("generated {} references in {} rooms into {}", dataset.events.len(), dataset.scenes.len(), args.out.display());
    Ok(())
}

pub fn cmd_embed(args: &EmbedArgs) -> Result<()> {
    let dataset = load_dataset(&args.data)?;
    let digest = dataset_digest(&args.data)?;
    let store = match (&args.from, args.pseudo) {
        (Some(path), false) => EmbeddingStore::ingest(path)?,
        (None, true) => {
            let manifest = crate::synth::read_manifest(&args.data)?;
            pseudo_store(&manifest.embedder, manifest.all_keys())?
        }
        _ => return Err(Error::Config("embed needs exactly one of --pseudo or --from FILE".into())),
    };
    let missing = dataset.events.iter().filter(|e| !store.contains(&e.utterance_key)).count();
    if missing > 0 {
        log::warn!("{missing} utterance keys have no vector; those references will be filtered");
    }
    create_dir(&args.out)?;
    let path = args.out.join(EMBEDDINGS_FILE);
    store.export(&path)?;
    let mut m = RunManifest::new("embed", &args.out)
        .input("data", &args.data)
        .hash("dataset", digest)
        .hash("embeddings", file_digest(&path)?);
    if let Some(from) = &args.from {
        m = m.input("from", from);
    }
    m.write(&args.out)
}

/// Loads an embeddings file and checks it was built for `dataset_hash`.
fn load_embeddings(path: &Path, dataset_hash: &str) -> Result<EmbeddingStore> {
    if !path.exists() {
        return Err(Error::io(path, std::io::Error::new(std::io::ErrorKind::NotFound, "embeddings file not found")));
    }
    if let Some(m) = RunManifest::read(path.parent().unwrap_or(Path::new(".")))? {
        m.check("dataset", dataset_hash)?;
        m.check("embeddings", &file_digest(path)?)?;
    }
    EmbeddingStore::ingest(path)
}

pub fn cmd_features(args: &FeaturesArgs) -> Result<()> {
    let kernel: KernelConfig = read_or_default(args.config.as_deref())?;
    kernel.validate()?;
    let dataset = load_dataset(&args.data)?;
    let digest = dataset_digest(&args.data)?;
    let store = load_embeddings(&args.embeddings, &digest)?;
    let kernel_hash = config_hash(&kernel);
    let (accepted, rejected) = filter_references(&dataset, &store, &kernel);
    for (reason, n) in &rejected {
        log::warn!("rejected {n} references: {reason}");
    }
    let records = accepted
        .iter()
        .map(|e| {
            let feats = scene_features(e, &dataset.tracks[&e.ref_id], &dataset.scenes[&e.room_id], &kernel)?;
            Ok(FeatureRecord {
                ref_id: e.ref_id.clone(),
                kernel_hash: kernel_hash.clone(),
                features: feats.into_iter().map(|f| f.to_array()).collect(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    create_dir(&args.out)?;
    write_jsonl(&args.out.join(FEATURES_FILE), &records)?;
    RunManifest::new("features", &args.out)
        .input("data", &args.data)
        .input("embeddings", &args.embeddings)
        .hash("dataset", digest)
        .hash("kernel", kernel_hash)
        .write(&args.out)
}

fn load_features(dir: &Path, dataset_hash: &str, kernel: &KernelConfig) -> Result<FeatureCache> {
    let kernel_hash = config_hash(kernel);
    if let Some(m) = RunManifest::read(dir)? {
        m.check("dataset", dataset_hash)?;
        m.check("kernel", &kernel_hash)?;
    }
    let mut cache = FeatureCache::new();
    for (_, rec) in read_jsonl::<FeatureRecord>(&dir.join(FEATURES_FILE))? {
        if rec.kernel_hash != kernel_hash {
            return Err(Error::ConfigHash {
                expected: format!("kernel {kernel_hash}"),
                found: format!("kernel {} in features of {}", rec.kernel_hash, rec.ref_id),
            });
        }
        cache.insert(rec.ref_id, rec.features);
    }
    Ok(cache)
}

/// Everything a training or evaluation stage needs.
struct Prepared {
    run: RunConfig,
    run_hash: String,
    dataset_hash: String,
    configs: Vec<ModelConfig>,
    samples: Vec<Sample>,
    categories: CategoryIndex,
    frozen: Option<Vec<Vec<f64>>>,
}

impl Prepared {
    fn inputs(&self) -> MatrixInputs<'_> {
        MatrixInputs {
            samples: &self.samples,
            num_categories: self.categories.len(),
            frozen: self.frozen.as_deref(),
        }
    }

    fn spec(&self) -> MatrixSpec {
        MatrixSpec {
            configs: self.configs.clone(),
            seeds: self.run.seeds.clone(),
            master_seed: self.run.master_seed,
            train: self.run.train.clone(),
            folds: self.run.folds.clone(),
        }
    }

    fn manifest(&self, command: &str, args: &StageArgs) -> RunManifest {
        let mut m = RunManifest::new(command, &args.out)
            .input("data", &args.data)
            .input("embeddings", &args.embeddings)
            .hash("dataset", self.dataset_hash.clone())
            .hash("runconfig", self.run_hash.clone());
        if let Some(f) = &args.features {
            m = m.input("features", f);
        }
        if let Some(c) = &args.config {
            m = m.input("config", c);
        }
        for c in &self.configs {
            m = m.hash(&format!("model:{}", c.name), config_hash(c));
        }
        m.master_seed = Some(self.run.master_seed);
        m
    }
}

fn prepare(cli: &Cli, args: &StageArgs) -> Result<Prepared> {
    let mut run: RunConfig = read_or_default(args.config.as_deref())?;
    if let Some(seed) = cli.seed {
        run.master_seed = seed;
    }
    run.kernel.validate()?;
    run.train.validate()?;
    let dataset: Dataset = load_dataset(&args.data)?;
    let dataset_hash = dataset_digest(&args.data)?;
    let store = load_embeddings(&args.embeddings, &dataset_hash)?;
    let cache = args
        .features
        .as_deref()
        .map(|dir| load_features(dir, &dataset_hash, &run.kernel))
        .transpose()?;
    let configs = run.model_configs(store.dim())?;
    let categories = CategoryIndex::from_dataset(&dataset);
    let frozen = if configs.iter().any(ModelConfig::needs_frozen_categories) {
        Some(categories.frozen_vectors(&store)?)
    } else {
        None
    };
    let (samples, rejected) = build_samples(&dataset, &store, &run.kernel, &categories, cache.as_ref())?;
    for (reason, n) in &rejected {
        log::warn!("rejected {n} references: {reason}");
    }
    Ok(Prepared {
        run_hash: config_hash(&run),
        run,
        dataset_hash,
        configs,
        samples,
        categories,
        frozen,
    })
}

fn checkpoint_name(config: &str, seed: u64, fold: usize) -> String {
    format!("{config}__seed{seed}__fold{fold}.jsonl")
}

fn fold_indices(prep: &Prepared, n_folds: usize) -> Result<Vec<usize>> {
    match &prep.run.folds {
        Some(f) if f.iter().any(|&i| i >= n_folds) => {
            Err(Error::Config(format!("fold index out of range ({n_folds} folds)")))
        }
        Some(f) => Ok(f.clone()),
        None => Ok((0..n_folds).collect()),
    }
}

fn rooms_of(samples: &[Sample]) -> Vec<&str> {
    let mut rooms: Vec<&str> = samples.iter().map(|s| s.room_id.as_str()).collect();
    rooms.sort_unstable();
    rooms.dedup();
    rooms
}

pub fn cmd_train(cli: &Cli, args: &StageArgs) -> Result<()> {
    let prep = prepare(cli, args)?;
    let plan = loro_folds(&rooms_of(&prep.samples))?;
    let folds = fold_indices(&prep, plan.len())?;
    let ckpt_dir = args.out.join(CHECKPOINT_DIR);
    create_dir(&ckpt_dir)?;
    let mut cells = Vec::new();
    for c in &prep.configs {
        for &s in &prep.run.seeds {
            cells.extend(folds.iter().map(|&f| (c, s, f)));
        }
    }
    let run_cell = |&(config, seed, fold): &(&ModelConfig, u64, usize)| -> Result<AlphaRecord> {
        let (train, _) = plan.split(fold, &prep.samples, |s| s.room_id.as_str());
        let seeds = RunSeeds {
            master: prep.run.master_seed,
            run: seed,
            fold,
        };
        let outcome = train_model(config, &prep.run.train, &train, prep.inputs().categories(), seeds)?;
        save_checkpoint(&outcome.model, ckpt_dir.join(checkpoint_name(&config.name, seed, fold)))?;
        log::info!("{} seed {seed} fold {fold}: alpha {:.3}", config.name, outcome.alpha_final());
        Ok(AlphaRecord {
            config_name: config.name.clone(),
            seed,
            fold,
            test_room: plan.folds[fold].test_room.clone(),
            alpha_trace: outcome.alpha_trace,
            epoch_loss: outcome.epoch_loss,
        })
    };
    let alphas: Vec<AlphaRecord> = in_pool(cli.workers, || cells.par_iter().map(run_cell).collect())?;
    let path = args.out.join(crate::eval::report::ALPHA_CSV);
    std::fs::write(&path, crate::eval::report::alpha_csv(&alphas)).map_err(|e| Error::io(&path, e))?;
    prep.manifest("train", args).write(&args.out)
}

fn in_pool<T: Send>(workers: usize, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    pool.install(f)
}

pub fn cmd_eval(cli: &Cli, args: &EvalArgs) -> Result<()> {
    let prep = prepare(cli, &args.stage)?;
    let trained = RunManifest::read(&args.checkpoints)?.ok_or_else(|| {
        Error::invalid(args.checkpoints.display().to_string(), format!("no {RUN_MANIFEST}; not a train output"))
    })?;
    trained.check("dataset", &prep.dataset_hash)?;
    trained.check("runconfig", &prep.run_hash)?;
    let plan = loro_folds(&rooms_of(&prep.samples))?;
    let folds = fold_indices(&prep, plan.len())?;
    let mut records = Vec::new();
    let mut alphas = Vec::new();
    for config in &prep.configs {
        for &seed in &prep.run.seeds {
            for &fold in &folds {
                let path = args.checkpoints.join(CHECKPOINT_DIR).join(checkpoint_name(&config.name, seed, fold));
                let model = load_checkpoint(&path, config, prep.inputs().categories())?;
                let (_, test) = plan.split(fold, &prep.samples, |s| s.room_id.as_str());
                let ranks = evaluate_ranks(&model, &test)?;
                records.extend(test.iter().zip(ranks).map(|(s, rank)| ResultRecord {
                    ref_id: s.ref_id.clone(),
                    config_name: config.name.clone(),
                    seed,
                    fold,
                    room_id: s.room_id.clone(),
                    rank_of_target: rank,
                    num_candidates: s.num_candidates(),
                    tier: s.tier,
                    ref_type: s.ref_type,
                }));
                alphas.push(AlphaRecord {
                    config_name: config.name.clone(),
                    seed,
                    fold,
                    test_room: plan.folds[fold].test_room.clone(),
                    alpha_trace: vec![model.alpha()],
                    epoch_loss: Vec::new(),
                });
            }
        }
    }
    let rooms = folds.iter().map(|&f| plan.folds[f].test_room.clone()).collect();
    let table = summarize(&records, &alphas, &prep.configs, &prep.run.seeds, rooms)?;
    let out = MatrixOutput { records, alphas, table };
    write_report(&out, &args.stage.out)?;
    prep.manifest("eval", &args.stage)
        .input("checkpoints", &args.checkpoints)
        .write(&args.stage.out)
}

pub fn cmd_matrix(cli: &Cli, args: &StageArgs) -> Result<()> {
    let prep = prepare(cli, args)?;
    let out = run_matrix(prep.inputs(), &prep.spec(), cli.workers)?;
    write_report(&out, &args.out)?;
    let mut m = prep.manifest("matrix", args);
    let counts: BTreeMap<&str, usize> = [("records", out.records.len()), ("cells", out.alphas.len())].into();
    log::info!("matrix done: {counts:?}");
    m.config_hashes.insert("results".into(), file_digest(&args.out.join(crate::eval::report::RESULTS_FILE))?);
    m.write(&args.out)
}
