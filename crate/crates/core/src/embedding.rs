//! Frozen key -> vector stores for utterances and category names, and a
//! deterministic pseudo-embedder that stands in for a pretrained encoder.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingStore {
    dim: usize,
    vectors: BTreeMap<String, Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct Header {
    dim: usize,
}

#[derive(Serialize, Deserialize)]
struct Entry {
    key: String,
    vec: Vec<f64>,
}

impl EmbeddingStore {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            vectors: BTreeMap::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn contains(&self, key: &str) -> bool {
        self.vectors.contains_key(key)
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.vectors.keys().map(String::as_str)
    }

    pub fn insert(&mut self, key: impl Into<String>, vec: Vec<f64>) -> Result<()> {
        let key = key.into();
        if vec.len() != self.dim {
            return Err(Error::DimMismatch {
                key,
                expected: self.dim,
                got: vec.len(),
            });
        }
        self.vectors.insert(key, vec);
        Ok(())
    }

    pub fn lookup(&self, key: &str) -> Result<&[f64]> {
        self.vectors
            .get(key)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::MissingKey(key.to_string()))
    }

    pub fn ingest(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let name = path.display().to_string();
        let mut lines = BufReader::new(file).lines().enumerate();
        let header: Header = match lines.next() {
            Some((_, line)) => {
                let line = line.map_err(|e| Error::io(path, e))?;
                serde_json::from_str(&line).map_err(|e| Error::Parse {
                    file: name.clone(),
                    line: 1,
                    message: format!("bad header: {e}"),
                })?
            }
            None => {
                return Err(Error::Parse {
                    file: name,
                    line: 1,
                    message: "missing {\"dim\": D} header".into(),
                })
            }
        };
        let mut store = Self::new(header.dim);
        for (i, line) in lines {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let entry: Entry = serde_json::from_str(&line).map_err(|e| Error::Parse {
                file: name.clone(),
                line: i + 1,
                message: e.to_string(),
            })?;
            store.insert(entry.key, entry.vec)?;
        }
        Ok(store)
    }

    pub fn export(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        let io = |e| Error::io(path, e);
        writeln!(w, "{}", serde_json::to_string(&Header { dim: self.dim }).unwrap()).map_err(io)?;
        for (key, vec) in &self.vectors {
            let entry = Entry {
                key: key.clone(),
                vec: vec.clone(),
            };
            writeln!(w, "{}", serde_json::to_string(&entry).unwrap()).map_err(io)?;
        }
        w.flush().map_err(io)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PseudoEmbedderConfig {
    pub seed: u64,
    pub dim: usize,
    #[serde(default)]
    pub group_map: BTreeMap<String, String>,
    pub within_group_noise: f64,
}

impl PseudoEmbedderConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dim < 2 {
            return Err(Error::Config(format!("pseudo-embedding dim must be >= 2, got {}", self.dim)));
        }
        if !(0.0..=1.0).contains(&self.within_group_noise) {
            return Err(Error::Config(format!(
                "within_group_noise must lie in [0, 1], got {}",
                self.within_group_noise
            )));
        }
        Ok(())
    }
}

/// Unit-norm gaussian direction drawn from a stream keyed on (seed, namespace, name).
fn keyed_direction(seed: u64, namespace: &str, name: &str, dim: usize) -> Vec<f64> {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(namespace.as_bytes());
    h.update([0u8]);
    h.update(name.as_bytes());
    let mut rng = ChaCha8Rng::from_seed(h.finalize().into());
    let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
    normalize(v)
}

fn normalize(mut v: Vec<f64>) -> Vec<f64> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
    v
}

/// Deterministic unit vector for `key`. Keys that share a group in
/// `cfg.group_map` mix a common group direction with their own direction,
/// weighted by `1 - within_group_noise` and `within_group_noise`.
pub fn pseudo_embed(cfg: &PseudoEmbedderConfig, key: &str) -> Vec<f64> {
    let own = keyed_direction(cfg.seed, "key", key, cfg.dim);
    match cfg.group_map.get(key) {
        None => own,
        Some(group) => {
            let g = keyed_direction(cfg.seed, "group", group, cfg.dim);
            let noise = cfg.within_group_noise;
            normalize(
                g.iter()
                    .zip(&own)
                    .map(|(a, b)| (1.0 - noise) * a + noise * b)
                    .collect(),
            )
        }
    }
}

/// Materializes pseudo-embeddings for every key.
pub fn pseudo_store<'a>(
    cfg: &PseudoEmbedderConfig,
    keys: impl IntoIterator<Item = &'a str>,
) -> Result<EmbeddingStore> {
    cfg.validate()?;
    let mut store = EmbeddingStore::new(cfg.dim);
    for key in keys {
        store.insert(key, pseudo_embed(cfg, key))?;
    }
    Ok(store)
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    dot / (na * nb)
}
