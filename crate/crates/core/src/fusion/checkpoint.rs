//! Checkpoints: a JSONL header followed by one named tensor per line.

use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::{config_hash, ModelConfig};
use super::model::{CategoryInputs, FusionModel};
use crate::error::{Error, Result};
use crate::neural::Parameterized;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Header {
    config_hash: String,
    gate_w: f64,
    config: ModelConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorRecord {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

pub fn save_checkpoint(model: &FusionModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let header = Header {
        config_hash: config_hash(&model.config),
        gate_w: model.gate.value[0],
        config: model.config.clone(),
    };
    write_json(&mut out, path, &header)?;
    for p in model.params() {
        let rec = TensorRecord {
            name: p.name.clone(),
            shape: p.shape.clone(),
            data: p.value.clone(),
        };
        write_json(&mut out, path, &rec)?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

fn write_json<W: Write, T: Serialize>(out: &mut W, path: &Path, value: &T) -> Result<()> {
    let line = serde_json::to_string(value).expect("checkpoint record serializes");
    writeln!(out, "{line}").map_err(|e| Error::io(path, e))
}

/// Restores a checkpoint written for `expected` (compared by config hash).
/// `cats` must describe the same category set the model was built with.
pub fn load_checkpoint(path: impl AsRef<Path>, expected: &ModelConfig, cats: CategoryInputs<'_>) -> Result<FusionModel> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut lines = BufReader::new(file).lines().enumerate();
    let parse_err = |line: usize, message: String| Error::Parse {
        file: path.display().to_string(),
        line: line + 1,
        message,
    };
    let (n, first) = lines.next().ok_or_else(|| parse_err(0, "empty checkpoint".into()))?;
    let first = first.map_err(|e| Error::io(path, e))?;
    let header: Header = serde_json::from_str(&first).map_err(|e| parse_err(n, e.to_string()))?;
    let expected_hash = config_hash(expected);
    if header.config_hash != expected_hash || config_hash(&header.config) != expected_hash {
        return Err(Error::ConfigHash {
            expected: expected_hash,
            found: header.config_hash,
        });
    }
    let mut model = FusionModel::new(header.config, cats, &mut ChaCha8Rng::seed_from_u64(0))?;
    let mut seen = std::collections::BTreeSet::new();
    for (n, line) in lines {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: TensorRecord = serde_json::from_str(&line).map_err(|e| parse_err(n, e.to_string()))?;
        let mut params = model.params_mut();
        let p = params
            .iter_mut()
            .find(|p| p.name == rec.name)
            .ok_or_else(|| parse_err(n, format!("unknown tensor {:?}", rec.name)))?;
        if p.shape != rec.shape || rec.data.len() != p.value.len() {
            return Err(parse_err(n, format!("tensor {:?} has shape {:?}, expected {:?}", rec.name, rec.shape, p.shape)));
        }
        p.value = rec.data;
        seen.insert(rec.name);
    }
    if let Some(missing) = model.params().iter().find(|p| !seen.contains(&p.name)) {
        return Err(Error::invalid(path.display().to_string(), format!("tensor {:?} missing", missing.name)));
    }
    model.gate.value[0] = header.gate_w;
    Ok(model)
}
