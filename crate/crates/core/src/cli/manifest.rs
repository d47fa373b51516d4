use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dataset::{EVENTS_FILE, SCENES_FILE, TRACKS_FILE};
use crate::error::{Error, Result};

pub const RUN_MANIFEST: &str = "run_manifest.json";

/// Written into every output directory: what produced it and from what.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub tool_version: String,
    pub master_seed: Option<u64>,
    /// Input role -> path as given on the command line.
    pub inputs: BTreeMap<String, String>,
    pub output_dir: String,
    /// Named content or config hashes (hex SHA-256).
    pub config_hashes: BTreeMap<String, String>,
}

impl RunManifest {
    pub fn new(command: &str, output_dir: &Path) -> Self {
        Self {
            command: command.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            master_seed: None,
            inputs: BTreeMap::new(),
            output_dir: output_dir.display().to_string(),
            config_hashes: BTreeMap::new(),
        }
    }

    pub fn input(mut self, role: &str, path: &Path) -> Self {
        self.inputs.insert(role.to_string(), path.display().to_string());
        self
    }

    pub fn hash(mut self, name: &str, value: impl Into<String>) -> Self {
        self.config_hashes.insert(name.to_string(), value.into());
        self
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        let path = dir.join(RUN_MANIFEST);
        let json = serde_json::to_string_pretty(self).expect("manifest serializes");
        std::fs::write(&path, json + "\n").map_err(|e| Error::io(&path, e))
    }

    /// The manifest in `dir`, if there is one.
    pub fn read(dir: &Path) -> Result<Option<Self>> {
        let path = dir.join(RUN_MANIFEST);
        if !path.exists() {
            return Ok(None);
        }
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        serde_json::from_str(&text).map(Some).map_err(|e| Error::Parse {
            file: path.display().to_string(),
            line: e.line(),
            message: e.to_string(),
        })
    }

    /// Refuses when this manifest records `name` with a different hash.
    pub fn check(&self, name: &str, expected: &str) -> Result<()> {
        match self.config_hashes.get(name) {
            Some(found) if found != expected => Err(Error::ConfigHash {
                expected: format!("{name} {expected}"),
                found: format!("{name} {found} (recorded by `{}` in {})", self.command, self.output_dir),
            }),
            _ => Ok(()),
        }
    }
}

pub fn file_digest(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(hex::encode(Sha256::digest(bytes)))
}

/// Hash over the three dataset files, in a fixed order.
pub fn dataset_digest(dir: &Path) -> Result<String> {
    let mut h = Sha256::new();
    for name in [SCENES_FILE, TRACKS_FILE, EVENTS_FILE] {
        let path = dir.join(name);
        let bytes = std::fs::read(&path).map_err(|e| Error::io(&path, e))?;
        h.update(name.as_bytes());
        h.update((bytes.len() as u64).to_le_bytes());
        h.update(bytes);
    }
    Ok(hex::encode(h.finalize()))
}
