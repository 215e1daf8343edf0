//! `manifest.json`: content hashes of every artifact, the seeds, the
//! effective configuration, and per-stage input fingerprints used to decide
//! whether a stage is up to date.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::config::PipelineConfig;
use crate::error::CliError;

pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub params: Value,
    pub inputs: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub seeds: BTreeMap<String, u64>,
    pub config: Value,
    pub stages: BTreeMap<String, StageRecord>,
    pub artifacts: BTreeMap<String, String>,
}

pub fn sha256_file(path: &Path) -> std::io::Result<String> {
    Ok(hex::encode(Sha256::digest(fs::read(path)?)))
}

/// Manifest key for `path`: relative with `/` separators inside the run
/// directory, the path as given otherwise.
fn key(root: &Path, path: &Path) -> String {
    match path.strip_prefix(root) {
        Ok(rel) => rel.components().map(|c| c.as_os_str().to_string_lossy()).collect::<Vec<_>>().join("/"),
        Err(_) => path.display().to_string(),
    }
}

fn hashes(root: &Path, paths: &[PathBuf]) -> Option<BTreeMap<String, String>> {
    paths.iter().map(|p| Some((key(root, p), sha256_file(p).ok()?))).collect()
}

fn walk(dir: &Path, out: &mut Vec<PathBuf>) -> std::io::Result<()> {
    for entry in fs::read_dir(dir)? {
        let path = entry?.path();
        if path.is_dir() {
            walk(&path, out)?;
        } else {
            out.push(path);
        }
    }
    Ok(())
}

impl Manifest {
    pub fn load(root: &Path) -> Self {
        fs::read(root.join(MANIFEST)).ok().and_then(|b| serde_json::from_slice(&b).ok()).unwrap_or_default()
    }

    /// True when every output exists, and the recorded inputs, outputs and
    /// parameters all match what is on disk now.
    pub fn up_to_date(&self, root: &Path, stage: &str, params: &Value, inputs: &[PathBuf], outputs: &[PathBuf]) -> bool {
        let Some(rec) = self.stages.get(stage) else { return false };
        if &rec.params != params || !outputs.iter().all(|p| p.exists()) {
            return false;
        }
        hashes(root, inputs).as_ref() == Some(&rec.inputs) && hashes(root, outputs).as_ref() == Some(&rec.outputs)
    }

    pub fn record(&mut self, root: &Path, stage: &str, params: Value, inputs: &[PathBuf], outputs: &[PathBuf]) {
        let rec = StageRecord {
            params,
            inputs: hashes(root, inputs).unwrap_or_default(),
            outputs: hashes(root, outputs).unwrap_or_default(),
        };
        self.stages.insert(stage.to_string(), rec);
    }

    /// Rehash every file under the run directory and write the manifest.
    pub fn save(&mut self, cfg: &PipelineConfig) -> Result<(), CliError> {
        let root = &cfg.out_dir;
        let io = |e: std::io::Error| CliError::other("manifest", format!("{}: {e}", root.display()));
        self.seeds = BTreeMap::from([
            ("master".to_string(), cfg.seed),
            ("synthesize".to_string(), cfg.seed),
            ("holdout".to_string(), cfg.sample_seed()),
            ("sample".to_string(), cfg.sample_seed()),
            ("train".to_string(), cfg.train_seed()),
        ]);
        self.config = serde_json::to_value(cfg).map_err(|e| CliError::other("manifest", e))?;
        let mut files = Vec::new();
        walk(root, &mut files).map_err(io)?;
        let manifest_path = root.join(MANIFEST);
        self.artifacts = files
            .iter()
            .filter(|p| **p != manifest_path)
            .map(|p| Ok((key(root, p), sha256_file(p)?)))
            .collect::<std::io::Result<_>>()
            .map_err(io)?;
        let mut text = serde_json::to_string_pretty(self).map_err(|e| CliError::other("manifest", e))?;
        text.push('\n');
        fs::write(&manifest_path, text).map_err(io)
    }
}
