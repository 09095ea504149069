//! Where each artifact lives under the output directory, and the metadata
//! sidecar written next to every file.
//!
//! ```text
//! <out>/seed-<s>/ckpt-<kk>/{manifest.json, weights.bin, run.meta.json}
//! <out>/datasets/probing/<concept>-<horizon>.jsonl          (+ .control.jsonl)
//! <out>/datasets/behavioral/<concept>-<connected|unconnected>.jsonl
//! <out>/metrics/<analysis>-seed<s>.csv
//! <out>/transcripts/seed-<s>/ckpt-<kk>-<connected|unconnected>.jsonl
//! <out>/report/*.csv, summary.json
//! ```
//!
//! Every data file `f` has a sidecar `f.meta.json` holding the config hash
//! and the seed that produced it.

use std::fs;
use std::path::{Path, PathBuf};

use hexlab_core::agent::{write_atomic, Checkpoint};
use serde::{Deserialize, Serialize};

use crate::config::SCHEMA_VERSION;
use crate::error::CliError;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Meta {
    pub schema_version: u32,
    pub config_hash: String,
    pub seed: Option<u64>,
    pub command: String,
}

#[derive(Clone, Debug)]
pub struct Layout {
    pub root: PathBuf,
}

pub fn connected_tag(connected: bool) -> &'static str {
    if connected {
        "connected"
    } else {
        "unconnected"
    }
}

impl Layout {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn seed_dir(&self, seed: u64) -> PathBuf {
        self.root.join(format!("seed-{seed}"))
    }

    pub fn checkpoint_dir(&self, seed: u64, index: usize) -> PathBuf {
        self.seed_dir(seed).join(format!("ckpt-{index:02}"))
    }

    pub fn probing(&self, concept: &str, horizon: &str) -> PathBuf {
        self.root.join("datasets/probing").join(format!("{concept}-{horizon}.jsonl"))
    }

    pub fn probing_control(&self, concept: &str, horizon: &str) -> PathBuf {
        self.root.join("datasets/probing").join(format!("{concept}-{horizon}.control.jsonl"))
    }

    pub fn probing_skipped(&self) -> PathBuf {
        self.root.join("datasets/probing/skipped.json")
    }

    pub fn behavioral(&self, concept: &str, connected: bool) -> PathBuf {
        self.root.join("datasets/behavioral").join(format!("{concept}-{}.jsonl", connected_tag(connected)))
    }

    pub fn metrics_dir(&self) -> PathBuf {
        self.root.join("metrics")
    }

    pub fn metrics(&self, analysis: &str, seed: u64) -> PathBuf {
        self.metrics_dir().join(format!("{analysis}-seed{seed}.csv"))
    }

    pub fn transcripts(&self, seed: u64, index: usize, connected: bool) -> PathBuf {
        self.root.join(format!("transcripts/seed-{seed}/ckpt-{index:02}-{}.jsonl", connected_tag(connected)))
    }

    pub fn activations(&self, seed: u64, index: usize, concept: &str, horizon: &str) -> PathBuf {
        self.root.join(format!("activations/seed-{seed}/ckpt-{index:02}/{concept}-{horizon}"))
    }

    pub fn report_dir(&self) -> PathBuf {
        self.root.join("report")
    }
}

pub fn meta_path(file: &Path) -> PathBuf {
    let mut name = file.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".meta.json");
    file.with_file_name(name)
}

/// Writes `bytes` and then its sidecar, both atomically.
pub fn write_with_meta(file: &Path, bytes: &[u8], hash: &str, seed: Option<u64>, command: &str) -> Result<(), CliError> {
    write_atomic(file, bytes).map_err(|e| CliError::io(file, e))?;
    let meta = Meta { schema_version: SCHEMA_VERSION, config_hash: hash.into(), seed, command: command.into() };
    let text = serde_json::to_vec_pretty(&meta).expect("meta serialises");
    let m = meta_path(file);
    write_atomic(&m, &text).map_err(|e| CliError::io(&m, e))
}

pub fn read_meta(file: &Path) -> Result<Meta, CliError> {
    let m = meta_path(file);
    let text = fs::read_to_string(&m).map_err(|e| CliError::io(&m, e))?;
    let meta: Meta = serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", m.display())))?;
    if meta.schema_version != SCHEMA_VERSION {
        return Err(CliError::Config(format!("{} has schema version {}", m.display(), meta.schema_version)));
    }
    Ok(meta)
}

/// Reads `file` after checking that its sidecar carries `hash`.
pub fn read_checked(file: &Path, hash: &str) -> Result<Vec<u8>, CliError> {
    let bytes = fs::read(file).map_err(|e| CliError::io(file, e))?;
    let meta = read_meta(file)?;
    if meta.config_hash != hash {
        return Err(CliError::Config(format!(
            "{} was produced by config {}, not {hash}",
            file.display(),
            meta.config_hash
        )));
    }
    Ok(bytes)
}

pub fn save_checkpoint(layout: &Layout, seed: u64, c: &Checkpoint, hash: &str) -> Result<(), CliError> {
    let dir = layout.checkpoint_dir(seed, c.index);
    c.save(&dir).map_err(CliError::other)?;
    let meta = Meta { schema_version: SCHEMA_VERSION, config_hash: hash.into(), seed: Some(seed), command: "train".into() };
    let path = dir.join("run.meta.json");
    write_atomic(&path, &serde_json::to_vec_pretty(&meta).expect("meta serialises")).map_err(|e| CliError::io(&path, e))
}

pub fn load_checkpoint_dir(dir: &Path) -> Result<Checkpoint, CliError> {
    if !dir.join("manifest.json").exists() {
        return Err(CliError::MissingInput(format!("no checkpoint at {}", dir.display())));
    }
    Checkpoint::load(dir).map_err(CliError::other)
}

/// Loads a checkpoint written for this config hash.
pub fn load_checkpoint(layout: &Layout, seed: u64, index: usize, hash: &str) -> Result<Checkpoint, CliError> {
    let dir = layout.checkpoint_dir(seed, index);
    let c = load_checkpoint_dir(&dir)?;
    let path = dir.join("run.meta.json");
    let meta: Meta = serde_json::from_slice(&fs::read(&path).map_err(|e| CliError::io(&path, e))?)
        .map_err(|e| CliError::Config(e.to_string()))?;
    if meta.config_hash != hash {
        return Err(CliError::Config(format!("checkpoint {} belongs to config {}", dir.display(), meta.config_hash)));
    }
    Ok(c)
}
