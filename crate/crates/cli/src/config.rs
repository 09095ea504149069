//! Run configuration: one JSON file drives every command.
//!
//! Every field has a default; the defaults are the desk preset (5x5 board,
//! four layers of width 128, 2500 probing examples and 100 behavioural cases
//! per concept, three seeds, 21 checkpoints, 64-node searches).

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use hexlab_core::agent::{MctsParams, NetworkConfig, SelfPlayParams, TrainConfig};
use hexlab_core::concepts::CONCEPTS;
use hexlab_core::probe::{ImprovementRule, ProbeHyper};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetworkSection {
    pub layers: usize,
    pub width: usize,
    pub l2: f64,
    pub learning_rate: f64,
    pub batch_size: usize,
}

impl Default for NetworkSection {
    fn default() -> Self {
        Self { layers: 4, width: 128, l2: 1e-4, learning_rate: 1e-3, batch_size: 128 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainingSection {
    pub iterations: usize,
    pub games_per_iteration: usize,
    pub steps_per_iteration: usize,
    pub buffer_size: usize,
    pub selfplay_budget: usize,
    pub temperature_moves: usize,
    pub c_puct: f32,
    pub dirichlet_alpha: f64,
    pub noise_fraction: f32,
}

impl Default for TrainingSection {
    fn default() -> Self {
        Self {
            iterations: 300,
            games_per_iteration: 32,
            steps_per_iteration: 32,
            buffer_size: 20_000,
            selfplay_budget: 64,
            temperature_moves: 4,
            c_puct: 1.5,
            dirichlet_alpha: 0.3,
            noise_fraction: 0.25,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProbingSection {
    /// Examples per (concept, horizon) dataset.
    pub n: usize,
    pub test_fraction: f64,
    pub iterations: usize,
    pub learning_rate: f64,
    pub l2: f64,
}

impl Default for ProbingSection {
    fn default() -> Self {
        let h = ProbeHyper::default();
        Self { n: 2500, test_fraction: 0.2, iterations: h.iterations, learning_rate: h.learning_rate, l2: h.l2 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Transcripts {
    None,
    /// First and final checkpoint only.
    Ends,
    All,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BehavioralSection {
    /// Cases per concept.
    pub n: usize,
    /// Also build and run cases whose defender has no pre-laid path.
    pub unconnected: bool,
    pub transcripts: Transcripts,
}

impl Default for BehavioralSection {
    fn default() -> Self {
        Self { n: 100, unconnected: true, transcripts: Transcripts::Ends }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StructureSection {
    pub k: usize,
    pub tie_draws: usize,
}

impl Default for StructureSection {
    fn default() -> Self {
        Self { k: 6, tie_draws: 20 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WastedSection {
    pub positions: usize,
    pub max_depth: u32,
}

impl Default for WastedSection {
    fn default() -> Self {
        Self { positions: 20, max_depth: 7 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    pub board_size: usize,
    pub network: NetworkSection,
    pub training: TrainingSection,
    /// Checkpoints per training run, counting the untrained one.
    pub checkpoints: usize,
    /// Search budget for behavioural tests and play-offs.
    pub budget: usize,
    pub seeds: Vec<u64>,
    /// Seed for every dataset; datasets are shared by all training seeds.
    pub dataset_seed: u64,
    pub concepts: Vec<String>,
    pub probing: ProbingSection,
    pub behavioral: BehavioralSection,
    pub structure: StructureSection,
    pub wasted: WastedSection,
    pub improvement: ImprovementRule,
    pub convergence_tol: f64,
    /// Output directory; `--out` takes precedence. Not part of the hash.
    pub out_dir: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            board_size: 5,
            network: NetworkSection::default(),
            training: TrainingSection::default(),
            checkpoints: 21,
            budget: 64,
            seeds: vec![0, 1, 2],
            dataset_seed: 2024,
            concepts: CONCEPTS.iter().map(|s| s.to_string()).collect(),
            probing: ProbingSection::default(),
            behavioral: BehavioralSection::default(),
            structure: StructureSection::default(),
            wasted: WastedSection::default(),
            improvement: ImprovementRule::default(),
            convergence_tol: 0.02,
            out_dir: None,
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::MissingInput(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        if self.schema_version != SCHEMA_VERSION {
            return bad(format!("schema_version {} is not supported (expected {SCHEMA_VERSION})", self.schema_version));
        }
        if self.board_size < 2 || self.board_size > hexlab_core::oracle::bits::MAX_SIZE {
            return bad(format!("board_size {} is outside 2..={}", self.board_size, hexlab_core::oracle::bits::MAX_SIZE));
        }
        let positive = [
            ("network.layers", self.network.layers),
            ("network.width", self.network.width),
            ("network.batch_size", self.network.batch_size),
            ("training.selfplay_budget", self.training.selfplay_budget),
            ("training.buffer_size", self.training.buffer_size),
            ("checkpoints", self.checkpoints),
            ("budget", self.budget),
            ("probing.n", self.probing.n),
            ("behavioral.n", self.behavioral.n),
            ("structure.k", self.structure.k),
        ];
        for (name, v) in positive {
            if v == 0 {
                return bad(format!("{name} must be positive"));
            }
        }
        if self.seeds.is_empty() {
            return bad("seeds must not be empty".into());
        }
        let distinct: BTreeSet<u64> = self.seeds.iter().copied().collect();
        if distinct.len() != self.seeds.len() {
            return bad(format!("seed collision in {:?}", self.seeds));
        }
        if self.training.iterations > 0 && self.training.iterations < self.checkpoints - 1 {
            return bad(format!("{} iterations cannot hold {} checkpoints", self.training.iterations, self.checkpoints));
        }
        if !(0.0..1.0).contains(&self.probing.test_fraction) || self.probing.test_fraction == 0.0 {
            return bad("probing.test_fraction must lie in (0, 1)".into());
        }
        for c in &self.concepts {
            if !CONCEPTS.contains(&c.as_str()) {
                return bad(format!("unknown concept {c}"));
            }
        }
        Ok(())
    }

    /// Short SHA-256 of the canonical JSON form, ignoring `out_dir`.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.out_dir = None;
        let text = serde_json::to_string(&c).expect("config serialises");
        let digest = Sha256::digest(text.as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    pub fn network_config(&self, seed: u64) -> NetworkConfig {
        NetworkConfig {
            size: self.board_size,
            layers: self.network.layers,
            width: self.network.width,
            seed,
            l2: self.network.l2,
            learning_rate: self.network.learning_rate,
            batch_size: self.network.batch_size,
        }
    }

    pub fn train_config(&self, seed: u64) -> TrainConfig {
        let t = &self.training;
        TrainConfig {
            network: self.network_config(seed),
            selfplay: SelfPlayParams {
                budget: t.selfplay_budget,
                mcts: MctsParams { c_puct: t.c_puct, dirichlet_alpha: t.dirichlet_alpha, noise_fraction: t.noise_fraction },
                temperature_moves: t.temperature_moves,
            },
            iterations: t.iterations,
            games_per_iteration: t.games_per_iteration,
            steps_per_iteration: t.steps_per_iteration,
            buffer_size: t.buffer_size,
            checkpoints: self.checkpoints,
        }
    }

    pub fn probe_hyper(&self) -> ProbeHyper {
        ProbeHyper { l2: self.probing.l2, iterations: self.probing.iterations, learning_rate: self.probing.learning_rate }
    }

    /// Index of the last checkpoint a training run produces.
    pub fn final_checkpoint(&self) -> usize {
        if self.training.iterations == 0 {
            0
        } else {
            self.checkpoints - 1
        }
    }
}
