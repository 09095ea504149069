//! Command-line pipeline: train agents, build datasets, run the probes and
//! behavioural tests, and aggregate the results into figure tables.

pub mod commands;
pub mod config;
pub mod error;
pub mod layout;
pub mod report;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hexlab_core::agent::Module;

pub use commands::{Context, Options};
pub use config::RunConfig;
pub use error::CliError;
pub use layout::Layout;

#[derive(Parser, Debug)]
#[command(name = "hexlab", version, about = "Train, probe and test Hex agents")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Train one agent per seed and save its checkpoints.
    Train(Common),
    /// Build the probing datasets and their permuted controls.
    GenProbing(Common),
    /// Build the behavioural test cases.
    GenBehavioral(Common),
    /// Dump per-layer activations of one checkpoint on the probing datasets.
    Encode(Common),
    /// Fit linear probes at every checkpoint and layer.
    Probe(Common),
    /// Run the behavioural tests at every checkpoint.
    Behave(Common),
    /// Score the first-layer cell embeddings against board geometry.
    Structure(Common),
    /// Aggregate metric tables into figure tables and a summary.
    Report(Common),
    /// Every step in order, skipping training runs that are already complete.
    All(Common),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModuleArg {
    Mcts,
    Policy,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Run configuration (JSON). Defaults to the desk preset.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory; overrides `out_dir` in the config.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Restrict to one training seed from the config.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Checkpoint directory to encode.
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// Restrict to one concept.
    #[arg(long)]
    pub concept: Option<String>,
    /// Restrict behavioural tests to one module.
    #[arg(long, value_enum)]
    pub module: Option<ModuleArg>,
    /// Search budget for behavioural tests.
    #[arg(long)]
    pub budget: Option<usize>,
    /// Restrict to cases with or without a pre-laid defender path.
    #[arg(long)]
    pub defender_connected: Option<bool>,
}

impl Common {
    pub fn context(&self) -> Result<Context, CliError> {
        let cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        let out = self
            .out
            .clone()
            .or_else(|| cfg.out_dir.clone())
            .ok_or_else(|| CliError::Config("no output directory: pass --out or set out_dir".into()))?;
        let opts = Options {
            seed: self.seed,
            concept: self.concept.clone(),
            module: self.module.map(|m| match m {
                ModuleArg::Mcts => Module::Mcts,
                ModuleArg::Policy => Module::Policy,
            }),
            budget: self.budget,
            defender_connected: self.defender_connected,
            checkpoint: self.checkpoint.clone(),
        };
        Context::new(cfg, out, opts)
    }
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Train(c) => commands::train(&c.context()?),
        Command::GenProbing(c) => commands::gen_probing(&c.context()?),
        Command::GenBehavioral(c) => commands::gen_behavioral(&c.context()?),
        Command::Encode(c) => commands::encode(&c.context()?),
        Command::Probe(c) => commands::probe(&c.context()?),
        Command::Behave(c) => commands::behave(&c.context()?),
        Command::Structure(c) => commands::structure(&c.context()?),
        Command::Report(c) => {
            let ctx = c.context()?;
            report::report(&ctx.cfg, &ctx.layout).map(|_| ())
        }
        Command::All(c) => {
            let ctx = c.context()?;
            commands::gen_probing(&ctx)?;
            commands::gen_behavioral(&ctx)?;
            commands::train(&ctx)?;
            commands::probe(&ctx)?;
            commands::behave(&ctx)?;
            commands::structure(&ctx)?;
            report::report(&ctx.cfg, &ctx.layout).map(|_| ())
        }
    }
}
