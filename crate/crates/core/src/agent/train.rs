//! Self-play training: alternate batches of games with gradient steps on a
//! replay buffer, and snapshot `K` evenly spaced checkpoints.

use std::collections::VecDeque;

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::seed::{derive_seed, rng_for};

use super::checkpoint::Checkpoint;
use super::mcts::MctsError;
use super::net::{Adam, NetError, Network, NetworkConfig, Sample};
use super::selfplay::{selfplay, SelfPlayParams};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub network: NetworkConfig,
    pub selfplay: SelfPlayParams,
    pub iterations: usize,
    pub games_per_iteration: usize,
    pub steps_per_iteration: usize,
    /// Most recent samples kept for minibatch sampling.
    pub buffer_size: usize,
    /// Checkpoints emitted, counting the untrained one.
    pub checkpoints: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            network: NetworkConfig::default(),
            selfplay: SelfPlayParams::default(),
            iterations: 200,
            games_per_iteration: 32,
            steps_per_iteration: 32,
            buffer_size: 20_000,
            checkpoints: 21,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum TrainError {
    #[error("training schedule: {0}")]
    Schedule(String),
    #[error(transparent)]
    Net(#[from] NetError),
    #[error(transparent)]
    Search(#[from] MctsError),
    #[error("checkpoint sink: {0}")]
    Sink(String),
}

/// Iteration after which each checkpoint `k >= 1` is taken.
pub fn checkpoint_iterations(iterations: usize, checkpoints: usize) -> Result<Vec<usize>, TrainError> {
    if checkpoints == 0 {
        return Err(TrainError::Schedule("at least one checkpoint is needed".into()));
    }
    if iterations == 0 {
        return Ok(Vec::new());
    }
    let k = checkpoints - 1;
    if iterations < k {
        return Err(TrainError::Schedule(format!("{iterations} iterations cannot hold {checkpoints} checkpoints")));
    }
    Ok((1..=k).map(|i| (i * iterations).div_ceil(k)).collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationLog {
    pub iteration: usize,
    pub games: usize,
    pub black_wins: usize,
    pub mean_loss: f64,
}

/// Runs training, handing every checkpoint to `sink` as soon as it exists.
pub fn train(
    cfg: &TrainConfig,
    mut sink: impl FnMut(&Checkpoint, Option<&IterationLog>) -> Result<(), String>,
) -> Result<Vec<Checkpoint>, TrainError> {
    let marks = checkpoint_iterations(cfg.iterations, cfg.checkpoints)?;
    if cfg.network.batch_size == 0 {
        return Err(TrainError::Schedule("batch size must be positive".into()));
    }
    let seed = cfg.network.seed;
    let mut net = Network::<f32>::init(&cfg.network)?;
    let mut opt = Adam::new(&net, cfg.network.learning_rate);
    let mut buffer: VecDeque<Sample> = VecDeque::with_capacity(cfg.buffer_size);
    let mut step = 0u64;
    let snapshot = |net: &Network<f32>, step, index| Checkpoint { config: cfg.network.clone(), net: net.clone(), step, index };
    let first = snapshot(&net, 0, 0);
    sink(&first, None).map_err(TrainError::Sink)?;
    let mut out = vec![first];

    for it in 1..=cfg.iterations {
        let base = ((it - 1) * cfg.games_per_iteration) as u64;
        let games = (0..cfg.games_per_iteration)
            .into_par_iter()
            .map(|g| selfplay(&net, cfg.network.size, &cfg.selfplay, seed, base + g as u64))
            .collect::<Result<Vec<_>, _>>()?;
        let black_wins = games.iter().filter(|t| t.winner == crate::board::Player::Black).count();
        for t in games {
            for s in t.samples {
                if buffer.len() == cfg.buffer_size {
                    buffer.pop_front();
                }
                buffer.push_back(s);
            }
        }
        let mut loss_sum = 0.0;
        let mut rng = rng_for(seed, "minibatch", it as u64);
        for _ in 0..cfg.steps_per_iteration {
            if buffer.is_empty() {
                break;
            }
            let batch: Vec<Sample> =
                (0..cfg.network.batch_size).map(|_| buffer[rng.random_range(0..buffer.len())].clone()).collect();
            let (terms, grad) = net.loss_and_grad(&batch, cfg.network.l2, true)?;
            opt.step(&mut net, &grad.expect("gradient requested"));
            loss_sum += f64::from(terms.total);
            step += 1;
        }
        let log = IterationLog {
            iteration: it,
            games: cfg.games_per_iteration,
            black_wins,
            mean_loss: loss_sum / cfg.steps_per_iteration.max(1) as f64,
        };
        for (k, &mark) in marks.iter().enumerate() {
            if mark == it {
                let c = snapshot(&net, step, k + 1);
                sink(&c, Some(&log)).map_err(TrainError::Sink)?;
                out.push(c);
            }
        }
    }
    Ok(out)
}

/// Seed for the self-play games that make up a held-out evaluation batch.
pub fn held_out_seed(seed: u64) -> u64 {
    derive_seed(seed, "held-out", 0)
}
