//! AlphaZero-style agent: policy/value network, PUCT search, self-play
//! training and checkpoints.

pub mod checkpoint;
pub mod mcts;
pub mod net;
pub mod selfplay;
pub mod train;

pub use checkpoint::{write_atomic, Checkpoint, CheckpointError, Manifest};
pub use mcts::{mcts, policy_move, Evaluator, MctsError, MctsParams, SearchResult};
pub use net::{legal_mask, masked_softmax, ActivationRecord, Adam, LossTerms, NetError, Network, NetworkConfig, Sample};
pub use selfplay::{agent_move, play_vs_random, selfplay, Module, SelfPlayParams, Trajectory};
pub use train::{checkpoint_iterations, train, IterationLog, TrainConfig, TrainError};
