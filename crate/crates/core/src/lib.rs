//! Hex workbench: rules, an exact solver, concept templates, an
//! AlphaZero-style agent, and the probes used to interrogate it.

pub mod agent;
pub mod behavior;
pub mod board;
pub mod concepts;
pub mod metrics;
pub mod oracle;
pub mod probe;
pub mod seed;
pub mod synth;
pub mod unionfind;

pub use board::{Board, BoardError, Coord, FeatureVector, Outcome, Player};
