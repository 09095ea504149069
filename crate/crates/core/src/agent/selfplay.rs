//! Self-play games and play-offs against a uniform-random opponent.

use rand::seq::IndexedRandom;
use serde::{Deserialize, Serialize};

use crate::board::{Board, Coord, Player};
use crate::seed::rng_for;

use super::mcts::{mcts, policy_move, Evaluator, MctsError, MctsParams};
use super::net::Sample;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelfPlayParams {
    pub budget: usize,
    pub mcts: MctsParams,
    /// Moves sampled in proportion to visit counts before play turns greedy.
    pub temperature_moves: usize,
}

impl Default for SelfPlayParams {
    fn default() -> Self {
        Self { budget: 64, mcts: MctsParams::default(), temperature_moves: 4 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub size: usize,
    pub moves: Vec<Coord>,
    /// One training sample per position, in the mover's canonical frame.
    pub samples: Vec<Sample>,
    pub winner: Player,
}

/// Plays one game with root noise from an empty board of `size`.
pub fn selfplay<E: Evaluator + ?Sized>(
    eval: &E,
    size: usize,
    params: &SelfPlayParams,
    seed: u64,
    index: u64,
) -> Result<Trajectory, MctsError> {
    let mut rng = rng_for(seed, "selfplay", index);
    let mut b = Board::new(size);
    let mut moves = Vec::new();
    let mut pending: Vec<(Vec<f32>, Vec<f32>, Player)> = Vec::new();
    while !b.is_terminal() {
        let mover = b.to_move()?;
        let r = mcts(eval, &b, params.budget, &params.mcts, Some(&mut rng))?;
        let mut policy = vec![0.0f32; size * size];
        for (&m, &p) in r.moves.iter().zip(&r.pi) {
            policy[Board::from_canonical(m, mover).index(size)] = p;
        }
        pending.push((b.encode_as(mover).as_slice().to_vec(), policy, mover));
        let mv = if moves.len() < params.temperature_moves { r.sample_move(&mut rng) } else { r.best_move() };
        b = b.apply_move(mover, mv)?;
        moves.push(mv);
    }
    let winner = b.winner().winner().expect("finished game has a winner");
    let samples = pending
        .into_iter()
        .map(|(features, policy, mover)| Sample { features, policy, z: if mover == winner { 1.0 } else { -1.0 } })
        .collect();
    Ok(Trajectory { size, moves, samples, winner })
}

/// How the agent picks moves in evaluation games.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Module {
    Mcts,
    Policy,
}

pub fn agent_move<E: Evaluator + ?Sized>(eval: &E, b: &Board, module: Module, budget: usize) -> Result<Coord, MctsError> {
    match module {
        Module::Mcts => Ok(mcts(eval, b, budget, &MctsParams::default(), None)?.best_move()),
        Module::Policy => Ok(policy_move(eval, b)?.0),
    }
}

/// Games won by the agent playing `colour` against a uniform-random mover.
pub fn play_vs_random<E: Evaluator + ?Sized>(
    eval: &E,
    size: usize,
    games: usize,
    colour: Player,
    module: Module,
    budget: usize,
    seed: u64,
) -> Result<usize, MctsError> {
    let mut wins = 0;
    for g in 0..games {
        let mut rng = rng_for(seed, "vs-random", g as u64);
        let mut b = Board::new(size);
        while !b.is_terminal() {
            let mv = if b.to_move()? == colour {
                agent_move(eval, &b, module, budget)?
            } else {
                *b.legal_moves().choose(&mut rng).expect("non-terminal board has a move")
            };
            b = b.play(mv)?;
        }
        if b.winner().winner() == Some(colour) {
            wins += 1;
        }
    }
    Ok(wins)
}
