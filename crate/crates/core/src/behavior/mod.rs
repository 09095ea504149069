//! Behavioural tests: does the agent play the concept's moves when the
//! position demands them, and does it leave dead cells alone?

use rand::seq::IndexedRandom;
use serde::{Deserialize, Serialize};

use crate::agent::{mcts, policy_move, Evaluator, MctsError, MctsParams, Module};
use crate::board::{Board, BoardError, Coord, Player};
use crate::oracle::{OracleError, Solver};
use crate::seed::rng_for;
use crate::synth::BehavioralCase;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BehaviorError {
    #[error("case {0} is {1}")]
    WrongKind(String, &'static str),
    #[error("case {0} starts from a finished game")]
    Terminal(String),
    #[error("case {0}: {1}")]
    Malformed(String, String),
    #[error("position is not won for the player to move")]
    NotWinning,
    #[error("fewer than two legal actions")]
    TooFewActions,
    #[error(transparent)]
    Search(#[from] MctsError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Board(#[from] BoardError),
}

/// One decision: the move taken and the scores of every legal move.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Choice {
    pub mv: Coord,
    pub moves: Vec<Coord>,
    pub logits: Vec<f32>,
}

/// A move chooser. Network-backed agents and scripted test agents both fit.
pub trait Agent {
    fn choose(&mut self, b: &Board) -> Result<Choice, BehaviorError>;
}

/// The checkpoint acting through MCTS (most visited move, search scores) or
/// through the raw policy head (argmax, head logits).
pub struct NetAgent<'a, E: Evaluator + ?Sized> {
    pub eval: &'a E,
    pub module: Module,
    pub budget: usize,
    pub params: MctsParams,
}

impl<'a, E: Evaluator + ?Sized> NetAgent<'a, E> {
    pub fn new(eval: &'a E, module: Module, budget: usize) -> Self {
        Self { eval, module, budget, params: MctsParams::default() }
    }
}

impl<E: Evaluator + ?Sized> Agent for NetAgent<'_, E> {
    fn choose(&mut self, b: &Board) -> Result<Choice, BehaviorError> {
        match self.module {
            Module::Mcts => {
                let r = mcts(self.eval, b, self.budget, &self.params, None)?;
                Ok(Choice { mv: r.best_move(), moves: r.moves, logits: r.mcts_logits })
            }
            Module::Policy => {
                let (mv, moves, logits) = policy_move(self.eval, b)?;
                Ok(Choice { mv, moves, logits })
            }
        }
    }
}

/// Uniform-random legal moves, the chance baseline.
pub struct RandomAgent {
    rng: crate::seed::Rng,
}

impl RandomAgent {
    pub fn new(seed: u64, index: u64) -> Self {
        Self { rng: rng_for(seed, "random-agent", index) }
    }
}

impl Agent for RandomAgent {
    fn choose(&mut self, b: &Board) -> Result<Choice, BehaviorError> {
        let moves = b.legal_moves();
        let mv = *moves.choose(&mut self.rng).ok_or(BehaviorError::TooFewActions)?;
        let logits = vec![0.0; moves.len()];
        Ok(Choice { mv, moves, logits })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JunctureRecord {
    pub forcing: Coord,
    pub choice: Choice,
    pub matched: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BehavioralResult {
    pub case_id: String,
    pub checkpoint: usize,
    pub module: String,
    pub passed: bool,
    pub board: Board,
    pub junctures: Vec<JunctureRecord>,
    /// Moves after the script (or the whole continuation for negative cases).
    pub rollout: Vec<Coord>,
    pub winner: Option<Player>,
}

/// Oracle defence: the first of the moves that hold out longest.
fn defender_move(solver: &mut Solver, b: &Board, defender: Player) -> Result<Coord, BehaviorError> {
    let best = solver.best_moves(b, defender)?;
    best.first().copied().ok_or(BehaviorError::TooFewActions)
}

/// Plays the case's script against `agent`, then finishes the game with the
/// agent as attacker and an oracle-optimal defender. The script stops early
/// when the agent picks a winning reply other than the one the later
/// junctures were built on.
pub fn run_positive<A: Agent + ?Sized>(
    case: &BehavioralCase,
    agent: &mut A,
    solver: &mut Solver,
    checkpoint: usize,
    module: &str,
) -> Result<BehavioralResult, BehaviorError> {
    if case.is_negative() {
        return Err(BehaviorError::WrongKind(case.id.clone(), "negative"));
    }
    if case.board.is_terminal() {
        return Err(BehaviorError::Terminal(case.id.clone()));
    }
    let (attacker, defender) = (case.attacker, case.defender());
    let mut b = case.board.clone();
    let mut junctures = Vec::new();
    let mut all_matched = true;
    for j in &case.script {
        if !b.is_empty_cell(j.forcing) {
            return Err(BehaviorError::Malformed(case.id.clone(), format!("forcing cell {:?} is taken", j.forcing)));
        }
        b = b.apply_move(defender, j.forcing)?;
        let choice = agent.choose(&b)?;
        let matched = j.expected.contains(&choice.mv);
        let on_script = j.expected.first() == Some(&choice.mv);
        b = b.apply_move(attacker, choice.mv)?;
        junctures.push(JunctureRecord { forcing: j.forcing, choice, matched });
        if !matched {
            all_matched = false;
            break;
        }
        if !on_script {
            break;
        }
    }
    let mut rollout = Vec::new();
    if all_matched {
        while !b.is_terminal() {
            let mover = b.to_move()?;
            let mv = if mover == attacker { agent.choose(&b)?.mv } else { defender_move(solver, &b, defender)? };
            b = b.apply_move(mover, mv)?;
            rollout.push(mv);
        }
    }
    let winner = b.winner().winner();
    Ok(BehavioralResult {
        case_id: case.id.clone(),
        checkpoint,
        module: module.into(),
        passed: all_matched && winner == Some(attacker),
        board: case.board.clone(),
        junctures,
        rollout,
        winner,
    })
}

/// The agent plays both sides from the case board to the end; the case
/// passes when no move lands on an avoid cell.
pub fn run_negative<A: Agent + ?Sized>(
    case: &BehavioralCase,
    agent: &mut A,
    checkpoint: usize,
    module: &str,
) -> Result<BehavioralResult, BehaviorError> {
    if !case.is_negative() {
        return Err(BehaviorError::WrongKind(case.id.clone(), "positive"));
    }
    if case.avoid_cells.is_empty() {
        return Err(BehaviorError::Malformed(case.id.clone(), "no avoid cells".into()));
    }
    if case.avoid_cells.iter().any(|&c| !case.board.is_empty_cell(c)) {
        return Err(BehaviorError::Malformed(case.id.clone(), "an avoid cell is occupied".into()));
    }
    let mut b = case.board.clone();
    let mut rollout = Vec::new();
    let mut passed = true;
    while !b.is_terminal() {
        let mv = agent.choose(&b)?.mv;
        if case.avoid_cells.contains(&mv) {
            passed = false;
        }
        b = b.play(mv)?;
        rollout.push(mv);
    }
    Ok(BehavioralResult {
        case_id: case.id.clone(),
        checkpoint,
        module: module.into(),
        passed,
        board: case.board.clone(),
        junctures: Vec::new(),
        rollout,
        winner: b.winner().winner(),
    })
}

/// Standard score of `logits[correct]` within `logits`, using the population
/// standard deviation. `None` when the spread is zero.
pub fn zscore(logits: &[f32], correct: usize) -> Result<Option<f64>, BehaviorError> {
    if logits.len() < 2 {
        return Err(BehaviorError::TooFewActions);
    }
    let n = logits.len() as f64;
    let mean = logits.iter().map(|&l| f64::from(l)).sum::<f64>() / n;
    let var = logits.iter().map(|&l| (f64::from(l) - mean).powi(2)).sum::<f64>() / n;
    if var <= 0.0 {
        return Ok(Some(0.0));
    }
    Ok(Some((f64::from(logits[correct]) - mean) / var.sqrt()))
}

/// Best z-score over a juncture's expected moves, computed on the legal
/// moves' scores only.
pub fn juncture_zscore(choice: &Choice, expected: &[Coord]) -> Result<f64, BehaviorError> {
    let mut best = f64::NEG_INFINITY;
    for e in expected {
        if let Some(i) = choice.moves.iter().position(|m| m == e) {
            if let Some(z) = zscore(&choice.logits, i)? {
                best = best.max(z);
            }
        }
    }
    Ok(best)
}

/// Share of script junctures (on each case's scripted line) where the
/// agent's score for a correct move is more than one standard deviation
/// above the mean.
pub fn zscore_rate<A: Agent + ?Sized>(cases: &[BehavioralCase], agent: &mut A) -> Result<f64, BehaviorError> {
    let mut counted = 0usize;
    let mut total = 0usize;
    for case in cases.iter().filter(|c| !c.is_negative()) {
        for (j, b) in case.script.iter().zip(case.juncture_boards()?) {
            let after = b.apply_move(case.defender(), j.forcing)?;
            let choice = agent.choose(&after)?;
            total += 1;
            if juncture_zscore(&choice, &j.expected)? > 1.0 {
                counted += 1;
            }
        }
    }
    Ok(if total == 0 { 0.0 } else { counted as f64 / total as f64 })
}

/// Share of games, from positions the mover wins, that the agent takes more
/// plies to finish than the oracle's minimal win against a defender that
/// holds out as long as possible. Lost games count as wasted.
pub fn wasted_move_rate<A: Agent + ?Sized>(
    positions: &[Board],
    agent: &mut A,
    solver: &mut Solver,
) -> Result<f64, BehaviorError> {
    if positions.is_empty() {
        return Ok(0.0);
    }
    let mut wasted = 0;
    for p in positions {
        let mover = p.to_move()?;
        let (winner, depth) = solver.win_depth(p, mover)?;
        if winner != mover {
            return Err(BehaviorError::NotWinning);
        }
        let mut b = p.clone();
        let mut plies = 0;
        while !b.is_terminal() {
            let to_move = b.to_move()?;
            let mv = if to_move == mover { agent.choose(&b)?.mv } else { defender_move(solver, &b, to_move)? };
            b = b.apply_move(to_move, mv)?;
            plies += 1;
        }
        if b.winner().winner() != Some(mover) || plies > depth {
            wasted += 1;
        }
    }
    Ok(wasted as f64 / positions.len() as f64)
}

/// Random positions, reached by uniform play, that the mover wins within
/// `max_depth` plies but not immediately.
pub fn near_won_boards(size: usize, count: usize, max_depth: u32, seed: u64) -> Result<Vec<Board>, BehaviorError> {
    let mut solver = Solver::new(size);
    let mut out = Vec::new();
    let mut attempt = 0u64;
    while out.len() < count {
        let mut rng = rng_for(seed, "near-won", attempt);
        attempt += 1;
        let mut b = Board::new(size);
        while !b.is_terminal() {
            if 3 * b.empty_cells().len() <= 2 * size * size {
                let mover = b.to_move()?;
                let (winner, depth) = solver.win_depth(&b, mover)?;
                if winner == mover && (3..=max_depth).contains(&depth) {
                    out.push(b.clone());
                    break;
                }
            }
            let mv = *b.legal_moves().choose(&mut rng).expect("game not over");
            b = b.play(mv)?;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::gen_behavioral_cases;

    /// Always plays the first expected move at a juncture, and otherwise a
    /// winning move from the oracle.
    struct Scripted<'a> {
        case: &'a BehavioralCase,
        solver: Solver,
        deviate: Option<Coord>,
    }

    impl Agent for Scripted<'_> {
        fn choose(&mut self, b: &Board) -> Result<Choice, BehaviorError> {
            let moves = b.legal_moves();
            let mover = b.to_move()?;
            let mut mv = self.solver.outcome(b, mover)?.1[0];
            for j in &self.case.script {
                if !b.is_empty_cell(j.forcing) && j.expected.iter().all(|&e| b.is_empty_cell(e)) {
                    mv = self.deviate.unwrap_or(j.expected[0]);
                    break;
                }
            }
            Ok(Choice { mv, logits: vec![0.0; moves.len()], moves })
        }
    }

    #[test]
    fn perfect_scripted_agent_passes_bridge_cases() {
        let cases = gen_behavioral_cases("bridge", 5, 5, 1, true).unwrap();
        let mut solver = Solver::new(5);
        for case in &cases {
            let mut agent = Scripted { case, solver: Solver::new(5), deviate: None };
            let r = run_positive(case, &mut agent, &mut solver, 0, "scripted").unwrap();
            assert!(r.passed, "{}", case.id);
            assert_eq!(r.winner, Some(case.attacker));
        }
    }

    #[test]
    fn ignoring_the_intrusion_fails_and_loses() {
        let cases = gen_behavioral_cases("bridge", 5, 5, 2, true).unwrap();
        let mut solver = Solver::new(5);
        for case in &cases {
            let j = &case.script[0];
            let after = case.board.apply_move(case.defender(), j.forcing).unwrap();
            let carrier_elsewhere = after
                .legal_moves()
                .into_iter()
                .find(|c| !j.expected.contains(c))
                .unwrap();
            let mut agent = Scripted { case, solver: Solver::new(5), deviate: Some(carrier_elsewhere) };
            let r = run_positive(case, &mut agent, &mut solver, 0, "scripted").unwrap();
            assert!(!r.passed);
            let deviated = after.apply_move(case.attacker, carrier_elsewhere).unwrap();
            assert_eq!(solver.winner(&deviated, case.defender()).unwrap(), case.defender());
        }
    }

    struct Filler(Coord);

    impl Agent for Filler {
        fn choose(&mut self, b: &Board) -> Result<Choice, BehaviorError> {
            let moves = b.legal_moves();
            let mv = if b.is_empty_cell(self.0) { self.0 } else { moves[0] };
            Ok(Choice { mv, logits: vec![0.0; moves.len()], moves })
        }
    }

    #[test]
    fn filling_a_dead_cell_fails_a_negative_case() {
        let cases = gen_behavioral_cases("dead", 3, 5, 4, true).unwrap();
        for case in &cases {
            let r = run_negative(case, &mut Filler(case.avoid_cells[0]), 0, "scripted").unwrap();
            assert!(!r.passed);
            assert_eq!(r.rollout[0], case.avoid_cells[0]);
            // An agent that avoids the cells passes.
            let far = case.board.legal_moves().into_iter().find(|c| !case.avoid_cells.contains(c)).unwrap();
            let mut avoider = Filler(far);
            let _ = run_negative(case, &mut avoider, 0, "scripted").unwrap();
        }
        let positive = gen_behavioral_cases("bridge", 1, 5, 1, true).unwrap();
        assert!(matches!(run_negative(&positive[0], &mut Filler(Coord::new(0, 0)), 0, "x"), Err(BehaviorError::WrongKind(..))));
    }

    #[test]
    fn zscore_examples() {
        assert!((zscore(&[5.0, 1.0, 1.0, 1.0, 1.0], 0).unwrap().unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(zscore(&[1.0, 1.0, 1.0], 0).unwrap(), Some(0.0));
        assert!(zscore(&[0.0, 1.0, 2.0], 0).unwrap().unwrap() < 0.0);
        assert_eq!(zscore(&[1.0], 0).unwrap_err(), BehaviorError::TooFewActions);
        let c = Choice { mv: Coord::new(0, 0), moves: vec![Coord::new(0, 0), Coord::new(0, 1), Coord::new(1, 0)], logits: vec![3.0, 0.0, 3.0] };
        let z = juncture_zscore(&c, &[Coord::new(0, 1), Coord::new(1, 0)]).unwrap();
        assert!(z > 0.0);
    }

    struct Delayer;

    impl Agent for Delayer {
        fn choose(&mut self, b: &Board) -> Result<Choice, BehaviorError> {
            // Always plays the last empty cell in board order.
            let moves = b.legal_moves();
            Ok(Choice { mv: *moves.last().unwrap(), logits: vec![0.0; moves.len()], moves })
        }
    }

    #[test]
    fn wasted_moves() {
        // Black to move, one cell short of a chain.
        let single = Board::from_stones(3, &[Coord::new(0, 0), Coord::new(1, 0)], &[Coord::new(0, 1), Coord::new(1, 1)]).unwrap();
        let mut solver = Solver::new(3);
        let forced: Vec<Board> = vec![single.clone()];
        let mut oracle = Scripted2(Solver::new(3));
        assert_eq!(wasted_move_rate(&forced, &mut oracle, &mut solver).unwrap(), 0.0);
        let near = near_won_boards(5, 5, 7, 3).unwrap();
        let mut solver = Solver::new(5);
        let mut oracle = Scripted2(Solver::new(5));
        assert_eq!(wasted_move_rate(&near, &mut oracle, &mut solver).unwrap(), 0.0);
        let rate = wasted_move_rate(&near, &mut Delayer, &mut solver).unwrap();
        assert!(rate > 0.0);
    }

    /// Plays the fastest win the oracle knows.
    struct Scripted2(Solver);

    impl Agent for Scripted2 {
        fn choose(&mut self, b: &Board) -> Result<Choice, BehaviorError> {
            let mover = b.to_move()?;
            let moves = b.legal_moves();
            let (_, d0) = self.0.win_depth(b, mover)?;
            let mut mv = moves[0];
            for &m in &moves {
                let next = b.apply_move(mover, m)?;
                if next.is_terminal() {
                    mv = m;
                    break;
                }
                let (w, d) = self.0.win_depth(&next, mover.opponent())?;
                if w == mover && d + 1 == d0 {
                    mv = m;
                    break;
                }
            }
            Ok(Choice { mv, logits: vec![0.0; moves.len()], moves })
        }
    }
}
