//! Checking behavioral cases against perfect play.

use super::dead::{is_captured, is_dead};
use super::solver::{OracleError, Solver};
use crate::board::Coord;
use crate::synth::BehavioralCase;

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum CaseViolation {
    #[error("the board is already decided")]
    Terminal,
    #[error("the board does not put the right player on move")]
    WrongTurn,
    #[error("a positive case needs a script and a negative one avoid cells")]
    Empty,
    #[error("juncture {0}: the script cannot be replayed")]
    Unplayable(usize),
    #[error("juncture {0}: the attacker has no forced win")]
    NoForcedWin(usize),
    #[error("juncture {juncture}: expected {expected:?} but the winning replies are {winning:?}")]
    Incomplete {
        juncture: usize,
        expected: Vec<Coord>,
        winning: Vec<Coord>,
    },
    #[error("juncture {0}: every legal reply keeps the win")]
    NoLosingAlternative(usize),
    #[error("avoid cell {0} is occupied")]
    AvoidOccupied(Coord),
    #[error("avoid cell {0} is not dead")]
    Live(Coord),
    #[error("avoid cells are not captured")]
    NotCaptured,
}

/// Checks every case invariant. The outer error is a solver refusal, the
/// inner one the first broken invariant.
pub fn check_case(solver: &mut Solver, case: &BehavioralCase) -> Result<Result<(), CaseViolation>, OracleError> {
    let b = &case.board;
    if b.winner().winner().is_some() {
        return Ok(Err(CaseViolation::Terminal));
    }
    let attacker = case.attacker;
    let defender = attacker.opponent();
    if case.is_negative() {
        if case.avoid_cells.is_empty() {
            return Ok(Err(CaseViolation::Empty));
        }
        if b.to_move().ok() != Some(attacker) {
            return Ok(Err(CaseViolation::WrongTurn));
        }
        if let Some(&c) = case.avoid_cells.iter().find(|&&c| !b.is_empty_cell(c)) {
            return Ok(Err(CaseViolation::AvoidOccupied(c)));
        }
        if case.concept == "captured" {
            if !is_captured(solver, b, &case.avoid_cells, attacker)? {
                return Ok(Err(CaseViolation::NotCaptured));
            }
        } else {
            for &c in &case.avoid_cells {
                if !is_dead(solver, b, c)? {
                    return Ok(Err(CaseViolation::Live(c)));
                }
            }
        }
        return Ok(Ok(()));
    }
    if case.script.is_empty() {
        return Ok(Err(CaseViolation::Empty));
    }
    if b.to_move().ok() != Some(defender) {
        return Ok(Err(CaseViolation::WrongTurn));
    }
    let Ok(boards) = case.juncture_boards() else {
        return Ok(Err(CaseViolation::Unplayable(0)));
    };
    for (j, (state, step)) in boards.iter().zip(&case.script).enumerate() {
        if state.winner().winner().is_some() {
            return Ok(Err(CaseViolation::Unplayable(j)));
        }
        if solver.winner(state, defender)? != attacker {
            return Ok(Err(CaseViolation::NoForcedWin(j)));
        }
        let Ok(after) = state.with_stone(step.forcing, defender) else {
            return Ok(Err(CaseViolation::Unplayable(j)));
        };
        let (winner, mut winning) = solver.outcome(&after, attacker)?;
        if winner != attacker {
            return Ok(Err(CaseViolation::NoForcedWin(j)));
        }
        winning.sort();
        let mut expected = step.expected.clone();
        expected.sort();
        if expected != winning {
            return Ok(Err(CaseViolation::Incomplete { juncture: j, expected, winning }));
        }
        if case.defender_connected && winning.len() == after.empty_cells().len() {
            return Ok(Err(CaseViolation::NoLosingAlternative(j)));
        }
    }
    Ok(Ok(()))
}

/// True iff the case satisfies every invariant.
pub fn verify_case(solver: &mut Solver, case: &BehavioralCase) -> Result<bool, OracleError> {
    Ok(check_case(solver, case)?.is_ok())
}
