//! Dead and captured cells, decided by comparing solved values.

use super::solver::{OracleError, Solver};
use crate::board::{Board, BoardError, Coord, Player};

/// True iff filling `c` with either colour leaves the perfect-play winner
/// unchanged, for both choices of the side to move.
pub fn is_dead(solver: &mut Solver, b: &Board, c: Coord) -> Result<bool, OracleError> {
    if b.get(c).is_some() {
        return Err(BoardError::Occupied(c).into());
    }
    if b.winner().winner().is_some() {
        return Ok(true);
    }
    let with_black = b.with_stone(c, Player::Black)?;
    let with_white = b.with_stone(c, Player::White)?;
    for to_move in [Player::Black, Player::White] {
        let base = solver.winner(b, to_move)?;
        if solver.winner(&with_black, to_move)? != base
            || solver.winner(&with_white, to_move)? != base
        {
            return Ok(false);
        }
    }
    Ok(true)
}

/// True iff `owner` can answer an opponent intrusion into any cell of
/// `cells` with a reply inside `cells` after which the intruded cell, read as
/// empty, is dead.
pub fn is_captured(
    solver: &mut Solver,
    b: &Board,
    cells: &[Coord],
    owner: Player,
) -> Result<bool, OracleError> {
    for &x in cells {
        if b.get(x).is_some() {
            return Err(BoardError::Occupied(x).into());
        }
    }
    for &x in cells {
        let mut answered = false;
        for &y in cells.iter().filter(|&&y| y != x) {
            let replied = b.with_stone(y, owner)?;
            if is_dead(solver, &replied, x)? {
                answered = true;
                break;
            }
        }
        if !answered {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn winning_cell_is_live() {
        let b = Board::parse(". B W\n . B .\n  . . .\n").unwrap();
        let mut s = Solver::new(3);
        // (2,1) is one of Black's two winning cells; a White stone there lets
        // White, on move, take the other.
        assert!(!is_dead(&mut s, &b, Coord::new(2, 1)).unwrap());
    }

    #[test]
    fn every_cell_of_a_won_board_is_dead() {
        let b = Board::parse("B . .\n B . .\n  B W W\n").unwrap();
        let mut s = Solver::new(3);
        for c in b.empty_cells() {
            assert!(is_dead(&mut s, &b, c).unwrap());
        }
    }
}
