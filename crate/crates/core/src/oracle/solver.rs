//! Exact perfect-play solver.
//!
//! Boolean negamax over bit masks with a transposition table keyed on the
//! position and side to move, immediate-win detection and forced replies to
//! single threats. Win depth is found by iterative deepening over a bounded
//! search that prunes with the shortest-path lower bound.

use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::bits::{iter_bits, masks, Geometry, Mask, MAX_SIZE};
use crate::board::{Board, BoardError, Coord, Player};

/// Boards of this size or smaller are always attempted.
pub const GENERAL_SIZE_LIMIT: usize = 5;
/// Larger boards are attempted when at most this many cells are empty.
pub const EMPTY_CELL_LIMIT: usize = 20;
pub const DEFAULT_NODE_BUDGET: u64 = 200_000_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error("solver budget exceeded after {nodes} nodes")]
    BudgetExceeded { nodes: u64 },
    #[error("board of size {size} with {empty} empty cells is outside the solver's range")]
    OutOfRange { size: usize, empty: usize },
    #[error("position is not a win for {0}")]
    NotWinning(Player),
    #[error(transparent)]
    Board(#[from] BoardError),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolveResult {
    pub winner: Player,
    /// For the winner to move: every win-preserving move. For the loser to
    /// move: every legal move (all of them preserve the outcome).
    pub optimal_moves: Vec<Coord>,
    /// Plies until the winner's chain completes under optimal play from both
    /// sides (winner minimises, loser maximises). Zero on finished boards.
    pub depth: u32,
}

type Key = (Mask, Mask, u8);

pub struct Solver {
    geo: Geometry,
    win_tt: FxHashMap<Key, bool>,
    depth_tt: FxHashMap<Key, (u8, u8)>,
    nodes: u64,
    call_start: u64,
    budget: u64,
}

/// Transposition tables are dropped once they hold this many entries.
const TABLE_LIMIT: usize = 4_000_000;

fn stones_of(black: Mask, white: Mask, p: Player) -> Mask {
    match p {
        Player::Black => black,
        Player::White => white,
    }
}

impl Solver {
    pub fn new(size: usize) -> Self {
        Self::with_budget(size, DEFAULT_NODE_BUDGET)
    }

    pub fn with_budget(size: usize, budget: u64) -> Self {
        Self {
            geo: Geometry::new(size.clamp(1, MAX_SIZE)),
            win_tt: FxHashMap::default(),
            depth_tt: FxHashMap::default(),
            nodes: 0,
            call_start: 0,
            budget,
        }
    }

    pub fn size(&self) -> usize {
        self.geo.size
    }

    pub fn nodes(&self) -> u64 {
        self.nodes
    }

    /// Starts a new public query: resets the per-query node budget.
    fn check_range(&mut self, board: &Board) -> Result<(Mask, Mask), OracleError> {
        self.call_start = self.nodes;
        if self.win_tt.len() > TABLE_LIMIT {
            self.win_tt.clear();
        }
        if self.depth_tt.len() > TABLE_LIMIT {
            self.depth_tt.clear();
        }
        let size = board.size();
        let empty = board.empty_cells().len();
        if size != self.geo.size
            || size > MAX_SIZE
            || (size > GENERAL_SIZE_LIMIT && empty > EMPTY_CELL_LIMIT)
        {
            return Err(OracleError::OutOfRange { size, empty });
        }
        Ok(masks(board))
    }

    fn tick(&mut self) -> Result<(), OracleError> {
        self.nodes += 1;
        if self.nodes - self.call_start > self.budget {
            return Err(OracleError::BudgetExceeded {
                nodes: self.nodes - self.call_start,
            });
        }
        Ok(())
    }

    /// True if `mover` wins with `mover` to play.
    fn wins(&mut self, black: Mask, white: Mask, mover: Player) -> Result<bool, OracleError> {
        let g = &self.geo;
        let own = stones_of(black, white, mover);
        let opp = stones_of(black, white, mover.opponent());
        if g.has_chain(opp, mover.opponent()) {
            return Ok(false);
        }
        if g.has_chain(own, mover) {
            return Ok(true);
        }
        let empty = g.all & !(black | white);
        if empty == 0 {
            return Ok(false);
        }
        if g.winning_cells(own, empty, mover) != 0 {
            return Ok(true);
        }
        let key = (black, white, (mover == Player::Black) as u8);
        if let Some(&v) = self.win_tt.get(&key) {
            return Ok(v);
        }
        self.tick()?;
        let threats = self.geo.winning_cells(opp, empty, mover.opponent());
        let candidates: Vec<usize> = if threats.count_ones() >= 2 {
            Vec::new()
        } else if threats != 0 {
            vec![threats.trailing_zeros() as usize]
        } else {
            self.ordered_moves(own, opp, empty, mover)
        };
        let mut result = false;
        for i in candidates {
            let bit = 1u128 << i;
            let (nb, nw) = match mover {
                Player::Black => (black | bit, white),
                Player::White => (black, white | bit),
            };
            if !self.wins(nb, nw, mover.opponent())? {
                result = true;
                break;
            }
        }
        self.win_tt.insert(key, result);
        Ok(result)
    }

    /// Empty cells ordered so moves that shorten the mover's path or lengthen
    /// the opponent's come first.
    fn ordered_moves(&self, own: Mask, opp: Mask, empty: Mask, mover: Player) -> Vec<usize> {
        let g = &self.geo;
        let big = 1000i32;
        let mut scored: Vec<(i32, usize)> = g
            .order
            .iter()
            .enumerate()
            .filter(|&(_, &i)| empty >> i & 1 == 1)
            .map(|(rank, &i)| {
                let bit = 1u128 << i;
                let mine = g
                    .distance(own | bit, empty & !bit, mover)
                    .map_or(big, |d| d as i32);
                let theirs = g
                    .distance(opp, empty & !bit, mover.opponent())
                    .map_or(big, |d| d as i32);
                ((mine - theirs) * 64 + rank as i32, i)
            })
            .collect();
        scored.sort_unstable();
        scored.into_iter().map(|(_, i)| i).collect()
    }

    /// Can `attacker` complete a chain within `plies` plies?
    fn win_within(
        &mut self,
        black: Mask,
        white: Mask,
        to_move: Player,
        attacker: Player,
        plies: u32,
    ) -> Result<bool, OracleError> {
        let g = &self.geo;
        let defender = attacker.opponent();
        let att = stones_of(black, white, attacker);
        let def = stones_of(black, white, defender);
        if g.has_chain(att, attacker) {
            return Ok(true);
        }
        if g.has_chain(def, defender) || plies == 0 {
            return Ok(false);
        }
        let empty = g.all & !(black | white);
        let need = match g.distance(att, empty, attacker) {
            Some(d) => d,
            None => return Ok(false),
        };
        let min_plies = if to_move == attacker {
            2 * need - 1
        } else {
            2 * need
        };
        if plies < min_plies {
            return Ok(false);
        }
        let att_threats = g.winning_cells(att, empty, attacker);
        let def_threats = g.winning_cells(def, empty, defender);
        let key = (
            black,
            white,
            (to_move == Player::Black) as u8 | ((attacker == Player::Black) as u8) << 1,
        );
        if let Some(&(fail_up_to, win_at)) = self.depth_tt.get(&key) {
            if plies as u8 <= fail_up_to && fail_up_to != u8::MAX {
                return Ok(false);
            }
            if win_at != 0 && plies as u8 >= win_at {
                return Ok(true);
            }
        }
        self.tick()?;
        let result = if to_move == attacker {
            if att_threats != 0 {
                true
            } else if def_threats.count_ones() >= 2 {
                false
            } else {
                let cands: Vec<usize> = if def_threats != 0 {
                    vec![def_threats.trailing_zeros() as usize]
                } else {
                    self.ordered_moves(att, def, empty, attacker)
                };
                let mut found = false;
                for i in cands {
                    let (nb, nw) = place(black, white, to_move, i);
                    if self.win_within(nb, nw, defender, attacker, plies - 1)? {
                        found = true;
                        break;
                    }
                }
                found
            }
        } else if def_threats != 0 {
            false
        } else if plies >= 2 && att_threats.count_ones() >= 2 {
            true
        } else {
            let cands: Vec<usize> = if att_threats != 0 {
                vec![att_threats.trailing_zeros() as usize]
            } else {
                self.ordered_moves(def, att, empty, defender)
            };
            let mut all = !cands.is_empty();
            for i in cands {
                let (nb, nw) = place(black, white, to_move, i);
                if !self.win_within(nb, nw, attacker, attacker, plies - 1)? {
                    all = false;
                    break;
                }
            }
            all
        };
        let entry = self.depth_tt.entry(key).or_insert((u8::MAX, 0));
        if result {
            if entry.1 == 0 || (plies as u8) < entry.1 {
                entry.1 = plies as u8;
            }
        } else if entry.0 == u8::MAX || plies as u8 > entry.0 {
            entry.0 = plies as u8;
        }
        Ok(result)
    }

    fn depth_of(
        &mut self,
        black: Mask,
        white: Mask,
        to_move: Player,
        winner: Player,
    ) -> Result<u32, OracleError> {
        let g = &self.geo;
        if g.has_chain(stones_of(black, white, winner), winner) {
            return Ok(0);
        }
        let empty = g.all & !(black | white);
        let need = g
            .distance(stones_of(black, white, winner), empty, winner)
            .ok_or(OracleError::NotWinning(winner))?;
        let mut plies = if to_move == winner {
            2 * need - 1
        } else {
            2 * need
        }
        .max(1);
        let max = empty.count_ones() + 1;
        while plies <= max {
            if self.win_within(black, white, to_move, winner, plies)? {
                return Ok(plies);
            }
            plies += 1;
        }
        Err(OracleError::NotWinning(winner))
    }

    /// Winner under perfect play with `to_move` to play. Stone counts need
    /// not satisfy the alternation rule.
    pub fn winner(&mut self, board: &Board, to_move: Player) -> Result<Player, OracleError> {
        let (black, white) = self.check_range(board)?;
        Ok(if self.wins(black, white, to_move)? {
            to_move
        } else {
            to_move.opponent()
        })
    }

    pub fn solve(&mut self, board: &Board, to_move: Player) -> Result<SolveResult, OracleError> {
        let (black, white) = self.check_range(board)?;
        let g = &self.geo;
        if g.has_chain(black, Player::Black) || g.has_chain(white, Player::White) {
            let winner = if g.has_chain(black, Player::Black) {
                Player::Black
            } else {
                Player::White
            };
            return Ok(SolveResult {
                winner,
                optimal_moves: Vec::new(),
                depth: 0,
            });
        }
        let mover_wins = self.wins(black, white, to_move)?;
        let winner = if mover_wins {
            to_move
        } else {
            to_move.opponent()
        };
        let empty = self.geo.all & !(black | white);
        let mut optimal = Vec::new();
        for i in iter_bits(empty) {
            if mover_wins {
                let (nb, nw) = place(black, white, to_move, i);
                if !self.wins(nb, nw, to_move.opponent())? {
                    optimal.push(self.geo.coord(i));
                }
            } else {
                optimal.push(self.geo.coord(i));
            }
        }
        let depth = self.depth_of(black, white, to_move, winner)?;
        Ok(SolveResult {
            winner,
            optimal_moves: optimal,
            depth,
        })
    }

    /// Winner and its win-preserving moves (every legal move when the side to
    /// move is losing), without the depth computation of [`Solver::solve`].
    pub fn outcome(
        &mut self,
        board: &Board,
        to_move: Player,
    ) -> Result<(Player, Vec<Coord>), OracleError> {
        let (black, white) = self.check_range(board)?;
        let g = &self.geo;
        if g.has_chain(black, Player::Black) {
            return Ok((Player::Black, Vec::new()));
        }
        if g.has_chain(white, Player::White) {
            return Ok((Player::White, Vec::new()));
        }
        let mover_wins = self.wins(black, white, to_move)?;
        let empty = self.geo.all & !(black | white);
        let mut moves = Vec::new();
        for i in iter_bits(empty) {
            if mover_wins {
                let (nb, nw) = place(black, white, to_move, i);
                if self.wins(nb, nw, to_move.opponent())? {
                    continue;
                }
            }
            moves.push(self.geo.coord(i));
        }
        Ok((
            if mover_wins {
                to_move
            } else {
                to_move.opponent()
            },
            moves,
        ))
    }

    /// Plies the eventual winner needs from this position.
    pub fn win_depth(
        &mut self,
        board: &Board,
        to_move: Player,
    ) -> Result<(Player, u32), OracleError> {
        let (black, white) = self.check_range(board)?;
        let winner = if self.wins(black, white, to_move)? {
            to_move
        } else {
            to_move.opponent()
        };
        Ok((winner, self.depth_of(black, white, to_move, winner)?))
    }

    /// Best replies for `to_move`: win-preserving moves when winning, and
    /// otherwise the moves that postpone the opponent's win the longest.
    pub fn best_moves(
        &mut self,
        board: &Board,
        to_move: Player,
    ) -> Result<Vec<Coord>, OracleError> {
        let solved = self.solve(board, to_move)?;
        if solved.winner == to_move {
            return Ok(solved.optimal_moves);
        }
        let (black, white) = masks(board);
        let empty = self.geo.all & !(black | white);
        let mut best = Vec::new();
        let mut best_depth = 0;
        for i in iter_bits(empty) {
            let (nb, nw) = place(black, white, to_move, i);
            let d = self.depth_of(nb, nw, to_move.opponent(), solved.winner)?;
            if d > best_depth {
                best_depth = d;
                best.clear();
            }
            if d == best_depth {
                best.push(self.geo.coord(i));
            }
        }
        Ok(best)
    }
}

#[inline]
fn place(black: Mask, white: Mask, p: Player, i: usize) -> (Mask, Mask) {
    let bit = 1u128 << i;
    match p {
        Player::Black => (black | bit, white),
        Player::White => (black, white | bit),
    }
}

/// Exhaustive minimax without memoisation or pruning. Returns the winner and
/// the win depth (winner minimising, loser maximising). Test reference only;
/// exponential in the number of empty cells.
pub fn brute_force(board: &Board, to_move: Player) -> (Player, u32) {
    if let Some(w) = board.winner().winner() {
        return (w, 0);
    }
    let mut best: Option<(Player, u32)> = None;
    for c in board.empty_cells() {
        let child = board.with_stone(c, to_move).expect("empty cell");
        let (w, d) = brute_force(&child, to_move.opponent());
        let cand = (w, d + 1);
        best = Some(match best {
            None => cand,
            Some(cur) => {
                let better = match (cur.0 == to_move, cand.0 == to_move) {
                    (false, true) => true,
                    (true, false) => false,
                    (true, true) => cand.1 < cur.1,
                    (false, false) => cand.1 > cur.1,
                };
                if better {
                    cand
                } else {
                    cur
                }
            }
        });
    }
    best.expect("a board without a winner has an empty cell")
}
