//! Hex rules on an n×n rhombus.
//!
//! Coordinates are `(row, col)` with `(0, 0)` in the top-left corner. Black
//! connects the top row to the bottom row, White the left column to the right
//! column. Each board carries a disjoint-set forest over its cells plus four
//! virtual edge nodes, updated incrementally as stones are placed.

use std::collections::VecDeque;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::unionfind::UnionFind;

/// Neighbour offsets in cyclic order around a cell.
pub const NEIGHBOR_OFFSETS: [(i32, i32); 6] = [(-1, 0), (-1, 1), (0, 1), (1, 0), (1, -1), (0, -1)];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "[usize; 2]", into = "[usize; 2]")]
pub struct Coord {
    pub row: usize,
    pub col: usize,
}

impl Coord {
    pub const fn new(row: usize, col: usize) -> Self {
        Self { row, col }
    }

    pub fn index(self, size: usize) -> usize {
        self.row * size + self.col
    }

    pub fn from_index(index: usize, size: usize) -> Self {
        Self::new(index / size, index % size)
    }

    pub fn in_bounds(self, size: usize) -> bool {
        self.row < size && self.col < size
    }

    /// Diagonal transpose; maps Black's geometry onto White's.
    pub fn transposed(self) -> Self {
        Self::new(self.col, self.row)
    }

    pub fn offset(self, dr: i32, dc: i32, size: usize) -> Option<Self> {
        let r = self.row as i64 + dr as i64;
        let c = self.col as i64 + dc as i64;
        (r >= 0 && c >= 0 && (r as usize) < size && (c as usize) < size)
            .then(|| Self::new(r as usize, c as usize))
    }
}

impl From<[usize; 2]> for Coord {
    fn from(v: [usize; 2]) -> Self {
        Self::new(v[0], v[1])
    }
}

impl From<Coord> for [usize; 2] {
    fn from(c: Coord) -> Self {
        [c.row, c.col]
    }
}

impl From<(usize, usize)> for Coord {
    fn from((row, col): (usize, usize)) -> Self {
        Self::new(row, col)
    }
}

impl fmt::Display for Coord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.row, self.col)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Player {
    Black,
    White,
}

impl Player {
    pub fn opponent(self) -> Self {
        match self {
            Player::Black => Player::White,
            Player::White => Player::Black,
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Player::Black => 'B',
            Player::White => 'W',
        }
    }

    pub fn win_outcome(self) -> Outcome {
        match self {
            Player::Black => Outcome::BlackWin,
            Player::White => Outcome::WhiteWin,
        }
    }
}

impl fmt::Display for Player {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Player::Black => "black",
            Player::White => "white",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Outcome {
    Ongoing,
    BlackWin,
    WhiteWin,
}

impl Outcome {
    pub fn winner(self) -> Option<Player> {
        match self {
            Outcome::Ongoing => None,
            Outcome::BlackWin => Some(Player::Black),
            Outcome::WhiteWin => Some(Player::White),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BoardError {
    #[error("coordinate {coord} is outside a {size}x{size} board")]
    OutOfBounds { coord: Coord, size: usize },
    #[error("cell {0} is already occupied")]
    Occupied(Coord),
    #[error("{got} cannot move, it is {expected}'s turn")]
    WrongPlayer { expected: Player, got: Player },
    #[error("invalid stone counts: {black} black, {white} white")]
    InvalidParity { black: usize, white: usize },
    #[error("the game is already over")]
    GameOver,
    #[error("board size must be at least 1, got {0}")]
    InvalidSize(usize),
    #[error("boards have different sizes ({0} vs {1})")]
    SizeMismatch(usize, usize),
    #[error("cannot parse board: {0}")]
    Parse(String),
}

/// Returns the in-bounds neighbours of `c`.
pub fn neighbors(c: Coord, size: usize) -> Result<Vec<Coord>, BoardError> {
    if !c.in_bounds(size) {
        return Err(BoardError::OutOfBounds { coord: c, size });
    }
    let mut out: Vec<Coord> = NEIGHBOR_OFFSETS
        .iter()
        .filter_map(|&(dr, dc)| c.offset(dr, dc, size))
        .collect();
    out.sort();
    Ok(out)
}

fn neighbor_iter(c: Coord, size: usize) -> impl Iterator<Item = Coord> {
    NEIGHBOR_OFFSETS
        .iter()
        .filter_map(move |&(dr, dc)| c.offset(dr, dc, size))
}

/// Flattened one-hot board from the mover's point of view.
///
/// Plane 0 holds the mover's stones, plane 1 the opponent's. When White is to
/// move the board is transposed so the mover always connects top to bottom.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureVector(pub Vec<f32>);

impl FeatureVector {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.0
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(into = "BoardRecord", try_from = "BoardRecord")]
pub struct Board {
    size: usize,
    cells: Vec<Option<Player>>,
    links: UnionFind,
}

impl PartialEq for Board {
    fn eq(&self, other: &Self) -> bool {
        self.size == other.size && self.cells == other.cells
    }
}

impl Eq for Board {}

impl std::hash::Hash for Board {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.size.hash(state);
        self.cells.hash(state);
    }
}

impl Board {
    pub fn new(size: usize) -> Self {
        assert!(size >= 1, "board size must be positive");
        let n2 = size * size;
        Self {
            size,
            cells: vec![None; n2],
            links: UnionFind::new(n2 + 4),
        }
    }

    /// Builds a board from explicit stone lists without checking parity.
    pub fn from_stones(size: usize, black: &[Coord], white: &[Coord]) -> Result<Self, BoardError> {
        let mut b = Board::new(size);
        for &c in black {
            b.set(c, Some(Player::Black))?;
        }
        for &c in white {
            b.set(c, Some(Player::White))?;
        }
        Ok(b)
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn cells(&self) -> &[Option<Player>] {
        &self.cells
    }

    pub fn get(&self, c: Coord) -> Option<Player> {
        self.cells[c.index(self.size)]
    }

    pub fn is_empty_cell(&self, c: Coord) -> bool {
        self.get(c).is_none()
    }

    pub fn coords(&self) -> impl Iterator<Item = Coord> + '_ {
        (0..self.size * self.size).map(move |i| Coord::from_index(i, self.size))
    }

    pub fn empty_cells(&self) -> Vec<Coord> {
        self.coords().filter(|&c| self.is_empty_cell(c)).collect()
    }

    pub fn stones(&self, p: Player) -> Vec<Coord> {
        self.coords().filter(|&c| self.get(c) == Some(p)).collect()
    }

    pub fn count(&self, p: Player) -> usize {
        self.cells.iter().filter(|&&s| s == Some(p)).count()
    }

    pub fn stone_count(&self) -> usize {
        self.cells.iter().filter(|s| s.is_some()).count()
    }

    fn top(&self) -> usize {
        self.size * self.size
    }
    fn bottom(&self) -> usize {
        self.top() + 1
    }
    fn left(&self) -> usize {
        self.top() + 2
    }
    fn right(&self) -> usize {
        self.top() + 3
    }

    /// Places or clears a stone with no rule checks. Clearing rebuilds the
    /// connectivity structure; placing updates it incrementally.
    pub fn set(&mut self, c: Coord, stone: Option<Player>) -> Result<(), BoardError> {
        if !c.in_bounds(self.size) {
            return Err(BoardError::OutOfBounds {
                coord: c,
                size: self.size,
            });
        }
        let idx = c.index(self.size);
        let previous = self.cells[idx];
        self.cells[idx] = stone;
        if previous.is_some() {
            self.rebuild_links();
        } else if let Some(p) = stone {
            self.link(c, p);
        }
        Ok(())
    }

    pub fn with_stone(&self, c: Coord, p: Player) -> Result<Board, BoardError> {
        let mut b = self.clone();
        b.set(c, Some(p))?;
        Ok(b)
    }

    fn rebuild_links(&mut self) {
        self.links = UnionFind::new(self.size * self.size + 4);
        for i in 0..self.cells.len() {
            if let Some(p) = self.cells[i] {
                self.link(Coord::from_index(i, self.size), p);
            }
        }
    }

    fn link(&mut self, c: Coord, p: Player) {
        let n = self.size;
        let idx = c.index(n);
        for nb in neighbor_iter(c, n) {
            if self.cells[nb.index(n)] == Some(p) {
                self.links.union(idx, nb.index(n));
            }
        }
        match p {
            Player::Black => {
                if c.row == 0 {
                    self.links.union(idx, self.top());
                }
                if c.row == n - 1 {
                    self.links.union(idx, self.bottom());
                }
            }
            Player::White => {
                if c.col == 0 {
                    self.links.union(idx, self.left());
                }
                if c.col == n - 1 {
                    self.links.union(idx, self.right());
                }
            }
        }
    }

    /// Player to move under the Black-first alternation rule.
    pub fn to_move(&self) -> Result<Player, BoardError> {
        let (black, white) = (self.count(Player::Black), self.count(Player::White));
        match black.checked_sub(white) {
            Some(0) => Ok(Player::Black),
            Some(1) => Ok(Player::White),
            _ => Err(BoardError::InvalidParity { black, white }),
        }
    }

    /// Checks stone-count parity and that at most one player has a winning chain.
    pub fn validate(&self) -> Result<(), BoardError> {
        self.to_move()?;
        if self.has_chain(Player::Black) && self.has_chain(Player::White) {
            return Err(BoardError::Parse(
                "both players have a winning chain".into(),
            ));
        }
        Ok(())
    }

    pub fn has_chain(&self, p: Player) -> bool {
        match p {
            Player::Black => self.links.connected(self.top(), self.bottom()),
            Player::White => self.links.connected(self.left(), self.right()),
        }
    }

    pub fn winner(&self) -> Outcome {
        if self.has_chain(Player::Black) {
            Outcome::BlackWin
        } else if self.has_chain(Player::White) {
            Outcome::WhiteWin
        } else {
            Outcome::Ongoing
        }
    }

    pub fn is_terminal(&self) -> bool {
        self.winner() != Outcome::Ongoing
    }

    /// Plays `c` for `p`, enforcing bounds, occupancy, turn order and that the
    /// game is not already decided.
    pub fn apply_move(&self, p: Player, c: Coord) -> Result<Board, BoardError> {
        if !c.in_bounds(self.size) {
            return Err(BoardError::OutOfBounds {
                coord: c,
                size: self.size,
            });
        }
        let expected = self.to_move()?;
        if expected != p {
            return Err(BoardError::WrongPlayer { expected, got: p });
        }
        if self.is_terminal() {
            return Err(BoardError::GameOver);
        }
        if !self.is_empty_cell(c) {
            return Err(BoardError::Occupied(c));
        }
        self.with_stone(c, p)
    }

    /// Plays `c` for whoever is to move.
    pub fn play(&self, c: Coord) -> Result<Board, BoardError> {
        self.apply_move(self.to_move()?, c)
    }

    pub fn legal_moves(&self) -> Vec<Coord> {
        if self.is_terminal() {
            return Vec::new();
        }
        self.empty_cells()
    }

    /// Diagonal transpose with colours swapped. Maps positions to their
    /// mirror under the symmetry that exchanges the two players' roles.
    pub fn transpose_swap(&self) -> Board {
        let mut b = Board::new(self.size);
        for c in self.coords() {
            if let Some(p) = self.get(c) {
                b.set(c.transposed(), Some(p.opponent()))
                    .expect("in bounds");
            }
        }
        b
    }

    /// Encodes the board from `mover`'s perspective (see [`FeatureVector`]).
    pub fn encode_as(&self, mover: Player) -> FeatureVector {
        let n = self.size;
        let n2 = n * n;
        let mut v = vec![0.0f32; 2 * n2];
        for c in self.coords() {
            if let Some(p) = self.get(c) {
                let canon = match mover {
                    Player::Black => c,
                    Player::White => c.transposed(),
                };
                let plane = if p == mover { 0 } else { 1 };
                v[plane * n2 + canon.index(n)] = 1.0;
            }
        }
        FeatureVector(v)
    }

    /// Encodes the board for the player to move.
    pub fn encode(&self) -> Result<FeatureVector, BoardError> {
        Ok(self.encode_as(self.to_move()?))
    }

    /// Maps a cell from the mover's canonical frame back to board coordinates.
    pub fn from_canonical(c: Coord, mover: Player) -> Coord {
        match mover {
            Player::Black => c,
            Player::White => c.transposed(),
        }
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for r in 0..self.size {
            s.extend(std::iter::repeat_n(' ', r));
            for c in 0..self.size {
                if c > 0 {
                    s.push(' ');
                }
                s.push(match self.get(Coord::new(r, c)) {
                    None => '.',
                    Some(p) => p.symbol(),
                });
            }
            s.push('\n');
        }
        s
    }

    pub fn parse(text: &str) -> Result<Board, BoardError> {
        let rows: Vec<Vec<char>> = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| l.split_whitespace().flat_map(|t| t.chars()).collect())
            .collect();
        let n = rows.len();
        if n == 0 {
            return Err(BoardError::Parse("no rows".into()));
        }
        let mut b = Board::new(n);
        for (r, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(BoardError::Parse(format!(
                    "row {r} has {} cells, expected {n}",
                    row.len()
                )));
            }
            for (c, ch) in row.iter().enumerate() {
                let stone = match ch {
                    '.' => None,
                    'B' => Some(Player::Black),
                    'W' => Some(Player::White),
                    other => {
                        return Err(BoardError::Parse(format!("unexpected character {other:?}")))
                    }
                };
                if stone.is_some() {
                    b.set(Coord::new(r, c), stone)?;
                }
            }
        }
        Ok(b)
    }
}

/// Serialized form: the size and the stone lists of each colour.
#[derive(Serialize, Deserialize)]
struct BoardRecord {
    size: usize,
    black: Vec<Coord>,
    white: Vec<Coord>,
}

impl From<Board> for BoardRecord {
    fn from(b: Board) -> Self {
        BoardRecord {
            size: b.size,
            black: b.stones(Player::Black),
            white: b.stones(Player::White),
        }
    }
}

impl TryFrom<BoardRecord> for Board {
    type Error = BoardError;

    fn try_from(r: BoardRecord) -> Result<Self, BoardError> {
        if r.size == 0 {
            return Err(BoardError::InvalidSize(0));
        }
        let b = Board::from_stones(r.size, &r.black, &r.white)?;
        if b.stone_count() != r.black.len() + r.white.len() {
            return Err(BoardError::Parse("a cell is listed twice".into()));
        }
        Ok(b)
    }
}

impl fmt::Display for Board {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

/// Breadth-first reference for the winner, independent of the union-find path.
pub fn winner_by_search(b: &Board) -> Outcome {
    let n = b.size();
    let reaches = |p: Player| {
        let mut seen = vec![false; n * n];
        let mut queue = VecDeque::new();
        for i in 0..n {
            let start = match p {
                Player::Black => Coord::new(0, i),
                Player::White => Coord::new(i, 0),
            };
            if b.get(start) == Some(p) {
                seen[start.index(n)] = true;
                queue.push_back(start);
            }
        }
        while let Some(c) = queue.pop_front() {
            let done = match p {
                Player::Black => c.row == n - 1,
                Player::White => c.col == n - 1,
            };
            if done {
                return true;
            }
            for nb in neighbor_iter(c, n) {
                if b.get(nb) == Some(p) && !seen[nb.index(n)] {
                    seen[nb.index(n)] = true;
                    queue.push_back(nb);
                }
            }
        }
        false
    };
    if reaches(Player::Black) {
        Outcome::BlackWin
    } else if reaches(Player::White) {
        Outcome::WhiteWin
    } else {
        Outcome::Ongoing
    }
}
