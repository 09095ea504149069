//! 128-bit board masks for boards up to 11×11.

use crate::board::{Board, Coord, Player};

pub type Mask = u128;

pub const MAX_SIZE: usize = 11;

#[derive(Clone, Debug)]
pub struct Geometry {
    pub size: usize,
    pub all: Mask,
    pub top: Mask,
    pub bottom: Mask,
    pub left: Mask,
    pub right: Mask,
    not_first_col: Mask,
    not_last_col: Mask,
    /// Cells sorted by distance from the centre, used for move ordering.
    pub order: Vec<usize>,
}

impl Geometry {
    pub fn new(size: usize) -> Self {
        assert!(
            (1..=MAX_SIZE).contains(&size),
            "unsupported board size {size}"
        );
        let n = size;
        let mut g = Geometry {
            size,
            all: 0,
            top: 0,
            bottom: 0,
            left: 0,
            right: 0,
            not_first_col: 0,
            not_last_col: 0,
            order: Vec::new(),
        };
        for r in 0..n {
            for c in 0..n {
                let bit = 1u128 << (r * n + c);
                g.all |= bit;
                if r == 0 {
                    g.top |= bit;
                }
                if r == n - 1 {
                    g.bottom |= bit;
                }
                if c == 0 {
                    g.left |= bit;
                }
                if c == n - 1 {
                    g.right |= bit;
                }
            }
        }
        g.not_first_col = g.all & !g.left;
        g.not_last_col = g.all & !g.right;
        // Hex distance from the centre in doubled coordinates.
        let centre = (n as f64 - 1.0) / 2.0;
        let mut order: Vec<usize> = (0..n * n).collect();
        let dist = |i: usize| {
            let (r, c) = ((i / n) as f64 - centre, (i % n) as f64 - centre);
            (r.abs() + c.abs() + (r + c).abs()) * 1000.0 + i as f64 * 1e-3
        };
        order.sort_by(|&a, &b| dist(a).partial_cmp(&dist(b)).unwrap());
        g.order = order;
        g
    }

    /// Cells adjacent to any cell of `s` (not including `s` itself unless adjacent).
    #[inline]
    pub fn expand(&self, s: Mask) -> Mask {
        let n = self.size;
        let grown = ((s << 1) & self.not_first_col)
            | ((s >> 1) & self.not_last_col)
            | (s << n)
            | (s >> n)
            | ((s << (n - 1)) & self.not_last_col)
            | ((s >> (n - 1)) & self.not_first_col);
        grown & self.all
    }

    /// Closure of `seed` under adjacency, restricted to `within`.
    #[inline]
    pub fn flood(&self, seed: Mask, within: Mask) -> Mask {
        let mut cur = seed & within;
        loop {
            let next = (cur | self.expand(cur)) & within;
            if next == cur {
                return cur;
            }
            cur = next;
        }
    }

    pub fn edges(&self, p: Player) -> (Mask, Mask) {
        match p {
            Player::Black => (self.top, self.bottom),
            Player::White => (self.left, self.right),
        }
    }

    pub fn has_chain(&self, stones: Mask, p: Player) -> bool {
        let (a, b) = self.edges(p);
        self.flood(a & stones, stones) & b != 0
    }

    /// Empty cells that would complete a chain for `p` immediately.
    #[inline]
    pub fn winning_cells(&self, stones: Mask, empty: Mask, p: Player) -> Mask {
        let (a, b) = self.edges(p);
        let from_a = self.flood(a & stones, stones);
        let from_b = self.flood(b & stones, stones);
        let touch_a = self.expand(from_a) | a;
        let touch_b = self.expand(from_b) | b;
        touch_a & touch_b & empty
    }

    /// Minimum number of empty cells `p` must still fill to connect its edges.
    pub fn distance(&self, stones: Mask, empty: Mask, p: Player) -> Option<u32> {
        let (a, b) = self.edges(p);
        let passable = stones | empty;
        let mut reached = self.flood(a & stones, stones);
        let mut k = 0;
        loop {
            if reached & b != 0 {
                return Some(k);
            }
            let frontier = (self.expand(reached) | a) & empty & !reached;
            if frontier == 0 {
                return None;
            }
            k += 1;
            reached = self.flood(reached | frontier, passable & (reached | frontier | stones));
        }
    }

    pub fn bit(&self, c: Coord) -> Mask {
        1u128 << c.index(self.size)
    }

    pub fn coord(&self, idx: usize) -> Coord {
        Coord::from_index(idx, self.size)
    }
}

pub fn masks(board: &Board) -> (Mask, Mask) {
    let n = board.size();
    let mut black = 0;
    let mut white = 0;
    for (i, cell) in board.cells().iter().enumerate() {
        match cell {
            Some(Player::Black) => black |= 1u128 << i,
            Some(Player::White) => white |= 1u128 << i,
            None => {}
        }
    }
    debug_assert!(n * n <= 128);
    (black, white)
}

pub fn iter_bits(mut m: Mask) -> impl Iterator<Item = usize> {
    std::iter::from_fn(move || {
        if m == 0 {
            None
        } else {
            let i = m.trailing_zeros() as usize;
            m &= m - 1;
            Some(i)
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::board::neighbors;

    #[test]
    fn expand_matches_neighbor_lists() {
        for n in 1..=6 {
            let g = Geometry::new(n);
            for i in 0..n * n {
                let c = Coord::from_index(i, n);
                let expected: Mask = neighbors(c, n)
                    .unwrap()
                    .into_iter()
                    .map(|nb| g.bit(nb))
                    .fold(0, |a, b| a | b);
                assert_eq!(g.expand(g.bit(c)), expected, "n={n} cell={c}");
            }
        }
    }

    #[test]
    fn distance_counts_needed_stones() {
        let g = Geometry::new(3);
        assert_eq!(g.distance(0, g.all, Player::Black), Some(3));
        let b = Board::parse(". B .\n . B .\n  . . .\n").unwrap();
        let (bl, wh) = masks(&b);
        assert_eq!(g.distance(bl, g.all & !(bl | wh), Player::Black), Some(1));
        let b = Board::parse("W W W\n . . .\n  . . .\n").unwrap();
        let (bl, wh) = masks(&b);
        assert_eq!(g.distance(bl, g.all & !(bl | wh), Player::Black), None);
    }
}
