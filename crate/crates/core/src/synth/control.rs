//! Selectivity controls: every board of a dataset is scrambled through one
//! shared cell permutation.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::SynthError;
use crate::board::{Board, Coord};
use crate::seed::rng_for;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PermutationMap {
    pub size: usize,
    /// `map[i]` is the cell index that cell `i` moves to.
    pub map: Vec<usize>,
    pub seed: u64,
}

impl PermutationMap {
    pub fn identity(size: usize) -> Self {
        Self { size, map: (0..size * size).collect(), seed: 0 }
    }

    pub fn random(size: usize, seed: u64) -> Self {
        let mut map: Vec<usize> = (0..size * size).collect();
        map.shuffle(&mut rng_for(seed, "control-permutation", size as u64));
        Self { size, map, seed }
    }

    pub fn is_bijection(&self) -> bool {
        let mut seen = vec![false; self.map.len()];
        self.map.len() == self.size * self.size
            && self.map.iter().all(|&j| j < seen.len() && !std::mem::replace(&mut seen[j], true))
    }

    pub fn apply(&self, c: Coord) -> Coord {
        Coord::from_index(self.map[c.index(self.size)], self.size)
    }

    pub fn permute(&self, b: &Board) -> Result<Board, SynthError> {
        if b.size() != self.size {
            return Err(SynthError::SizeMismatch { expected: self.size, got: b.size() });
        }
        let mut out = Board::new(self.size);
        for c in b.coords() {
            if let Some(p) = b.get(c) {
                out.set(self.apply(c), Some(p)).expect("bijection onto an empty board");
            }
        }
        Ok(out)
    }
}

/// Relocates every board's contents through `pm`. Labels stay with the
/// caller, in the same order.
pub fn gen_control(boards: &[Board], pm: &PermutationMap) -> Result<Vec<Board>, SynthError> {
    boards.iter().map(|b| pm.permute(b)).collect()
}
