//! Structural probe: do first-layer cell embeddings rank true neighbours
//! first?

use std::collections::VecDeque;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::board::{neighbors, Coord};
use crate::seed::rng_for;

/// Hex-graph distance between every pair of cells, by cell index.
pub fn graph_distances(size: usize) -> Vec<Vec<usize>> {
    let cells = size * size;
    (0..cells)
        .map(|start| {
            let mut dist = vec![usize::MAX; cells];
            dist[start] = 0;
            let mut queue = VecDeque::from([start]);
            while let Some(i) = queue.pop_front() {
                for nb in neighbors(Coord::from_index(i, size), size).expect("in bounds") {
                    let j = nb.index(size);
                    if dist[j] == usize::MAX {
                        dist[j] = dist[i] + 1;
                        queue.push_back(j);
                    }
                }
            }
            dist
        })
        .collect()
}

/// DCG with linear gain and discount `1 / log2(rank + 1)`, ranks from 1.
pub fn dcg(relevances: &[f64]) -> f64 {
    relevances.iter().enumerate().map(|(i, r)| r / ((i + 2) as f64).log2()).sum()
}

/// NDCG of a presented order of relevances against the sorted ideal.
pub fn ndcg(presented: &[f64]) -> f64 {
    let mut ideal = presented.to_vec();
    ideal.sort_by(|a, b| b.total_cmp(a));
    let best = dcg(&ideal);
    if best == 0.0 {
        return 1.0;
    }
    dcg(presented) / best
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StructureScores {
    /// `dots[i][j]` = embedding_i . embedding_j.
    pub dots: Vec<Vec<f64>>,
    /// Each cell's `k` highest-scoring other cells.
    pub nearest: Vec<Vec<Coord>>,
    pub ndcg: f64,
}

/// Ranks every other cell by dot product for each query cell and scores the
/// ranking against graph distance (relevance `D - distance`, `D` the largest
/// distance on the board). Ties in the dot product are broken at random and
/// the score averaged over `tie_draws` draws.
pub fn structure_scores(embeddings: &[Vec<f32>], size: usize, k: usize, tie_draws: usize, seed: u64) -> StructureScores {
    let cells = size * size;
    assert_eq!(embeddings.len(), cells, "one embedding per cell");
    let dots: Vec<Vec<f64>> = (0..cells)
        .map(|i| {
            (0..cells)
                .map(|j| embeddings[i].iter().zip(&embeddings[j]).map(|(&a, &b)| f64::from(a) * f64::from(b)).sum())
                .collect()
        })
        .collect();
    let dist = graph_distances(size);
    let d_max = dist.iter().flatten().copied().max().unwrap_or(0) as f64;
    let draws = tie_draws.max(1);
    let mut total = 0.0;
    let mut nearest = Vec::with_capacity(cells);
    for q in 0..cells {
        let others: Vec<usize> = (0..cells).filter(|&j| j != q).collect();
        let mut rng = rng_for(seed, "ndcg-ties", q as u64);
        let mut sum = 0.0;
        for draw in 0..draws {
            let mut order = others.clone();
            order.shuffle(&mut rng);
            // Stable sort keeps the random order among equal scores.
            order.sort_by(|&a, &b| dots[q][b].total_cmp(&dots[q][a]));
            if draw == 0 {
                nearest.push(order.iter().take(k).map(|&j| Coord::from_index(j, size)).collect());
            }
            let rel: Vec<f64> = order.iter().map(|&j| d_max - dist[q][j] as f64).collect();
            sum += ndcg(&rel);
        }
        total += sum / draws as f64;
    }
    StructureScores { dots, nearest, ndcg: total / cells.max(1) as f64 }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reversed_three_item_ranking() {
        let v = ndcg(&[0.0, 1.0, 2.0]);
        let expected = (1.0 / 3f64.log2() + 2.0 / 4f64.log2()) / (2.0 + 1.0 / 3f64.log2());
        assert!((v - expected).abs() < 1e-12);
        assert!((v - 0.6199).abs() < 1e-3, "{v}");
        assert_eq!(ndcg(&[2.0, 1.0, 0.0]), 1.0);
    }

    #[test]
    fn distances_follow_the_hex_graph() {
        let d = graph_distances(3);
        let at = |a: (usize, usize), b: (usize, usize)| d[Coord::new(a.0, a.1).index(3)][Coord::new(b.0, b.1).index(3)];
        assert_eq!(at((0, 0), (0, 1)), 1);
        assert_eq!(at((0, 1), (1, 0)), 1);
        assert_eq!(at((0, 0), (1, 1)), 2);
        assert_eq!(at((0, 0), (2, 2)), 4);
        assert_eq!(at((0, 2), (2, 0)), 2);
    }

    #[test]
    fn zero_embeddings_score_the_random_baseline() {
        let zero = vec![vec![0.0f32; 4]; 25];
        let s = structure_scores(&zero, 5, 6, 200, 1);
        assert!(s.dots.iter().flatten().all(|&x| x == 0.0));
        // Independent estimate of a random permutation's NDCG.
        let again = structure_scores(&zero, 5, 6, 200, 2);
        assert!((s.ndcg - again.ndcg).abs() < 0.01);
        assert!(s.ndcg < 0.95 && s.ndcg > 0.5);
    }

    #[test]
    fn neighbour_aware_embeddings_beat_random() {
        let size = 5;
        let d = graph_distances(size);
        // Embedding i = closeness profile to every cell: nearby cells share mass.
        let emb: Vec<Vec<f32>> = (0..25).map(|i| (0..25).map(|j| (-(d[i][j] as f32)).exp()).collect()).collect();
        let good = structure_scores(&emb, size, 6, 1, 0);
        let zero = structure_scores(&vec![vec![0.0; 3]; 25], size, 6, 50, 0);
        assert!(good.ndcg > zero.ndcg + 0.05, "{} vs {}", good.ndcg, zero.ndcg);
        assert_eq!(good.nearest[12].len(), 6);
    }
}
