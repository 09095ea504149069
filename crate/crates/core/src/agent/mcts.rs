//! PUCT Monte Carlo tree search.
//!
//! Budget convention: the root expansion is the first of `budget` network
//! evaluations, so the root's children receive `budget - 1` visits between
//! them and the root itself counts `budget`. With a budget of one no child is
//! visited and the returned policy is the prior.

use rand::Rng as _;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::board::{Board, BoardError, Coord, Player};
use crate::seed::Rng;

use super::net::{masked_softmax, Network};

/// Anything that scores a position for the player to move: one logit per
/// board cell (in board coordinates) and a value in [-1, 1].
pub trait Evaluator: Sync {
    fn evaluate(&self, board: &Board, mover: Player) -> (Vec<f32>, f32);
}

impl Evaluator for Network<f32> {
    fn evaluate(&self, board: &Board, mover: Player) -> (Vec<f32>, f32) {
        let out = self.forward(&board.encode_as(mover)).expect("board matches network size");
        let n = board.size();
        let mut logits = vec![0.0; n * n];
        for c in board.coords() {
            logits[c.index(n)] = out.logits[Board::from_canonical(c, mover).index(n)];
        }
        (logits, out.value)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MctsParams {
    pub c_puct: f32,
    pub dirichlet_alpha: f64,
    /// Share of the root prior replaced by Dirichlet noise in self-play.
    pub noise_fraction: f32,
}

impl Default for MctsParams {
    fn default() -> Self {
        Self { c_puct: 1.5, dirichlet_alpha: 0.3, noise_fraction: 0.25 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MctsError {
    #[error("search needs a non-terminal board")]
    Terminal,
    #[error("search budget must be at least 1")]
    ZeroBudget,
    #[error(transparent)]
    Board(#[from] BoardError),
}

/// Root statistics, all aligned with `moves` (the legal moves in board order).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub moves: Vec<Coord>,
    pub visits: Vec<u32>,
    pub pi: Vec<f32>,
    pub prior: Vec<f32>,
    /// Network value of the root for the player to move.
    pub value: f32,
    pub policy_logits: Vec<f32>,
    /// Add-one smoothed log visit shares, the search's own action scores.
    pub mcts_logits: Vec<f32>,
}

impl SearchResult {
    pub fn total_visits(&self) -> u32 {
        self.visits.iter().sum::<u32>() + 1
    }

    /// Most visited move; ties go to the higher prior, then board order.
    pub fn best_move(&self) -> Coord {
        let mut best = 0;
        for i in 1..self.moves.len() {
            let better = (self.visits[i], self.prior[i]) > (self.visits[best], self.prior[best]);
            if better {
                best = i;
            }
        }
        self.moves[best]
    }

    pub fn sample_move(&self, rng: &mut Rng) -> Coord {
        let r: f32 = rng.random();
        let mut acc = 0.0;
        for (i, &p) in self.pi.iter().enumerate() {
            acc += p;
            if r < acc {
                return self.moves[i];
            }
        }
        self.best_move()
    }
}

struct Edge {
    mv: Coord,
    prior: f32,
    n: u32,
    /// Total value from the point of view of the player choosing this edge.
    w: f32,
    child: Option<usize>,
}

struct Node {
    mover: Player,
    edges: Vec<Edge>,
    terminal: bool,
}

struct Expansion {
    node: Node,
    value: f32,
    logits: Vec<f32>,
}

fn expand<E: Evaluator + ?Sized>(eval: &E, b: &Board, mover: Player) -> Expansion {
    if b.is_terminal() {
        // The previous player just completed a chain.
        return Expansion { node: Node { mover, edges: Vec::new(), terminal: true }, value: -1.0, logits: Vec::new() };
    }
    let (all_logits, value) = eval.evaluate(b, mover);
    let n = b.size();
    let mask: Vec<bool> = b.cells().iter().map(Option::is_none).collect();
    let probs = masked_softmax(&all_logits, &mask);
    let legal = b.legal_moves();
    let logits = legal.iter().map(|c| all_logits[c.index(n)]).collect();
    let edges = legal
        .into_iter()
        .map(|mv| Edge { mv, prior: probs[mv.index(n)], n: 0, w: 0.0, child: None })
        .collect();
    Expansion { node: Node { mover, edges, terminal: false }, value, logits }
}

fn select(node: &Node, c_puct: f32) -> usize {
    let total: u32 = node.edges.iter().map(|e| e.n).sum();
    let sqrt_total = (total.max(1) as f32).sqrt();
    let mut best = 0;
    let mut best_score = f32::NEG_INFINITY;
    for (i, e) in node.edges.iter().enumerate() {
        let q = if e.n == 0 { 0.0 } else { e.w / e.n as f32 };
        let score = q + c_puct * e.prior * sqrt_total / (1.0 + e.n as f32);
        if score > best_score {
            best_score = score;
            best = i;
        }
    }
    best
}

/// Runs a search of `budget` evaluations from `board`. Root Dirichlet noise
/// is mixed into the prior when `noise` is given.
pub fn mcts<E: Evaluator + ?Sized>(
    eval: &E,
    board: &Board,
    budget: usize,
    params: &MctsParams,
    noise: Option<&mut Rng>,
) -> Result<SearchResult, MctsError> {
    if budget == 0 {
        return Err(MctsError::ZeroBudget);
    }
    if board.is_terminal() {
        return Err(MctsError::Terminal);
    }
    let mover = board.to_move()?;
    let root = expand(eval, board, mover);
    let root_value = root.value;
    let policy_logits = root.logits;
    let mut nodes = vec![root.node];
    let prior: Vec<f32> = nodes[0].edges.iter().map(|e| e.prior).collect();
    if let Some(rng) = noise {
        if nodes[0].edges.len() > 1 {
            // Dirichlet sample as normalised Gamma draws.
            let gamma = Gamma::new(params.dirichlet_alpha, 1.0).expect("positive concentration");
            let mut eta: Vec<f64> = nodes[0].edges.iter().map(|_| gamma.sample(rng)).collect();
            let total: f64 = eta.iter().sum();
            if total > 0.0 {
                eta.iter_mut().for_each(|x| *x /= total);
            }
            let f = params.noise_fraction;
            for (e, &x) in nodes[0].edges.iter_mut().zip(&eta) {
                e.prior = (1.0 - f) * e.prior + f * x as f32;
            }
        }
    }

    let mut path: Vec<(usize, usize)> = Vec::new();
    for _ in 1..budget {
        path.clear();
        let mut b = board.clone();
        let mut node = 0;
        let leaf_value = loop {
            if nodes[node].terminal {
                break -1.0;
            }
            let e = select(&nodes[node], params.c_puct);
            path.push((node, e));
            let (mv, mover) = (nodes[node].edges[e].mv, nodes[node].mover);
            b = b.with_stone(mv, mover)?;
            match nodes[node].edges[e].child {
                Some(child) => node = child,
                None => {
                    let x = expand(eval, &b, mover.opponent());
                    nodes.push(x.node);
                    let id = nodes.len() - 1;
                    nodes[node].edges[e].child = Some(id);
                    break x.value;
                }
            }
        };
        // `leaf_value` is for the player to move at the leaf; each edge above
        // it was chosen by that player's opponent, and so on upwards.
        let mut v = leaf_value;
        for &(n, e) in path.iter().rev() {
            v = -v;
            let edge = &mut nodes[n].edges[e];
            edge.n += 1;
            edge.w += v;
        }
    }

    let root = &nodes[0];
    let moves: Vec<Coord> = root.edges.iter().map(|e| e.mv).collect();
    let visits: Vec<u32> = root.edges.iter().map(|e| e.n).collect();
    let spent: u32 = visits.iter().sum();
    let pi = if spent == 0 {
        prior.clone()
    } else {
        visits.iter().map(|&n| n as f32 / spent as f32).collect()
    };
    let denom = (spent + moves.len() as u32) as f32;
    let mcts_logits = visits.iter().map(|&n| ((n + 1) as f32 / denom).ln()).collect();
    Ok(SearchResult { moves, visits, pi, prior, value: root_value, policy_logits, mcts_logits })
}

/// Policy-head action: the legal move with the highest logit, lowest index on
/// ties.
pub fn policy_move<E: Evaluator + ?Sized>(eval: &E, board: &Board) -> Result<(Coord, Vec<Coord>, Vec<f32>), MctsError> {
    if board.is_terminal() {
        return Err(MctsError::Terminal);
    }
    let mover = board.to_move()?;
    let (logits, _) = eval.evaluate(board, mover);
    let n = board.size();
    let moves = board.legal_moves();
    let legal_logits: Vec<f32> = moves.iter().map(|c| logits[c.index(n)]).collect();
    let mut best = 0;
    for i in 1..moves.len() {
        if legal_logits[i] > legal_logits[best] {
            best = i;
        }
    }
    Ok((moves[best], moves, legal_logits))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agent::net::NetworkConfig;
    use crate::oracle::Solver;
    use crate::seed::rng_for;
    use rand::seq::SliceRandom;

    fn net(seed: u64) -> Network<f32> {
        Network::init(&NetworkConfig { size: 4, layers: 2, width: 16, seed, ..Default::default() }).unwrap()
    }

    #[test]
    fn visits_account_for_the_whole_budget() {
        let b = Board::new(4);
        for budget in [1, 2, 10, 64] {
            let r = mcts(&net(0), &b, budget, &MctsParams::default(), None).unwrap();
            assert_eq!(r.total_visits(), budget as u32);
            let sum: f32 = r.pi.iter().sum();
            assert!((sum - 1.0).abs() < 1e-5);
            assert_eq!(r.moves.len(), 16);
        }
    }

    #[test]
    fn budget_one_returns_the_prior() {
        let b = Board::parse(". B . .\n . W . .\n  . . . .\n   . . . .\n").unwrap();
        let r = mcts(&net(1), &b, 1, &MctsParams::default(), None).unwrap();
        assert_eq!(r.pi, r.prior);
        assert!(!r.moves.contains(&Coord::new(0, 1)));
        let sum: f32 = r.prior.iter().sum();
        assert!((sum - 1.0).abs() < 1e-5);
    }

    #[test]
    fn single_legal_move_gets_all_mass() {
        let b = Board::parse("B W\n . B\n").unwrap();
        assert!(!b.is_terminal());
        assert_eq!(b.legal_moves(), vec![Coord::new(1, 0)]);
        let n = Network::init(&NetworkConfig { size: 2, layers: 1, width: 4, ..Default::default() }).unwrap();
        let r = mcts(&n, &b, 16, &MctsParams::default(), None).unwrap();
        assert_eq!(r.pi, vec![1.0]);
        assert_eq!(r.visits, vec![15]);
    }

    #[test]
    fn terminal_and_zero_budget_are_rejected() {
        let b = Board::from_stones(2, &[Coord::new(0, 0), Coord::new(1, 0)], &[Coord::new(0, 1)]).unwrap();
        assert!(b.is_terminal());
        assert_eq!(mcts(&net(0), &b, 4, &MctsParams::default(), None).unwrap_err(), MctsError::Terminal);
        assert_eq!(mcts(&net(0), &Board::new(4), 0, &MctsParams::default(), None).unwrap_err(), MctsError::ZeroBudget);
    }

    #[test]
    fn noise_changes_priors_deterministically() {
        let b = Board::new(4);
        let p = MctsParams::default();
        let a = mcts(&net(0), &b, 8, &p, Some(&mut rng_for(1, "t", 0))).unwrap();
        let c = mcts(&net(0), &b, 8, &p, Some(&mut rng_for(1, "t", 0))).unwrap();
        assert_eq!(a, c);
    }

    /// Random boards where the mover has a winning cell, built by filling
    /// cells at random and keeping positions whose first win-in-one exists.
    pub(crate) fn win_in_one_boards(size: usize, count: usize, seed: u64) -> Vec<(Board, Vec<Coord>)> {
        let mut rng = rng_for(seed, "win-in-one", 0);
        let mut solver = Solver::new(size);
        let mut out = Vec::new();
        while out.len() < count {
            let mut cells: Vec<Coord> = Board::new(size).coords().collect();
            cells.shuffle(&mut rng);
            let mut b = Board::new(size);
            for &c in &cells {
                let mover = b.to_move().unwrap();
                let wins: Vec<Coord> =
                    b.legal_moves().into_iter().filter(|&m| b.with_stone(m, mover).unwrap().is_terminal()).collect();
                if !wins.is_empty() {
                    // Skip positions where the mover wins whatever they play.
                    if wins.len() < b.legal_moves().len() {
                        let _ = solver.winner(&b, mover);
                        out.push((b.clone(), wins));
                    }
                    break;
                }
                b = b.play(c).unwrap();
            }
        }
        out
    }

    #[test]
    fn finds_wins_in_one_with_an_untrained_network() {
        let boards = win_in_one_boards(5, 100, 7);
        let n = Network::init(&NetworkConfig { size: 5, layers: 4, width: 32, seed: 3, ..Default::default() }).unwrap();
        let mut hits = 0;
        for (b, wins) in &boards {
            let r = mcts(&n, b, 64, &MctsParams::default(), None).unwrap();
            let best = r.visits.iter().copied().max().unwrap();
            let top: Vec<Coord> = r.moves.iter().zip(&r.visits).filter(|(_, &v)| v == best).map(|(&m, _)| m).collect();
            if top.len() == 1 && wins.contains(&top[0]) {
                hits += 1;
            }
        }
        assert!(hits >= 99, "{hits}/100");
    }

    #[test]
    fn policy_move_is_the_legal_argmax() {
        let b = Board::parse(". B . .\n . W . .\n  . . . .\n   . . . .\n").unwrap();
        let n = net(4);
        let (mv, moves, logits) = policy_move(&n, &b).unwrap();
        assert_eq!(moves.len(), logits.len());
        let i = moves.iter().position(|&m| m == mv).unwrap();
        assert!(logits.iter().all(|&l| l <= logits[i]));
    }
}
