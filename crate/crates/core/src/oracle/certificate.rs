//! Carrier-restricted minimax for concept templates.
//!
//! The local game is played on a template alone: both players may only fill
//! carrier cells, the connecting player tries to join the two endpoints
//! (stones or pinned edges), and the other player tries to stop it. A
//! template is certified when its owner wins this game from the stated first
//! move. The winning strategy is returned as a flat map from positions to the
//! owner's reply, which can be replayed independently. Positions are keyed by
//! the opponent's cells and then the owner's, so move orders that transpose
//! into each other share one entry.

use std::collections::BTreeMap;

use rand::seq::IndexedRandom;
use rand::Rng;
use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

use crate::concepts::{ConceptTemplate, Endpoint, FirstMove, Goal, Rel, Side};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Certificate {
    pub template: String,
    pub goal: Goal,
    pub first: FirstMove,
    /// Owner reply for every position reachable under the strategy, keyed by
    /// [`position_key`].
    pub strategy: BTreeMap<String, Rel>,
}

/// A winning line for the owner's opponent: the full alternating move
/// sequence from the template position, opponent moves winning against the
/// owner's tries.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Refutation {
    pub template: String,
    pub line: Vec<Rel>,
}

fn cells_key(cells: &[Rel]) -> String {
    let mut cells = cells.to_vec();
    cells.sort_unstable();
    cells
        .iter()
        .map(|m| format!("{},{}", m[0], m[1]))
        .collect::<Vec<_>>()
        .join(";")
}

/// `r,c;r,c/r,c;...`: the opponent's carrier cells, then the owner's, each
/// sorted. The empty position is `/`.
pub fn position_key(opponent: &[Rel], owner: &[Rel]) -> String {
    format!("{}/{}", cells_key(opponent), cells_key(owner))
}

/// The local game of one template. Carrier cell `k` is bit `k` of the masks.
pub struct LocalGame {
    carrier: Vec<Rel>,
    /// Node bit of each carrier cell.
    carrier_node: Vec<u64>,
    adj: Vec<u64>,
    connector_fixed: u64,
    start: u64,
    goal: u64,
    connector_first: bool,
    owner_connects: bool,
    memo: FxHashMap<(u64, u64), bool>,
}

impl LocalGame {
    pub fn new(t: &ConceptTemplate) -> Self {
        let cells: Vec<Rel> = t.cells().collect();
        let (h, w) = t.extent();
        let n_cells = cells.len();
        let sides: Vec<Side> = t.pinned.clone();
        let n_nodes = n_cells + sides.len();
        assert!(
            n_nodes <= 64,
            "template {} too large for the local game",
            t.id
        );
        assert!(t.carrier.len() <= 32, "template {} carrier too large", t.id);
        let index_of = |c: Rel| cells.iter().position(|&x| x == c);
        let mut adj = vec![0u64; n_nodes];
        for (i, &a) in cells.iter().enumerate() {
            for (dr, dc) in crate::board::NEIGHBOR_OFFSETS {
                if let Some(j) = index_of([a[0] + dr, a[1] + dc]) {
                    adj[i] |= 1 << j;
                }
            }
        }
        for (s, side) in sides.iter().enumerate() {
            let node = n_cells + s;
            for (i, &a) in cells.iter().enumerate() {
                let touches = match side {
                    Side::Top => a[0] == 0,
                    Side::Bottom => a[0] == h - 1,
                    Side::Left => a[1] == 0,
                    Side::Right => a[1] == w - 1,
                };
                if touches {
                    adj[i] |= 1 << node;
                    adj[node] |= 1 << i;
                }
            }
        }
        let owner_connects = t.goal == Goal::Connect;
        let connector_stones = if owner_connects {
            &t.owner_stones
        } else {
            &t.opponent_stones
        };
        let mut connector_fixed = 0u64;
        for &c in connector_stones {
            connector_fixed |= 1 << index_of(c).expect("template cell");
        }
        for (s, side) in sides.iter().enumerate() {
            if side.is_owner_edge() == owner_connects {
                connector_fixed |= 1 << (n_cells + s);
            }
        }
        let node_of = |e: &Endpoint| -> u64 {
            match e {
                Endpoint::Stone(c) => 1 << index_of(*c).expect("endpoint is a template cell"),
                Endpoint::Edge(side) => {
                    1 << (n_cells
                        + sides
                            .iter()
                            .position(|s| s == side)
                            .expect("endpoint edge is pinned"))
                }
            }
        };
        assert_eq!(
            t.endpoints.len(),
            2,
            "template {} needs two endpoints",
            t.id
        );
        let start = node_of(&t.endpoints[0]);
        let goal = node_of(&t.endpoints[1]);
        let carrier_node = t
            .carrier
            .iter()
            .map(|&c| 1u64 << index_of(c).unwrap())
            .collect();
        let connector_first = (t.first == FirstMove::Owner) == owner_connects;
        Self {
            carrier: t.carrier.clone(),
            carrier_node,
            adj,
            connector_fixed,
            start,
            goal,
            connector_first,
            owner_connects,
            memo: FxHashMap::default(),
        }
    }

    fn nodes_of(&self, carrier_mask: u64) -> u64 {
        let mut m = 0;
        let mut bits = carrier_mask;
        while bits != 0 {
            let k = bits.trailing_zeros() as usize;
            m |= self.carrier_node[k];
            bits &= bits - 1;
        }
        m
    }

    fn joined(&self, connector_carrier: u64) -> bool {
        let passable = self.connector_fixed | self.nodes_of(connector_carrier);
        let mut reached = self.start & passable;
        loop {
            if reached & self.goal != 0 {
                return true;
            }
            let mut next = reached;
            let mut bits = reached;
            while bits != 0 {
                let i = bits.trailing_zeros() as usize;
                next |= self.adj[i] & passable;
                bits &= bits - 1;
            }
            if next == reached {
                return false;
            }
            reached = next;
        }
    }

    fn full(&self) -> u64 {
        if self.carrier.len() == 64 {
            u64::MAX
        } else {
            (1u64 << self.carrier.len()) - 1
        }
    }

    fn connector_to_move(&self, conn: u64, block: u64) -> bool {
        let played = (conn.count_ones() + block.count_ones()).is_multiple_of(2);
        played == self.connector_first
    }

    /// Decided outcome, if any: `Some(true)` once the connector has joined the
    /// endpoints, `Some(false)` once it cannot any more.
    fn decided(&self, conn: u64, block: u64) -> Option<bool> {
        if self.joined(conn) {
            Some(true)
        } else if !self.joined(self.full() & !block) {
            Some(false)
        } else {
            None
        }
    }

    /// Number of empty nodes the connector still needs on a path through
    /// each node, summed from both endpoints; unreachable nodes get `u32::MAX`.
    fn path_costs(&self, conn_nodes: u64, open_nodes: u64) -> [u32; 64] {
        let from_start = self.distances(self.start, conn_nodes, open_nodes);
        let from_goal = self.distances(self.goal, conn_nodes, open_nodes);
        let mut out = [u32::MAX; 64];
        for i in 0..64 {
            if open_nodes >> i & 1 == 1 && from_start[i] != u32::MAX && from_goal[i] != u32::MAX {
                // Both distances count node i itself.
                out[i] = from_start[i] + from_goal[i] - 1;
            }
        }
        out
    }

    fn distances(&self, source: u64, conn_nodes: u64, open_nodes: u64) -> [u32; 64] {
        let mut dist = [u32::MAX; 64];
        let passable = conn_nodes | open_nodes;
        let mut deque = std::collections::VecDeque::new();
        let s = source.trailing_zeros() as usize;
        if passable & source == 0 {
            return dist;
        }
        dist[s] = u32::from(open_nodes & source != 0);
        deque.push_back(s);
        while let Some(i) = deque.pop_front() {
            let mut bits = self.adj[i] & passable;
            while bits != 0 {
                let j = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                let step = u32::from(open_nodes >> j & 1 == 1);
                if dist[i] + step < dist[j] {
                    dist[j] = dist[i] + step;
                    if step == 0 {
                        deque.push_front(j);
                    } else {
                        deque.push_back(j);
                    }
                }
            }
        }
        dist
    }

    /// Empty carrier moves, most promising first: cells on the connector's
    /// cheapest remaining paths. Cells no path can use are left out, since
    /// neither side gains by playing them.
    fn ordered_moves(&self, conn: u64, block: u64) -> Vec<u64> {
        let empty = self.full() & !(conn | block);
        let conn_nodes = self.connector_fixed | self.nodes_of(conn);
        let costs = self.path_costs(conn_nodes, self.nodes_of(empty));
        let mut moves: Vec<(u32, usize)> = (0..self.carrier.len())
            .filter(|&k| empty >> k & 1 == 1)
            .map(|k| (costs[self.carrier_node[k].trailing_zeros() as usize], k))
            .filter(|&(c, _)| c != u32::MAX)
            .collect();
        moves.sort_unstable();
        moves.into_iter().map(|(_, k)| 1u64 << k).collect()
    }

    fn connector_wins(&mut self, conn: u64, block: u64) -> bool {
        if let Some(r) = self.decided(conn, block) {
            return r;
        }
        if let Some(&r) = self.memo.get(&(conn, block)) {
            return r;
        }
        let connector_moves = self.connector_to_move(conn, block);
        let moves = self.ordered_moves(conn, block);
        let result = if connector_moves {
            moves.iter().any(|&k| self.connector_wins(conn | k, block))
        } else {
            let finishing: Vec<u64> = moves
                .iter()
                .copied()
                .filter(|&k| self.joined(conn | k))
                .collect();
            match finishing.len() {
                0 => moves.iter().all(|&k| self.connector_wins(conn, block | k)),
                1 => self.connector_wins(conn, block | finishing[0]),
                _ => true,
            }
        };
        self.memo.insert((conn, block), result);
        result
    }

    /// Owner masks are expressed as (owner carrier stones, opponent carrier stones).
    fn split(&self, owner: u64, opp: u64) -> (u64, u64) {
        if self.owner_connects {
            (owner, opp)
        } else {
            (opp, owner)
        }
    }

    pub fn owner_wins_from(&mut self, owner: u64, opp: u64) -> bool {
        let (c, b) = self.split(owner, opp);
        self.connector_wins(c, b) == self.owner_connects
    }

    pub fn owner_wins(&mut self) -> bool {
        self.owner_wins_from(0, 0)
    }

    fn owner_to_move(&self, owner: u64, opp: u64) -> bool {
        let (c, b) = self.split(owner, opp);
        self.connector_to_move(c, b) == self.owner_connects
    }

    fn finished(&self, owner: u64, opp: u64) -> Option<bool> {
        let (c, b) = self.split(owner, opp);
        self.decided(c, b)
            .map(|joined| joined == self.owner_connects)
    }

    fn bit_of(&self, c: Rel) -> Option<u64> {
        self.carrier.iter().position(|&x| x == c).map(|k| 1u64 << k)
    }

    fn rel(&self, bit: u64) -> Rel {
        self.carrier[bit.trailing_zeros() as usize]
    }

    /// Owner's chosen reply: a move that finishes the game if one exists,
    /// otherwise the first winning move in carrier order.
    fn owner_choice(&mut self, owner: u64, opp: u64) -> Option<u64> {
        let (c, b) = self.split(owner, opp);
        let mut moves = self.ordered_moves(c, b);
        let empty = self.full() & !(owner | opp);
        let ranked = moves.iter().fold(0, |acc, m| acc | m);
        moves.extend(
            (0..self.carrier.len())
                .map(|k| 1u64 << k)
                .filter(|m| empty & !ranked & m != 0),
        );
        if let Some(&m) = moves
            .iter()
            .find(|&&m| self.finished(owner | m, opp) == Some(true))
        {
            return Some(m);
        }
        moves
            .into_iter()
            .find(|&m| self.owner_wins_from(owner | m, opp))
    }

    fn cells_of(&self, mask: u64) -> Vec<Rel> {
        (0..self.carrier.len())
            .filter(|k| mask >> k & 1 == 1)
            .map(|k| self.carrier[k])
            .collect()
    }

    fn key_of(&self, owner: u64, opp: u64) -> String {
        position_key(&self.cells_of(opp), &self.cells_of(owner))
    }

    fn build_strategy(
        &mut self,
        owner: u64,
        opp: u64,
        seen: &mut rustc_hash::FxHashSet<(u64, u64)>,
        out: &mut BTreeMap<String, Rel>,
    ) {
        if self.finished(owner, opp).is_some() || !seen.insert((owner, opp)) {
            return;
        }
        if self.owner_to_move(owner, opp) {
            let m = self.owner_choice(owner, opp).expect("owner is winning");
            out.insert(self.key_of(owner, opp), self.rel(m));
            self.build_strategy(owner | m, opp, seen, out);
        } else {
            let empty = self.full() & !(owner | opp);
            for k in 0..self.carrier.len() {
                let m = 1u64 << k;
                if empty & m != 0 {
                    self.build_strategy(owner, opp | m, seen, out);
                }
            }
        }
    }

    fn refute(&mut self) -> Vec<Rel> {
        let (mut owner, mut opp) = (0u64, 0u64);
        let mut line = Vec::new();
        while self.finished(owner, opp).is_none() {
            let empty = self.full() & !(owner | opp);
            let moves: Vec<u64> = (0..self.carrier.len())
                .map(|k| 1u64 << k)
                .filter(|b| empty & b != 0)
                .collect();
            if self.owner_to_move(owner, opp) {
                let m = moves[0];
                owner |= m;
                line.push(self.rel(m));
            } else {
                let m = *moves
                    .iter()
                    .find(|&&m| !self.owner_wins_from(owner, opp | m))
                    .expect("opponent is winning");
                opp |= m;
                line.push(self.rel(m));
            }
        }
        line
    }
}

/// Solves the template's local game. Positive templates must be certified.
pub fn verify_virtual_connection(t: &ConceptTemplate) -> Result<Certificate, Refutation> {
    let mut game = LocalGame::new(t);
    if game.owner_wins() {
        let mut strategy = BTreeMap::new();
        game.build_strategy(0, 0, &mut Default::default(), &mut strategy);
        Ok(Certificate {
            template: t.id.clone(),
            goal: t.goal,
            first: t.first,
            strategy,
        })
    } else {
        Err(Refutation {
            template: t.id.clone(),
            line: game.refute(),
        })
    }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum ReplayError {
    #[error("no reply recorded for position `{0}`")]
    MissingReply(String),
    #[error("recorded reply {reply:?} in position `{position}` is not an empty carrier cell")]
    IllegalReply { position: String, reply: Rel },
    #[error("opponent line `{0}` beat the recorded strategy")]
    Beaten(String),
}

fn line_text(moves: &[Rel]) -> String {
    moves
        .iter()
        .map(|m| format!("{},{}", m[0], m[1]))
        .collect::<Vec<_>>()
        .join(";")
}

impl Certificate {
    /// Plays the recorded strategy against one opponent line drawn from `rng`.
    pub fn replay_random<R: Rng>(
        &self,
        t: &ConceptTemplate,
        rng: &mut R,
    ) -> Result<(), ReplayError> {
        let game = LocalGame::new(t);
        let (mut owner, mut opp) = (0u64, 0u64);
        let mut seq: Vec<Rel> = Vec::new();
        loop {
            if let Some(owner_won) = game.finished(owner, opp) {
                return if owner_won {
                    Ok(())
                } else {
                    Err(ReplayError::Beaten(line_text(&seq)))
                };
            }
            if game.owner_to_move(owner, opp) {
                let key = game.key_of(owner, opp);
                let reply = *self
                    .strategy
                    .get(&key)
                    .ok_or_else(|| ReplayError::MissingReply(key.clone()))?;
                let bit = game
                    .bit_of(reply)
                    .filter(|b| (owner | opp) & b == 0)
                    .ok_or(ReplayError::IllegalReply {
                        position: key,
                        reply,
                    })?;
                owner |= bit;
            } else {
                let empty: Vec<Rel> = t
                    .carrier
                    .iter()
                    .copied()
                    .filter(|&c| (owner | opp) & game.bit_of(c).unwrap() == 0)
                    .collect();
                let m = *empty.choose(rng).expect("undecided game has empty cells");
                opp |= game.bit_of(m).unwrap();
                seq.push(m);
            }
        }
    }
}
