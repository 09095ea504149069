//! Behavioral cases: a placed concept, a script of forcing moves with the
//! oracle's complete sets of correct answers, or cells to avoid.
//!
//! Boards are assembled in the attacker's frame (attacker = Black, joining
//! top and bottom) and transposed with colours swapped when the attacker is
//! White. The script itself is computed on the final board.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap, HashSet};

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::links::link_to_edge;
use super::probing::{edge_links, fitting_templates, MAX_RETRIES};
use super::SynthError;
use crate::board::{Board, Coord, Player, NEIGHBOR_OFFSETS};
use crate::concepts::{placements_for, polarity_of, ConceptTemplate, Polarity, FORCING_KEY};
use crate::oracle::{check_case, OracleError, Solver};
use crate::seed::{derive_seed, rng_for, Rng};

/// One step of a script: the defender's forcing move and every attacker
/// reply that keeps the forced win.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Juncture {
    pub forcing: Coord,
    pub expected: Vec<Coord>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BehavioralCase {
    pub id: String,
    pub concept: String,
    pub template: String,
    pub board: Board,
    /// The player who must find the right moves (the template's owner).
    pub attacker: Player,
    pub script: Vec<Juncture>,
    /// Cells the attacker should not fill (negative concepts only).
    pub avoid_cells: Vec<Coord>,
    pub defender_connected: bool,
    pub seed: u64,
}

impl BehavioralCase {
    pub fn defender(&self) -> Player {
        self.attacker.opponent()
    }

    pub fn is_negative(&self) -> bool {
        polarity_of(&self.concept) == Some(Polarity::Negative)
    }

    /// Board before each juncture's forcing move, following the first
    /// expected reply of every earlier juncture.
    pub fn juncture_boards(&self) -> Result<Vec<Board>, crate::board::BoardError> {
        let mut out = Vec::with_capacity(self.script.len());
        let mut b = self.board.clone();
        for j in &self.script {
            out.push(b.clone());
            b.set(j.forcing, Some(self.defender()))?;
            if let Some(&reply) = j.expected.first() {
                b.set(reply, Some(self.attacker))?;
            }
        }
        Ok(out)
    }
}

/// A board in the attacker's frame with the cells construction must not
/// disturb.
struct Frame {
    board: Board,
    protected: HashSet<Coord>,
    carrier: Vec<Coord>,
    forcing: Option<Coord>,
    keys: Vec<Coord>,
}

impl Frame {
    fn transposed(self) -> Frame {
        Frame {
            board: self.board.transpose_swap(),
            protected: self.protected.into_iter().map(Coord::transposed).collect(),
            carrier: self.carrier.into_iter().map(Coord::transposed).collect(),
            forcing: self.forcing.map(Coord::transposed),
            keys: self.keys.into_iter().map(Coord::transposed).collect(),
        }
    }
}

/// Cheapest left-to-right White path that crosses the template through its
/// carrier. Carrier cells, the forcing cell and White stones are free; other
/// empty cells cost one new stone. Returns the cells needing stones.
fn defender_path(b: &Board, free: &HashSet<Coord>, blocked: &HashSet<Coord>, rng: &mut Rng) -> Option<Vec<Coord>> {
    let n = b.size();
    let cost = |c: Coord| -> Option<u32> {
        if free.contains(&c) || b.get(c) == Some(Player::White) {
            Some(0)
        } else if blocked.contains(&c) || b.get(c).is_some() {
            None
        } else {
            Some(1)
        }
    };
    // Random tie-breaking spreads paths across the board.
    let mut jitter: HashMap<Coord, u32> = HashMap::new();
    let mut key = |c: Coord, rng: &mut Rng| *jitter.entry(c).or_insert_with(|| rng.random());
    let mut dist: HashMap<Coord, u32> = HashMap::new();
    let mut prev: HashMap<Coord, Coord> = HashMap::new();
    let mut heap = BinaryHeap::new();
    for r in 0..n {
        let c = Coord::new(r, 0);
        if let Some(k) = cost(c) {
            dist.insert(c, k);
            heap.push(Reverse((k, key(c, rng), c)));
        }
    }
    let mut end = None;
    while let Some(Reverse((d, _, c))) = heap.pop() {
        if dist.get(&c).is_some_and(|&best| best < d) {
            continue;
        }
        if c.col == n - 1 {
            end = Some(c);
            break;
        }
        for (dr, dc) in NEIGHBOR_OFFSETS {
            let Some(nb) = c.offset(dr, dc, n) else { continue };
            let Some(k) = cost(nb) else { continue };
            if dist.get(&nb).is_none_or(|&best| d + k < best) {
                dist.insert(nb, d + k);
                prev.insert(nb, c);
                heap.push(Reverse((d + k, key(nb, rng), nb)));
            }
        }
    }
    let mut cur = end?;
    let mut path = vec![cur];
    while let Some(&p) = prev.get(&cur) {
        path.push(p);
        cur = p;
    }
    if !path.iter().any(|c| free.contains(c)) {
        return None;
    }
    Some(path.into_iter().filter(|&c| b.is_empty_cell(c) && !free.contains(&c)).collect())
}

fn build_frame(t: &ConceptTemplate, size: usize, defender_connected: bool, rng: &mut Rng) -> Option<Frame> {
    let pl = placements_for(t, size, Player::Black, false).ok()?.choose(rng)?.clone();
    let mut b = Board::new(size);
    pl.stamp(t, &mut b);
    let forcing = pl.key_cell(t, FORCING_KEY);
    if let Some(f) = forcing {
        b.set(f, None).ok()?;
    }
    let carrier = pl.carrier_cells(t);
    let mut protected: HashSet<Coord> = pl.all_cells(t).into_iter().collect();
    for (stone, side) in edge_links(t, &pl) {
        let link = link_to_edge(&b, stone, side, &protected, true)?;
        for &c in &link.stones {
            b.set(c, Some(Player::Black)).ok()?;
        }
        protected.extend(link.stones);
        protected.extend(link.reserved);
    }
    if defender_connected && t.polarity == Polarity::Positive {
        let free: HashSet<Coord> = carrier.iter().copied().chain(forcing).collect();
        let stones = defender_path(&b, &free, &protected, rng)?;
        for &c in &stones {
            b.set(c, Some(Player::White)).ok()?;
        }
        protected.extend(stones);
    }
    let keys = t.key_cells.iter().map(|k| pl.cell(t, k.cell)).collect();
    Some(Frame { board: b, protected, carrier, forcing, keys })
}

/// Adds the fewest stones that put the right player on move: the defender
/// for positive cases, the attacker for negative ones.
fn add_parity_noise(frame: &Frame, attacker: Player, negative: bool, rng: &mut Rng) -> Option<Board> {
    let mut b = frame.board.clone();
    let to_move = if negative { attacker } else { attacker.opponent() };
    // Black to move iff counts are equal.
    let (black, white) = (b.count(Player::Black), b.count(Player::White));
    let (target_black, target_white) = match to_move {
        Player::Black => (black.max(white), black.max(white)),
        Player::White => (black.max(white + 1), (black.max(white + 1)) - 1),
    };
    let mut cells: Vec<Coord> = b.empty_cells().into_iter().filter(|c| !frame.protected.contains(c)).collect();
    cells.shuffle(rng);
    let needed = (target_black - black) + (target_white - white);
    if needed > cells.len() {
        return None;
    }
    let mut it = cells.into_iter();
    for _ in black..target_black {
        b.set(it.next()?, Some(Player::Black)).ok()?;
    }
    for _ in white..target_white {
        b.set(it.next()?, Some(Player::White)).ok()?;
    }
    (b.winner().winner().is_none()).then_some(b)
}

/// Greedy script: each forcing move is the carrier intrusion leaving the
/// attacker the fewest winning replies; the script goes on while that reply
/// is unique and another intrusion still forces.
fn build_script(
    solver: &mut Solver,
    b: &Board,
    frame: &Frame,
    attacker: Player,
    defender_connected: bool,
    rng: &mut Rng,
) -> Result<Vec<Juncture>, OracleError> {
    let defender = attacker.opponent();
    let mut script = Vec::new();
    let mut state = b.clone();
    if solver.winner(&state, defender)? != attacker {
        return Ok(script);
    }
    let mut candidates: Vec<Coord> = match frame.forcing {
        Some(f) => vec![f],
        None => frame.carrier.clone(),
    };
    loop {
        let mut options: Vec<(Coord, Vec<Coord>)> = Vec::new();
        for &f in &candidates {
            if !state.is_empty_cell(f) {
                continue;
            }
            let after = state.with_stone(f, defender)?;
            if after.winner().winner().is_some() {
                continue;
            }
            let (w, moves) = solver.outcome(&after, attacker)?;
            let legal = after.empty_cells().len();
            let forcing = moves.len() < legal;
            let first = script.is_empty();
            if w == attacker && (forcing || (first && !defender_connected)) {
                options.push((f, moves));
            }
        }
        let Some(best) = options.iter().map(|(_, m)| m.len()).min() else {
            break;
        };
        let picks: Vec<&(Coord, Vec<Coord>)> = options.iter().filter(|(_, m)| m.len() == best).collect();
        let (f, mut moves) = (*picks.choose(rng).expect("non-empty")).clone();
        moves.sort();
        script.push(Juncture { forcing: f, expected: moves.clone() });
        if moves.len() != 1 {
            break;
        }
        state.set(f, Some(defender))?;
        state.set(moves[0], Some(attacker))?;
        if state.winner().winner().is_some() {
            break;
        }
        candidates = frame.carrier.iter().copied().filter(|&c| state.is_empty_cell(c)).collect();
    }
    Ok(script)
}

fn build_case(
    concept: &str,
    templates: &[&'static ConceptTemplate],
    size: usize,
    defender_connected: bool,
    id: String,
    case_seed: u64,
    rng: &mut Rng,
) -> Result<BehavioralCase, SynthError> {
    let mut solver = Solver::new(size);
    for _ in 0..MAX_RETRIES {
        let t = *templates.choose(rng).expect("at least one template");
        let attacker = if rng.random() { Player::Black } else { Player::White };
        let Some(frame) = build_frame(t, size, defender_connected, rng) else {
            continue;
        };
        let mut frame = if attacker == Player::White { frame.transposed() } else { frame };
        let negative = t.polarity == Polarity::Negative;
        // Templates with redundant routes have no single forcing intrusion;
        // pre-filling some carrier cells with defender stones leaves fewer
        // routes until one does.
        let max_prefill = if negative || frame.forcing.is_some() { 0 } else { frame.carrier.len().saturating_sub(2) };
        for prefill in 0..=max_prefill {
            if prefill > 0 {
                let open: Vec<Coord> = frame.carrier.iter().copied().filter(|&c| frame.board.is_empty_cell(c)).collect();
                let Some(&c) = open.choose(rng) else { break };
                frame.board.set(c, Some(attacker.opponent())).map_err(OracleError::from)?;
            }
            let Some(board) = add_parity_noise(&frame, attacker, negative, rng) else {
                break;
            };
            let mut case = BehavioralCase {
                id: id.clone(),
                concept: concept.to_string(),
                template: t.id.clone(),
                board,
                attacker,
                script: Vec::new(),
                avoid_cells: Vec::new(),
                defender_connected,
                seed: case_seed,
            };
            if negative {
                case.avoid_cells = frame.keys.clone();
                case.avoid_cells.sort();
            } else {
                case.script = build_script(&mut solver, &case.board, &frame, attacker, defender_connected, rng)?;
                if case.script.is_empty() {
                    continue;
                }
            }
            match check_case(&mut solver, &case)? {
                Ok(()) => return Ok(case),
                // Negative boards are rejection-sampled: whether the key
                // cells end up dead depends on the noise.
                Err(_) if negative => break,
                Err(v) => return Err(SynthError::Unverified { id, reason: v.to_string() }),
            }
        }
    }
    Err(SynthError::Infeasible {
        concept: concept.to_string(),
        what: format!("behavioral case {id}"),
        tries: MAX_RETRIES,
    })
}

/// `n` verified cases for `concept` on a `size` board.
pub fn gen_behavioral_cases(
    concept: &str,
    n: usize,
    size: usize,
    seed: u64,
    defender_connected: bool,
) -> Result<Vec<BehavioralCase>, SynthError> {
    let templates = fitting_templates(concept, size)?;
    let tag = format!("behavioral/{concept}/{defender_connected}");
    (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_for(seed, &tag, i as u64);
            let id = format!("{concept}-{i:04}");
            build_case(concept, &templates, size, defender_connected, id, derive_seed(seed, &tag, i as u64), &mut rng)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::concepts::{contains, template};
    use crate::oracle::verify_case;

    #[test]
    fn bridge_cases_force_the_other_carrier_cell() {
        let cases = gen_behavioral_cases("bridge", 8, 5, 11, true).unwrap();
        let t = template("bridge").unwrap();
        let mut solver = Solver::new(5);
        for case in &cases {
            assert_eq!(case.script.len(), 1, "{}", case.id);
            let j = &case.script[0];
            assert_eq!(j.expected.len(), 1);
            // The forcing move and the answer are the two carrier cells of a
            // bridge on the board.
            let after = case.board.with_stone(j.expected[0], case.attacker).unwrap();
            let bridges = contains(&case.board, &t, case.attacker);
            assert!(bridges.iter().any(|pl| {
                let carrier = pl.carrier_cells(&t);
                carrier.contains(&j.forcing) && carrier.contains(&j.expected[0])
            }));
            assert!(after.get(j.expected[0]) == Some(case.attacker));
            assert!(verify_case(&mut solver, case).unwrap());
        }
    }

    #[test]
    fn dead_cases_avoid_the_key_cell() {
        let cases = gen_behavioral_cases("dead", 5, 5, 1, true).unwrap();
        for case in &cases {
            assert!(case.script.is_empty());
            assert_eq!(case.avoid_cells.len(), 1);
            assert_eq!(case.board.to_move().unwrap(), case.attacker);
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let a = gen_behavioral_cases("crescent", 4, 5, 3, true).unwrap();
        let b = gen_behavioral_cases("crescent", 4, 5, 3, true).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn edge4_does_not_fit_five_by_five_but_edge3_does() {
        let fit = fitting_templates("edge", 5).unwrap();
        assert_eq!(fit.iter().map(|t| t.id.as_str()).collect::<Vec<_>>(), ["edge3"]);
    }
}
