//! Joining a stone to one of Black's edges, either with a solid chain or
//! with a chain of bridges and a final edge bridge.
//!
//! Everything here works in the owner's frame, where the owner is Black.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap, HashSet};

use crate::board::{Board, Coord, Player, NEIGHBOR_OFFSETS};
use crate::concepts::Side;

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Link {
    /// New Black stones.
    pub stones: Vec<Coord>,
    /// Empty cells the link relies on (bridge and edge-bridge carriers).
    pub reserved: Vec<Coord>,
}

#[derive(Clone, Copy)]
enum Step {
    Solid(Coord),
    Bridge(Coord, Coord, Coord),
}

fn edge_row(side: Side, n: usize) -> usize {
    match side {
        Side::Top => 0,
        _ => n - 1,
    }
}

/// Edge-bridge carrier of a stone on the second line, if both cells are usable.
fn edge_bridge(
    b: &Board,
    c: Coord,
    side: Side,
    usable: &dyn Fn(Coord) -> bool,
) -> Option<[Coord; 2]> {
    let n = b.size();
    let cells = match side {
        Side::Top if c.row == 1 => [c.offset(-1, 0, n), c.offset(-1, 1, n)],
        Side::Bottom if n >= 2 && c.row == n - 2 => [c.offset(1, 0, n), c.offset(1, -1, n)],
        _ => return None,
    };
    match cells {
        [Some(a), Some(d)] if usable(a) && usable(d) => Some([a, d]),
        _ => None,
    }
}

/// Cheapest link (fewest new stones) from the Black stone at `from` to
/// `side`. `forbidden` cells are never filled or relied on. With
/// `virtual_steps` the link may use bridges and an edge bridge.
pub fn link_to_edge(
    b: &Board,
    from: Coord,
    side: Side,
    forbidden: &HashSet<Coord>,
    virtual_steps: bool,
) -> Option<Link> {
    assert!(matches!(side, Side::Top | Side::Bottom));
    let n = b.size();
    let usable = |c: Coord| b.get(c).is_none() && !forbidden.contains(&c);
    let black = |c: Coord| b.get(c) == Some(Player::Black);
    let target = edge_row(side, n);
    // Offsets ordered so that moves toward the target edge are tried first.
    let toward = |dr: i32| if side == Side::Top { -dr } else { dr };
    let mut solid: Vec<(i32, i32)> = NEIGHBOR_OFFSETS.to_vec();
    solid.sort_by_key(|&(dr, _)| Reverse(toward(dr)));
    let mut bridges: Vec<((i32, i32), (i32, i32))> = (0..6)
        .map(|k| (NEIGHBOR_OFFSETS[k], NEIGHBOR_OFFSETS[(k + 1) % 6]))
        .collect();
    bridges.sort_by_key(|&(a, d)| Reverse(toward(a.0 + d.0)));

    let mut dist: HashMap<Coord, u32> = HashMap::new();
    let mut prev: HashMap<Coord, (Coord, Step)> = HashMap::new();
    let mut heap = BinaryHeap::new();
    let mut counter = 0u64;
    dist.insert(from, 0);
    heap.push(Reverse((0u32, 0u64, from.row, from.col)));
    let mut goal: Option<(Coord, Option<[Coord; 2]>)> = None;
    while let Some(Reverse((d, _, r, c))) = heap.pop() {
        let cur = Coord::new(r, c);
        if dist.get(&cur).is_some_and(|&best| best < d) {
            continue;
        }
        if cur.row == target {
            goal = Some((cur, None));
            break;
        }
        if virtual_steps {
            if let Some(carrier) = edge_bridge(b, cur, side, &usable) {
                goal = Some((cur, Some(carrier)));
                break;
            }
        }
        let mut relax = |next: Coord, cost: u32, step: Step, heap: &mut BinaryHeap<_>| {
            let nd = d + cost;
            if dist.get(&next).is_none_or(|&old| nd < old) {
                dist.insert(next, nd);
                prev.insert(next, (cur, step));
                counter += 1;
                heap.push(Reverse((nd, counter, next.row, next.col)));
            }
        };
        if virtual_steps {
            for &((ar, ac), (dr2, dc2)) in &bridges {
                let (Some(a), Some(e), Some(p)) = (
                    cur.offset(ar, ac, n),
                    cur.offset(dr2, dc2, n),
                    cur.offset(ar + dr2, ac + dc2, n),
                ) else {
                    continue;
                };
                if usable(a) && usable(e) && (black(p) || usable(p)) {
                    relax(p, u32::from(!black(p)), Step::Bridge(p, a, e), &mut heap);
                }
            }
        }
        for &(dr, dc) in &solid {
            if let Some(nb) = cur.offset(dr, dc, n) {
                if black(nb) || usable(nb) {
                    relax(nb, u32::from(!black(nb)), Step::Solid(nb), &mut heap);
                }
            }
        }
    }
    let (end, edge_carrier) = goal?;
    let mut link = Link::default();
    if let Some(cells) = edge_carrier {
        link.reserved.extend(cells);
    }
    let mut cur = end;
    while cur != from {
        let (p, step) = prev[&cur];
        match step {
            Step::Solid(c) => {
                if !black(c) {
                    link.stones.push(c);
                }
            }
            Step::Bridge(c, a, e) => {
                if !black(c) {
                    link.stones.push(c);
                }
                link.reserved.extend([a, e]);
            }
        }
        cur = p;
    }
    link.stones.reverse();
    // Carriers must be distinct and must not be filled by the link itself.
    let stones: HashSet<Coord> = link.stones.iter().copied().collect();
    let mut seen = HashSet::new();
    for &r in &link.reserved {
        if stones.contains(&r) || !seen.insert(r) {
            return None;
        }
    }
    Some(link)
}
