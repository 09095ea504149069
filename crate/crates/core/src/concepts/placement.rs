//! Placing templates on boards and finding them again.

use serde::{Deserialize, Serialize};

use super::template::{ConceptTemplate, Rel, Side};
use crate::board::{Board, Coord, Player, NEIGHBOR_OFFSETS};
use crate::unionfind::UnionFind;

/// A template instance on a board. `offset` is the board cell of the
/// transformed bounding box's origin in the owner's frame; White-owned
/// placements are transposed onto the board.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Placement {
    pub template: String,
    pub owner: Player,
    pub offset: Coord,
    /// Half turn, used to reach the far edge for anchored templates.
    #[serde(default)]
    pub rotated: bool,
    /// Mirror image (off unless requested).
    #[serde(default)]
    pub reflected: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Horizon {
    Short,
    Long,
}

impl Horizon {
    pub fn as_str(self) -> &'static str {
        match self {
            Horizon::Short => "short",
            Horizon::Long => "long",
        }
    }
}

impl std::fmt::Display for Horizon {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum PlacementError {
    #[error("template {template} does not fit on a {size}x{size} board")]
    TooLarge { template: String, size: usize },
}

/// Maps a template cell through the optional mirror and half turn, staying
/// inside the transformed bounding box.
pub fn transform(t: &ConceptTemplate, cell: Rel, rotated: bool, reflected: bool) -> Rel {
    let mut c = cell;
    if reflected {
        // (r, c) -> (r, -c - r) is a lattice reflection that keeps rows.
        let max_sum = t.cells().map(|x| x[0] + x[1]).max().unwrap_or(0);
        c = [c[0], max_sum - c[0] - c[1]];
    }
    if rotated {
        let (h, w) = transformed_extent(t, false, reflected);
        c = [h - 1 - c[0], w - 1 - c[1]];
    }
    c
}

fn transformed_extent(t: &ConceptTemplate, _rotated: bool, reflected: bool) -> (i32, i32) {
    if !reflected {
        return t.extent();
    }
    let cells: Vec<Rel> = t.cells().map(|c| transform(t, c, false, true)).collect();
    let h = cells.iter().map(|c| c[0]).max().unwrap_or(0) + 1;
    let w = cells.iter().map(|c| c[1]).max().unwrap_or(0) + 1;
    (h, w)
}

pub fn pinned_sides(t: &ConceptTemplate, rotated: bool) -> Vec<Side> {
    t.pinned
        .iter()
        .map(|&s| if rotated { s.rotated() } else { s })
        .collect()
}

fn reflection_allowed(t: &ConceptTemplate) -> bool {
    !t.pinned
        .iter()
        .any(|s| matches!(s, Side::Left | Side::Right))
}

impl Placement {
    /// Board cell of a template cell under this placement.
    pub fn cell(&self, t: &ConceptTemplate, rel: Rel) -> Coord {
        let c = transform(t, rel, self.rotated, self.reflected);
        let frame = Coord::new(
            self.offset.row + c[0] as usize,
            self.offset.col + c[1] as usize,
        );
        match self.owner {
            Player::Black => frame,
            Player::White => frame.transposed(),
        }
    }

    pub fn owner_cells(&self, t: &ConceptTemplate) -> Vec<Coord> {
        t.owner_stones.iter().map(|&r| self.cell(t, r)).collect()
    }

    pub fn opponent_cells(&self, t: &ConceptTemplate) -> Vec<Coord> {
        t.opponent_stones.iter().map(|&r| self.cell(t, r)).collect()
    }

    pub fn carrier_cells(&self, t: &ConceptTemplate) -> Vec<Coord> {
        t.carrier.iter().map(|&r| self.cell(t, r)).collect()
    }

    pub fn all_cells(&self, t: &ConceptTemplate) -> Vec<Coord> {
        t.cells().map(|r| self.cell(t, r)).collect()
    }

    pub fn key_cell(&self, t: &ConceptTemplate, label: &str) -> Option<Coord> {
        t.key(label).map(|r| self.cell(t, r))
    }

    /// Writes the template's stones onto `board` (carrier cells are cleared).
    pub fn stamp(&self, t: &ConceptTemplate, board: &mut Board) {
        for c in self.owner_cells(t) {
            board.set(c, Some(self.owner)).expect("placement in bounds");
        }
        for c in self.opponent_cells(t) {
            board
                .set(c, Some(self.owner.opponent()))
                .expect("placement in bounds");
        }
        for c in self.carrier_cells(t) {
            if board.get(c).is_some() {
                board.set(c, None).expect("placement in bounds");
            }
        }
    }

    /// True if the board shows exactly this instance.
    pub fn matches(&self, t: &ConceptTemplate, board: &Board) -> bool {
        self.owner_cells(t)
            .iter()
            .all(|&c| board.get(c) == Some(self.owner))
            && self
                .opponent_cells(t)
                .iter()
                .all(|&c| board.get(c) == Some(self.owner.opponent()))
            && self
                .carrier_cells(t)
                .iter()
                .all(|&c| board.get(c).is_none())
    }
}

/// Every placement of `t` for `owner` on a `size` board honouring the
/// template's pinned edges. Free templates are translated only; anchored
/// templates may also be turned to reach the opposite edge.
pub fn placements_for(
    t: &ConceptTemplate,
    size: usize,
    owner: Player,
    reflections: bool,
) -> Result<Vec<Placement>, PlacementError> {
    let mut out = Vec::new();
    let turns: &[bool] = if t.pinned.is_empty() {
        &[false]
    } else {
        &[false, true]
    };
    let mirrors: &[bool] = if reflections && reflection_allowed(t) {
        &[false, true]
    } else {
        &[false]
    };
    for &reflected in mirrors {
        for &rotated in turns {
            let (h, w) = transformed_extent(t, rotated, reflected);
            if h as usize > size || w as usize > size {
                continue;
            }
            let sides = pinned_sides(t, rotated);
            let max_r = size - h as usize;
            let max_c = size - w as usize;
            for r in 0..=max_r {
                for c in 0..=max_c {
                    let pinned_ok = sides.iter().all(|s| match s {
                        Side::Top => r == 0,
                        Side::Bottom => r == max_r,
                        Side::Left => c == 0,
                        Side::Right => c == max_c,
                    });
                    if pinned_ok {
                        out.push(Placement {
                            template: t.id.clone(),
                            owner,
                            offset: Coord::new(r, c),
                            rotated,
                            reflected,
                        });
                    }
                }
            }
        }
    }
    if out.is_empty() {
        return Err(PlacementError::TooLarge {
            template: t.id.clone(),
            size,
        });
    }
    Ok(out)
}

/// Black-owned placements, translations only.
pub fn placements(t: &ConceptTemplate, size: usize) -> Result<Vec<Placement>, PlacementError> {
    placements_for(t, size, Player::Black, false)
}

/// Every instance of `t` owned by `p` on the board.
pub fn contains(b: &Board, t: &ConceptTemplate, p: Player) -> Vec<Placement> {
    contains_with(b, t, p, false)
}

pub fn contains_with(
    b: &Board,
    t: &ConceptTemplate,
    p: Player,
    reflections: bool,
) -> Vec<Placement> {
    match placements_for(t, b.size(), p, reflections) {
        Ok(all) => all.into_iter().filter(|pl| pl.matches(t, b)).collect(),
        Err(_) => Vec::new(),
    }
}

/// Short when the placed concept's link stones already reach the owner's
/// edges through settled connections: solid adjacency, bridges and edge
/// bridges whose carriers are empty, and the template's own connection.
pub fn horizon_of(b: &Board, t: &ConceptTemplate, pl: &Placement) -> Horizon {
    // Work in the owner's frame, where the owner is Black.
    let frame = match pl.owner {
        Player::Black => b.clone(),
        Player::White => b.transpose_swap(),
    };
    let to_frame = |c: Coord| match pl.owner {
        Player::Black => c,
        Player::White => c.transposed(),
    };
    let n = frame.size();
    let (top, bottom) = (n * n, n * n + 1);
    let mut uf = settled_links(&frame);
    let template_stones: Vec<usize> = pl
        .owner_cells(t)
        .into_iter()
        .map(|c| to_frame(c).index(n))
        .collect();
    for w in template_stones.windows(2) {
        uf.union(w[0], w[1]);
    }
    let (top_link, bottom_link) = if pl.rotated {
        (t.edge_links[1], t.edge_links[0])
    } else {
        (t.edge_links[0], t.edge_links[1])
    };
    let reaches = |uf: &mut UnionFind, link: Option<Rel>, edge: usize| match link {
        Some(rel) => uf.connected(to_frame(pl.cell(t, rel)).index(n), edge),
        None => {
            if let Some(&s) = template_stones.first() {
                uf.union(s, edge);
            }
            true
        }
    };
    let top_ok = reaches(&mut uf, top_link, top);
    let bottom_ok = reaches(&mut uf, bottom_link, bottom);
    if top_ok && bottom_ok {
        Horizon::Short
    } else {
        Horizon::Long
    }
}

/// Union-find over Black's stones and the top/bottom edge nodes, joining
/// stones linked by adjacency, empty-carrier bridges and edge bridges.
fn settled_links(b: &Board) -> UnionFind {
    let n = b.size();
    let mut uf = UnionFind::new(n * n + 2);
    let (top, bottom) = (n * n, n * n + 1);
    let black = |c: Coord| b.get(c) == Some(Player::Black);
    let empty = |c: Option<Coord>| c.is_some_and(|c| b.get(c).is_none());
    for c in b.coords().filter(|&c| black(c)) {
        let i = c.index(n);
        for (dr, dc) in NEIGHBOR_OFFSETS {
            if let Some(nb) = c.offset(dr, dc, n) {
                if black(nb) {
                    uf.union(i, nb.index(n));
                }
            }
        }
        for (k, (dr, dc)) in NEIGHBOR_OFFSETS.iter().enumerate() {
            let (er, ec) = NEIGHBOR_OFFSETS[(k + 1) % 6];
            // Bridge partner sits at the sum of two consecutive offsets.
            if let Some(partner) = c.offset(dr + er, dc + ec, n) {
                if black(partner) && empty(c.offset(*dr, *dc, n)) && empty(c.offset(er, ec, n)) {
                    uf.union(i, partner.index(n));
                }
            }
        }
        if c.row == 0 {
            uf.union(i, top);
        }
        if c.row == n - 1 {
            uf.union(i, bottom);
        }
        if c.row == 1 && empty(c.offset(-1, 0, n)) && empty(c.offset(-1, 1, n)) {
            uf.union(i, top);
        }
        if n >= 2 && c.row == n - 2 && empty(c.offset(1, 0, n)) && empty(c.offset(1, -1, n)) {
            uf.union(i, bottom);
        }
    }
    uf
}
