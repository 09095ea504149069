//! Probing datasets: boards with and without a concept instance.

use std::collections::HashSet;

use rand::seq::IndexedRandom;
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::links::link_to_edge;
use super::SynthError;
use crate::board::{Board, Coord, Player};
use crate::concepts::{
    contains, horizon_of, placements_for, templates_for, ConceptTemplate, Horizon, Placement, Side,
};
use crate::seed::{derive_seed, rng_for, Rng};

/// Retry cap for any rejection-sampled board.
pub const MAX_RETRIES: usize = 1000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Present,
    Absent,
}

impl Label {
    pub fn is_present(self) -> bool {
        self == Label::Present
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProbingExample {
    pub concept: String,
    pub horizon: Horizon,
    pub label: Label,
    pub board: Board,
    pub seed: u64,
}

/// Templates of `concept` with at least one placement on the board.
pub(crate) fn fitting_templates(
    concept: &str,
    size: usize,
) -> Result<Vec<&'static ConceptTemplate>, SynthError> {
    let all = templates_for(concept);
    if all.is_empty() {
        return Err(SynthError::UnknownConcept(concept.to_string()));
    }
    let fit: Vec<_> = all
        .into_iter()
        .filter(|t| placements_for(t, size, Player::Black, false).is_ok())
        .collect();
    if fit.is_empty() {
        return Err(SynthError::DoesNotFit {
            concept: concept.to_string(),
            size,
        });
    }
    Ok(fit)
}

/// Link stones of a placement, as (stone, edge) pairs in the owner frame.
pub(crate) fn edge_links(t: &ConceptTemplate, pl: &Placement) -> Vec<(Coord, Side)> {
    let (top, bottom) = if pl.rotated {
        (t.edge_links[1], t.edge_links[0])
    } else {
        (t.edge_links[0], t.edge_links[1])
    };
    let frame = |c: Coord| match pl.owner {
        Player::Black => c,
        Player::White => c.transposed(),
    };
    let mut out = Vec::new();
    if let Some(r) = top {
        out.push((frame(pl.cell(t, r)), Side::Top));
    }
    if let Some(r) = bottom {
        out.push((frame(pl.cell(t, r)), Side::Bottom));
    }
    out
}

/// Any instance of the concept owned by Black.
pub(crate) fn concept_present(b: &Board, concept: &str) -> bool {
    templates_for(concept)
        .iter()
        .any(|t| !contains(b, t, Player::Black).is_empty())
}

fn random_empty(b: &Board, rng: &mut Rng, exclude: &HashSet<Coord>) -> Option<Coord> {
    let cells: Vec<Coord> = b
        .empty_cells()
        .into_iter()
        .filter(|c| !exclude.contains(c))
        .collect();
    cells.choose(rng).copied()
}

struct Positive {
    board: Board,
    template: &'static ConceptTemplate,
    placement: Placement,
}

fn build_positive(
    templates: &[&'static ConceptTemplate],
    horizon: Horizon,
    size: usize,
    rng: &mut Rng,
) -> Option<Positive> {
    let t = *templates.choose(rng)?;
    let pl = placements_for(t, size, Player::Black, false)
        .ok()?
        .choose(rng)?
        .clone();
    let mut b = Board::new(size);
    pl.stamp(t, &mut b);
    let protected: HashSet<Coord> = pl.all_cells(t).into_iter().collect();
    if horizon == Horizon::Short {
        for (stone, side) in edge_links(t, &pl) {
            let link = link_to_edge(&b, stone, side, &protected, false)?;
            for c in link.stones {
                b.set(c, Some(Player::Black)).ok()?;
            }
        }
    }
    // Noise: total stone count drawn from [structure, structure + n^2/4],
    // rounded up so both colours have equal counts (Black to move).
    let structure = b.stone_count();
    let total = rng.random_range(structure..=structure + size * size / 4);
    let per_side = total
        .div_ceil(2)
        .max(b.count(Player::Black))
        .max(b.count(Player::White));
    if 2 * per_side > size * size - protected.len() {
        return None;
    }
    for p in [Player::Black, Player::White] {
        while b.count(p) < per_side {
            let c = random_empty(&b, rng, &protected)?;
            b.set(c, Some(p)).ok()?;
        }
    }
    if b.winner().winner().is_some() || !pl.matches(t, &b) || horizon_of(&b, t, &pl) != horizon {
        return None;
    }
    Some(Positive {
        board: b,
        template: t,
        placement: pl,
    })
}

/// Moves the template's stones to random cells, keeping everything else.
fn build_negative(pos: &Positive, concept: &str, rng: &mut Rng) -> Option<Board> {
    let t = pos.template;
    let mut b = pos.board.clone();
    let owner_cells = pos.placement.owner_cells(t);
    let opp_cells = pos.placement.opponent_cells(t);
    for &c in owner_cells.iter().chain(&opp_cells) {
        b.set(c, None).ok()?;
    }
    let none = HashSet::new();
    for (cells, p) in [(&owner_cells, Player::Black), (&opp_cells, Player::White)] {
        for _ in cells.iter() {
            let c = random_empty(&b, rng, &none)?;
            b.set(c, Some(p)).ok()?;
        }
    }
    if b.winner().winner().is_some() || concept_present(&b, concept) {
        return None;
    }
    Some(b)
}

/// `n` examples (half present, half absent, interleaved) for one concept and
/// horizon. Each pair shares its stone counts; every label is checked with
/// the detector.
pub fn gen_probing_set(
    concept: &str,
    horizon: Horizon,
    n: usize,
    size: usize,
    seed: u64,
) -> Result<Vec<ProbingExample>, SynthError> {
    if n < 2 || !n.is_multiple_of(2) {
        return Err(SynthError::BadCount(n));
    }
    let templates = fitting_templates(concept, size)?;
    let tag = format!("probing/{concept}/{horizon}");
    let pairs: Result<Vec<[ProbingExample; 2]>, SynthError> = (0..n / 2)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_for(seed, &tag, i as u64);
            let example_seed = derive_seed(seed, &tag, i as u64);
            for _ in 0..MAX_RETRIES {
                let Some(pos) = build_positive(&templates, horizon, size, &mut rng) else {
                    continue;
                };
                for _ in 0..MAX_RETRIES {
                    if let Some(neg) = build_negative(&pos, concept, &mut rng) {
                        let make = |board: Board, label| ProbingExample {
                            concept: concept.to_string(),
                            horizon,
                            label,
                            board,
                            seed: example_seed,
                        };
                        return Ok([make(pos.board, Label::Present), make(neg, Label::Absent)]);
                    }
                }
                break;
            }
            Err(SynthError::Infeasible {
                concept: concept.to_string(),
                what: format!("{horizon} probing pair {i}"),
                tries: MAX_RETRIES,
            })
        })
        .collect();
    Ok(pairs?.into_iter().flatten().collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn balanced_labels_agree_with_detector() {
        let set = gen_probing_set("bridge", Horizon::Long, 40, 5, 3).unwrap();
        assert_eq!(set.len(), 40);
        assert_eq!(set.iter().filter(|e| e.label.is_present()).count(), 20);
        for e in &set {
            assert_eq!(concept_present(&e.board, "bridge"), e.label.is_present());
            assert_eq!(e.board.to_move().unwrap(), Player::Black);
            assert!(e.board.winner().winner().is_none());
        }
        for pair in set.chunks(2) {
            assert_eq!(
                pair[0].board.count(Player::Black),
                pair[1].board.count(Player::Black)
            );
            assert_eq!(
                pair[0].board.count(Player::White),
                pair[1].board.count(Player::White)
            );
        }
    }

    #[test]
    fn short_positives_are_edge_connected() {
        let set = gen_probing_set("bridge", Horizon::Short, 10, 5, 1).unwrap();
        let t = crate::concepts::template("bridge").unwrap();
        for e in set.iter().filter(|e| e.label.is_present()) {
            let found = contains(&e.board, &t, Player::Black);
            assert!(found
                .iter()
                .any(|pl| horizon_of(&e.board, &t, pl) == Horizon::Short));
        }
    }

    #[test]
    fn deterministic_in_seed() {
        let a = gen_probing_set("trapezoid", Horizon::Long, 8, 5, 9).unwrap();
        let b = gen_probing_set("trapezoid", Horizon::Long, 8, 5, 9).unwrap();
        assert_eq!(a, b);
        let c = gen_probing_set("trapezoid", Horizon::Long, 8, 5, 10).unwrap();
        assert_ne!(a, c);
    }
}
