//! Template definitions.
//!
//! Every template is written in its owner's frame: the owner plays Black and
//! connects top to bottom, the opponent plays White. Cell coordinates are
//! relative to the template's bounding box, so the smallest row and column
//! in use are both zero.

use serde::{Deserialize, Serialize};

/// Cell relative to a template's bounding box, `[row, col]`.
pub type Rel = [i32; 2];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    Positive,
    Negative,
}

/// Which board edges the pattern is pinned against.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Anchor {
    Free,
    /// Pinned to one of the owner's own edges.
    OwnerEdge,
    /// Pinned to an edge of the opponent (possibly a corner shared with an owner edge).
    DefenderEdge,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Top,
    Bottom,
    Left,
    Right,
}

impl Side {
    /// The side reached by a half turn of the board.
    pub fn rotated(self) -> Side {
        match self {
            Side::Top => Side::Bottom,
            Side::Bottom => Side::Top,
            Side::Left => Side::Right,
            Side::Right => Side::Left,
        }
    }

    /// True for the owner's (Black's, in the owner frame) edges.
    pub fn is_owner_edge(self) -> bool {
        matches!(self, Side::Top | Side::Bottom)
    }
}

/// Who tries to join the two endpoints in the local game.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Goal {
    /// The owner joins the endpoints.
    Connect,
    /// The opponent tries to join the endpoints and the owner prevents it.
    Separate,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FirstMove {
    Owner,
    Opponent,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind", content = "at")]
pub enum Endpoint {
    Stone(Rel),
    Edge(Side),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeyCell {
    pub label: String,
    pub cell: Rel,
}

/// Label of the opponent stone that a behavioral case removes from the board
/// and replays as the first forcing move.
pub const FORCING_KEY: &str = "forcing";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConceptTemplate {
    pub id: String,
    /// Concept the template is reported under (`edge3` and `edge4` share `edge`).
    pub concept: String,
    pub polarity: Polarity,
    pub owner_stones: Vec<Rel>,
    #[serde(default)]
    pub opponent_stones: Vec<Rel>,
    pub carrier: Vec<Rel>,
    pub anchor: Anchor,
    /// Board edges the bounding box must touch, before any half turn.
    #[serde(default)]
    pub pinned: Vec<Side>,
    #[serde(default = "default_goal")]
    pub goal: Goal,
    #[serde(default = "default_first")]
    pub first: FirstMove,
    /// Endpoints of the local connection game (empty for negative templates).
    #[serde(default)]
    pub endpoints: Vec<Endpoint>,
    /// Owner stones that must reach the top and bottom edge respectively for
    /// the placed concept to count as edge-connected. `None` means the
    /// template itself supplies that connection.
    pub edge_links: [Option<Rel>; 2],
    #[serde(default)]
    pub key_cells: Vec<KeyCell>,
}

fn default_goal() -> Goal {
    Goal::Connect
}

fn default_first() -> FirstMove {
    FirstMove::Opponent
}

#[derive(Debug, thiserror::Error)]
pub enum TemplateError {
    #[error("template {id}: cell {cell:?} is listed twice")]
    Overlap { id: String, cell: Rel },
    #[error("template {id}: coordinates are not normalised to the bounding box")]
    NotNormalised { id: String },
    #[error("template {id}: anchored template has no pinned side, or a free one has some")]
    Anchor { id: String },
    #[error("template {id}: endpoint {endpoint:?} is not a stone of the connecting player")]
    Endpoint { id: String, endpoint: Endpoint },
    #[error("template {id}: key cell {label} is not part of the template")]
    KeyCell { id: String, label: String },
    #[error("template {id}: {source}")]
    Json {
        id: String,
        #[source]
        source: serde_json::Error,
    },
}

impl ConceptTemplate {
    pub fn from_json(id: &str, text: &str) -> Result<Self, TemplateError> {
        let t: ConceptTemplate = serde_json::from_str(text).map_err(|e| TemplateError::Json {
            id: id.to_string(),
            source: e,
        })?;
        t.validate()?;
        Ok(t)
    }

    pub fn cells(&self) -> impl Iterator<Item = Rel> + '_ {
        self.owner_stones
            .iter()
            .chain(&self.opponent_stones)
            .chain(&self.carrier)
            .copied()
    }

    /// Height and width of the bounding box.
    pub fn extent(&self) -> (i32, i32) {
        let h = self.cells().map(|c| c[0]).max().unwrap_or(0) + 1;
        let w = self.cells().map(|c| c[1]).max().unwrap_or(0) + 1;
        (h, w)
    }

    pub fn key(&self, label: &str) -> Option<Rel> {
        self.key_cells
            .iter()
            .find(|k| k.label == label)
            .map(|k| k.cell)
    }

    /// The player (in the owner frame) who tries to join the endpoints.
    pub fn connector_is_owner(&self) -> bool {
        self.goal == Goal::Connect
    }

    pub fn validate(&self) -> Result<(), TemplateError> {
        let id = self.id.clone();
        let mut seen = std::collections::HashSet::new();
        for c in self.cells() {
            if !seen.insert(c) {
                return Err(TemplateError::Overlap { id, cell: c });
            }
        }
        let min_r = self.cells().map(|c| c[0]).min().unwrap_or(0);
        let min_c = self.cells().map(|c| c[1]).min().unwrap_or(0);
        if min_r != 0 || min_c != 0 {
            return Err(TemplateError::NotNormalised { id });
        }
        if (self.anchor == Anchor::Free) != self.pinned.is_empty() {
            return Err(TemplateError::Anchor { id });
        }
        let connector_stones = if self.connector_is_owner() {
            &self.owner_stones
        } else {
            &self.opponent_stones
        };
        for e in &self.endpoints {
            let ok = match e {
                Endpoint::Stone(c) => connector_stones.contains(c),
                Endpoint::Edge(s) => {
                    s.is_owner_edge() == self.connector_is_owner() && self.pinned.contains(s)
                }
            };
            if !ok {
                return Err(TemplateError::Endpoint { id, endpoint: *e });
            }
        }
        for k in &self.key_cells {
            if !seen.contains(&k.cell) {
                return Err(TemplateError::KeyCell {
                    id,
                    label: k.label.clone(),
                });
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bridge_json() -> &'static str {
        r#"{"id":"bridge","concept":"bridge","polarity":"positive",
            "owner_stones":[[0,0],[1,1]],"carrier":[[0,1],[1,0]],
            "anchor":"free","endpoints":[{"kind":"stone","at":[0,0]},{"kind":"stone","at":[1,1]}],
            "edge_links":[[0,0],[1,1]]}"#
    }

    #[test]
    fn parses_and_validates() {
        let t = ConceptTemplate::from_json("bridge", bridge_json()).unwrap();
        assert_eq!(t.extent(), (2, 2));
        assert_eq!(t.first, FirstMove::Opponent);
        assert_eq!(t.goal, Goal::Connect);
    }

    #[test]
    fn rejects_overlap() {
        let text = bridge_json().replace("\"carrier\":[[0,1],[1,0]]", "\"carrier\":[[0,1],[1,1]]");
        assert!(matches!(
            ConceptTemplate::from_json("bridge", &text),
            Err(TemplateError::Overlap { .. })
        ));
    }
}
