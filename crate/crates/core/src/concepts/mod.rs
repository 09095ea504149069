//! Concept templates and their detection on boards.

pub mod catalog;
pub mod placement;
pub mod template;

pub use catalog::{catalog, polarity_of, template, templates_for, CONCEPTS};
pub use placement::{
    contains, horizon_of, placements, placements_for, Horizon, Placement, PlacementError,
};
pub use template::{
    Anchor, ConceptTemplate, Endpoint, FirstMove, Goal, KeyCell, Polarity, Rel, Side, FORCING_KEY,
};
