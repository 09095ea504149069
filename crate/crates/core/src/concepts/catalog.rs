//! The shipped template set, embedded from `data/templates`.

use std::sync::OnceLock;

use super::template::{ConceptTemplate, Polarity};

const SOURCES: &[(&str, &str)] = &[
    ("bridge", include_str!("../../data/templates/bridge.json")),
    (
        "crescent",
        include_str!("../../data/templates/crescent.json"),
    ),
    (
        "trapezoid",
        include_str!("../../data/templates/trapezoid.json"),
    ),
    ("span", include_str!("../../data/templates/span.json")),
    ("edge3", include_str!("../../data/templates/edge3.json")),
    ("edge4", include_str!("../../data/templates/edge4.json")),
    (
        "bottleneck",
        include_str!("../../data/templates/bottleneck.json"),
    ),
    ("escape", include_str!("../../data/templates/escape.json")),
    ("dead", include_str!("../../data/templates/dead.json")),
    (
        "captured",
        include_str!("../../data/templates/captured.json"),
    ),
];

/// Concept ids in reporting order. `edge` covers both edge templates.
pub const CONCEPTS: &[&str] = &[
    "bridge",
    "crescent",
    "trapezoid",
    "span",
    "edge",
    "bottleneck",
    "escape",
    "dead",
    "captured",
];

pub fn catalog() -> &'static [ConceptTemplate] {
    static CATALOG: OnceLock<Vec<ConceptTemplate>> = OnceLock::new();
    CATALOG.get_or_init(|| {
        SOURCES
            .iter()
            .map(|(id, text)| {
                ConceptTemplate::from_json(id, text).unwrap_or_else(|e| panic!("{e}"))
            })
            .collect()
    })
}

pub fn template(id: &str) -> Option<ConceptTemplate> {
    catalog().iter().find(|t| t.id == id).cloned()
}

/// Templates reported under a concept id.
pub fn templates_for(concept: &str) -> Vec<&'static ConceptTemplate> {
    catalog().iter().filter(|t| t.concept == concept).collect()
}

pub fn polarity_of(concept: &str) -> Option<Polarity> {
    templates_for(concept).first().map(|t| t.polarity)
}
