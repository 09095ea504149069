//! Linear probes, selectivity, structural probe and learning timelines.

pub mod linear;
pub mod structure;
pub mod timeline;

pub use linear::{best_layer, encode_dataset, selectivity, train_probe, ProbeError, ProbeHyper, ProbeModel, SelectivityRecord, Split};
pub use structure::{dcg, graph_distances, ndcg, structure_scores, StructureScores};
pub use timeline::{convergence, first_improvement, mean_std, ImprovementRule, TimelineStat};
