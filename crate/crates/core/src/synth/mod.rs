//! Board synthesis: probing datasets, permuted controls and behavioral cases.

pub mod behavioral;
pub mod control;
pub mod io;
pub mod links;
pub mod probing;

pub use behavioral::{gen_behavioral_cases, BehavioralCase, Juncture};
pub use control::{gen_control, PermutationMap};
pub use io::{read_jsonl, to_jsonl, write_jsonl, JsonlError};
pub use links::{link_to_edge, Link};
pub use probing::{gen_probing_set, Label, ProbingExample, MAX_RETRIES};

use crate::oracle::OracleError;

#[derive(Debug, thiserror::Error)]
pub enum SynthError {
    #[error("unknown concept {0}")]
    UnknownConcept(String),
    #[error("no template of concept {concept} fits a {size}x{size} board")]
    DoesNotFit { concept: String, size: usize },
    #[error("example count {0} must be even and at least 2")]
    BadCount(usize),
    #[error("concept {concept}: could not build {what} in {tries} attempts")]
    Infeasible {
        concept: String,
        what: String,
        tries: usize,
    },
    #[error("case {id} failed verification: {reason}")]
    Unverified { id: String, reason: String },
    #[error("board of size {got} does not match size {expected}")]
    SizeMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Oracle(#[from] OracleError),
}
